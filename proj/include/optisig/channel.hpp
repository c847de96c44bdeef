#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "optisig/image.hpp"
#include "optisig/modulation.hpp"

namespace optisig {

// Simulated optical path: static surface, projected bitmaps warped by a
// homography, pixel noise, exposure drift. One scalar gain calibrates the SNR.
struct SceneConfig {
  int frame_width = 640;
  int frame_height = 360;
  double camera_fps = 24.0;
  double ambient_lux = 500.0;  // 500 lx leaves the surface texture as-is
  double gain = 1.0;           // SLM channel value -> pixel value increment
  double sensor_noise_sigma = 0.0;
  double exposure_drift = 0.0;  // multiplicative, per second

  // Bitmap -> camera homography, row-major. Defaults to the cell_px scaling
  // below when not set explicitly.
  std::optional<std::array<double, 9>> homography;
  double cell_px = 35.0;  // in-video cell resolution when homography is derived
  double offset_x = 0.0, offset_y = 0.0;
  double tilt = 0.0;  // perspective coefficient on the bitmap x axis

  // Procedural surface texture unless surface_image is set.
  Rgb surface_color{120, 112, 104};
  double surface_texture_sigma = 6.0;
  std::uint64_t surface_seed = 1;
  std::string surface_image;

  std::array<double, 9> effective_homography() const;
};

SceneConfig load_scene(const std::string& path);
void save_scene(const SceneConfig& scene, const std::string& path);

// Lazily evaluated frame stream; frames are pure functions of the index so
// callers may pull them in any order.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual int frame_count() const = 0;
  virtual double fps() const = 0;
  virtual Image frame(int i) const = 0;
  double timestamp(int i) const { return i / fps(); }
  double duration() const { return frame_count() / fps(); }
};

using FrameSourcePtr = std::shared_ptr<const FrameSource>;

// Renders the camera's view of the scene while the given schedules play.
// Deterministic for a fixed (schedules, scene, seed) triple regardless of
// evaluation order: noise is derived statelessly from (seed, frame, pixel).
FrameSourcePtr render(std::vector<BitmapSchedule> schedules, const SceneConfig& scene,
                      std::uint64_t seed);

// In-memory sequence (tests, disk loads).
FrameSourcePtr wrap_frames(std::vector<Image> frames, double fps);

struct DegradeOp {
  enum class Kind { Quantize, Blur, Contrast, Exposure, Monochrome, ResampleFps, Speed };
  Kind kind;
  double value = 0.0;
};

// Comma-separated spec, e.g. "quantize:32,blur:1,contrast:-50,monochrome".
std::vector<DegradeOp> parse_degrade_ops(const std::string& spec);

// Applies ops in order; an empty list returns the input unchanged.
FrameSourcePtr degrade(FrameSourcePtr frames, const std::vector<DegradeOp>& ops);

// Directory of PPM frames plus manifest.json (timestamps, fps, seed, scene echo).
void save_frames(const FrameSource& frames, const std::string& dir,
                 const SceneConfig* scene = nullptr, std::uint64_t seed = 0);
FrameSourcePtr load_frames(const std::string& dir);

}  // namespace optisig
