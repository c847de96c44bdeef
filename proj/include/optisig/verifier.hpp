#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "optisig/channel.hpp"
#include "optisig/descriptor.hpp"
#include "optisig/ecc.hpp"
#include "optisig/modulation.hpp"

namespace optisig {

// Decision thresholds: the raw-feature angle thresholds (1.17 rad dynamic,
// 0.88 rad identity) mapped through the expected hash distance k*theta/pi.
inline constexpr int kDynThreshold = 56;
inline constexpr int kIdThreshold = 42;

enum class Stage { Localization, Homography, Extraction, Sync };

struct StageFailure : std::runtime_error {
  Stage stage;
  StageFailure(Stage s, const std::string& what) : std::runtime_error(what), stage(s) {}
};

struct Heatmap {
  int width = 0, height = 0;
  std::vector<float> values;  // per-pixel normalized power at f_l
  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  Image to_image() const;
};

struct Localization {
  Heatmap heatmap;
  // Blob centroids in camera pixels: top-left, top-right, bottom-right,
  // bottom-left.
  std::array<std::pair<double, double>, 4> corners;
};

// Per-pixel spectral power at f_l over at most frame_budget frames, normalized
// by the mean power at other frequencies (DC and f_d excluded), then contour
// detection at 5x the median heatmap value. Throws StageFailure when fewer
// than four corner blobs survive.
Localization localize(const FrameSource& frames, int frame_budget = 800);

// Normalized DLT from exactly four correspondences (src -> dst). Throws on
// degenerate (3-collinear) configurations. Returns the row-major matrix and
// reports the max reprojection error.
struct HomographyFit {
  std::array<double, 9> h;
  double max_reprojection_error = 0.0;
};
HomographyFit estimate_homography(const std::array<std::pair<double, double>, 4>& src,
                                  const std::array<std::pair<double, double>, 4>& dst);

// Mean intensity of each cell's warped interior (10% inset) per frame,
// indexed [cell][frame]. Throws StageFailure when a non-guard cell maps
// outside the frame or to fewer than 4 pixels.
std::vector<std::vector<double>> extract_cell_signals(const FrameSource& frames,
                                                      const std::array<double, 9>& h,
                                                      const CellLayout& layout);

struct WindowSpan {
  int mod_start_frame = 0;   // first camera frame of the 4 s modulation phase
  double slot_start = 0.0;   // window origin (downtime start), seconds
};

// Window boundaries from downtime dips in the aggregate sync-cell signal.
// Throws StageFailure{Sync} when no downtime is found.
std::vector<WindowSpan> find_windows(const std::vector<double>& sync_aggregate, double fps,
                                     int total_frames);

// Soft BPSK decisions for one window: per data cell, 12 normalized
// correlations against the sync reference, in data_order. Positive = bit 0.
SoftBits demodulate(const std::vector<std::vector<double>>& detrended_signals,
                    const std::vector<double>& sync_reference, const CellLayout& layout,
                    int mod_start_frame, double fps);

struct RecoveredWindow {
  WindowSpan span;
  Bits hard_bits;                      // raw sign decisions, 1044
  Bits post_viterbi;                   // 512 codeword bits after soft decoding
  std::optional<Signature> signature;  // decoded and deserialized
  bool mac_ok = false;
};

struct Recovery {
  Localization localization;
  std::array<double, 9> homography{};
  std::vector<RecoveredWindow> windows;
};

// localize -> homography -> extraction -> window split -> demodulation ->
// concatenated decode -> MAC check.
Recovery recover_signatures(const FrameSource& frames, const Bytes& key_128,
                            int frame_budget = 800);

enum class WindowStatus { Verified, Tampered, Unverifiable };
enum class Decision { Authentic, Falsified, Inconclusive };

struct WindowReport {
  std::uint16_t window_no = 0;
  double slot_start = 0.0;
  bool mac_valid = false;
  std::optional<int> dyn_distance;
  std::optional<int> id_distance;
  WindowStatus status = WindowStatus::Unverifiable;
};

struct VerificationReport {
  Decision decision = Decision::Inconclusive;
  std::string failure_reason;
  int max_dyn_distance = -1;  // -1 when no window produced a distance
  int max_id_distance = -1;
  int verified_windows = 0;
  std::vector<WindowReport> windows;
};

// Validates recovered descriptors against the portrayed content. The track is
// resampled to the hasher's core rate; window i's content is compared to the
// descriptor carried by the embedding slot that follows it.
VerificationReport compare(const Recovery& recovery, const FeatureTrack& track,
                           const HasherPair& hashers, int dyn_threshold = kDynThreshold,
                           int id_threshold = kIdThreshold);

std::string report_to_json(const VerificationReport& report);
const char* to_string(Decision d);
const char* to_string(WindowStatus s);

}  // namespace optisig
