#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "optisig/adaptive.hpp"
#include "optisig/channel.hpp"
#include "optisig/descriptor.hpp"
#include "optisig/verifier.hpp"

namespace optisig {

std::uint16_t days_since_epoch_2020();

struct EmbedConfig {
  KeyMaterial key;
  std::uint16_t unit_id = 1;
  std::uint16_t date = 0;  // 0 = today
  double core_fps = 24.0;
  bool adaptive = true;
  // Feedback channel standing in for the core unit's own camera.
  SceneConfig self_scene;
  std::uint64_t seed = 1;
  AdaptParams adapt_params;
};

struct EmbeddedWindow {
  Signature signature;
  Bits coded;  // the 1044 bits actually modulated
  BitmapSchedule schedule;
  std::optional<double> self_ber;  // raw self-extraction BER (adaptive runs)
  bool degenerate = false;         // sentinel dynamic hash substituted
};

struct EmbedResult {
  std::vector<EmbeddedWindow> windows;
  AdaptState final_state;
  std::vector<BitmapSchedule> schedules() const;
};

// Windows the track, builds and seals descriptors, runs the adaptive loop
// forward against the self-feedback scene, and lays out one schedule per
// window. The signature of window i is modulated during slot i+1, so the
// produced video span is one window longer than the track.
EmbedResult embed_run(const FeatureTrack& track, const EmbedConfig& config);

// Raw BER of a rendered window against the bits it was meant to carry,
// using the core unit's calibrated geometry. nullopt when extraction fails.
std::optional<double> self_extract_ber(const FrameSource& window_video,
                                       const BitmapSchedule& schedule, const SceneConfig& scene);

// Patch colors with and without modulator light, measured from the window's
// own video. Cells that never emitted keep `previous`'s lit color, flagged
// stale.
SurfaceColorMap estimate_surface_map(const FrameSource& window_video,
                                     const BitmapSchedule& schedule, const SceneConfig& scene,
                                     const SurfaceColorMap* previous);

struct VerifyOutcome {
  VerificationReport report;
  std::optional<Recovery> recovery;  // absent when an early stage failed
};

// Full downstream pipeline with stage failures folded into the report.
VerifyOutcome verify_video(const FrameSource& frames, const FeatureTrack& track,
                           const KeyMaterial& key, double core_fps = 24.0,
                           int frame_budget = 800);

// Decode quality against ground truth, for channel sweeps.
struct BerStats {
  double raw = 0.0;           // hard-decision BER over the 1044 coded bits
  double post_viterbi = 0.0;  // over the 512 codeword bits
  double final = 0.0;         // over the 353 payload bits, after RS
  int windows = 0;            // windows matched to an embedded slot
  bool pipeline_failed = false;
};
BerStats measure_ber(const FrameSource& frames, const EmbedResult& embedded,
                     const KeyMaterial& key, int frame_budget = 800);

}  // namespace optisig
