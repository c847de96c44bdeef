#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace optisig {

inline constexpr int kTrackChannels = 16;
inline constexpr int kIdentityDim = 512;

// Per-frame facial-motion samples (5 lip-landmark distances + 11 blendshape
// scores) plus a unit-norm identity embedding for the whole track. Verification
// inputs may optionally carry one embedding per frame.
struct FeatureTrack {
  double fps = 24.0;
  std::vector<std::array<double, kTrackChannels>> frames;
  std::vector<double> identity;  // 512 entries, L2 norm 1
  // Optional per-frame identity embeddings (same layout); empty means the
  // track-level embedding applies to every frame.
  std::vector<std::vector<double>> frame_identities;

  int frame_count() const { return static_cast<int>(frames.size()); }
  double duration() const { return frames.size() / fps; }
  const std::vector<double>& identity_at(int frame) const {
    return frame_identities.empty() ? identity : frame_identities[frame];
  }
};

struct SynthConfig {
  double duration_s = 36.0;
  double fps = 24.0;
  int components = 24;        // sinusoids per channel
  double max_freq_hz = 8.0;   // band limit
  double min_freq_hz = 0.15;
};

// Deterministic band-limited track generator. Channel c is a sum of
// `components` random sinusoids below max_freq_hz; the identity embedding is a
// seeded random unit vector.
FeatureTrack synth_track(const SynthConfig& config, std::uint64_t seed);

// Random unit-norm embedding (for identity-swap experiments).
std::vector<double> random_identity(std::uint64_t seed);

// Unit vector at exactly `theta` radians from `u`.
std::vector<double> identity_at_angle(const std::vector<double>& u, double theta,
                                      std::uint64_t seed);

// Additive per-channel gaussian noise; sigma = 0 returns an identical track.
FeatureTrack with_jitter(const FeatureTrack& track, double sigma, std::uint64_t seed);

// Replaces frames [start_frame, start_frame + n_frames) of every channel with
// an independent draw; identity is left untouched.
FeatureTrack with_tamper(const FeatureTrack& track, int start_frame, int n_frames,
                         std::uint64_t seed);

FeatureTrack with_identity(const FeatureTrack& track, std::vector<double> new_identity);

// Linear resampling of the motion channels (and per-frame identities, if any)
// to a target frame rate.
FeatureTrack resample_track(const FeatureTrack& track, double target_fps);

// JSON document: {"schema_version", "fps", "identity", "frames", optional
// "frame_identities"}. Throws SchemaError with field diagnostics.
FeatureTrack ingest_track(const std::string& path);
void save_track(const FeatureTrack& track, const std::string& path);

}  // namespace optisig
