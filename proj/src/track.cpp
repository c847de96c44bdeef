#include "optisig/track.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "optisig/errors.hpp"
#include "optisig/rng.hpp"

namespace optisig {

namespace {

void normalize_identity(std::vector<double>& id, const char* what) {
  if (static_cast<int>(id.size()) != kIdentityDim)
    throw SchemaError(std::string(what) + ": identity must have " +
                      std::to_string(kIdentityDim) + " entries, got " +
                      std::to_string(id.size()));
  double norm = 0.0;
  for (double x : id) norm += x * x;
  norm = std::sqrt(norm);
  if (norm < 1e-12) throw SchemaError(std::string(what) + ": identity vector is zero");
  for (double& x : id) x /= norm;
}

}  // namespace

FeatureTrack synth_track(const SynthConfig& config, std::uint64_t seed) {
  if (config.duration_s <= 0 || config.fps <= 0)
    throw std::invalid_argument("synth_track: duration and fps must be positive");
  FeatureTrack track;
  track.fps = config.fps;
  const int n = static_cast<int>(std::llround(config.duration_s * config.fps));
  track.frames.assign(n, {});

  GaussianRng rng(derive_seed(seed, 1));
  for (int c = 0; c < kTrackChannels; ++c) {
    std::vector<double> amp(config.components), freq(config.components), phase(config.components);
    for (int j = 0; j < config.components; ++j) {
      amp[j] = rng.gaussian() / std::sqrt(double(config.components));
      freq[j] = config.min_freq_hz +
                rng.uniform() * (config.max_freq_hz - config.min_freq_hz);
      phase[j] = rng.uniform() * 2.0 * M_PI;
    }
    for (int i = 0; i < n; ++i) {
      double t = i / config.fps;
      double v = 0.0;
      for (int j = 0; j < config.components; ++j)
        v += amp[j] * std::sin(2.0 * M_PI * freq[j] * t + phase[j]);
      track.frames[i][c] = v;
    }
  }

  track.identity = random_identity(derive_seed(seed, 2));
  return track;
}

std::vector<double> random_identity(std::uint64_t seed) {
  GaussianRng rng(seed);
  std::vector<double> id(kIdentityDim);
  double norm = 0.0;
  for (double& x : id) {
    x = rng.gaussian();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : id) x /= norm;
  return id;
}

std::vector<double> identity_at_angle(const std::vector<double>& u, double theta,
                                      std::uint64_t seed) {
  // Orthonormalize a random direction against u, then rotate in that plane.
  std::vector<double> w = random_identity(seed);
  double du = 0.0, uu = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    du += w[i] * u[i];
    uu += u[i] * u[i];
  }
  double wnorm = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    w[i] -= du / uu * u[i];
    wnorm += w[i] * w[i];
  }
  wnorm = std::sqrt(wnorm);
  std::vector<double> v(u.size());
  const double c = std::cos(theta), s = std::sin(theta);
  const double unorm = std::sqrt(uu);
  for (std::size_t i = 0; i < u.size(); ++i) v[i] = c * u[i] / unorm + s * w[i] / wnorm;
  return v;
}

FeatureTrack with_jitter(const FeatureTrack& track, double sigma, std::uint64_t seed) {
  FeatureTrack out = track;
  if (sigma == 0.0) return out;
  GaussianRng rng(seed);
  for (auto& frame : out.frames)
    for (double& v : frame) v += sigma * rng.gaussian();
  return out;
}

FeatureTrack with_tamper(const FeatureTrack& track, int start_frame, int n_frames,
                         std::uint64_t seed) {
  if (start_frame < 0 || start_frame + n_frames > track.frame_count())
    throw std::invalid_argument("with_tamper: span outside track");
  SynthConfig cfg;
  cfg.duration_s = (n_frames + 1) / track.fps;
  cfg.fps = track.fps;
  FeatureTrack patch = synth_track(cfg, seed);
  FeatureTrack out = track;
  for (int i = 0; i < n_frames; ++i) out.frames[start_frame + i] = patch.frames[i];
  return out;
}

FeatureTrack with_identity(const FeatureTrack& track, std::vector<double> new_identity) {
  FeatureTrack out = track;
  normalize_identity(new_identity, "with_identity");
  out.identity = std::move(new_identity);
  out.frame_identities.clear();
  return out;
}

FeatureTrack resample_track(const FeatureTrack& track, double target_fps) {
  if (std::abs(track.fps - target_fps) < 1e-9) return track;
  FeatureTrack out;
  out.fps = target_fps;
  out.identity = track.identity;
  const int n = static_cast<int>(std::floor((track.frame_count() - 1) / track.fps * target_fps)) + 1;
  out.frames.resize(n);
  if (!track.frame_identities.empty()) out.frame_identities.resize(n);
  for (int i = 0; i < n; ++i) {
    double src = i / target_fps * track.fps;
    int lo = std::min(static_cast<int>(src), track.frame_count() - 1);
    int hi = std::min(lo + 1, track.frame_count() - 1);
    double a = src - lo;
    for (int c = 0; c < kTrackChannels; ++c)
      out.frames[i][c] = (1 - a) * track.frames[lo][c] + a * track.frames[hi][c];
    if (!track.frame_identities.empty())
      out.frame_identities[i] = track.frame_identities[a < 0.5 ? lo : hi];
  }
  return out;
}

FeatureTrack ingest_track(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("ingest_track: cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("ingest_track: " + path + ": " + e.what());
  }

  auto require = [&](const char* field) {
    if (!doc.contains(field))
      throw SchemaError("ingest_track: " + path + ": missing field '" + field + "'");
  };
  require("fps");
  require("identity");
  require("frames");

  FeatureTrack track;
  if (!doc["fps"].is_number() || doc["fps"].get<double>() <= 0)
    throw SchemaError("ingest_track: " + path + ": 'fps' must be a positive number");
  track.fps = doc["fps"].get<double>();

  try {
    track.identity = doc["identity"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError("ingest_track: " + path + ": 'identity' must be a number list");
  }
  normalize_identity(track.identity, ("ingest_track: " + path).c_str());

  if (!doc["frames"].is_array())
    throw SchemaError("ingest_track: " + path + ": 'frames' must be a list");
  track.frames.reserve(doc["frames"].size());
  int line = 0;
  for (const auto& f : doc["frames"]) {
    if (!f.is_array() || f.size() != kTrackChannels)
      throw SchemaError("ingest_track: " + path + ": frame " + std::to_string(line) +
                        " must have exactly " + std::to_string(kTrackChannels) + " channels");
    std::array<double, kTrackChannels> sample{};
    for (int c = 0; c < kTrackChannels; ++c) {
      if (!f[c].is_number())
        throw SchemaError("ingest_track: " + path + ": frame " + std::to_string(line) +
                          " channel " + std::to_string(c) + " is not a number");
      sample[c] = f[c].get<double>();
    }
    track.frames.push_back(sample);
    ++line;
  }

  if (doc.contains("frame_identities")) {
    const auto& ids = doc["frame_identities"];
    if (!ids.is_array() || ids.size() != track.frames.size())
      throw SchemaError("ingest_track: " + path +
                        ": 'frame_identities' must list one embedding per frame");
    track.frame_identities.reserve(ids.size());
    int row = 0;
    for (const auto& v : ids) {
      std::vector<double> id;
      try {
        id = v.get<std::vector<double>>();
      } catch (const nlohmann::json::exception&) {
        throw SchemaError("ingest_track: " + path + ": frame_identities[" +
                          std::to_string(row) + "] must be a number list");
      }
      normalize_identity(id, ("ingest_track: " + path + " frame_identities[" +
                              std::to_string(row) + "]")
                                 .c_str());
      track.frame_identities.push_back(std::move(id));
      ++row;
    }
  }
  return track;
}

void save_track(const FeatureTrack& track, const std::string& path) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["fps"] = track.fps;
  doc["identity"] = track.identity;
  auto& frames = doc["frames"] = nlohmann::json::array();
  for (const auto& f : track.frames) frames.push_back(f);
  if (!track.frame_identities.empty()) doc["frame_identities"] = track.frame_identities;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_track: cannot write " + path);
  out << doc.dump();
}

}  // namespace optisig
