#include "optisig/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "optisig/errors.hpp"
#include "optisig/rng.hpp"

namespace optisig {

std::uint16_t days_since_epoch_2020() {
  using namespace std::chrono;
  const auto today = floor<days>(system_clock::now());
  const auto epoch = sys_days{year{2020} / 1 / 1};
  const auto d = duration_cast<days>(today - epoch).count();
  return static_cast<std::uint16_t>(std::clamp<long long>(d, 0, 0xffff));
}

std::vector<BitmapSchedule> EmbedResult::schedules() const {
  std::vector<BitmapSchedule> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(w.schedule);
  return out;
}

namespace {

// Cell-mean RGB over a set of camera frames, through the scene's own geometry.
std::array<Rgb, kCellCount> mean_cell_colors(const FrameSource& video,
                                             const SceneConfig& scene,
                                             const std::vector<std::vector<int>>& frames_per_cell) {
  std::array<double, kCellCount> r{}, g{}, b{};
  std::array<long, kCellCount> count{};

  const auto h = scene.effective_homography();
  const double det = h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6]) +
                     h[2] * (h[3] * h[7] - h[4] * h[6]);
  const double inv = 1.0 / det;
  const std::array<double, 9> hinv = {
      (h[4] * h[8] - h[5] * h[7]) * inv, (h[2] * h[7] - h[1] * h[8]) * inv,
      (h[1] * h[5] - h[2] * h[4]) * inv, (h[5] * h[6] - h[3] * h[8]) * inv,
      (h[0] * h[8] - h[2] * h[6]) * inv, (h[2] * h[3] - h[0] * h[5]) * inv,
      (h[3] * h[7] - h[4] * h[6]) * inv, (h[1] * h[6] - h[0] * h[7]) * inv,
      (h[0] * h[4] - h[1] * h[3]) * inv};

  // pixel -> cell map
  std::vector<std::pair<std::int32_t, std::int16_t>> px_cells;
  Image probe = video.frame(0);
  for (int y = 0; y < probe.height; ++y)
    for (int x = 0; x < probe.width; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      const double w = hinv[6] * cx + hinv[7] * cy + hinv[8];
      if (std::abs(w) < 1e-12) continue;
      const double u = (hinv[0] * cx + hinv[1] * cy + hinv[2]) / w;
      const double v = (hinv[3] * cx + hinv[4] * cy + hinv[5]) / w;
      const int cell = CellLayout::cell_at(u, v);
      if (cell >= 0) px_cells.emplace_back(y * probe.width + x, std::int16_t(cell));
    }

  // Which frames to average per cell
  std::vector<std::vector<std::int16_t>> cells_by_frame(video.frame_count());
  for (int c = 0; c < kCellCount; ++c)
    for (int f : frames_per_cell[c])
      if (f >= 0 && f < video.frame_count()) cells_by_frame[f].push_back(std::int16_t(c));

  std::array<bool, kCellCount> wanted{};
  for (int f = 0; f < video.frame_count(); ++f) {
    if (cells_by_frame[f].empty()) continue;
    wanted.fill(false);
    for (auto c : cells_by_frame[f]) wanted[c] = true;
    Image img = video.frame(f);
    for (const auto& [px, cell] : px_cells) {
      if (!wanted[cell]) continue;
      const std::uint8_t* p = img.data.data() + 3 * static_cast<std::size_t>(px);
      r[cell] += p[0];
      g[cell] += p[1];
      b[cell] += p[2];
      ++count[cell];
    }
  }

  std::array<Rgb, kCellCount> out{};
  for (int c = 0; c < kCellCount; ++c)
    if (count[c] > 0)
      out[c] = {std::uint8_t(std::lround(r[c] / count[c])),
                std::uint8_t(std::lround(g[c] / count[c])),
                std::uint8_t(std::lround(b[c] / count[c]))};
    else
      out[c] = {0, 0, 0};
  return out;
}

}  // namespace

SurfaceColorMap estimate_surface_map(const FrameSource& window_video,
                                     const BitmapSchedule& schedule, const SceneConfig& scene,
                                     const SurfaceColorMap* previous) {
  const double fps = window_video.fps();
  std::vector<std::vector<int>> off_frames(kCellCount), on_frames(kCellCount);
  for (int f = 0; f < window_video.frame_count(); ++f) {
    const double t = (f + 0.5) / fps;
    const int disp = schedule.frame_at(t + schedule.t0);
    if (disp < 0) continue;
    const auto& lit = schedule.frames[disp].lit;
    for (int c = 0; c < kCellCount; ++c) {
      const bool emits = lit[c] && schedule.cell_colors[c].sum() > 0;
      (emits ? on_frames : off_frames)[c].push_back(f);
    }
  }

  SurfaceColorMap map;
  map.off = mean_cell_colors(window_video, scene, off_frames);
  map.on = mean_cell_colors(window_video, scene, on_frames);
  for (int c = 0; c < kCellCount; ++c) {
    if (!on_frames[c].empty()) continue;
    map.stale[c] = true;
    map.on[c] = previous ? previous->on[c] : map.off[c];
  }
  return map;
}

std::optional<double> self_extract_ber(const FrameSource& window_video,
                                       const BitmapSchedule& schedule, const SceneConfig& scene) {
  static const CellLayout layout = build_layout();
  try {
    const auto signals = extract_cell_signals(window_video, scene.effective_homography(), layout);
    const double fps = window_video.fps();
    const int n = window_video.frame_count();

    std::vector<double> sync_raw(n, 0.0);
    for (int id : layout.sync_cells)
      for (int f = 0; f < n; ++f) sync_raw[f] += signals[id][f];
    for (double& v : sync_raw) v /= layout.sync_cells.size();

    // The core unit knows its own timing: modulation starts after the downtime.
    const int mod_start = static_cast<int>(std::lround(kDowntimeS * fps));

    // Short video: plain mean removal suffices at window scale.
    std::vector<std::vector<double>> detrended(kCellCount);
    for (int c = 0; c < kCellCount; ++c) {
      if (layout.roles[c] != CellRole::Data) continue;
      detrended[c] = signals[c];
      double m = 0.0;
      for (double v : detrended[c]) m += v;
      m /= detrended[c].size();
      for (double& v : detrended[c]) v -= m;
    }
    std::vector<double> sync_ref = sync_raw;
    double m = 0.0;
    for (double v : sync_ref) m += v;
    m /= sync_ref.size();
    for (double& v : sync_ref) v -= m;

    SoftBits soft = demodulate(detrended, sync_ref, layout, mod_start, fps);
    double errors = 0.0;
    const Bits truth = reference_demod_local(schedule);
    for (std::size_t i = 0; i < soft.size(); ++i) {
      const int hard = soft[i] >= 0.0 ? 0 : 1;
      errors += hard != truth[i];
    }
    return errors / soft.size();
  } catch (const StageFailure&) {
    return std::nullopt;
  }
}

EmbedResult embed_run(const FeatureTrack& raw_track, const EmbedConfig& config) {
  const FeatureTrack track = resample_track(raw_track, config.core_fps);
  const int n_frames = window_frames(config.core_fps);
  const int n_windows = track.frame_count() / n_frames;
  if (n_windows < 1)
    throw std::invalid_argument("embed_run: track holds " +
                                std::to_string(track.frame_count() / config.core_fps) +
                                " s, which is shorter than one window");

  const HasherPair hashers = make_hashers(config.key, config.core_fps);
  const std::uint16_t date = config.date ? config.date : days_since_epoch_2020();

  EmbedResult result;
  result.final_state = make_adapt_state(config.adapt_params);

  // Prior for the surface before any feedback: the configured surface color
  // under the scene's ambient level.
  SurfaceColorMap surface;
  const double ambient = config.self_scene.ambient_lux / 500.0;
  auto scaled = [&](std::uint8_t v) {
    return std::uint8_t(std::clamp(v * ambient, 0.0, 255.0));
  };
  const Rgb prior{scaled(config.self_scene.surface_color.r),
                  scaled(config.self_scene.surface_color.g),
                  scaled(config.self_scene.surface_color.b)};
  surface.off.fill(prior);
  surface.on.fill(prior);
  surface.stale.fill(true);

  std::array<Rgb, kCellCount> colors = colors_for_state(result.final_state, surface);

  for (int w = 0; w < n_windows; ++w) {
    EmbeddedWindow ew;
    WindowMeta meta{static_cast<std::uint16_t>(w), config.unit_id, date};
    Descriptor descriptor;
    try {
      descriptor = make_descriptor(track, w * n_frames, meta, hashers);
    } catch (const DegenerateInput&) {
      // Flat window: substitute a flagged sentinel hash so the stream keeps
      // its cadence; verifiers will see the window as unverifiable content.
      descriptor.dyn_hash.assign(kHashBits, 0);
      Bits full_id = hashers.identity.hash(track.identity);
      descriptor.id_hash_half = (meta.window_no % 2 == 0)
                                    ? slice(full_id, 0, kHashHalfBits)
                                    : slice(full_id, kHashHalfBits, kHashHalfBits);
      descriptor.meta = meta;
      descriptor.degenerate = true;
    }
    ew.degenerate = descriptor.degenerate;
    ew.signature = seal(descriptor, config.key.key);
    ew.coded = encode_window(serialize(ew.signature));
    // Slot w+1 carries window w's signature.
    ew.schedule = schedule_window(ew.coded, colors, meta.window_no, (w + 1) * kWindowS);

    if (config.adaptive) {
      BitmapSchedule self_sched = ew.schedule;
      self_sched.t0 = 0.0;
      auto video = render({self_sched}, config.self_scene, derive_seed(config.seed, 100 + w));
      ew.self_ber = self_extract_ber(*video, self_sched, config.self_scene);
      surface = estimate_surface_map(*video, self_sched, config.self_scene, &surface);
      AdaptOutcome outcome = adapt(result.final_state, ew.self_ber, surface);
      result.final_state = outcome.state;
      colors = outcome.cell_colors;
    }
    result.windows.push_back(std::move(ew));
  }
  return result;
}

VerifyOutcome verify_video(const FrameSource& frames, const FeatureTrack& track,
                           const KeyMaterial& key, double core_fps, int frame_budget) {
  VerifyOutcome outcome;
  try {
    Recovery recovery = recover_signatures(frames, key.key, frame_budget);
    const HasherPair hashers = make_hashers(key, core_fps);
    outcome.report = compare(recovery, track, hashers);
    outcome.recovery = std::move(recovery);
  } catch (const StageFailure& e) {
    outcome.report.decision = Decision::Inconclusive;
    outcome.report.failure_reason = e.what();
  }
  return outcome;
}

BerStats measure_ber(const FrameSource& frames, const EmbedResult& embedded,
                     const KeyMaterial& key, int frame_budget) {
  BerStats stats;
  Recovery recovery;
  try {
    recovery = recover_signatures(frames, key.key, frame_budget);
  } catch (const StageFailure&) {
    stats.pipeline_failed = true;
    return stats;
  }

  double raw_err = 0, post_err = 0, final_err = 0;
  long raw_n = 0, post_n = 0, final_n = 0;
  for (const auto& rw : recovery.windows) {
    // Match the span to the embedded slot by its origin.
    const EmbeddedWindow* slot = nullptr;
    for (const auto& ew : embedded.windows)
      if (std::abs(ew.schedule.t0 - rw.span.slot_start) < kWindowS / 2) slot = &ew;
    if (!slot) continue;
    ++stats.windows;

    for (std::size_t i = 0; i < rw.hard_bits.size(); ++i)
      raw_err += rw.hard_bits[i] != slot->coded[i];
    raw_n += static_cast<long>(rw.hard_bits.size());

    const Bits truth_payload = serialize(slot->signature);
    Bits padded = truth_payload;
    padded.resize(360, 0);
    const Bits truth_codeword = unpack_bits(rs_encode(pack_bits(padded)), kRsN * 8);
    for (int i = 0; i < kRsN * 8; ++i) post_err += rw.post_viterbi[i] != truth_codeword[i];
    post_n += kRsN * 8;

    // Final stage: the decoded payload, or the uncorrected post-Viterbi view
    // when RS reported failure.
    const Bits final_bits =
        rw.signature ? serialize(*rw.signature)
                     : Bits(rw.post_viterbi.begin(), rw.post_viterbi.begin() + 353);
    for (int i = 0; i < 353; ++i) final_err += final_bits[i] != truth_payload[i];
    final_n += 353;
  }
  if (raw_n) stats.raw = raw_err / raw_n;
  if (post_n) stats.post_viterbi = post_err / post_n;
  if (final_n) stats.final = final_err / final_n;
  return stats;
}

}  // namespace optisig
