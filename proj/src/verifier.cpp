#include "optisig/verifier.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>

#include "json.hpp"
#include "optisig/errors.hpp"

namespace optisig {

Image Heatmap::to_image() const {
  Image img(width, height);
  float hi = 0.f;
  for (float v : values) hi = std::max(hi, v);
  if (hi <= 0.f) hi = 1.f;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      auto v = std::uint8_t(std::clamp(at(x, y) / hi * 255.f, 0.f, 255.f));
      img.set(x, y, {v, v, v});
    }
  return img;
}

namespace {

// Largest analysis length <= n_max for which both f_l and f_d land on exact
// DFT bins, so neither tone leaks into the other's correlation.
int snap_analysis_length(int n_max, double fps) {
  for (int period = 2; period <= 256; ++period) {
    double bins_l = period * kFreqLoc / fps;
    double bins_d = period * kFreqData / fps;
    if (std::abs(bins_l - std::round(bins_l)) < 1e-9 &&
        std::abs(bins_d - std::round(bins_d)) < 1e-9 && std::round(bins_l) >= 1.0) {
      if (n_max >= period) return n_max / period * period;
      break;
    }
  }
  return n_max;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::size_t idx = static_cast<std::size_t>(p * (v.size() - 1));
  std::nth_element(v.begin(), v.begin() + idx, v.end());
  return v[idx];
}

}  // namespace

Localization localize(const FrameSource& frames, int frame_budget) {
  const double fps = frames.fps();
  if (fps < 2.0 * kFreqLoc)
    throw StageFailure(Stage::Localization,
                       "localize: frame rate below the Nyquist rate for the beacon");
  const int n = snap_analysis_length(std::min(frame_budget, frames.frame_count()), fps);
  if (n < static_cast<int>(fps))
    throw StageFailure(Stage::Localization, "localize: too few frames for spectral analysis");

  Image first = frames.frame(0);
  const int w = first.width, h = first.height;
  const std::size_t npx = static_cast<std::size_t>(w) * h;
  std::vector<double> s1(npx, 0.0), s2(npx, 0.0);
  std::vector<double> lr(npx, 0.0), li(npx, 0.0), dr(npx, 0.0), di(npx, 0.0);

  for (int f = 0; f < n; ++f) {
    Image img = f == 0 ? std::move(first) : frames.frame(f);
    const double al = -2.0 * M_PI * kFreqLoc * f / fps;
    const double ad = -2.0 * M_PI * kFreqData * f / fps;
    const double cl = std::cos(al), sl = std::sin(al);
    const double cd = std::cos(ad), sd = std::sin(ad);
    const std::uint8_t* p = img.data.data();
    for (std::size_t i = 0; i < npx; ++i, p += 3) {
      const double v = (int(p[0]) + p[1] + p[2]) * (1.0 / 3.0);
      s1[i] += v;
      s2[i] += v * v;
      lr[i] += v * cl;
      li[i] += v * sl;
      dr[i] += v * cd;
      di[i] += v * sd;
    }
  }

  Heatmap heat;
  heat.width = w;
  heat.height = h;
  heat.values.resize(npx);
  const double n_noise_bins = std::max(1.0, n / 2.0 - 3.0);
  for (std::size_t i = 0; i < npx; ++i) {
    const double ac = std::max(0.0, n * s2[i] - s1[i] * s1[i]);  // sum |X_k|^2, k != 0
    const double pl = lr[i] * lr[i] + li[i] * li[i];
    const double pd = dr[i] * dr[i] + di[i] * di[i];
    const double noise = std::max(1e-6, (ac / 2.0 - pl - pd) / n_noise_bins);
    heat.values[i] = static_cast<float>(pl / noise);
  }

  // Contours: threshold at 5x the median, 8-connected components. The median
  // captures the noise floor; the upper-percentile term keeps weak broadband
  // responses (data cells under low noise) out of the beacon mask.
  std::vector<double> sample(heat.values.begin(), heat.values.end());
  const double median = percentile(sample, 0.5);
  const double top = percentile(std::move(sample), 0.99);
  const double threshold = std::max(5.0 * median, 0.25 * top);
  std::vector<std::uint8_t> mask(npx);
  for (std::size_t i = 0; i < npx; ++i) mask[i] = heat.values[i] > threshold;

  struct Blob {
    double sx = 0, sy = 0;
    int area = 0;
  };
  std::vector<Blob> blobs;
  std::vector<std::int32_t> label(npx, -1);
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < npx; ++start) {
    if (!mask[start] || label[start] >= 0) continue;
    const auto id = static_cast<std::int32_t>(blobs.size());
    blobs.push_back({});
    label[start] = id;
    queue.push_back(start);
    while (!queue.empty()) {
      std::size_t i = queue.front();
      queue.pop_front();
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      blobs[id].sx += x + 0.5;
      blobs[id].sy += y + 0.5;
      blobs[id].area += 1;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          std::size_t j = static_cast<std::size_t>(ny) * w + nx;
          if (mask[j] && label[j] < 0) {
            label[j] = id;
            queue.push_back(j);
          }
        }
    }
  }

  constexpr int kMinBlobArea = 25;
  std::vector<Blob> accepted;
  for (const auto& b : blobs)
    if (b.area >= kMinBlobArea) accepted.push_back(b);
  if (accepted.size() < 4)
    throw StageFailure(Stage::Localization,
                       "localize: found " + std::to_string(accepted.size()) +
                           " beacon contours, need 4");
  std::sort(accepted.begin(), accepted.end(),
            [](const Blob& a, const Blob& b) { return a.area > b.area; });
  accepted.resize(4);

  // Canonical corner order assuming a roughly upright camera.
  std::array<std::pair<double, double>, 4> pts;
  for (int i = 0; i < 4; ++i)
    pts[i] = {accepted[i].sx / accepted[i].area, accepted[i].sy / accepted[i].area};
  auto score = [&](auto f) {
    return *std::max_element(pts.begin(), pts.end(), [&](const auto& a, const auto& b) {
      return f(a) < f(b);
    });
  };
  Localization loc;
  loc.heatmap = std::move(heat);
  loc.corners[0] = score([](const auto& p) { return -(p.first + p.second); });  // TL
  loc.corners[1] = score([](const auto& p) { return p.first - p.second; });     // TR
  loc.corners[2] = score([](const auto& p) { return p.first + p.second; });     // BR
  loc.corners[3] = score([](const auto& p) { return p.second - p.first; });     // BL
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (loc.corners[i] == loc.corners[j])
        throw StageFailure(Stage::Localization, "localize: corner ordering is ambiguous");
  return loc;
}

HomographyFit estimate_homography(const std::array<std::pair<double, double>, 4>& src,
                                  const std::array<std::pair<double, double>, 4>& dst) {
  auto collinear = [](const std::array<std::pair<double, double>, 4>& pts) {
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        for (int c = b + 1; c < 4; ++c) {
          const double area = (pts[b].first - pts[a].first) * (pts[c].second - pts[a].second) -
                              (pts[c].first - pts[a].first) * (pts[b].second - pts[a].second);
          double scale = std::max({std::abs(pts[b].first - pts[a].first),
                                   std::abs(pts[c].first - pts[a].first),
                                   std::abs(pts[b].second - pts[a].second),
                                   std::abs(pts[c].second - pts[a].second), 1.0});
          if (std::abs(area) < 1e-9 * scale * scale) return true;
        }
    return false;
  };
  if (collinear(src) || collinear(dst))
    throw std::invalid_argument("estimate_homography: degenerate configuration (collinear points)");

  // Hartley normalization: centroid to origin, mean distance sqrt(2).
  auto normalizer = [](const std::array<std::pair<double, double>, 4>& pts) {
    double cx = 0, cy = 0;
    for (auto& p : pts) {
      cx += p.first;
      cy += p.second;
    }
    cx /= 4;
    cy /= 4;
    double dist = 0;
    for (auto& p : pts) dist += std::hypot(p.first - cx, p.second - cy);
    dist /= 4;
    const double s = dist > 0 ? std::sqrt(2.0) / dist : 1.0;
    Eigen::Matrix3d t;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return t;
  };
  const Eigen::Matrix3d ts = normalizer(src), td = normalizer(dst);

  Eigen::Matrix<double, 8, 9> a = Eigen::Matrix<double, 8, 9>::Zero();
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector3d p = ts * Eigen::Vector3d(src[i].first, src[i].second, 1.0);
    const Eigen::Vector3d q = td * Eigen::Vector3d(dst[i].first, dst[i].second, 1.0);
    a.row(2 * i) << -p.x(), -p.y(), -1, 0, 0, 0, q.x() * p.x(), q.x() * p.y(), q.x();
    a.row(2 * i + 1) << 0, 0, 0, -p.x(), -p.y(), -1, q.y() * p.x(), q.y() * p.y(), q.y();
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 8, 9>> svd(a, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 1> hv = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
  Eigen::Matrix3d hm = td.inverse() * hn * ts;
  if (std::abs(hm(2, 2)) < 1e-12)
    throw std::invalid_argument("estimate_homography: ill-conditioned solution");
  hm /= hm(2, 2);

  HomographyFit fit;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) fit.h[r * 3 + c] = hm(r, c);
  for (int i = 0; i < 4; ++i) {
    Eigen::Vector3d q = hm * Eigen::Vector3d(src[i].first, src[i].second, 1.0);
    fit.max_reprojection_error =
        std::max(fit.max_reprojection_error,
                 std::hypot(q.x() / q.z() - dst[i].first, q.y() / q.z() - dst[i].second));
  }
  return fit;
}

std::vector<std::vector<double>> extract_cell_signals(const FrameSource& frames,
                                                      const std::array<double, 9>& h,
                                                      const CellLayout& layout) {
  Image first = frames.frame(0);
  const int w = first.width, ht = first.height;

  // Invert h and bucket camera pixels into inset cell interiors.
  Eigen::Matrix3d hm;
  hm << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
  if (std::abs(hm.determinant()) < 1e-12)
    throw StageFailure(Stage::Homography, "extract_cell_signals: homography not invertible");
  const Eigen::Matrix3d hinv = hm.inverse();

  const double margin = 0.10 * kCellPx;
  std::vector<std::vector<std::int32_t>> cell_pixels(kCellCount);
  for (int y = 0; y < ht; ++y)
    for (int x = 0; x < w; ++x) {
      const Eigen::Vector3d q = hinv * Eigen::Vector3d(x + 0.5, y + 0.5, 1.0);
      if (std::abs(q.z()) < 1e-12) continue;
      const double u = q.x() / q.z(), v = q.y() / q.z();
      const int cell = CellLayout::cell_at(u, v);
      if (cell < 0) continue;
      const double lu = u - CellLayout::cell_col(cell) * kCellPx;
      const double lv = v - CellLayout::cell_row(cell) * kCellPx;
      if (lu < margin || lv < margin || lu >= kCellPx - margin || lv >= kCellPx - margin)
        continue;
      cell_pixels[cell].push_back(y * w + x);
    }
  for (int c = 0; c < kCellCount; ++c) {
    if (layout.roles[c] == CellRole::Guard) continue;
    if (cell_pixels[c].size() < 4)
      throw StageFailure(Stage::Extraction,
                         "extract_cell_signals: cell " + std::to_string(c) +
                             " maps to " + std::to_string(cell_pixels[c].size()) +
                             " pixels (out of view or below resolution)");
  }

  const int n = frames.frame_count();
  std::vector<std::vector<double>> signals(kCellCount, std::vector<double>(n, 0.0));
  for (int f = 0; f < n; ++f) {
    Image img = f == 0 ? std::move(first) : frames.frame(f);
    const std::uint8_t* base = img.data.data();
    for (int c = 0; c < kCellCount; ++c) {
      if (cell_pixels[c].empty()) continue;
      double acc = 0.0;
      for (std::int32_t px : cell_pixels[c]) {
        const std::uint8_t* p = base + 3 * static_cast<std::size_t>(px);
        acc += int(p[0]) + p[1] + p[2];
      }
      signals[c][f] = acc / (3.0 * cell_pixels[c].size());
    }
  }
  return signals;
}

namespace {

std::vector<double> moving_average(const std::vector<double>& v, int width) {
  const int n = static_cast<int>(v.size());
  const int half = width / 2;
  std::vector<double> prefix(n + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + v[i];
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
    out[i] = (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1);
  }
  return out;
}

std::vector<double> detrend_and_smooth(const std::vector<double>& v, double fps) {
  const int detrend_w = std::max(3, static_cast<int>(std::lround(2.0 * fps)) | 1);
  std::vector<double> trend = moving_average(v, detrend_w);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - trend[i];
  return moving_average(out, 3);
}

}  // namespace

std::vector<WindowSpan> find_windows(const std::vector<double>& sync_aggregate, double fps,
                                     int total_frames) {
  const int n = static_cast<int>(sync_aggregate.size());
  if (n < static_cast<int>(std::lround(kWindowS * fps)))
    throw StageFailure(Stage::Sync, "find_windows: video shorter than one window");

  std::vector<double> s = detrend_and_smooth(sync_aggregate, fps);

  // Oscillation envelope: moving standard deviation over one carrier period.
  const int env_w = std::max(3, static_cast<int>(std::lround(fps / kFreqData)) | 1);
  std::vector<double> mean = moving_average(s, env_w);
  std::vector<double> sq(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) sq[i] = s[i] * s[i];
  std::vector<double> mean_sq = moving_average(sq, env_w);
  std::vector<double> env(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    env[i] = std::sqrt(std::max(0.0, mean_sq[i] - mean[i] * mean[i]));

  const double lo = percentile(env, 0.15), hi = percentile(env, 0.90);
  if (hi - lo < 0.5)  // intensity units; flat envelope means no modulation at all
    throw StageFailure(Stage::Sync, "find_windows: no modulation detected in sync cells");
  const double threshold = lo + 0.35 * (hi - lo);

  // Runs below threshold lasting at least 0.3 s are downtime candidates.
  const int min_run = static_cast<int>(std::lround(0.3 * fps));
  struct Run {
    int begin, end;
  };
  std::vector<Run> runs;
  int run_start = -1;
  for (int i = 0; i <= n; ++i) {
    const bool low = i < n && env[i] < threshold;
    if (low && run_start < 0) run_start = i;
    if (!low && run_start >= 0) {
      if (i - run_start >= min_run) runs.push_back({run_start, i});
      run_start = -1;
    }
  }
  if (runs.empty())
    throw StageFailure(Stage::Sync, "find_windows: no downtime found (continuous modulation)");

  // Refine each run end to the frame where the raw sync level steps up.
  const double active_hi = percentile(sync_aggregate, 0.90);
  std::vector<WindowSpan> spans;
  const int mod_frames = static_cast<int>(std::lround(kModulationS * fps));
  for (const auto& run : runs) {
    const int core_lo = std::min(run.begin + env_w, run.end - 1);
    std::vector<double> core(sync_aggregate.begin() + core_lo, sync_aggregate.begin() + run.end);
    const double base = percentile(core, 0.5);
    const double step = active_hi - base;
    if (step < 1.0) continue;  // dark tail or lead-in with nothing after it
    int start = -1;
    for (int f = std::max(0, run.end - env_w); f < std::min(n, run.end + env_w); ++f) {
      if (sync_aggregate[f] > base + 0.5 * step) {
        start = f;
        break;
      }
    }
    if (start < 0) continue;
    if (start + mod_frames > total_frames) continue;  // truncated final window
    spans.push_back({start, start / fps - kDowntimeS});
  }
  if (spans.empty())
    throw StageFailure(Stage::Sync, "find_windows: no complete modulation window found");
  return spans;
}

SoftBits demodulate(const std::vector<std::vector<double>>& detrended_signals,
                    const std::vector<double>& sync_reference, const CellLayout& layout,
                    int mod_start_frame, double fps) {
  SoftBits soft(static_cast<std::size_t>(kDataCells) * kBitsPerDataCell, 0.0);
  const int n = static_cast<int>(sync_reference.size());
  for (int j = 0; j < kDataCells; ++j) {
    const auto& cell = detrended_signals[layout.data_order[j]];
    for (int b = 0; b < kBitsPerDataCell; ++b) {
      const int f0 = mod_start_frame + static_cast<int>(std::lround(b * fps / kFreqData));
      const int f1 = mod_start_frame + static_cast<int>(std::lround((b + 1) * fps / kFreqData));
      double num = 0.0, cc = 0.0, rr = 0.0;
      for (int f = f0; f < f1 && f < n; ++f) {
        num += cell[f] * sync_reference[f];
        cc += cell[f] * cell[f];
        rr += sync_reference[f] * sync_reference[f];
      }
      const double den = std::sqrt(cc * rr);
      soft[static_cast<std::size_t>(j) * kBitsPerDataCell + b] = den > 1e-12 ? num / den : 0.0;
    }
  }
  return soft;
}

Recovery recover_signatures(const FrameSource& frames, const Bytes& key_128, int frame_budget) {
  static const CellLayout layout = build_layout();
  Recovery rec;
  rec.localization = localize(frames, frame_budget);

  const auto bitmap_corners = localization_block_centers();
  std::array<std::pair<double, double>, 4> src;
  for (int i = 0; i < 4; ++i) src[i] = {bitmap_corners[i].first, bitmap_corners[i].second};
  HomographyFit fit;
  try {
    fit = estimate_homography(src, rec.localization.corners);
  } catch (const std::invalid_argument& e) {
    throw StageFailure(Stage::Homography, e.what());
  }
  rec.homography = fit.h;

  const auto signals = extract_cell_signals(frames, fit.h, layout);
  const double fps = frames.fps();

  // Aggregate raw sync signal for window detection.
  const int n = frames.frame_count();
  std::vector<double> sync_raw(n, 0.0);
  for (int id : layout.sync_cells)
    for (int f = 0; f < n; ++f) sync_raw[f] += signals[id][f];
  for (double& v : sync_raw) v /= layout.sync_cells.size();

  const auto spans = find_windows(sync_raw, fps, n);

  // Detrended versions for demodulation.
  std::vector<std::vector<double>> detrended(kCellCount);
  for (int c = 0; c < kCellCount; ++c)
    if (layout.roles[c] == CellRole::Data) detrended[c] = detrend_and_smooth(signals[c], fps);
  const std::vector<double> sync_ref = detrend_and_smooth(sync_raw, fps);

  for (const auto& span : spans) {
    RecoveredWindow rw;
    rw.span = span;
    SoftBits soft = demodulate(detrended, sync_ref, layout, span.mod_start_frame, fps);
    rw.hard_bits.resize(soft.size());
    for (std::size_t i = 0; i < soft.size(); ++i) rw.hard_bits[i] = soft[i] >= 0.0 ? 0 : 1;
    WindowDecode decoded = decode_window(soft);
    rw.post_viterbi = decoded.post_viterbi;
    if (decoded.signature_bits) {
      rw.signature = deserialize(*decoded.signature_bits);
      rw.mac_ok = mac_valid(*rw.signature, key_128);
    }
    rec.windows.push_back(std::move(rw));
  }
  return rec;
}

VerificationReport compare(const Recovery& recovery, const FeatureTrack& track,
                           const HasherPair& hashers, int dyn_threshold, int id_threshold) {
  VerificationReport report;
  const int n_frames = hashers.dynamic.input_dim() / kTrackChannels;
  const double core_fps = n_frames / kWindowS;
  const FeatureTrack core_track = resample_track(track, core_fps);

  // Video identity hashes; with per-frame embeddings the hash must hold for
  // every frame, so keep them all and take the worst distance.
  std::vector<Bits> video_id_hashes;
  if (core_track.frame_identities.empty()) {
    video_id_hashes.push_back(hashers.identity.hash(core_track.identity));
  } else {
    for (const auto& id : core_track.frame_identities)
      video_id_hashes.push_back(hashers.identity.hash(id));
  }

  struct Half {
    Bits bits;
    std::size_t report_idx;
  };
  std::map<int, Half> halves;  // window_no -> recovered id-hash half

  int last_slot = -1;
  int last_window_no = -1;
  bool ordering_violated = false;

  for (const auto& rw : recovery.windows) {
    WindowReport wr;
    wr.slot_start = rw.span.slot_start;
    const int slot_index = static_cast<int>(std::lround(rw.span.slot_start / kWindowS));
    if (!rw.signature || !rw.mac_ok) {
      wr.mac_valid = rw.signature && rw.mac_ok;
      wr.status = WindowStatus::Unverifiable;
      report.windows.push_back(wr);
      continue;
    }
    const Signature& sig = *rw.signature;
    wr.window_no = sig.descriptor.meta.window_no;
    wr.mac_valid = true;

    // Re-ordering check: window numbers of recovered descriptors must advance
    // exactly with the embedding slots that carry them.
    if (last_slot >= 0) {
      if (int(wr.window_no) - last_window_no != slot_index - last_slot)
        ordering_violated = true;
    }
    last_slot = slot_index;
    last_window_no = wr.window_no;

    // The descriptor in this slot describes the window of content that ended
    // as the slot began.
    const double content_start_s = rw.span.slot_start - kWindowS;
    const int start_frame = static_cast<int>(std::lround(content_start_s * core_fps));
    if (start_frame < 0 || start_frame + n_frames > core_track.frame_count()) {
      wr.status = WindowStatus::Unverifiable;  // content not portrayed in the track
      report.windows.push_back(wr);
      continue;
    }

    try {
      DynamicVector dyn = build_dynamic_vector(core_track, start_frame, n_frames);
      Bits dyn_hash = hashers.dynamic.hash(zero_mean(dyn.values));
      wr.dyn_distance = hamming(dyn_hash, sig.descriptor.dyn_hash);
    } catch (const DegenerateInput&) {
      wr.status = WindowStatus::Unverifiable;
      report.windows.push_back(wr);
      continue;
    }

    report.max_dyn_distance = std::max(report.max_dyn_distance, *wr.dyn_distance);
    wr.status = *wr.dyn_distance > dyn_threshold ? WindowStatus::Tampered
                                                 : WindowStatus::Verified;
    halves[wr.window_no] = {sig.descriptor.id_hash_half, report.windows.size()};
    report.windows.push_back(wr);
  }

  // Assemble full identity hashes from consecutive even/odd halves.
  for (auto& [wno, half] : halves) {
    if (wno % 2 != 0) continue;
    auto odd = halves.find(wno + 1);
    if (odd == halves.end()) continue;
    Bits full = half.bits;
    full.insert(full.end(), odd->second.bits.begin(), odd->second.bits.end());
    int best = -1;
    for (const auto& vid : video_id_hashes) best = std::max(best, hamming(vid, full));
    report.windows[half.report_idx].id_distance = best;
    report.windows[odd->second.report_idx].id_distance = best;
    report.max_id_distance = std::max(report.max_id_distance, best);
    if (best > id_threshold) {
      report.windows[half.report_idx].status = WindowStatus::Tampered;
      report.windows[odd->second.report_idx].status = WindowStatus::Tampered;
    }
  }

  for (const auto& w : report.windows)
    report.verified_windows += w.status == WindowStatus::Verified;

  const bool any_distance = report.max_dyn_distance >= 0 || report.max_id_distance >= 0;
  if (!any_distance) {
    report.decision = Decision::Inconclusive;
    report.failure_reason = "no window could be both recovered and matched to content";
  } else if (report.max_dyn_distance > dyn_threshold) {
    report.decision = Decision::Falsified;
    report.failure_reason = "dynamic hash distance above threshold";
  } else if (report.max_id_distance > id_threshold) {
    report.decision = Decision::Falsified;
    report.failure_reason = "identity hash distance above threshold";
  } else if (ordering_violated) {
    report.decision = Decision::Falsified;
    report.failure_reason = "window numbers not consecutive across slots";
  } else {
    report.decision = Decision::Authentic;
  }
  return report;
}

const char* to_string(Decision d) {
  switch (d) {
    case Decision::Authentic: return "authentic";
    case Decision::Falsified: return "falsified";
    default: return "inconclusive";
  }
}

const char* to_string(WindowStatus s) {
  switch (s) {
    case WindowStatus::Verified: return "verified";
    case WindowStatus::Tampered: return "tampered";
    default: return "unverifiable";
  }
}

std::string report_to_json(const VerificationReport& report) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["decision"] = to_string(report.decision);
  if (!report.failure_reason.empty()) doc["failure_reason"] = report.failure_reason;
  doc["max_dyn_distance"] = report.max_dyn_distance;
  doc["max_id_distance"] = report.max_id_distance;
  doc["thresholds"] = {{"dyn", kDynThreshold}, {"id", kIdThreshold}};
  doc["verified_windows"] = report.verified_windows;
  auto& windows = doc["windows"] = nlohmann::json::array();
  for (const auto& w : report.windows) {
    nlohmann::json jw;
    jw["window_no"] = w.window_no;
    jw["slot_start"] = w.slot_start;
    jw["mac_valid"] = w.mac_valid;
    if (w.dyn_distance) jw["dyn_distance"] = *w.dyn_distance;
    if (w.id_distance)
      jw["id_distance"] = *w.id_distance;
    else
      jw["id_distance"] = nullptr;
    jw["status"] = to_string(w.status);
    windows.push_back(std::move(jw));
  }
  return doc.dump(1);
}

}  // namespace optisig
