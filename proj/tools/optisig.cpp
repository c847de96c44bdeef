// Command-line front end: embed, simulate, verify, sweep, lsh-analyze.
//
// Exit codes: 0 success (verify: authentic), 2 falsified, 3 unverifiable or
// inconclusive, 4 pipeline failure (I/O, malformed inputs), 1 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "optisig/pipeline.hpp"
#include "optisig/rng.hpp"

namespace fs = std::filesystem;
using namespace optisig;

namespace {

constexpr int kExitAuthentic = 0;
constexpr int kExitFalsified = 2;
constexpr int kExitUnverifiable = 3;
constexpr int kExitPipelineFailure = 4;

std::string default_key_path(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("OPTISIG_KEY")) return env;
  return "";
}

KeyMaterial require_key(const std::string& flag_value) {
  const std::string path = default_key_path(flag_value);
  if (path.empty())
    throw std::runtime_error("no key file: pass --key or set OPTISIG_KEY");
  return load_key_file(path);
}

SceneConfig scene_or_default(const std::string& path) {
  if (path.empty()) {
    SceneConfig scene;
    scene.sensor_noise_sigma = 3.0;
    return scene;
  }
  return load_scene(path);
}

int cmd_embed(const std::string& track_path, const std::string& key_path,
              const std::string& scene_path, const std::string& out_dir, std::uint64_t seed,
              bool export_bitmaps, bool no_adapt, double synth_duration) {
  FeatureTrack track;
  if (!track_path.empty()) {
    track = ingest_track(track_path);
  } else if (synth_duration > 0) {
    SynthConfig syn;
    syn.duration_s = synth_duration;
    track = synth_track(syn, seed);
    fs::create_directories(out_dir);
    save_track(track, (fs::path(out_dir) / "track.json").string());
  } else {
    throw std::runtime_error("embed: pass --track or --synth-duration");
  }
  EmbedConfig config;
  config.key = require_key(key_path);
  config.seed = seed;
  config.adaptive = !no_adapt;
  config.self_scene = scene_or_default(scene_path);

  EmbedResult result = embed_run(track, config);
  fs::create_directories(out_dir);
  save_schedules(result.schedules(), (fs::path(out_dir) / "schedules").string(), export_bitmaps);

  nlohmann::json log;
  log["schema_version"] = 1;
  log["seed"] = seed;
  log["adaptive"] = config.adaptive;
  auto& windows = log["windows"] = nlohmann::json::array();
  for (const auto& w : result.windows) {
    nlohmann::json jw;
    jw["window_no"] = w.signature.descriptor.meta.window_no;
    jw["unit_id"] = w.signature.descriptor.meta.unit_id;
    jw["date"] = w.signature.descriptor.meta.date;
    jw["payload_hex"] = to_hex(pack_bits(serialize(w.signature)));
    jw["mac_hex"] = to_hex(w.signature.mac);
    jw["slot_t0"] = w.schedule.t0;
    jw["degenerate"] = w.degenerate;
    if (w.self_ber) jw["self_ber"] = *w.self_ber;
    windows.push_back(std::move(jw));
  }
  std::ofstream(fs::path(out_dir) / "signatures.json") << log.dump(1);
  std::cout << "embedded " << result.windows.size() << " windows -> " << out_dir << "\n";
  return 0;
}

int cmd_simulate(const std::string& schedules_dir, const std::string& scene_path,
                 std::uint64_t seed, const std::string& degrade_spec, const std::string& out_dir) {
  auto schedules = load_schedules(schedules_dir);
  SceneConfig scene = scene_or_default(scene_path);
  FrameSourcePtr frames = render(std::move(schedules), scene, seed);
  if (!degrade_spec.empty()) frames = degrade(frames, parse_degrade_ops(degrade_spec));
  save_frames(*frames, out_dir, &scene, seed);
  std::cout << "rendered " << frames->frame_count() << " frames at " << frames->fps()
            << " fps -> " << out_dir << "\n";
  return 0;
}

int cmd_verify(const std::string& frames_dir, const std::string& track_path,
               const std::string& key_path, int frame_budget, const std::string& out_dir) {
  FrameSourcePtr frames = load_frames(frames_dir);
  FeatureTrack track = ingest_track(track_path);
  KeyMaterial key = require_key(key_path);

  VerifyOutcome outcome = verify_video(*frames, track, key, 24.0, frame_budget);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream(fs::path(out_dir) / "report.json") << report_to_json(outcome.report);
    if (outcome.recovery)
      write_ppm(outcome.recovery->localization.heatmap.to_image(),
                (fs::path(out_dir) / "heatmap.ppm").string());
  }
  std::cout << report_to_json(outcome.report) << "\n";
  switch (outcome.report.decision) {
    case Decision::Authentic: return kExitAuthentic;
    case Decision::Falsified: return kExitFalsified;
    default: return kExitUnverifiable;
  }
}

// One replication of an embed+render+measure cycle for the sweep command.
BerStats sweep_rep(double noise_sigma, double cell_px, std::uint64_t seed, int windows,
                   const KeyMaterial& key) {
  SynthConfig syn;
  syn.duration_s = windows * kWindowS;
  FeatureTrack track = synth_track(syn, derive_seed(seed, 11));

  EmbedConfig config;
  config.key = key;
  config.seed = seed;
  config.self_scene.sensor_noise_sigma = 3.0;
  EmbedResult embedded = embed_run(track, config);

  SceneConfig scene;
  scene.sensor_noise_sigma = noise_sigma;
  scene.cell_px = cell_px;
  scene.frame_width = std::max(640, int(16 * cell_px) + 96);
  scene.frame_height = std::max(360, int(9 * cell_px) + 96);
  auto frames = render(embedded.schedules(), scene, derive_seed(seed, 12));
  return measure_ber(*frames, embedded, key);
}

int cmd_sweep(const std::string& axis, std::vector<double> range, int reps,
              const std::string& key_path, std::uint64_t seed, const std::string& out_path) {
  if (range.empty()) throw std::runtime_error("sweep: --range must list at least one value");
  KeyMaterial key;
  const std::string kp = default_key_path(key_path);
  if (kp.empty()) {
    key.key = from_hex("000102030405060708090a0b0c0d0e0f");
    key.lsh_seed = 0x517cc1b727220a95ULL;
  } else {
    key = load_key_file(kp);
  }

  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["axis"] = axis;
  doc["reps"] = reps;
  doc["seed"] = seed;
  auto& rows = doc["rows"] = nlohmann::json::array();

  std::ostringstream table;
  table << std::fixed << std::setprecision(4);

  if (axis == "noise" || axis == "cellres") {
    table << std::setw(10) << axis << std::setw(10) << "raw" << std::setw(10) << "viterbi"
          << std::setw(10) << "final" << std::setw(8) << "fails" << "\n";
    for (double value : range) {
      double raw = 0, post = 0, fin = 0;
      int fails = 0, ok = 0;
      for (int r = 0; r < reps; ++r) {
        BerStats s = sweep_rep(axis == "noise" ? value : 6.0, axis == "cellres" ? value : 35.0,
                               derive_seed(seed, r * 977 + int(value * 10)), 2, key);
        if (s.pipeline_failed || s.windows == 0) {
          ++fails;
          continue;
        }
        raw += s.raw;
        post += s.post_viterbi;
        fin += s.final;
        ++ok;
      }
      if (ok) {
        raw /= ok;
        post /= ok;
        fin /= ok;
      }
      rows.push_back({{"value", value}, {"raw", raw}, {"post_viterbi", post}, {"final", fin},
                      {"failed_reps", fails}});
      table << std::setw(10) << value << std::setw(10) << raw << std::setw(10) << post
            << std::setw(10) << fin << std::setw(8) << fails << "\n";
    }
  } else if (axis == "tamper") {
    // Descriptor-level detection profile: hash distances for tampered vs.
    // jittered views across the tamper-fraction axis.
    table << std::setw(10) << "fraction" << std::setw(12) << "mean_dist" << std::setw(8) << "auc"
          << "\n";
    KeyMaterial km = key;
    HasherPair hashers = make_hashers(km);
    const int n = window_frames(24.0);
    for (double fraction : range) {
      std::vector<int> tampered, clean;
      for (int r = 0; r < reps; ++r) {
        std::uint64_t s = derive_seed(seed, r * 31 + int(fraction * 100));
        SynthConfig syn;
        syn.duration_s = kWindowS + 1;
        FeatureTrack track = synth_track(syn, s);
        FeatureTrack bad = with_tamper(track, 0, int(n * fraction), derive_seed(s, 2));
        FeatureTrack view = with_jitter(track, 0.02, derive_seed(s, 3));
        auto dist = [&](const FeatureTrack& t) {
          DynamicVector a = build_dynamic_vector(track, 0, n);
          DynamicVector b = build_dynamic_vector(t, 0, n);
          return hamming(hashers.dynamic.hash(zero_mean(a.values)),
                         hashers.dynamic.hash(zero_mean(b.values)));
        };
        tampered.push_back(dist(bad));
        clean.push_back(dist(view));
      }
      double mean = 0;
      for (int d : tampered) mean += d;
      mean /= tampered.size();
      // AUC by pairwise comparison
      double wins = 0;
      for (int t : tampered)
        for (int c : clean) wins += t > c ? 1.0 : (t == c ? 0.5 : 0.0);
      double auc = wins / (double(tampered.size()) * clean.size());
      rows.push_back({{"value", fraction}, {"mean_dyn_distance", mean}, {"auc", auc}});
      table << std::setw(10) << fraction << std::setw(12) << mean << std::setw(8) << auc << "\n";
    }
  } else {
    throw std::runtime_error("sweep: unknown axis '" + axis + "' (noise, cellres, tamper)");
  }

  std::cout << table.str();
  if (!out_path.empty()) {
    fs::create_directories(fs::path(out_path).parent_path().empty()
                               ? "."
                               : fs::path(out_path).parent_path().string());
    std::ofstream(out_path) << doc.dump(1);
    std::ofstream(out_path + ".txt") << table.str();
  }
  return 0;
}

int cmd_lsh_analyze(std::vector<int> k_range, std::vector<double> thetas,
                    const std::string& out_path) {
  if (k_range.empty() || thetas.empty())
    throw std::runtime_error("lsh-analyze: --k and --theta must be non-empty");
  nlohmann::json doc;
  doc["schema_version"] = 1;
  auto& rows = doc["rows"] = nlohmann::json::array();
  std::ostringstream table;
  table << std::fixed << std::setprecision(6) << std::setw(6) << "k";
  for (double th : thetas)
    table << std::setw(14) << ("E[D]@" + std::to_string(th).substr(0, 4))
          << std::setw(14) << ("P@" + std::to_string(th).substr(0, 4));
  table << "\n";
  for (int k : k_range) {
    nlohmann::json row;
    row["k"] = k;
    table << std::setw(6) << k;
    for (double th : thetas) {
      const double ed = expected_distance(k, th);
      const double p = agreement_probability(k, th);
      row["theta_" + std::to_string(th)] = {{"expected_distance", ed}, {"agreement", p}};
      table << std::setw(14) << ed << std::setw(14) << p;
    }
    table << "\n";
    rows.push_back(std::move(row));
  }
  std::cout << table.str();
  if (!out_path.empty()) {
    std::ofstream(out_path) << doc.dump(1);
    std::ofstream(out_path + ".txt") << table.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optical speech-video signature pipeline"};
  app.require_subcommand(1);

  std::string track, key, scene, out, frames_dir, schedules_dir, degrade_spec, axis;
  std::uint64_t seed = 1;
  int reps = 20, frame_budget = 800;
  bool export_bitmaps = false, no_adapt = false;
  std::vector<double> range;
  std::vector<int> k_range;
  std::vector<double> thetas{0.88, 1.17};

  double synth_duration = 0.0;
  auto* embed = app.add_subcommand("embed", "Build signatures and bitmap schedules for a track");
  embed->add_option("--track", track, "feature track file");
  embed->add_option("--synth-duration", synth_duration,
                    "synthesize a track of this many seconds instead (written to <out>/track.json)");
  embed->add_option("--key", key, "key file (or OPTISIG_KEY)");
  embed->add_option("--scene", scene, "self-feedback scene config");
  embed->add_option("--out", out, "output directory")->required();
  embed->add_option("--seed", seed, "feedback render seed / track seed");
  embed->add_flag("--export-bitmaps", export_bitmaps, "also write PPM bitmaps");
  embed->add_flag("--no-adapt", no_adapt, "disable adaptive embedding");

  auto* simulate = app.add_subcommand("simulate", "Render schedules through the camera channel");
  simulate->add_option("--schedules", schedules_dir, "schedules directory")->required();
  simulate->add_option("--scene", scene, "scene config");
  simulate->add_option("--seed", seed, "channel seed");
  simulate->add_option("--degrade", degrade_spec, "e.g. quantize:32,blur:1,contrast:-50");
  simulate->add_option("--out", out, "output frame directory")->required();

  auto* verify = app.add_subcommand("verify", "Verify a frame sequence against a track");
  verify->add_option("--frames", frames_dir, "frame directory")->required();
  verify->add_option("--track", track, "feature track file")->required();
  verify->add_option("--key", key, "key file (or OPTISIG_KEY)");
  verify->add_option("--frame-budget", frame_budget, "frames used for localization");
  verify->add_option("--out", out, "report directory");

  auto* sweep = app.add_subcommand("sweep", "BER / detection sweeps over a channel axis");
  sweep->add_option("--axis", axis, "noise | cellres | tamper")->required();
  sweep->add_option("--range", range, "axis values")->required();
  sweep->add_option("--reps", reps, "replications per value");
  sweep->add_option("--key", key, "key file (optional)");
  sweep->add_option("--seed", seed, "base seed");
  sweep->add_option("--out", out, "output JSON path");

  auto* lsh = app.add_subcommand("lsh-analyze", "Hash-size performance tables");
  lsh->add_option("--k", k_range, "hash sizes")->required();
  lsh->add_option("--theta", thetas, "angle thresholds (rad)");
  lsh->add_option("--out", out, "output JSON path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (embed->parsed())
      return cmd_embed(track, key, scene, out, seed, export_bitmaps, no_adapt, synth_duration);
    if (simulate->parsed()) return cmd_simulate(schedules_dir, scene, seed, degrade_spec, out);
    if (verify->parsed()) return cmd_verify(frames_dir, track, key, frame_budget, out);
    if (sweep->parsed()) return cmd_sweep(axis, range, reps, key, seed, out);
    if (lsh->parsed()) return cmd_lsh_analyze(k_range, thetas, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPipelineFailure;
  }
  return 1;
}
