#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "optisig/pipeline.hpp"

using namespace optisig;
namespace fs = std::filesystem;

namespace {

const std::string kCli = OPTISIG_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / "optisig_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("cli end to end") {
  Workspace ws;

  KeyMaterial key;
  key.key = from_hex("00112233445566778899aabbccddeeff");
  key.lsh_seed = 0xabcdef0123456789ULL;
  save_key_file(key, ws.path("unit.key"));

  SynthConfig syn;
  syn.duration_s = kWindowS + 0.2;  // one full window
  FeatureTrack track = synth_track(syn, 11);
  save_track(track, ws.path("track.json"));

  // small camera so the frame directory stays light
  SceneConfig scene;
  scene.frame_width = 360;
  scene.frame_height = 208;
  scene.cell_px = 18.0;
  scene.sensor_noise_sigma = 4.0;
  save_scene(scene, ws.path("scene.cfg"));

  SUBCASE("embed, simulate, verify roundtrip") {
    CHECK(run("embed --track " + ws.path("track.json") + " --key " + ws.path("unit.key") +
              " --out " + ws.path("embed") + " --seed 3") == 0);
    CHECK(fs::exists(ws.path("embed") + "/signatures.json"));
    CHECK(fs::exists(ws.path("embed") + "/schedules/schedule.json"));
    auto log = read_json(ws.path("embed") + "/signatures.json");
    REQUIRE(log["windows"].size() == 1);
    CHECK(log["windows"][0]["window_no"] == 0);
    CHECK(log["windows"][0].contains("self_ber"));

    CHECK(run("simulate --schedules " + ws.path("embed") + "/schedules --scene " +
              ws.path("scene.cfg") + " --seed 9 --out " + ws.path("frames")) == 0);
    CHECK(fs::exists(ws.path("frames") + "/manifest.json"));

    // authentic
    CHECK(run("verify --frames " + ws.path("frames") + " --track " + ws.path("track.json") +
              " --key " + ws.path("unit.key") + " --out " + ws.path("report")) == 0);
    auto report = read_json(ws.path("report") + "/report.json");
    CHECK(report["decision"] == "authentic");
    CHECK(report["max_dyn_distance"].get<int>() <= 56);
    CHECK(fs::exists(ws.path("report") + "/heatmap.ppm"));

    // tampered content: exit code 2
    FeatureTrack bad = with_tamper(track, 0, window_frames(24.0), 555);
    save_track(bad, ws.path("tampered.json"));
    CHECK(run("verify --frames " + ws.path("frames") + " --track " + ws.path("tampered.json") +
              " --key " + ws.path("unit.key")) == 2);

    // a track too short to cover any window: inconclusive, exit code 3
    SynthConfig tiny;
    tiny.duration_s = 1.0;
    save_track(synth_track(tiny, 12), ws.path("short.json"));
    CHECK(run("verify --frames " + ws.path("frames") + " --track " + ws.path("short.json") +
              " --key " + ws.path("unit.key")) == 3);

    // key via environment variable
    setenv("OPTISIG_KEY", ws.path("unit.key").c_str(), 1);
    CHECK(run("verify --frames " + ws.path("frames") + " --track " + ws.path("track.json")) == 0);
    unsetenv("OPTISIG_KEY");
  }

  SUBCASE("embed rejects a track shorter than one window") {
    SynthConfig tiny;
    tiny.duration_s = 4.4;
    save_track(synth_track(tiny, 13), ws.path("tiny.json"));
    CHECK(run("embed --track " + ws.path("tiny.json") + " --key " + ws.path("unit.key") +
              " --out " + ws.path("embed2")) == 4);
  }

  SUBCASE("embed is reproducible for a fixed seed") {
    CHECK(run("embed --track " + ws.path("track.json") + " --key " + ws.path("unit.key") +
              " --out " + ws.path("e1") + " --seed 21") == 0);
    CHECK(run("embed --track " + ws.path("track.json") + " --key " + ws.path("unit.key") +
              " --out " + ws.path("e2") + " --seed 21") == 0);
    auto a = read_json(ws.path("e1") + "/signatures.json");
    auto b = read_json(ws.path("e2") + "/signatures.json");
    CHECK(a["windows"] == b["windows"]);
  }

  SUBCASE("missing key is a pipeline failure") {
    unsetenv("OPTISIG_KEY");
    CHECK(run("embed --track " + ws.path("track.json") + " --out " + ws.path("e3")) == 4);
  }
}

TEST_CASE("cli analysis commands") {
  Workspace ws;

  SUBCASE("lsh-analyze emits the expected table") {
    CHECK(run("lsh-analyze --k 50 150 --theta 0.88 1.17 --out " + ws.path("lsh.json")) == 0);
    auto doc = read_json(ws.path("lsh.json"));
    REQUIRE(doc["rows"].size() == 2);
    CHECK(doc["rows"][1]["k"] == 150);
    for (const auto& row : doc["rows"]) {
      for (const std::string th : {"0.880000", "1.170000"}) {
        const auto& entry = row["theta_" + th];
        const double k = row["k"].get<double>();
        const double theta = std::stod(th);
        CHECK(entry["expected_distance"].get<double>() ==
              doctest::Approx(k * theta / M_PI).epsilon(1e-9));
        CHECK(entry["agreement"].get<double>() > 0.0);
        CHECK(entry["agreement"].get<double>() < 1.0);
      }
    }
    // monotone in k at both thresholds
    CHECK(doc["rows"][1]["theta_0.880000"]["agreement"].get<double>() >=
          doc["rows"][0]["theta_0.880000"]["agreement"].get<double>());
  }

  SUBCASE("tamper sweep emits distances and AUCs") {
    CHECK(run("sweep --axis tamper --range 0.1 1.0 --reps 6 --seed 4 --out " +
              ws.path("sweep.json")) == 0);
    auto doc = read_json(ws.path("sweep.json"));
    REQUIRE(doc["rows"].size() == 2);
    CHECK(doc["rows"][0]["mean_dyn_distance"].get<double>() <
          doc["rows"][1]["mean_dyn_distance"].get<double>());
    CHECK(doc["rows"][1]["auc"].get<double>() >= doc["rows"][0]["auc"].get<double>());
    CHECK(fs::exists(ws.path("sweep.json") + ".txt"));
  }

  SUBCASE("empty ranges are usage errors") {
    CHECK(run("sweep --axis noise --reps 1") != 0);
    CHECK(run("lsh-analyze --theta 0.8") != 0);
  }
}
