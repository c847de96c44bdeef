#include "optisig/channel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "optisig/errors.hpp"
#include "optisig/rng.hpp"

namespace optisig {

std::array<double, 9> SceneConfig::effective_homography() const {
  if (homography) return *homography;
  const double s = cell_px / kCellPx;
  const double tx = (frame_width - kBitmapW * s) / 2.0 + offset_x;
  const double ty = (frame_height - kBitmapH * s) / 2.0 + offset_y;
  return {s, 0.0, tx, 0.0, s, ty, tilt / kBitmapW, 0.0, 1.0};
}

SceneConfig load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("load_scene: cannot open " + path);
  SceneConfig scene;
  std::string line;
  int lineno = 0;
  std::array<double, 9> h{};
  bool has_h = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key, eq;
    if (!(ls >> key)) continue;
    if (!(ls >> eq) || eq != "=")
      throw SchemaError("load_scene: " + path + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    auto num = [&](double& dst) {
      if (!(ls >> dst))
        throw SchemaError("load_scene: " + path + ":" + std::to_string(lineno) +
                          ": bad number for '" + key + "'");
    };
    if (key == "frame_width") { double v; num(v); scene.frame_width = int(v); }
    else if (key == "frame_height") { double v; num(v); scene.frame_height = int(v); }
    else if (key == "camera_fps") num(scene.camera_fps);
    else if (key == "ambient_lux") num(scene.ambient_lux);
    else if (key == "gain") num(scene.gain);
    else if (key == "sensor_noise_sigma") num(scene.sensor_noise_sigma);
    else if (key == "exposure_drift") num(scene.exposure_drift);
    else if (key == "cell_px") num(scene.cell_px);
    else if (key == "offset_x") num(scene.offset_x);
    else if (key == "offset_y") num(scene.offset_y);
    else if (key == "tilt") num(scene.tilt);
    else if (key == "surface_color") {
      double r, g, b;
      num(r); num(g); num(b);
      scene.surface_color = {std::uint8_t(r), std::uint8_t(g), std::uint8_t(b)};
    }
    else if (key == "surface_texture_sigma") num(scene.surface_texture_sigma);
    else if (key == "surface_seed") { double v; num(v); scene.surface_seed = std::uint64_t(v); }
    else if (key == "surface_image") ls >> scene.surface_image;
    else if (key == "homography") {
      for (auto& v : h) num(v);
      has_h = true;
    }
    else
      throw SchemaError("load_scene: " + path + ":" + std::to_string(lineno) +
                        ": unknown key '" + key + "'");
  }
  if (has_h) scene.homography = h;
  if (scene.camera_fps < 24.0)
    throw SchemaError("load_scene: " + path + ": camera_fps must be >= 24");
  return scene;
}

void save_scene(const SceneConfig& scene, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_scene: cannot write " + path);
  out << "frame_width = " << scene.frame_width << "\n"
      << "frame_height = " << scene.frame_height << "\n"
      << "camera_fps = " << scene.camera_fps << "\n"
      << "ambient_lux = " << scene.ambient_lux << "\n"
      << "gain = " << scene.gain << "\n"
      << "sensor_noise_sigma = " << scene.sensor_noise_sigma << "\n"
      << "exposure_drift = " << scene.exposure_drift << "\n"
      << "cell_px = " << scene.cell_px << "\n"
      << "offset_x = " << scene.offset_x << "\n"
      << "offset_y = " << scene.offset_y << "\n"
      << "tilt = " << scene.tilt << "\n"
      << "surface_color = " << int(scene.surface_color.r) << " " << int(scene.surface_color.g)
      << " " << int(scene.surface_color.b) << "\n"
      << "surface_texture_sigma = " << scene.surface_texture_sigma << "\n"
      << "surface_seed = " << scene.surface_seed << "\n";
  if (!scene.surface_image.empty()) out << "surface_image = " << scene.surface_image << "\n";
  if (scene.homography) {
    out << "homography =";
    for (double v : *scene.homography) out << " " << v;
    out << "\n";
  }
}

namespace {

std::array<double, 9> invert_homography(const std::array<double, 9>& m) {
  const double det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
                     m[2] * (m[3] * m[7] - m[4] * m[6]);
  if (std::abs(det) < 1e-9)
    throw std::invalid_argument("render: homography is degenerate (|det| < 1e-9)");
  const double inv = 1.0 / det;
  return {(m[4] * m[8] - m[5] * m[7]) * inv, (m[2] * m[7] - m[1] * m[8]) * inv,
          (m[1] * m[5] - m[2] * m[4]) * inv, (m[5] * m[6] - m[3] * m[8]) * inv,
          (m[0] * m[8] - m[2] * m[6]) * inv, (m[2] * m[3] - m[0] * m[5]) * inv,
          (m[3] * m[7] - m[4] * m[6]) * inv, (m[1] * m[6] - m[0] * m[7]) * inv,
          (m[0] * m[4] - m[1] * m[3]) * inv};
}

// Approximate unit gaussian from one hash (sum of four 16-bit uniforms);
// stateless in (seed, a, b) so frames can be rendered in any order.
inline float hash_gaussian(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  const std::uint64_t h = hash_mix(seed, a, b);
  const float sum = float((h >> 0) & 0xffff) + float((h >> 16) & 0xffff) +
                    float((h >> 32) & 0xffff) + float((h >> 48) & 0xffff);
  return (sum * (1.0f / 65536.0f) - 2.0f) * 1.7320508f;  // var(sum/65536) = 1/3
}

constexpr int kBlotchStep = 8;   // px; noise near cell scale survives averaging
constexpr int kBlotchTaps = 6;   // boxcar across frames: mottle drifts slowly,
                                 // so its power sits well below the beacon band

class RenderedSequence final : public FrameSource {
 public:
  RenderedSequence(std::vector<BitmapSchedule> schedules, const SceneConfig& scene,
                   std::uint64_t seed)
      : schedules_(std::move(schedules)), scene_(scene), seed_(seed) {
    double end = 0.0;
    for (const auto& s : schedules_) end = std::max(end, s.t0 + s.duration());
    frame_count_ = std::max(1, static_cast<int>(std::llround(end * scene_.camera_fps)));

    // Static ambient view of the surface.
    const double ambient_scale = scene_.ambient_lux / 500.0;
    base_ = Image(scene_.frame_width, scene_.frame_height);
    if (!scene_.surface_image.empty()) {
      Image tex = read_ppm(scene_.surface_image);
      for (int y = 0; y < base_.height; ++y)
        for (int x = 0; x < base_.width; ++x) {
          Rgb c = tex.get(x % tex.width, y % tex.height);
          auto scale = [&](std::uint8_t v) {
            return std::uint8_t(std::clamp(v * ambient_scale, 0.0, 255.0));
          };
          base_.set(x, y, {scale(c.r), scale(c.g), scale(c.b)});
        }
    } else {
      GaussianRng rng(scene_.surface_seed);
      for (int y = 0; y < base_.height; ++y)
        for (int x = 0; x < base_.width; ++x) {
          auto channel = [&](std::uint8_t c) {
            double v = (c + scene_.surface_texture_sigma * rng.gaussian()) * ambient_scale;
            return std::uint8_t(std::clamp(v, 0.0, 255.0));
          };
          base_.set(x, y, {channel(scene_.surface_color.r), channel(scene_.surface_color.g),
                           channel(scene_.surface_color.b)});
        }
    }

    // Camera pixel -> bitmap cell, via the inverse homography (nearest sample).
    auto hinv = invert_homography(scene_.effective_homography());
    cell_map_.assign(static_cast<std::size_t>(base_.width) * base_.height, -1);
    for (int y = 0; y < base_.height; ++y)
      for (int x = 0; x < base_.width; ++x) {
        double cx = x + 0.5, cy = y + 0.5;
        double w = hinv[6] * cx + hinv[7] * cy + hinv[8];
        if (std::abs(w) < 1e-12) continue;
        double u = (hinv[0] * cx + hinv[1] * cy + hinv[2]) / w;
        double v = (hinv[3] * cx + hinv[4] * cy + hinv[5]) / w;
        cell_map_[static_cast<std::size_t>(y) * base_.width + x] =
            static_cast<std::int16_t>(CellLayout::cell_at(u, v));
      }
  }

  int frame_count() const override { return frame_count_; }
  double fps() const override { return scene_.camera_fps; }

  Image frame(int i) const override {
    const double t = (i + 0.5) / scene_.camera_fps;  // mid-frame sampling
    const double drift = 1.0 + scene_.exposure_drift * t;

    // Active display frame, if any schedule covers t.
    const std::array<std::uint8_t, kCellCount>* lit = nullptr;
    const std::array<Rgb, kCellCount>* colors = nullptr;
    for (const auto& s : schedules_) {
      int f = s.frame_at(t);
      if (f >= 0) {
        lit = &s.frames[f].lit;
        colors = &s.cell_colors;
        break;
      }
    }
    float add[kCellCount][3];
    if (lit) {
      const float g = static_cast<float>(scene_.gain * drift);
      for (int c = 0; c < kCellCount; ++c) {
        bool on = (*lit)[c];
        add[c][0] = on ? g * (*colors)[c].r : 0.f;
        add[c][1] = on ? g * (*colors)[c].g : 0.f;
        add[c][2] = on ? g * (*colors)[c].b : 0.f;
      }
    }

    // Blotchy noise nodes for this frame (bilinear below), plus a white term.
    const int gw = base_.width / kBlotchStep + 2, gh = base_.height / kBlotchStep + 2;
    std::vector<float> nodes(static_cast<std::size_t>(gw) * gh);
    const double blotch_sigma = scene_.sensor_noise_sigma * 0.75;
    if (blotch_sigma > 0.0) {
      const float scale = static_cast<float>(blotch_sigma / std::sqrt(double(kBlotchTaps)));
      for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
          float acc = 0.f;
          const std::uint64_t cell_key = (std::uint64_t(gy) << 20) | unsigned(gx);
          for (int j = 0; j < kBlotchTaps; ++j)
            acc += hash_gaussian(seed_, std::uint64_t(i - j + 64), cell_key);
          nodes[static_cast<std::size_t>(gy) * gw + gx] = scale * acc;
        }
    }
    const double white_sigma = scene_.sensor_noise_sigma * 0.25;

    Image out(base_.width, base_.height);
    const float df = static_cast<float>(drift);
    std::uint64_t wseed = hash_mix(seed_ ^ 0x9e3779b97f4a7c15ULL, i);
    for (int y = 0; y < base_.height; ++y) {
      const int gy = y / kBlotchStep;
      const float fy = float(y % kBlotchStep) / kBlotchStep;
      const float* row0 = nodes.data() + static_cast<std::size_t>(gy) * gw;
      const float* row1 = row0 + gw;
      const std::uint8_t* src = base_.px(0, y);
      std::uint8_t* dst = out.px(0, y);
      const std::int16_t* cells = cell_map_.data() + static_cast<std::size_t>(y) * base_.width;
      for (int x = 0; x < base_.width; ++x, src += 3, dst += 3) {
        const int gx = x / kBlotchStep;
        const float fx = float(x % kBlotchStep) / kBlotchStep;
        float noise = 0.f;
        if (blotch_sigma > 0.0) {
          noise = (row0[gx] * (1 - fx) + row0[gx + 1] * fx) * (1 - fy) +
                  (row1[gx] * (1 - fx) + row1[gx + 1] * fx) * fy;
        }
        if (white_sigma > 0.0) {
          // cheap per-pixel hash into a (-1,1]-ish uniform pair sum
          std::uint64_t hv = wseed + std::uint64_t(y) * 0x9e3779b97f4a7c15ULL + unsigned(x);
          hv ^= hv >> 33;
          hv *= 0xff51afd7ed558ccdULL;
          hv ^= hv >> 29;
          float u = float(int32_t(hv & 0xffffffff)) * 0x1p-31f;  // [-1, 1)
          float v = float(int32_t(hv >> 32)) * 0x1p-31f;
          noise += float(white_sigma) * 1.22f * (u + v);  // var(u+v) = 2/3
        }
        const int cell = cells[x];
        float r = df * src[0] + noise;
        float gch = df * src[1] + noise;
        float b = df * src[2] + noise;
        if (lit && cell >= 0) {
          r += add[cell][0];
          gch += add[cell][1];
          b += add[cell][2];
        }
        dst[0] = std::uint8_t(std::clamp(r, 0.f, 255.f));
        dst[1] = std::uint8_t(std::clamp(gch, 0.f, 255.f));
        dst[2] = std::uint8_t(std::clamp(b, 0.f, 255.f));
      }
    }
    return out;
  }

 private:
  std::vector<BitmapSchedule> schedules_;
  SceneConfig scene_;
  std::uint64_t seed_;
  int frame_count_ = 0;
  Image base_;
  std::vector<std::int16_t> cell_map_;
};

class MemorySequence final : public FrameSource {
 public:
  MemorySequence(std::vector<Image> frames, double fps) : frames_(std::move(frames)), fps_(fps) {}
  int frame_count() const override { return static_cast<int>(frames_.size()); }
  double fps() const override { return fps_; }
  Image frame(int i) const override { return frames_.at(i); }

 private:
  std::vector<Image> frames_;
  double fps_;
};

}  // namespace

FrameSourcePtr render(std::vector<BitmapSchedule> schedules, const SceneConfig& scene,
                      std::uint64_t seed) {
  return std::make_shared<RenderedSequence>(std::move(schedules), scene, seed);
}

FrameSourcePtr wrap_frames(std::vector<Image> frames, double fps) {
  return std::make_shared<MemorySequence>(std::move(frames), fps);
}

// ---------------------------------------------------------------------------
// Degradations
// ---------------------------------------------------------------------------

namespace {

Image box_blur(const Image& src, int radius) {
  if (radius <= 0) return src;
  Image tmp(src.width, src.height), out(src.width, src.height);
  const int n = 2 * radius + 1;
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      for (int c = 0; c < 3; ++c) {
        int acc = 0;
        for (int d = -radius; d <= radius; ++d)
          acc += src.px(std::clamp(x + d, 0, src.width - 1), y)[c];
        tmp.px(x, y)[c] = std::uint8_t(acc / n);
      }
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      for (int c = 0; c < 3; ++c) {
        int acc = 0;
        for (int d = -radius; d <= radius; ++d)
          acc += tmp.px(x, std::clamp(y + d, 0, src.height - 1))[c];
        out.px(x, y)[c] = std::uint8_t(acc / n);
      }
  return out;
}

class PixelOpSequence final : public FrameSource {
 public:
  PixelOpSequence(FrameSourcePtr src, DegradeOp op) : src_(std::move(src)), op_(op) {}
  int frame_count() const override { return src_->frame_count(); }
  double fps() const override { return src_->fps(); }
  Image frame(int i) const override {
    Image img = src_->frame(i);
    switch (op_.kind) {
      case DegradeOp::Kind::Quantize: {
        const int levels = std::max(2, int(op_.value));
        const double step = 255.0 / (levels - 1);
        for (auto& v : img.data) v = std::uint8_t(std::lround(std::lround(v / step) * step));
        break;
      }
      case DegradeOp::Kind::Blur:
        img = box_blur(img, int(op_.value));
        break;
      case DegradeOp::Kind::Contrast: {
        const double f = 1.0 + op_.value / 100.0;
        for (auto& v : img.data)
          v = std::uint8_t(std::clamp(128.0 + (v - 128.0) * f, 0.0, 255.0));
        break;
      }
      case DegradeOp::Kind::Exposure: {
        const double f = 1.0 + op_.value / 100.0;
        for (auto& v : img.data) v = std::uint8_t(std::clamp(v * f, 0.0, 255.0));
        break;
      }
      case DegradeOp::Kind::Monochrome:
        for (std::size_t p = 0; p + 2 < img.data.size(); p += 3) {
          const int gray = (img.data[p] + img.data[p + 1] + img.data[p + 2] + 1) / 3;
          img.data[p] = img.data[p + 1] = img.data[p + 2] = std::uint8_t(gray);
        }
        break;
      default:
        break;
    }
    return img;
  }

 private:
  FrameSourcePtr src_;
  DegradeOp op_;
};

class ResampleSequence final : public FrameSource {
 public:
  ResampleSequence(FrameSourcePtr src, double target_fps)
      : src_(std::move(src)), fps_(target_fps) {
    count_ = std::max(1, static_cast<int>(std::floor(src_->duration() * fps_)));
  }
  int frame_count() const override { return count_; }
  double fps() const override { return fps_; }
  Image frame(int i) const override {
    const double t = (i + 0.5) / fps_;
    int j = std::clamp(static_cast<int>(t * src_->fps()), 0, src_->frame_count() - 1);
    return src_->frame(j);
  }

 private:
  FrameSourcePtr src_;
  double fps_;
  int count_;
};

// speed(f): content plays back f times as fast at the same frame rate.
class SpeedSequence final : public FrameSource {
 public:
  SpeedSequence(FrameSourcePtr src, double factor) : src_(std::move(src)), factor_(factor) {
    if (factor <= 0.0) throw std::invalid_argument("degrade: speed factor must be positive");
    count_ = std::max(1, static_cast<int>(std::floor(src_->frame_count() / factor)));
  }
  int frame_count() const override { return count_; }
  double fps() const override { return src_->fps(); }
  Image frame(int i) const override {
    int j = std::clamp(static_cast<int>(i * factor_), 0, src_->frame_count() - 1);
    return src_->frame(j);
  }

 private:
  FrameSourcePtr src_;
  double factor_;
  int count_;
};

}  // namespace

std::vector<DegradeOp> parse_degrade_ops(const std::string& spec) {
  std::vector<DegradeOp> ops;
  std::istringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto colon = item.find(':');
    std::string name = item.substr(0, colon);
    double value = colon == std::string::npos ? 0.0 : std::stod(item.substr(colon + 1));
    DegradeOp op{DegradeOp::Kind::Monochrome, value};
    if (name == "quantize") op.kind = DegradeOp::Kind::Quantize;
    else if (name == "blur") op.kind = DegradeOp::Kind::Blur;
    else if (name == "contrast") op.kind = DegradeOp::Kind::Contrast;
    else if (name == "exposure") op.kind = DegradeOp::Kind::Exposure;
    else if (name == "monochrome") op.kind = DegradeOp::Kind::Monochrome;
    else if (name == "resample_fps") op.kind = DegradeOp::Kind::ResampleFps;
    else if (name == "speed") op.kind = DegradeOp::Kind::Speed;
    else throw std::invalid_argument("parse_degrade_ops: unknown op '" + name + "'");
    ops.push_back(op);
  }
  return ops;
}

FrameSourcePtr degrade(FrameSourcePtr frames, const std::vector<DegradeOp>& ops) {
  for (const auto& op : ops) {
    switch (op.kind) {
      case DegradeOp::Kind::ResampleFps:
        frames = std::make_shared<ResampleSequence>(std::move(frames), op.value);
        break;
      case DegradeOp::Kind::Speed:
        frames = std::make_shared<SpeedSequence>(std::move(frames), op.value);
        break;
      default:
        frames = std::make_shared<PixelOpSequence>(std::move(frames), op);
        break;
    }
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Disk format
// ---------------------------------------------------------------------------

void save_frames(const FrameSource& frames, const std::string& dir, const SceneConfig* scene,
                 std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["fps"] = frames.fps();
  doc["seed"] = seed;
  doc["frame_count"] = frames.frame_count();
  auto& names = doc["frames"] = nlohmann::json::array();
  auto& stamps = doc["timestamps"] = nlohmann::json::array();
  for (int i = 0; i < frames.frame_count(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "f%06d.ppm", i);
    write_ppm(frames.frame(i), (fs::path(dir) / name).string());
    names.push_back(name);
    stamps.push_back(frames.timestamp(i));
  }
  if (scene) {
    std::ostringstream echo;
    echo << "frame=" << scene->frame_width << "x" << scene->frame_height
         << " fps=" << scene->camera_fps << " gain=" << scene->gain
         << " noise=" << scene->sensor_noise_sigma << " cell_px=" << scene->cell_px;
    doc["scene"] = echo.str();
  }
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw std::runtime_error("save_frames: cannot write manifest in " + dir);
  out << doc.dump(1);
}

namespace {

class DiskSequence final : public FrameSource {
 public:
  explicit DiskSequence(const std::string& dir) : dir_(dir) {
    std::ifstream in(std::filesystem::path(dir) / "manifest.json");
    if (!in) throw SchemaError("load_frames: cannot open " + dir + "/manifest.json");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError("load_frames: " + dir + ": " + e.what());
    }
    fps_ = doc.at("fps").get<double>();
    names_ = doc.at("frames").get<std::vector<std::string>>();
    if (names_.empty()) throw SchemaError("load_frames: " + dir + " lists no frames");
  }
  int frame_count() const override { return static_cast<int>(names_.size()); }
  double fps() const override { return fps_; }
  Image frame(int i) const override {
    return read_ppm((std::filesystem::path(dir_) / names_.at(i)).string());
  }

 private:
  std::string dir_;
  double fps_ = 24.0;
  std::vector<std::string> names_;
};

}  // namespace

FrameSourcePtr load_frames(const std::string& dir) { return std::make_shared<DiskSequence>(dir); }

}  // namespace optisig
