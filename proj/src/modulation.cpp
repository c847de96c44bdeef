#include "optisig/modulation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "optisig/errors.hpp"

namespace optisig {

int CellLayout::cell_at(double u, double v) {
  if (u < 0.0 || v < 0.0 || u >= kBitmapW || v >= kBitmapH) return -1;
  return cell_id(static_cast<int>(u) / kCellPx, static_cast<int>(v) / kCellPx);
}

namespace {

bool in_corner_block(int col, int row) {
  return (col <= 1 || col >= kGridCols - 2) && (row <= 1 || row >= kGridRows - 2);
}

}  // namespace

CellLayout build_layout() {
  CellLayout layout;

  // Corner 2x2 localization blocks.
  for (int row = 0; row < kGridRows; ++row)
    for (int col = 0; col < kGridCols; ++col)
      if (in_corner_block(col, row)) {
        layout.roles[CellLayout::cell_id(col, row)] = CellRole::Localization;
        layout.loc_cells.push_back(CellLayout::cell_id(col, row));
      }

  // Border ring cells outside the corner blocks become sync cells, nearest the
  // corners first (walk order breaks ties), until 32 are placed; leftovers are
  // guards.
  struct BorderCell {
    int id;
    double corner_dist;
    int walk;
  };
  std::vector<BorderCell> border;
  int walk = 0;
  auto consider = [&](int col, int row) {
    if (in_corner_block(col, row)) return;
    double best = 1e9;
    for (double cc : {0.0, double(kGridCols - 1)})
      for (double cr : {0.0, double(kGridRows - 1)})
        best = std::min(best, std::hypot(col - cc, row - cr));
    border.push_back({CellLayout::cell_id(col, row), best, walk++});
  };
  // clockwise from the top-left
  for (int col = 0; col < kGridCols; ++col) consider(col, 0);
  for (int row = 1; row < kGridRows; ++row) consider(kGridCols - 1, row);
  for (int col = kGridCols - 2; col >= 0; --col) consider(col, kGridRows - 1);
  for (int row = kGridRows - 2; row >= 1; --row) consider(0, row);

  std::sort(border.begin(), border.end(), [](const BorderCell& a, const BorderCell& b) {
    return a.corner_dist != b.corner_dist ? a.corner_dist < b.corner_dist : a.walk < b.walk;
  });
  for (std::size_t i = 0; i < border.size(); ++i) {
    auto role = i < kSyncCells ? CellRole::Sync : CellRole::Guard;
    layout.roles[border[i].id] = role;
    if (role == CellRole::Sync) layout.sync_cells.push_back(border[i].id);
  }
  std::sort(layout.sync_cells.begin(), layout.sync_cells.end());

  // Interior cells in raster order: first 87 are data, the rest guards.
  int data_count = 0;
  for (int row = 1; row < kGridRows - 1; ++row)
    for (int col = 1; col < kGridCols - 1; ++col) {
      if (in_corner_block(col, row)) continue;
      int id = CellLayout::cell_id(col, row);
      if (data_count < kDataCells) {
        layout.roles[id] = CellRole::Data;
        layout.data_order.push_back(id);
        ++data_count;
      } else {
        layout.roles[id] = CellRole::Guard;
      }
    }
  return layout;
}

std::array<std::pair<double, double>, 4> localization_block_centers() {
  const double b = 2.0 * kCellPx;  // block edge in px
  return {{{b / 2, b / 2},
           {kBitmapW - b / 2, b / 2},
           {kBitmapW - b / 2, kBitmapH - b / 2},
           {b / 2, kBitmapH - b / 2}}};
}

Rgb BitmapSchedule::sample(int f, double u, double v) const {
  int cell = CellLayout::cell_at(u, v);
  if (cell < 0 || !frames[f].lit[cell]) return {};
  return cell_colors[cell];
}

int BitmapSchedule::frame_at(double t) const {
  double rel = t - t0;
  if (rel < 0.0 || rel >= kWindowS) return -1;
  int f = static_cast<int>(rel * kDisplayHz);
  return std::min(f, kDisplayFramesPerWindow - 1);
}

Image BitmapSchedule::rasterize(int f) const {
  Image img(kBitmapW, kBitmapH);
  for (int cell = 0; cell < kCellCount; ++cell) {
    if (!frames[f].lit[cell]) continue;
    Rgb c = cell_colors[cell];
    int x0 = CellLayout::cell_col(cell) * kCellPx;
    int y0 = CellLayout::cell_row(cell) * kCellPx;
    for (int y = y0; y < y0 + kCellPx; ++y)
      for (int x = x0; x < x0 + kCellPx; ++x) img.set(x, y, c);
  }
  return img;
}

BitmapSchedule schedule_window(const Bits& coded, const std::array<Rgb, kCellCount>& cell_colors,
                               std::uint16_t window_no, double t0) {
  if (static_cast<int>(coded.size()) != kDataCells * kBitsPerDataCell)
    throw std::invalid_argument("schedule_window: expected " +
                                std::to_string(kDataCells * kBitsPerDataCell) + " bits, got " +
                                std::to_string(coded.size()));
  static const CellLayout layout = build_layout();

  BitmapSchedule sched;
  sched.window_no = window_no;
  sched.t0 = t0;
  sched.cell_colors = cell_colors;
  sched.frames.resize(kDisplayFramesPerWindow);

  constexpr int kDowntimeFrames = static_cast<int>(kDowntimeS * kDisplayHz);  // 6
  for (int f = 0; f < kDisplayFramesPerWindow; ++f) {
    auto& frame = sched.frames[f];
    frame.t = f / kDisplayHz;
    if (f < kDowntimeFrames) continue;  // downtime: everything dark

    const int m = f - kDowntimeFrames;  // modulation display frame index
    const int slot = m / 2;             // data bitmap index, 6 Hz
    const int bit_idx = slot / 2;       // bit position within each data cell
    const bool first_half = (slot % 2) == 0;

    for (int j = 0; j < kDataCells; ++j) {
      int bit = coded[static_cast<std::size_t>(j) * kBitsPerDataCell + bit_idx];
      bool on = bit ? !first_half : first_half;  // 0 = (on, off), 1 = (off, on)
      frame.lit[layout.data_order[j]] = on;
    }
    for (int id : layout.sync_cells) frame.lit[id] = first_half;  // f_d, phase 0
    for (int id : layout.loc_cells) frame.lit[id] = (m % 2) == 0;  // f_l toggle
  }
  return sched;
}

Bits reference_demod_local(const BitmapSchedule& schedule) {
  if (static_cast<int>(schedule.frames.size()) != kDisplayFramesPerWindow)
    throw std::invalid_argument("reference_demod_local: schedule has " +
                                std::to_string(schedule.frames.size()) + " frames, expected " +
                                std::to_string(kDisplayFramesPerWindow));
  static const CellLayout layout = build_layout();
  constexpr int kDowntimeFrames = static_cast<int>(kDowntimeS * kDisplayHz);

  Bits bits(kDataCells * kBitsPerDataCell);
  for (int j = 0; j < kDataCells; ++j) {
    int cell = layout.data_order[j];
    for (int b = 0; b < kBitsPerDataCell; ++b) {
      int f = kDowntimeFrames + 4 * b;  // first display frame of the bit's first slot
      bool on_first = schedule.frames[f].lit[cell];
      bits[static_cast<std::size_t>(j) * kBitsPerDataCell + b] = on_first ? 0 : 1;
    }
  }
  return bits;
}

void save_schedules(const std::vector<BitmapSchedule>& schedules, const std::string& dir,
                    bool export_images) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["display_hz"] = kDisplayHz;
  doc["bitmap_size"] = {kBitmapW, kBitmapH};
  auto& windows = doc["windows"] = nlohmann::json::array();
  for (const auto& s : schedules) {
    nlohmann::json w;
    w["window_no"] = s.window_no;
    w["t0"] = s.t0;
    auto& colors = w["cell_colors"] = nlohmann::json::array();
    for (const auto& c : s.cell_colors) colors.push_back({c.r, c.g, c.b});
    auto& frames = w["frames"] = nlohmann::json::array();
    for (std::size_t f = 0; f < s.frames.size(); ++f) {
      nlohmann::json fr;
      fr["t"] = s.frames[f].t;
      std::string mask(kCellCount, '0');
      for (int c = 0; c < kCellCount; ++c) mask[c] = s.frames[f].lit[c] ? '1' : '0';
      fr["lit"] = mask;
      if (export_images) {
        char name[64];
        std::snprintf(name, sizeof name, "w%05u_f%02zu.ppm", s.window_no, f);
        write_ppm(s.rasterize(static_cast<int>(f)), (fs::path(dir) / name).string());
        fr["file"] = name;
      }
      frames.push_back(std::move(fr));
    }
    windows.push_back(std::move(w));
  }
  std::ofstream out(fs::path(dir) / "schedule.json");
  if (!out) throw std::runtime_error("save_schedules: cannot write manifest in " + dir);
  out << doc.dump(1);
}

std::vector<BitmapSchedule> load_schedules(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "schedule.json");
  if (!in) throw SchemaError("load_schedules: cannot open " + dir + "/schedule.json");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("load_schedules: " + dir + ": " + e.what());
  }
  std::vector<BitmapSchedule> out;
  for (const auto& w : doc.at("windows")) {
    BitmapSchedule s;
    s.window_no = w.at("window_no").get<std::uint16_t>();
    s.t0 = w.at("t0").get<double>();
    const auto& colors = w.at("cell_colors");
    if (colors.size() != kCellCount)
      throw SchemaError("load_schedules: cell_colors must have " + std::to_string(kCellCount) +
                        " entries");
    for (int c = 0; c < kCellCount; ++c)
      s.cell_colors[c] = {colors[c][0].get<std::uint8_t>(), colors[c][1].get<std::uint8_t>(),
                          colors[c][2].get<std::uint8_t>()};
    for (const auto& fr : w.at("frames")) {
      DisplayFrame f;
      f.t = fr.at("t").get<double>();
      std::string mask = fr.at("lit").get<std::string>();
      if (mask.size() != kCellCount)
        throw SchemaError("load_schedules: lit mask must have " + std::to_string(kCellCount) +
                          " chars");
      for (int c = 0; c < kCellCount; ++c) f.lit[c] = mask[c] == '1';
      s.frames.push_back(f);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace optisig
