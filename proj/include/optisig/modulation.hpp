#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "optisig/bits.hpp"
#include "optisig/image.hpp"
#include "optisig/timing.hpp"

namespace optisig {

// Bitmap geometry: a 16x9 grid of 40x40 px cells over a 640x360 bitmap.
// Counts: 87 data cells, 32 sync cells, 4 corner localization blocks of 2x2
// cells each, and 9 always-off guard cells.
inline constexpr int kGridCols = 16;
inline constexpr int kGridRows = 9;
inline constexpr int kCellPx = 40;
inline constexpr int kBitmapW = kGridCols * kCellPx;  // 640
inline constexpr int kBitmapH = kGridRows * kCellPx;  // 360
inline constexpr int kCellCount = kGridCols * kGridRows;
inline constexpr int kDataCells = 87;
inline constexpr int kSyncCells = 32;
inline constexpr int kBitsPerDataCell = 12;

inline constexpr int kDisplayFramesPerWindow = 54;  // 6 downtime + 48 modulation
inline constexpr int kDataSlotsPerWindow = 27;      // 3 downtime + 24 modulation at 2*f_d

enum class CellRole : std::uint8_t { Data, Sync, Localization, Guard };

struct CellLayout {
  std::array<CellRole, kCellCount> roles{};
  std::vector<int> data_order;  // data cell ids, raster order
  std::vector<int> sync_cells;
  std::vector<int> loc_cells;   // the 16 unit cells of the 4 corner blocks

  static int cell_id(int col, int row) { return row * kGridCols + col; }
  static int cell_col(int id) { return id % kGridCols; }
  static int cell_row(int id) { return id / kGridCols; }
  // Cell id covering a bitmap pixel, or -1 outside.
  static int cell_at(double u, double v);
};

CellLayout build_layout();

// Centers of the four corner localization blocks in bitmap pixels, ordered
// top-left, top-right, bottom-right, bottom-left.
std::array<std::pair<double, double>, 4> localization_block_centers();

// One display frame: which cells are lit. Colors live on the schedule.
struct DisplayFrame {
  double t = 0.0;  // seconds from the schedule origin
  std::array<std::uint8_t, kCellCount> lit{};
};

struct BitmapSchedule {
  std::uint16_t window_no = 0;
  double t0 = 0.0;  // absolute start (downtime begins here)
  std::array<Rgb, kCellCount> cell_colors{};
  std::vector<DisplayFrame> frames;  // 54 entries at 12 Hz

  double duration() const { return kWindowS; }
  // Bitmap pixel value at (u, v) for display frame index f.
  Rgb sample(int f, double u, double v) const;
  // Index of the display frame active at absolute time t, or -1 outside.
  int frame_at(double t) const;
  Image rasterize(int f) const;
};

// Lays out one window: 0.5 s of all-off downtime then 4 s of modulation.
// Data cell j carries coded bits [12j, 12j+12) as BPSK against the sync
// phase: bit 0 = (on, off), bit 1 = (off, on). Sync cells run at f_d with
// phase 0, localization cells toggle at f_l, guard cells stay dark.
BitmapSchedule schedule_window(const Bits& coded, const std::array<Rgb, kCellCount>& cell_colors,
                               std::uint16_t window_no = 0, double t0 = 0.0);

// Exact inverse of schedule_window for a clean schedule; the self-check used
// before any camera is involved. Throws on a malformed frame count.
Bits reference_demod_local(const BitmapSchedule& schedule);

// On-disk schedule: manifest JSON with per-frame timestamps and lit masks,
// plus optional PPM rasterizations of each display frame.
void save_schedules(const std::vector<BitmapSchedule>& schedules, const std::string& dir,
                    bool export_images);
std::vector<BitmapSchedule> load_schedules(const std::string& dir);

}  // namespace optisig
