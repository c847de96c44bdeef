#pragma once

#include <array>
#include <optional>

#include "optisig/color.hpp"
#include "optisig/modulation.hpp"

namespace optisig {

struct AdaptParams {
  double beta_max = 0.0;  // BER above this raises every cell intensity
  double phi_max = 5.0;   // CIEDE2000 above this lowers a quiet cell's intensity
  double delta = 5.0;     // adaptation step
};

inline constexpr double kInitialIntensity = 45.0;
inline constexpr double kMaxIntensity = 765.0;

struct AdaptState {
  AdaptParams params;
  std::array<double, kCellCount> intensities{};
};

AdaptState make_adapt_state(AdaptParams params = {});

// Observed patch colors with the modulator dark (off) and lit (on). `stale`
// marks cells whose lit color had to be carried over from an earlier window
// because the cell never emitted during the measured one.
struct SurfaceColorMap {
  std::array<Rgb, kCellCount> off{};
  std::array<Rgb, kCellCount> on{};
  std::array<bool, kCellCount> stale{};
};

struct AdaptOutcome {
  AdaptState state;
  std::array<Rgb, kCellCount> cell_colors;
  bool raised = false;  // BER branch fired
  int lowered_cells = 0;
};

// One adaptation round after a completed window. measured_ber is the raw BER
// from self-extraction on the window's own video; nullopt means extraction
// failed and is treated as the worst case (every intensity is raised).
// Robustness dominates: when the BER branch fires, intensities rise even for
// cells already past the perceptibility threshold.
AdaptOutcome adapt(const AdaptState& state, std::optional<double> measured_ber,
                   const SurfaceColorMap& surface);

// Colors for the very first window, before any feedback exists.
std::array<Rgb, kCellCount> colors_for_state(const AdaptState& state,
                                             const SurfaceColorMap& surface);

}  // namespace optisig
