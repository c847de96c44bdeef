#include "optisig/adaptive.hpp"

#include <algorithm>

namespace optisig {

AdaptState make_adapt_state(AdaptParams params) {
  AdaptState state;
  state.params = params;
  state.intensities.fill(kInitialIntensity);
  return state;
}

std::array<Rgb, kCellCount> colors_for_state(const AdaptState& state,
                                             const SurfaceColorMap& surface) {
  static const CellLayout layout = build_layout();
  std::array<Rgb, kCellCount> colors{};
  for (int c = 0; c < kCellCount; ++c) {
    if (layout.roles[c] == CellRole::Guard) continue;  // guards stay dark
    colors[c] = select_color(surface.off[c], state.intensities[c]).color;
  }
  return colors;
}

AdaptOutcome adapt(const AdaptState& state, std::optional<double> measured_ber,
                   const SurfaceColorMap& surface) {
  static const CellLayout layout = build_layout();
  AdaptOutcome out;
  out.state = state;
  const AdaptParams& p = state.params;

  const bool ber_bad = !measured_ber || *measured_ber > p.beta_max;
  out.raised = ber_bad;
  for (int c = 0; c < kCellCount; ++c) {
    if (layout.roles[c] == CellRole::Guard) continue;
    double& intensity = out.state.intensities[c];
    if (ber_bad) {
      intensity += p.delta;
    } else if (ciede2000(surface.on[c], surface.off[c]) >= p.phi_max) {
      intensity -= p.delta;
      ++out.lowered_cells;
    }
    intensity = std::clamp(intensity, 0.0, kMaxIntensity);
  }
  out.cell_colors = colors_for_state(out.state, surface);
  return out;
}

}  // namespace optisig
