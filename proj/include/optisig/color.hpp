#pragma once

#include "optisig/image.hpp"

namespace optisig {

struct Lab {
  double l = 0, a = 0, b = 0;
};

// sRGB (D65 white point, 2 degree observer) to CIELAB.
Lab rgb_to_lab(Rgb c);

// CIEDE2000 color difference.
double ciede2000(Lab c1, Lab c2);
double ciede2000(Rgb c1, Rgb c2);

struct SelectedColor {
  Rgb color;
  bool fallback = false;  // black surface, uniform gray substituted
};

// Scales the patch's unlit color so the emitted channel sum equals `intensity`
// (0..765). Saturating channels clamp at 255 and the residual is redistributed
// proportionally across the rest.
SelectedColor select_color(Rgb surface_off, double intensity);

}  // namespace optisig
