#include "optisig/color.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optisig {

namespace {

double srgb_linearize(double v) {
  v /= 255.0;
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double kDelta = 6.0 / 29.0;
  return t > kDelta * kDelta * kDelta ? std::cbrt(t)
                                      : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

constexpr double deg2rad(double d) { return d * M_PI / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / M_PI; }

}  // namespace

Lab rgb_to_lab(Rgb c) {
  const double r = srgb_linearize(c.r);
  const double g = srgb_linearize(c.g);
  const double b = srgb_linearize(c.b);
  // sRGB to XYZ, D65
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  // D65 reference white
  const double fx = lab_f(x / 0.95047);
  const double fy = lab_f(y / 1.00000);
  const double fz = lab_f(z / 1.08883);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double ciede2000(Lab c1, Lab c2) {
  // Sharma, Wu, Dalal formulation.
  const double C1 = std::hypot(c1.a, c1.b);
  const double C2 = std::hypot(c2.a, c2.b);
  const double Cbar = (C1 + C2) / 2.0;
  const double Cbar7 = std::pow(Cbar, 7.0);
  const double G = 0.5 * (1.0 - std::sqrt(Cbar7 / (Cbar7 + std::pow(25.0, 7.0))));

  const double a1p = (1.0 + G) * c1.a;
  const double a2p = (1.0 + G) * c2.a;
  const double C1p = std::hypot(a1p, c1.b);
  const double C2p = std::hypot(a2p, c2.b);

  auto hue = [](double a, double b) {
    if (a == 0.0 && b == 0.0) return 0.0;
    double h = rad2deg(std::atan2(b, a));
    return h < 0.0 ? h + 360.0 : h;
  };
  const double h1p = hue(a1p, c1.b);
  const double h2p = hue(a2p, c2.b);

  const double dLp = c2.l - c1.l;
  const double dCp = C2p - C1p;

  double dhp = 0.0;
  if (C1p * C2p != 0.0) {
    dhp = h2p - h1p;
    if (dhp > 180.0)
      dhp -= 360.0;
    else if (dhp < -180.0)
      dhp += 360.0;
  }
  const double dHp = 2.0 * std::sqrt(C1p * C2p) * std::sin(deg2rad(dhp) / 2.0);

  const double Lbarp = (c1.l + c2.l) / 2.0;
  const double Cbarp = (C1p + C2p) / 2.0;

  double hbarp;
  if (C1p * C2p == 0.0) {
    hbarp = h1p + h2p;
  } else {
    double diff = std::abs(h1p - h2p);
    double sum = h1p + h2p;
    if (diff <= 180.0)
      hbarp = sum / 2.0;
    else if (sum < 360.0)
      hbarp = (sum + 360.0) / 2.0;
    else
      hbarp = (sum - 360.0) / 2.0;
  }

  const double T = 1.0 - 0.17 * std::cos(deg2rad(hbarp - 30.0)) +
                   0.24 * std::cos(deg2rad(2.0 * hbarp)) +
                   0.32 * std::cos(deg2rad(3.0 * hbarp + 6.0)) -
                   0.20 * std::cos(deg2rad(4.0 * hbarp - 63.0));

  const double dtheta = 30.0 * std::exp(-std::pow((hbarp - 275.0) / 25.0, 2.0));
  const double Cbarp7 = std::pow(Cbarp, 7.0);
  const double RC = 2.0 * std::sqrt(Cbarp7 / (Cbarp7 + std::pow(25.0, 7.0)));
  const double Lterm = (Lbarp - 50.0) * (Lbarp - 50.0);
  const double SL = 1.0 + 0.015 * Lterm / std::sqrt(20.0 + Lterm);
  const double SC = 1.0 + 0.045 * Cbarp;
  const double SH = 1.0 + 0.015 * Cbarp * T;
  const double RT = -std::sin(deg2rad(2.0 * dtheta)) * RC;

  const double tl = dLp / SL;
  const double tc = dCp / SC;
  const double th = dHp / SH;
  return std::sqrt(tl * tl + tc * tc + th * th + RT * tc * th);
}

double ciede2000(Rgb c1, Rgb c2) { return ciede2000(rgb_to_lab(c1), rgb_to_lab(c2)); }

SelectedColor select_color(Rgb surface_off, double intensity) {
  if (intensity < 0.0) throw std::invalid_argument("select_color: negative intensity");
  intensity = std::min(intensity, 765.0);
  SelectedColor out;
  if (intensity == 0.0) return out;  // (0,0,0)

  const int surf_sum = surface_off.sum();
  double target[3];
  if (surf_sum == 0) {
    out.fallback = true;
    target[0] = target[1] = target[2] = intensity / 3.0;
  } else {
    const double alpha = intensity / surf_sum;
    target[0] = alpha * surface_off.r;
    target[1] = alpha * surface_off.g;
    target[2] = alpha * surface_off.b;
  }

  // Redistribute anything beyond a saturated channel to the others, keeping
  // their proportions, until the channel sum hits the requested intensity.
  bool saturated[3] = {false, false, false};
  for (int pass = 0; pass < 3; ++pass) {
    double excess = 0.0;
    double open_sum = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (saturated[i]) continue;
      if (target[i] > 255.0) {
        excess += target[i] - 255.0;
        target[i] = 255.0;
        saturated[i] = true;
      } else {
        open_sum += target[i];
      }
    }
    if (excess == 0.0) break;
    if (open_sum <= 0.0) {
      // spread evenly over whatever is still open
      int open = 0;
      for (bool s : saturated) open += !s;
      if (!open) break;
      for (int i = 0; i < 3; ++i)
        if (!saturated[i]) target[i] += excess / open;
    } else {
      for (int i = 0; i < 3; ++i)
        if (!saturated[i]) target[i] += excess * (target[i] / open_sum);
    }
  }

  auto q = [](double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  };
  out.color = {q(target[0]), q(target[1]), q(target[2])};
  return out;
}

}  // namespace optisig
