#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace optisig {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
  int sum() const { return int(r) + g + b; }
};

// Interleaved 8-bit RGB.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* px(int x, int y) { return data.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const std::uint8_t* px(int x, int y) const {
    return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
  void set(int x, int y, Rgb c) {
    auto* p = px(x, y);
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  Rgb get(int x, int y) const {
    const auto* p = px(x, y);
    return {p[0], p[1], p[2]};
  }
  double intensity(int x, int y) const {
    const auto* p = px(x, y);
    return (int(p[0]) + p[1] + p[2]) / 3.0;
  }
};

// Binary PPM (P6).
void write_ppm(const Image& img, const std::string& path);
Image read_ppm(const std::string& path);

}  // namespace optisig
