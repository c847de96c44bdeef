#include "optisig/image.hpp"

#include <fstream>
#include <stdexcept>

namespace optisig {

void write_ppm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_ppm: cannot write " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
}

Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_ppm: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6") throw std::runtime_error("read_ppm: " + path + " is not a binary PPM");
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  if (w <= 0 || h <= 0 || maxval != 255)
    throw std::runtime_error("read_ppm: " + path + " has unsupported header");
  in.get();  // single whitespace after header
  Image img(w, h);
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (!in) throw std::runtime_error("read_ppm: " + path + " truncated");
  return img;
}

}  // namespace optisig
