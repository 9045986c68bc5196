#include "nop/vision/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "nop/errors.hpp"

namespace nop::vision {

namespace {

std::uint8_t sat(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

YuyvImage::YuyvImage(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0 || width % 2 != 0) {
    throw DomainError("YUYV image needs positive size and even width");
  }
  data_.resize(static_cast<std::size_t>(width) * height * 2);
  for (std::size_t i = 0; i < data_.size(); i += 2) {
    data_[i] = 0;
    data_[i + 1] = 128;
  }
}

Yuv YuyvImage::pixel(int x, int y) const {
  const std::size_t pair = (static_cast<std::size_t>(y) * width_ + (x & ~1)) * 2;
  return {data_[pair + ((x & 1) ? 2 : 0)], data_[pair + 1], data_[pair + 3]};
}

void YuyvImage::set_pair(int x_even, int y, Yuv a, Yuv b) {
  const std::size_t pair = (static_cast<std::size_t>(y) * width_ + x_even) * 2;
  data_[pair] = a.y;
  data_[pair + 1] = static_cast<std::uint8_t>((a.u + b.u + 1) / 2);
  data_[pair + 2] = b.y;
  data_[pair + 3] = static_cast<std::uint8_t>((a.v + b.v + 1) / 2);
}

Yuv to_yuv(Rgb c) {
  const double r = c.r, g = c.g, b = c.b;
  return {sat(0.299 * r + 0.587 * g + 0.114 * b),
          sat(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b),
          sat(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b)};
}

Rgb to_rgb(Yuv c) {
  const double y = c.y, u = c.u - 128.0, v = c.v - 128.0;
  return {sat(y + 1.402 * v), sat(y - 0.344136 * u - 0.714136 * v), sat(y + 1.772 * u)};
}

YuyvImage to_yuyv(const RgbImage& rgb) {
  YuyvImage img(rgb.width, rgb.height);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; x += 2) {
      img.set_pair(x, y, to_yuv(rgb.at(x, y)), to_yuv(rgb.at(x + 1, y)));
    }
  }
  return img;
}

RgbImage to_rgb(const YuyvImage& img) {
  RgbImage out{img.width(), img.height(), {}};
  out.pixels.resize(static_cast<std::size_t>(img.width()) * img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.at(x, y) = to_rgb(img.pixel(x, y));
  }
  return out;
}

RgbImage read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);

  auto next_token = [&]() {
    std::string tok;
    char c = 0;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) break;
      } else {
        tok += c;
      }
    }
    return tok;
  };

  if (next_token() != "P6") throw std::runtime_error(path + ": not a binary PPM (P6)");
  const int w = std::stoi(next_token());
  const int h = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (w <= 0 || h <= 0 || maxval != 255) throw std::runtime_error(path + ": unsupported PPM header");

  RgbImage img{w, h, std::vector<Rgb>(static_cast<std::size_t>(w) * h)};
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size() * 3));
  if (!in) throw std::runtime_error(path + ": truncated PPM data");
  return img;
}

void write_ppm(const std::string& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size() * 3));
}

}  // namespace nop::vision
