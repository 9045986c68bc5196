#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nop::vision {

inline constexpr int kImageWidth = 800;
inline constexpr int kImageHeight = 600;

struct Yuv {
  std::uint8_t y = 0;
  std::uint8_t u = 128;
  std::uint8_t v = 128;

  bool operator==(const Yuv&) const = default;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

/// Packed 4:2:2 frame: Y0 U Y1 V per horizontal pixel pair.
class YuyvImage {
public:
  YuyvImage(int width = kImageWidth, int height = kImageHeight);

  int width() const { return width_; }
  int height() const { return height_; }
  std::vector<std::uint8_t>& bytes() { return data_; }
  const std::vector<std::uint8_t>& bytes() const { return data_; }

  Yuv pixel(int x, int y) const;
  /// Writes a pixel pair. The shared chroma is the mean of `a` and `b`.
  void set_pair(int x_even, int y, Yuv a, Yuv b);

private:
  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// BT.601 full-range conversions.
Yuv to_yuv(Rgb c);
Rgb to_rgb(Yuv c);

YuyvImage to_yuyv(const RgbImage& rgb);
RgbImage to_rgb(const YuyvImage& img);

/// Binary PPM (P6, maxval 255).
RgbImage read_ppm(const std::string& path);
void write_ppm(const std::string& path, const RgbImage& img);

}  // namespace nop::vision
