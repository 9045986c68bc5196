#include "nop/vision/color_lut.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <json.hpp>

#include "nop/errors.hpp"

namespace nop::vision {

namespace {

constexpr std::array<std::string_view, kNumClasses> kClassNames{
    "unknown", "ball", "field", "line", "goal", "obstacle"};

}  // namespace

std::string_view class_name(ColorClass c) { return kClassNames.at(static_cast<std::size_t>(c)); }

ColorLUT::ColorLUT() : table_(kLutSize, 0) {}

void ColorLUT::grow(Yuv c, ColorClass cls, int radius) {
  const int y0 = c.y >> 2, u0 = c.u >> 2, v0 = c.v >> 2;
  for (int y = std::max(0, y0 - radius); y <= std::min(63, y0 + radius); ++y) {
    for (int u = std::max(0, u0 - radius); u <= std::min(63, u0 + radius); ++u) {
      for (int v = std::max(0, v0 - radius); v <= std::min(63, v0 + radius); ++v) {
        table_[(static_cast<std::size_t>(y) << 12) | (static_cast<std::size_t>(u) << 6) |
               static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(cls);
      }
    }
  }
}

std::vector<std::uint8_t> ColorLUT::to_bytes() const {
  std::vector<std::uint8_t> out(kLutMagic.size() + table_.size());
  std::copy(kLutMagic.begin(), kLutMagic.end(), out.begin());
  std::copy(table_.begin(), table_.end(), out.begin() + static_cast<std::ptrdiff_t>(kLutMagic.size()));
  return out;
}

ColorLUT ColorLUT::from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kLutMagic.size() + kLutSize) {
    throw DomainError("LUT must be " + std::to_string(kLutMagic.size() + kLutSize) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  if (!std::equal(kLutMagic.begin(), kLutMagic.end(), bytes.begin())) {
    throw DomainError("LUT magic mismatch");
  }
  ColorLUT lut;
  std::copy(bytes.begin() + kLutMagic.size(), bytes.end(), lut.table_.begin());
  if (std::any_of(lut.table_.begin(), lut.table_.end(), [](std::uint8_t b) { return b >= kNumClasses; })) {
    throw DomainError("LUT contains an invalid class id");
  }
  return lut;
}

void ColorLUT::save(const std::string& path) const {
  const auto bytes = to_bytes();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));

  nlohmann::json side;
  side["format"] = std::string(kLutMagic);
  side["entries"] = kLutSize;
  side["order"] = "y,u,v";
  side["quantization"] = 4;
  for (std::size_t i = 0; i < kNumClasses; ++i) side["classes"][std::to_string(i)] = kClassNames[i];
  std::ofstream js(path + ".json");
  js << side.dump(2) << '\n';
}

ColorLUT ColorLUT::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
  return from_bytes(bytes);
}

ColorLUT default_lut(ColorClass goal_class, Yuv goal_color) {
  ColorLUT lut;
  lut.grow(palette::kGreen, ColorClass::Field, 2);
  lut.grow(palette::kWhite, ColorClass::Line, 2);
  lut.grow(palette::kOrange, ColorClass::Ball, 2);
  lut.grow(goal_color, goal_class, 2);
  lut.grow(palette::kBlack, ColorClass::Obstacle, 2);
  return lut;
}

}  // namespace nop::vision
