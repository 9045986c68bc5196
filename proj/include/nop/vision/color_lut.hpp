#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nop/vision/image.hpp"

namespace nop::vision {

enum class ColorClass : std::uint8_t {
  Unknown = 0,
  Ball = 1,
  Field = 2,
  Line = 3,
  Goal = 4,
  Obstacle = 5,
};

inline constexpr std::size_t kNumClasses = 6;
inline constexpr std::size_t kLutSize = 64 * 64 * 64;
inline constexpr std::string_view kLutMagic = "NOPLUT01";

std::string_view class_name(ColorClass c);

/// Canonical colors used by the synthetic renderer and the default table.
namespace palette {
inline constexpr Yuv kGreen{99, 95, 86};
inline constexpr Yuv kWhite{235, 128, 128};
inline constexpr Yuv kOrange{147, 45, 205};
inline constexpr Yuv kYellow{206, 35, 153};
inline constexpr Yuv kBlack{20, 128, 128};
inline constexpr Yuv kGray{128, 128, 128};
inline constexpr Yuv kBlue{67, 203, 102};
}  // namespace palette

/// Quantized YUV -> class table; each channel reduced to 6 bits.
class ColorLUT {
public:
  ColorLUT();

  static constexpr std::size_t index(std::uint8_t y, std::uint8_t u, std::uint8_t v) {
    return (static_cast<std::size_t>(y >> 2) << 12) | (static_cast<std::size_t>(u >> 2) << 6) |
           static_cast<std::size_t>(v >> 2);
  }

  ColorClass lookup(Yuv c) const { return static_cast<ColorClass>(table_[index(c.y, c.u, c.v)]); }
  std::uint8_t raw(std::size_t idx) const { return table_[idx]; }
  void set(Yuv c, ColorClass cls) { table_[index(c.y, c.u, c.v)] = static_cast<std::uint8_t>(cls); }

  /// Assigns `cls` to the (2r+1)^3 cube of cells around `c`, clipped at the table edges.
  void grow(Yuv c, ColorClass cls, int radius);

  /// NOPLUT01 magic followed by the table bytes.
  std::vector<std::uint8_t> to_bytes() const;
  /// Throws DomainError on bad magic, size or class ids.
  static ColorLUT from_bytes(std::span<const std::uint8_t> bytes);

  /// Writes the table and a `<path>.json` sidecar with class names.
  void save(const std::string& path) const;
  static ColorLUT load(const std::string& path);

  bool operator==(const ColorLUT&) const = default;

private:
  std::vector<std::uint8_t> table_;
};

/// Table covering the canonical palette with a small neighborhood around each color.
ColorLUT default_lut(ColorClass goal_class = ColorClass::Goal, Yuv goal_color = palette::kYellow);

}  // namespace nop::vision
