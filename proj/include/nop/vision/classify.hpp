#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "nop/vision/color_lut.hpp"
#include "nop/vision/image.hpp"

namespace nop::vision {

inline constexpr int kCellSize = 4;
inline constexpr int kDefaultOnThreshold = 8;

/// Per-class count of pixels in each 4x4 block.
struct ClassImage {
  int cols = 0;
  int rows = 0;
  std::vector<std::uint8_t> counts;

  ClassImage() = default;
  ClassImage(int c, int r) : cols(c), rows(r), counts(static_cast<std::size_t>(c) * r, 0) {}

  std::uint8_t at(int c, int r) const { return counts[static_cast<std::size_t>(r) * cols + c]; }
  std::uint8_t& at(int c, int r) { return counts[static_cast<std::size_t>(r) * cols + c]; }
  bool on(int c, int r, int threshold = kDefaultOnThreshold) const { return at(c, r) >= threshold; }

  bool operator==(const ClassImage&) const = default;
};

using ClassImages = std::array<ClassImage, kNumClasses>;

/// Pixel coordinate of a cell center.
constexpr double cell_center(double cell) { return kCellSize * cell + 1.5; }

/// Throws DomainError when the image size is not a multiple of the cell size.
ClassImages classify(const YuyvImage& img, const ColorLUT& lut);

}  // namespace nop::vision
