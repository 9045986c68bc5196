#include "nop/vision/classify.hpp"

#include "nop/errors.hpp"

namespace nop::vision {

ClassImages classify(const YuyvImage& img, const ColorLUT& lut) {
  if (img.width() % kCellSize != 0 || img.height() % kCellSize != 0) {
    throw DomainError("image dimensions must be multiples of 4");
  }
  const int cols = img.width() / kCellSize;
  const int rows = img.height() / kCellSize;
  ClassImages out;
  for (auto& ci : out) ci = ClassImage(cols, rows);

  const std::uint8_t* src = img.bytes().data();
  for (int y = 0; y < img.height(); ++y) {
    const std::size_t row_base = static_cast<std::size_t>(y / kCellSize) * cols;
    for (int x = 0; x < img.width(); x += 2, src += 4) {
      const std::uint8_t u = src[1];
      const std::uint8_t v = src[3];
      const std::size_t cell = row_base + static_cast<std::size_t>(x / kCellSize);
      ++out[lut.raw(ColorLUT::index(src[0], u, v))].counts[cell];
      ++out[lut.raw(ColorLUT::index(src[2], u, v))].counts[cell];
    }
  }
  return out;
}

}  // namespace nop::vision
