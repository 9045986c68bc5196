#pragma once

#include <cstdint>
#include <vector>

#include "nop/vision/classify.hpp"

namespace nop::vision {

/// Row-major binary grid of cells.
struct Mask {
  int cols = 0;
  int rows = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int c, int r) : cols(c), rows(r), bits(static_cast<std::size_t>(c) * r, 0) {}

  bool get(int c, int r) const {
    return c >= 0 && r >= 0 && c < cols && r < rows && bits[static_cast<std::size_t>(r) * cols + c];
  }
  void set(int c, int r, bool v = true) { bits[static_cast<std::size_t>(r) * cols + c] = v ? 1 : 0; }
  std::size_t count() const;
};

struct CellPoint {
  double x = 0.0;
  double y = 0.0;
};

struct LineSegment {
  CellPoint a;
  CellPoint b;
  /// Orientation in [0, pi) measured in cell coordinates (x right, y down).
  double direction = 0.0;
  double length() const;
};

enum class CrossingKind { T, X };

struct Crossing {
  CellPoint position;
  CrossingKind kind = CrossingKind::T;
};

struct LineParams {
  int spur_length = 4;
  int bridge_length = 3;
  double split_tolerance = 1.5;
  int min_segment_points = 4;
  double merge_angle_rad = 10.0 * 3.14159265358979323846 / 180.0;
  double merge_gap_cells = 5.0;
};

struct LineResult {
  std::vector<LineSegment> segments;
  std::vector<Crossing> crossings;
};

/// Zhang-Suen thinning to an 8-connected one-cell skeleton.
Mask thin(Mask m);

/// Skeleton analysis of an arbitrary mask.
LineResult detect_lines(const Mask& mask, const LineParams& params = {});

/// White cells below the boundary, thinned and analysed.
LineResult detect_lines_and_crossings(const ClassImage& white, const std::vector<int>& boundary,
                                      int threshold = kDefaultOnThreshold,
                                      const LineParams& params = {});

}  // namespace nop::vision
