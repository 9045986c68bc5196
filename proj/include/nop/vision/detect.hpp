#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nop/vision/classify.hpp"
#include "nop/vision/lens.hpp"
#include "nop/vision/lines.hpp"

namespace nop::vision {

/// One 8-connected component of on-cells.
struct Blob {
  int area = 0;
  int min_col = 0, max_col = 0, min_row = 0, max_row = 0;
  /// Count-weighted centroid in pixel coordinates.
  Pixel centroid;
  /// Mean pixel position of the blob's lowest row of cells.
  Pixel base;
};

struct BallDetection {
  Pixel centroid;
  Bearing bearing;
  double radius_cells = 0.0;
  int area_cells = 0;
};

struct GoalPost {
  Pixel centroid;
  Bearing bearing;
  Pixel base;
  Bearing base_bearing;
  int area_cells = 0;
};

struct Obstacle {
  Pixel centroid;
  Bearing bearing;
  Pixel base;
  int area_cells = 0;
};

struct Detections {
  std::optional<BallDetection> ball;
  std::vector<GoalPost> goal_posts;
  std::vector<Obstacle> obstacles;
  std::vector<int> field_boundary;
  std::vector<LineSegment> line_segments;
  std::vector<Crossing> crossings;
};

struct VisionParams {
  int on_threshold = kDefaultOnThreshold;
  int min_ball_area = 4;
  int min_obstacle_area = 4;
  int goal_band = 5;
  double goal_aspect = 2.0;
  ColorClass goal_class = ColorClass::Goal;
  LineParams lines;
};

/// 8-connected components of on-cells, optionally restricted to rows at or below `boundary_below`.
std::vector<Blob> find_blobs(const ClassImage& img, int threshold,
                             const std::vector<int>* boundary_below = nullptr);

std::vector<int> detect_field_boundary(const ClassImage& green, int threshold = kDefaultOnThreshold);

std::optional<BallDetection> detect_ball(const ClassImage& ball, const std::vector<int>& boundary,
                                         const LensModel& lens, const VisionParams& params = {});

/// At most two posts, ordered left to right in the image (decreasing azimuth).
std::vector<GoalPost> detect_goal(const ClassImage& goal, const std::vector<int>& boundary,
                                  const LensModel& lens, const VisionParams& params = {});

std::vector<Obstacle> detect_obstacles(const ClassImage& obstacle, const std::vector<int>& boundary,
                                       const LensModel& lens, const VisionParams& params = {});

Detections run_pipeline(const ClassImages& classes, const LensModel& lens, const VisionParams& params = {});
Detections run_pipeline(const YuyvImage& img, const ColorLUT& lut, const LensModel& lens,
                        const VisionParams& params = {});

nlohmann::json to_json(const Detections& d);

}  // namespace nop::vision
