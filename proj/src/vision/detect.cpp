#include "nop/vision/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nop::vision {

std::vector<Blob> find_blobs(const ClassImage& img, int threshold, const std::vector<int>* boundary_below) {
  const int cols = img.cols, rows = img.rows;
  auto accept = [&](int c, int r) {
    if (!img.on(c, r, threshold)) return false;
    return boundary_below == nullptr || r >= (*boundary_below)[static_cast<std::size_t>(c)];
  };
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(cols) * rows, 0);
  std::vector<Blob> blobs;
  std::vector<std::pair<int, int>> stack;
  std::vector<std::pair<int, int>> cells;

  for (int r0 = 0; r0 < rows; ++r0) {
    for (int c0 = 0; c0 < cols; ++c0) {
      const std::size_t i0 = static_cast<std::size_t>(r0) * cols + c0;
      if (seen[i0] || !accept(c0, r0)) continue;
      seen[i0] = 1;
      stack.assign(1, {c0, r0});
      cells.clear();
      while (!stack.empty()) {
        const auto [c, r] = stack.back();
        stack.pop_back();
        cells.emplace_back(c, r);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nc = c + dc, nr = r + dr;
            if (nc < 0 || nr < 0 || nc >= cols || nr >= rows) continue;
            const std::size_t ni = static_cast<std::size_t>(nr) * cols + nc;
            if (seen[ni] || !accept(nc, nr)) continue;
            seen[ni] = 1;
            stack.emplace_back(nc, nr);
          }
        }
      }
      Blob b;
      b.area = static_cast<int>(cells.size());
      b.min_col = b.max_col = c0;
      b.min_row = b.max_row = r0;
      double wx = 0.0, wy = 0.0, w = 0.0;
      for (const auto& [c, r] : cells) {
        b.min_col = std::min(b.min_col, c);
        b.max_col = std::max(b.max_col, c);
        b.min_row = std::min(b.min_row, r);
        b.max_row = std::max(b.max_row, r);
        const double cnt = img.at(c, r);
        wx += cnt * cell_center(c);
        wy += cnt * cell_center(r);
        w += cnt;
      }
      b.centroid = {wx / w, wy / w};
      double bx = 0.0;
      int bn = 0;
      for (const auto& [c, r] : cells) {
        if (r == b.max_row) {
          bx += cell_center(c);
          ++bn;
        }
      }
      b.base = {bx / bn, cell_center(b.max_row)};
      blobs.push_back(b);
    }
  }
  return blobs;
}

std::vector<int> detect_field_boundary(const ClassImage& green, int threshold) {
  std::vector<int> top(static_cast<std::size_t>(green.cols), green.rows);
  for (int c = 0; c < green.cols; ++c) {
    for (int r = 0; r + 1 < green.rows; ++r) {
      if (green.on(c, r, threshold) && green.on(c, r + 1, threshold)) {
        top[c] = r;
        break;
      }
    }
  }
  std::vector<int> out(top.size());
  std::vector<int> window;
  for (int c = 0; c < green.cols; ++c) {
    window.clear();
    for (int k = std::max(0, c - 2); k <= std::min(green.cols - 1, c + 2); ++k) window.push_back(top[k]);
    std::nth_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2),
                     window.end());
    out[c] = window[window.size() / 2];
  }
  return out;
}

std::optional<BallDetection> detect_ball(const ClassImage& ball, const std::vector<int>& boundary,
                                         const LensModel& lens, const VisionParams& params) {
  const auto blobs = find_blobs(ball, params.on_threshold, &boundary);
  const Blob* best = nullptr;
  for (const auto& b : blobs) {
    if (b.area >= params.min_ball_area && (best == nullptr || b.area > best->area)) best = &b;
  }
  if (best == nullptr) return std::nullopt;
  const auto dir = lens.try_direction(best->centroid);
  if (!dir) return std::nullopt;
  return BallDetection{best->centroid, to_bearing(*dir), std::sqrt(best->area / std::numbers::pi),
                       best->area};
}

std::vector<GoalPost> detect_goal(const ClassImage& goal, const std::vector<int>& boundary,
                                  const LensModel& lens, const VisionParams& params) {
  auto blobs = find_blobs(goal, params.on_threshold);
  std::vector<Blob> posts;
  for (const auto& b : blobs) {
    const int width = b.max_col - b.min_col + 1;
    const int height = b.max_row - b.min_row + 1;
    if (height < params.goal_aspect * width) continue;
    bool touches = false;
    for (int c = b.min_col; c <= b.max_col && !touches; ++c) {
      const int line = boundary[static_cast<std::size_t>(c)];
      touches = b.min_row <= line + params.goal_band && b.max_row >= line - params.goal_band;
    }
    if (touches) posts.push_back(b);
  }
  std::stable_sort(posts.begin(), posts.end(), [](const Blob& a, const Blob& b) { return a.area > b.area; });
  if (posts.size() > 2) posts.resize(2);

  std::vector<GoalPost> out;
  for (const auto& b : posts) {
    const auto dir = lens.try_direction(b.centroid);
    const auto base = lens.try_direction(b.base);
    if (!dir || !base) continue;
    out.push_back({b.centroid, to_bearing(*dir), b.base, to_bearing(*base), b.area});
  }
  std::sort(out.begin(), out.end(),
            [](const GoalPost& a, const GoalPost& b) { return a.bearing.azimuth > b.bearing.azimuth; });
  return out;
}

std::vector<Obstacle> detect_obstacles(const ClassImage& obstacle, const std::vector<int>& boundary,
                                       const LensModel& lens, const VisionParams& params) {
  std::vector<Obstacle> out;
  for (const auto& b : find_blobs(obstacle, params.on_threshold, &boundary)) {
    if (b.area < params.min_obstacle_area) continue;
    const auto dir = lens.try_direction(b.centroid);
    if (!dir) continue;
    out.push_back({b.centroid, to_bearing(*dir), b.base, b.area});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Obstacle& a, const Obstacle& b) { return a.area_cells > b.area_cells; });
  return out;
}

Detections run_pipeline(const ClassImages& classes, const LensModel& lens, const VisionParams& params) {
  Detections d;
  d.field_boundary = detect_field_boundary(classes[static_cast<std::size_t>(ColorClass::Field)],
                                           params.on_threshold);
  d.ball = detect_ball(classes[static_cast<std::size_t>(ColorClass::Ball)], d.field_boundary, lens, params);
  d.goal_posts = detect_goal(classes[static_cast<std::size_t>(params.goal_class)], d.field_boundary, lens,
                             params);
  d.obstacles = detect_obstacles(classes[static_cast<std::size_t>(ColorClass::Obstacle)],
                                 d.field_boundary, lens, params);
  auto lines = detect_lines_and_crossings(classes[static_cast<std::size_t>(ColorClass::Line)],
                                          d.field_boundary, params.on_threshold, params.lines);
  d.line_segments = std::move(lines.segments);
  d.crossings = std::move(lines.crossings);
  return d;
}

Detections run_pipeline(const YuyvImage& img, const ColorLUT& lut, const LensModel& lens,
                        const VisionParams& params) {
  return run_pipeline(classify(img, lut), lens, params);
}

namespace {

nlohmann::json pixel_json(Pixel p) { return {{"u", p.u}, {"v", p.v}}; }
nlohmann::json bearing_json(Bearing b) { return {{"azimuth", b.azimuth}, {"elevation", b.elevation}}; }
nlohmann::json point_json(CellPoint p) { return {{"x", p.x}, {"y", p.y}}; }

}  // namespace

nlohmann::json to_json(const Detections& d) {
  nlohmann::json j;
  if (d.ball) {
    j["ball"] = {{"centroid", pixel_json(d.ball->centroid)},
                 {"bearing", bearing_json(d.ball->bearing)},
                 {"radius_cells", d.ball->radius_cells},
                 {"area_cells", d.ball->area_cells}};
  } else {
    j["ball"] = nullptr;
  }
  j["goal_posts"] = nlohmann::json::array();
  for (const auto& g : d.goal_posts) {
    j["goal_posts"].push_back({{"centroid", pixel_json(g.centroid)},
                               {"bearing", bearing_json(g.bearing)},
                               {"base", pixel_json(g.base)},
                               {"base_bearing", bearing_json(g.base_bearing)},
                               {"area_cells", g.area_cells}});
  }
  j["obstacles"] = nlohmann::json::array();
  for (const auto& o : d.obstacles) {
    j["obstacles"].push_back({{"centroid", pixel_json(o.centroid)},
                              {"bearing", bearing_json(o.bearing)},
                              {"base", pixel_json(o.base)},
                              {"area_cells", o.area_cells}});
  }
  j["field_boundary"] = d.field_boundary;
  j["line_segments"] = nlohmann::json::array();
  for (const auto& s : d.line_segments) {
    j["line_segments"].push_back({{"a", point_json(s.a)}, {"b", point_json(s.b)}, {"direction", s.direction}});
  }
  j["crossings"] = nlohmann::json::array();
  for (const auto& c : d.crossings) {
    j["crossings"].push_back({{"position", point_json(c.position)},
                              {"kind", c.kind == CrossingKind::T ? "T" : "X"}});
  }
  return j;
}

}  // namespace nop::vision
