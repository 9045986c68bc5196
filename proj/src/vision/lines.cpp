#include "nop/vision/lines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

namespace nop::vision {

namespace {

// Neighbor order P2..P9: N, NE, E, SE, S, SW, W, NW.
constexpr std::array<int, 8> kDx{0, 1, 1, 1, 0, -1, -1, -1};
constexpr std::array<int, 8> kDy{-1, -1, 0, 1, 1, 1, 0, -1};

struct Neighborhood {
  std::array<bool, 8> p{};
  int count = 0;
  int transitions = 0;
};

Neighborhood neighborhood(const Mask& m, int c, int r) {
  Neighborhood n;
  for (int i = 0; i < 8; ++i) {
    n.p[i] = m.get(c + kDx[i], r + kDy[i]);
    n.count += n.p[i];
  }
  for (int i = 0; i < 8; ++i) n.transitions += !n.p[i] && n.p[(i + 1) % 8];
  return n;
}

struct Point {
  int x = 0;
  int y = 0;
};

struct Edge {
  int from = -1;  // junction id or -1 for a free end
  int to = -1;
  std::vector<Point> path;
  bool removed = false;
};

struct Fit {
  CellPoint centroid;
  double angle = 0.0;  // [0, pi)
};

Fit tls_fit(const std::vector<Point>& pts) {
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& p : pts) {
    sxx += (p.x - mx) * (p.x - mx);
    syy += (p.y - my) * (p.y - my);
    sxy += (p.x - mx) * (p.y - my);
  }
  double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  if (angle < 0.0) angle += std::numbers::pi;
  if (angle >= std::numbers::pi) angle -= std::numbers::pi;
  return {{mx, my}, angle};
}

struct Segment {
  std::vector<Point> points;
  LineSegment line;
};

LineSegment fit_segment(const std::vector<Point>& pts) {
  const Fit fit = tls_fit(pts);
  const double dx = std::cos(fit.angle), dy = std::sin(fit.angle);
  double tmin = 0.0, tmax = 0.0;
  bool first = true;
  for (const auto& p : pts) {
    const double t = (p.x - fit.centroid.x) * dx + (p.y - fit.centroid.y) * dy;
    if (first || t < tmin) tmin = t;
    if (first || t > tmax) tmax = t;
    first = false;
  }
  return {{fit.centroid.x + tmin * dx, fit.centroid.y + tmin * dy},
          {fit.centroid.x + tmax * dx, fit.centroid.y + tmax * dy},
          fit.angle};
}

double chord_distance(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len = std::hypot(dx, dy);
  if (len == 0.0) return std::hypot(p.x - a.x, p.y - a.y);
  return std::abs(dy * (p.x - a.x) - dx * (p.y - a.y)) / len;
}

void split_path(const std::vector<Point>& path, std::size_t lo, std::size_t hi,
                const LineParams& params, std::vector<std::pair<std::size_t, std::size_t>>& out) {
  double worst = 0.0;
  std::size_t at = lo;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    const double d = chord_distance(path[i], path[lo], path[hi]);
    if (d > worst) {
      worst = d;
      at = i;
    }
  }
  if (worst > params.split_tolerance && at > lo && at < hi) {
    split_path(path, lo, at, params, out);
    split_path(path, at, hi, params, out);
  } else {
    out.emplace_back(lo, hi);
  }
}

double angle_difference(double a, double b) {
  double d = std::abs(a - b);
  return std::min(d, std::numbers::pi - d);
}

double endpoint_gap(const LineSegment& s, const LineSegment& t) {
  auto dist = [](CellPoint p, CellPoint q) { return std::hypot(p.x - q.x, p.y - q.y); };
  return std::min({dist(s.a, t.a), dist(s.a, t.b), dist(s.b, t.a), dist(s.b, t.b)});
}

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

}  // namespace

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

double LineSegment::length() const { return std::hypot(b.x - a.x, b.y - a.y); }

Mask thin(Mask m) {
  std::vector<std::size_t> doomed;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      doomed.clear();
      for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
          if (!m.get(c, r)) continue;
          const auto n = neighborhood(m, c, r);
          if (n.count < 2 || n.count > 6 || n.transitions != 1) continue;
          const auto& p = n.p;  // p[0]=P2 ... p[7]=P9
          const bool ok = pass == 0 ? (!(p[0] && p[2] && p[4]) && !(p[2] && p[4] && p[6]))
                                    : (!(p[0] && p[2] && p[6]) && !(p[0] && p[4] && p[6]));
          if (ok) doomed.push_back(static_cast<std::size_t>(r) * m.cols + c);
        }
      }
      for (auto i : doomed) m.bits[i] = 0;
      changed = changed || !doomed.empty();
    }
  }
  return m;
}

LineResult detect_lines(const Mask& mask, const LineParams& params) {
  LineResult result;
  const Mask skel = thin(mask);
  const int cols = skel.cols;
  const int rows = skel.rows;
  auto idx = [cols](int c, int r) { return static_cast<std::size_t>(r) * cols + c; };

  // Junction candidates, clustered within Chebyshev radius 2.
  std::vector<Point> candidates;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!skel.get(c, r)) continue;
      const auto n = neighborhood(skel, c, r);
      if (n.transitions >= 3 || n.count >= 4) candidates.push_back({c, r});
    }
  }
  std::vector<int> parent(candidates.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t j = i + 1; j < candidates.size(); ++j) {
      if (std::abs(candidates[i].x - candidates[j].x) <= 2 &&
          std::abs(candidates[i].y - candidates[j].y) <= 2) {
        parent[find_root(parent, static_cast<int>(j))] = find_root(parent, static_cast<int>(i));
      }
    }
  }
  struct Box {
    int x0, y0, x1, y1;
  };
  std::vector<int> cluster_of(candidates.size(), -1);
  std::vector<Box> boxes;
  {
    std::vector<int> root_cluster(candidates.size(), -1);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const int root = find_root(parent, static_cast<int>(i));
      if (root_cluster[root] < 0) {
        root_cluster[root] = static_cast<int>(boxes.size());
        boxes.push_back({candidates[i].x, candidates[i].y, candidates[i].x, candidates[i].y});
      }
      auto& b = boxes[root_cluster[root]];
      b.x0 = std::min(b.x0, candidates[i].x);
      b.y0 = std::min(b.y0, candidates[i].y);
      b.x1 = std::max(b.x1, candidates[i].x);
      b.y1 = std::max(b.y1, candidates[i].y);
      cluster_of[i] = root_cluster[root];
    }
  }
  std::vector<int> region(static_cast<std::size_t>(cols) * rows, -1);
  std::vector<std::vector<Point>> region_pixels(boxes.size());
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    for (int r = boxes[k].y0; r <= boxes[k].y1; ++r) {
      for (int c = boxes[k].x0; c <= boxes[k].x1; ++c) {
        if (skel.get(c, r) && region[idx(c, r)] < 0) {
          region[idx(c, r)] = static_cast<int>(k);
          region_pixels[k].push_back({c, r});
        }
      }
    }
  }

  // Trace skeleton paths between junction regions and free ends.
  std::vector<std::uint8_t> visited(region.size(), 0);
  std::vector<Edge> edges;
  auto walk = [&](Point start, int from) {
    Edge e;
    e.from = from;
    e.path.push_back(start);
    visited[idx(start.x, start.y)] = 1;
    Point cur = start;
    for (;;) {
      int hit = -1;
      for (int i = 0; i < 8 && hit < 0; ++i) {
        const int c = cur.x + kDx[i], r = cur.y + kDy[i];
        if (!skel.get(c, r)) continue;
        const int reg = region[idx(c, r)];
        if (reg >= 0 && (reg != from || e.path.size() > 2)) hit = reg;
      }
      if (hit >= 0) {
        e.to = hit;
        break;
      }
      // Prefer 4-neighbors, and near the start prefer cells that lead away from the junction,
      // so a walk does not fold back into a pocket beside the region it left.
      auto touches_origin = [&](int c, int r) {
        for (int j = 0; j < 8; ++j) {
          if (skel.get(c + kDx[j], r + kDy[j]) && region[idx(c + kDx[j], r + kDy[j])] == from) return true;
        }
        return false;
      };
      int next = -1;
      for (int pass = 0; pass < 4 && next < 0; ++pass) {
        const bool allow_origin = pass >= 2 || from < 0 || e.path.size() > 2;
        for (int i = pass % 2; i < 8; i += 2) {  // even offsets are the 4-neighbors
          const int c = cur.x + kDx[i], r = cur.y + kDy[i];
          if (skel.get(c, r) && region[idx(c, r)] < 0 && !visited[idx(c, r)] &&
              (allow_origin || !touches_origin(c, r))) {
            next = i;
            break;
          }
        }
      }
      if (next < 0) break;
      cur = {cur.x + kDx[next], cur.y + kDy[next]};
      visited[idx(cur.x, cur.y)] = 1;
      e.path.push_back(cur);
    }
    edges.push_back(std::move(e));
  };

  for (std::size_t k = 0; k < region_pixels.size(); ++k) {
    for (const auto& p : region_pixels[k]) {
      for (int i = 0; i < 8; ++i) {
        const int c = p.x + kDx[i], r = p.y + kDy[i];
        if (skel.get(c, r) && region[idx(c, r)] < 0 && !visited[idx(c, r)]) {
          walk({c, r}, static_cast<int>(k));
        }
      }
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        if (!skel.get(c, r) || region[idx(c, r)] >= 0 || visited[idx(c, r)]) continue;
        // Endpoints first so open paths are traced end to end; leftovers are loops.
        if (pass == 0 && neighborhood(skel, c, r).count != 1) continue;
        walk({c, r}, -1);
      }
    }
  }

  // Prune short spurs hanging off junctions and tiny self loops.
  for (auto& e : edges) {
    const int len = static_cast<int>(e.path.size());
    const bool spur = (e.from >= 0) != (e.to >= 0) && len < params.spur_length;
    const bool tiny_loop = e.from >= 0 && e.from == e.to && len < params.spur_length;
    if (spur || tiny_loop) e.removed = true;
  }

  // Contract short bridges between junctions into a single node.
  std::vector<int> node_parent(boxes.size());
  std::iota(node_parent.begin(), node_parent.end(), 0);
  for (auto& e : edges) {
    if (e.removed || e.from < 0 || e.to < 0 || e.from == e.to) continue;
    if (static_cast<int>(e.path.size()) <= params.bridge_length) {
      node_parent[find_root(node_parent, e.to)] = find_root(node_parent, e.from);
      e.removed = true;
    }
  }
  std::vector<int> degree(boxes.size(), 0);
  for (const auto& e : edges) {
    if (e.removed) continue;
    if (e.from >= 0) ++degree[find_root(node_parent, e.from)];
    if (e.to >= 0) ++degree[find_root(node_parent, e.to)];
  }
  std::vector<double> sx(boxes.size(), 0.0), sy(boxes.size(), 0.0), sn(boxes.size(), 0.0);
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    const int root = find_root(node_parent, static_cast<int>(k));
    for (const auto& p : region_pixels[k]) {
      sx[root] += p.x;
      sy[root] += p.y;
      sn[root] += 1.0;
    }
  }
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    if (find_root(node_parent, static_cast<int>(k)) != static_cast<int>(k)) continue;
    if (degree[k] == 3 || degree[k] == 4) {
      result.crossings.push_back({{sx[k] / sn[k], sy[k] / sn[k]},
                                  degree[k] == 3 ? CrossingKind::T : CrossingKind::X});
    }
  }

  // Polyline splitting and total-least-squares fits.
  std::vector<Segment> segs;
  for (const auto& e : edges) {
    if (e.removed || static_cast<int>(e.path.size()) < params.min_segment_points) continue;
    std::vector<std::pair<std::size_t, std::size_t>> pieces;
    split_path(e.path, 0, e.path.size() - 1, params, pieces);
    for (const auto& [lo, hi] : pieces) {
      if (static_cast<int>(hi - lo + 1) < params.min_segment_points) continue;
      std::vector<Point> pts(e.path.begin() + static_cast<std::ptrdiff_t>(lo),
                             e.path.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
      LineSegment line = fit_segment(pts);
      segs.push_back({std::move(pts), line});
    }
  }

  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < segs.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < segs.size() && !merged; ++j) {
        if (angle_difference(segs[i].line.direction, segs[j].line.direction) < params.merge_angle_rad &&
            endpoint_gap(segs[i].line, segs[j].line) < params.merge_gap_cells) {
          segs[i].points.insert(segs[i].points.end(), segs[j].points.begin(), segs[j].points.end());
          segs[i].line = fit_segment(segs[i].points);
          segs.erase(segs.begin() + static_cast<std::ptrdiff_t>(j));
          merged = true;
        }
      }
    }
  }
  for (const auto& s : segs) result.segments.push_back(s.line);
  return result;
}

LineResult detect_lines_and_crossings(const ClassImage& white, const std::vector<int>& boundary,
                                      int threshold, const LineParams& params) {
  Mask mask(white.cols, white.rows);
  for (int r = 0; r < white.rows; ++r) {
    for (int c = 0; c < white.cols; ++c) {
      const int top = c < static_cast<int>(boundary.size()) ? boundary[c] : 0;
      if (r >= top && white.on(c, r, threshold)) mask.set(c, r);
    }
  }
  return detect_lines(mask, params);
}

}  // namespace nop::vision
