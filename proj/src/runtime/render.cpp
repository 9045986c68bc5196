#include "nop/runtime/render.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace nop::runtime {

using Eigen::Vector3d;
using Eigen::Vector3f;

vision::Yuv RenderPalette::of(Material m) const {
  switch (m) {
    case Material::Background: return background;
    case Material::Field: return field;
    case Material::Line: return line;
    case Material::Ball: return ball;
    case Material::Goal: return goal;
    case Material::Obstacle: return obstacle;
  }
  return background;
}

CameraPlacement place_camera(const Pose2& robot, double height, double roll, double pitch, double neck_yaw,
                             double neck_pitch) {
  const Eigen::Matrix3d body = (Eigen::AngleAxisd(robot.theta, Vector3d::UnitZ()) *
                                Eigen::AngleAxisd(pitch, Vector3d::UnitY()) *
                                Eigen::AngleAxisd(roll, Vector3d::UnitX()))
                                   .toRotationMatrix();
  CameraPlacement cam;
  cam.position = Vector3d(robot.x, robot.y, 0.0) + body * Vector3d(0.0, 0.0, height);
  // A lying robot still holds its head a little above the carpet.
  cam.position.z() = std::max(cam.position.z(), 0.05);
  cam.rotation = body * (Eigen::AngleAxisd(neck_yaw, Vector3d::UnitZ()) *
                         Eigen::AngleAxisd(neck_pitch, Vector3d::UnitY()))
                            .toRotationMatrix();
  return cam;
}

Renderer::Renderer(const vision::LensModel& lens, int width, int height) : lens_(lens), w_(width), h_(height) {
  rays_.resize(static_cast<std::size_t>(w_) * h_, Vector3f::Zero());
  for (int v = 0; v < h_; ++v) {
    for (int u = 0; u < w_; ++u) {
      if (const auto d = lens_.try_direction({double(u), double(v)})) {
        rays_[static_cast<std::size_t>(v) * w_ + u] = d->cast<float>();
      }
    }
  }
}

Renderer::Box Renderer::project_box(const std::vector<Vector3d>& pts, const CameraPlacement& cam) const {
  const Box full{0, w_ - 1, 0, h_ - 1};
  double u0 = std::numeric_limits<double>::infinity(), u1 = -u0, v0 = u0, v1 = -u0;
  for (const auto& p : pts) {
    const Vector3d c = cam.rotation.transpose() * (p - cam.position);
    if (c.norm() < 1e-6) return full;
    // Rays far behind the lens wrap around the image; fall back to the whole frame.
    if (std::acos(std::clamp(c.x() / c.norm(), -1.0, 1.0)) > 2.6) return full;
    const auto px = lens_.project(c);
    u0 = std::min(u0, px.u);
    u1 = std::max(u1, px.u);
    v0 = std::min(v0, px.v);
    v1 = std::max(v1, px.v);
  }
  Box b{static_cast<int>(std::floor(u0)) - 3, static_cast<int>(std::ceil(u1)) + 3,
        static_cast<int>(std::floor(v0)) - 3, static_cast<int>(std::ceil(v1)) + 3};
  b.u0 = std::max(b.u0, 0);
  b.v0 = std::max(b.v0, 0);
  b.u1 = std::min(b.u1, w_ - 1);
  b.v1 = std::min(b.v1, h_ - 1);
  return b;
}

std::vector<Material> Renderer::materials(const WorldState& world, const FieldGeometry& field,
                                          const CameraPlacement& cam) const {
  const std::size_t n = rays_.size();
  std::vector<Material> mat(n, Material::Background);
  std::vector<float> depth(n, std::numeric_limits<float>::infinity());
  const Eigen::Matrix3f rot = cam.rotation.cast<float>();
  const Vector3f o = cam.position.cast<float>();

  // Ground plane.
  for (std::size_t i = 0; i < n; ++i) {
    const Vector3f& ray = rays_[i];
    if (ray.isZero()) continue;
    const Vector3f d = rot * ray;
    if (d.z() >= -1e-6f) continue;
    const float t = -o.z() / d.z();
    const double x = o.x() + t * d.x(), y = o.y() + t * d.y();
    if (!field.on_carpet(x, y)) continue;
    depth[i] = t;
    mat[i] = field.on_line(x, y) ? Material::Line : Material::Field;
  }

  const auto paint = [&](const Box& box, Material m, auto&& hit) {
    for (int v = box.v0; v <= box.v1; ++v) {
      for (int u = box.u0; u <= box.u1; ++u) {
        const std::size_t i = static_cast<std::size_t>(v) * w_ + u;
        if (rays_[i].isZero()) continue;
        const Vector3f d = rot * rays_[i];
        const float t = hit(d);
        if (t > 0.0f && t < depth[i]) {
          depth[i] = t;
          mat[i] = m;
        }
      }
    }
  };

  // Vertical cylinders standing on the ground.
  const auto cylinder = [&](double cx, double cy, double radius, double height, Material m) {
    std::vector<Vector3d> pts;
    for (int k = 0; k <= 4; ++k) {
      for (int a = 0; a < 8; ++a) {
        const double ang = a * std::numbers::pi / 4;
        pts.emplace_back(cx + 1.5 * radius * std::cos(ang), cy + 1.5 * radius * std::sin(ang), height * k / 4);
      }
    }
    const float px = static_cast<float>(cx), py = static_cast<float>(cy);
    const float r2 = static_cast<float>(radius * radius), h = static_cast<float>(height);
    const float ox = o.x() - px, oy = o.y() - py;
    if (ox * ox + oy * oy <= r2) return;
    paint(project_box(pts, cam), m, [&](const Vector3f& d) {
      const float a = d.x() * d.x() + d.y() * d.y();
      if (a < 1e-12f) return -1.0f;
      const float b = ox * d.x() + oy * d.y();
      const float c = ox * ox + oy * oy - r2;
      const float disc = b * b - a * c;
      if (disc < 0.0f) return -1.0f;
      const float t = (-b - std::sqrt(disc)) / a;
      const float z = o.z() + t * d.z();
      return (z >= 0.0f && z <= h) ? t : -1.0f;
    });
  };

  for (const auto& [x, y] : field.post_positions()) cylinder(x, y, field.post_radius, field.post_height, Material::Goal);
  for (const auto& ob : world.obstacles) cylinder(ob.x, ob.y, ob.radius, ob.height, Material::Obstacle);

  if (world.ball.present) {
    const double r = field.ball_radius;
    const Vector3d c(world.ball.x, world.ball.y, r);
    std::vector<Vector3d> pts{c};
    for (int a = 0; a < 3; ++a) {
      Vector3d e = Vector3d::Zero();
      e[a] = 1.6 * r;
      pts.push_back(c + e);
      pts.push_back(c - e);
    }
    const Vector3f oc = o - c.cast<float>();
    const float cc = oc.squaredNorm() - static_cast<float>(r * r);
    if (cc > 0.0f) {
      paint(project_box(pts, cam), Material::Ball, [&](const Vector3f& d) {
        const float b = oc.dot(d);
        const float disc = b * b - cc;
        return disc < 0.0f ? -1.0f : -b - std::sqrt(disc);
      });
    }
  }
  return mat;
}

vision::YuyvImage Renderer::render(const WorldState& world, const FieldGeometry& field, const CameraPlacement& cam,
                                   const RenderPalette& palette) const {
  const auto mat = materials(world, field, cam);
  vision::YuyvImage img(w_, h_);
  for (int v = 0; v < h_; ++v) {
    for (int u = 0; u < w_; u += 2) {
      const std::size_t i = static_cast<std::size_t>(v) * w_ + u;
      img.set_pair(u, v, palette.of(mat[i]), palette.of(mat[i + 1]));
    }
  }
  return img;
}

vision::RgbImage class_overlay(const vision::YuyvImage& img, const vision::ColorLUT& lut) {
  using vision::ColorClass;
  static const vision::Rgb colors[vision::kNumClasses] = {
      {40, 40, 40}, {255, 128, 0}, {0, 160, 0}, {255, 255, 255}, {255, 230, 0}, {90, 0, 140}};
  vision::RgbImage out{img.width(), img.height(), {}};
  out.pixels.resize(static_cast<std::size_t>(img.width()) * img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out.at(x, y) = colors[static_cast<int>(lut.lookup(img.pixel(x, y)))];
    }
  }
  return out;
}

}  // namespace nop::runtime
