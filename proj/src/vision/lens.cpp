#include "nop/vision/lens.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nop/errors.hpp"

namespace nop::vision {

namespace {

double theta_of(const LensModel& lens, double s) {
  const double s2 = s * s;
  return s * (1.0 + lens.k1 * s2 + lens.k2 * s2 * s2);
}

}  // namespace

std::optional<PolarRay> LensModel::try_undistort(Pixel p) const {
  const double du = p.u - cx;
  const double dv = p.v - cy;
  const double theta = theta_of(*this, std::hypot(du, dv) / f);
  if (!(theta <= std::numbers::pi)) return std::nullopt;
  return PolarRay{theta, std::atan2(-dv, du)};
}

PolarRay LensModel::undistort(Pixel p) const {
  if (!(f > 0.0)) throw DomainError("lens focal length must be > 0");
  auto r = try_undistort(p);
  if (!r) throw OutOfModel("pixel maps beyond theta = pi");
  return *r;
}

Eigen::Vector3d ray_direction(PolarRay r) {
  const double st = std::sin(r.theta);
  return {std::cos(r.theta), -st * std::cos(r.phi), st * std::sin(r.phi)};
}

Bearing to_bearing(const Eigen::Vector3d& d) {
  return {std::atan2(d.y(), d.x()), std::atan2(d.z(), std::hypot(d.x(), d.y()))};
}

Eigen::Vector3d LensModel::direction(Pixel p) const { return ray_direction(undistort(p)); }

std::optional<Eigen::Vector3d> LensModel::try_direction(Pixel p) const {
  const auto r = try_undistort(p);
  if (!r) return std::nullopt;
  return ray_direction(*r);
}

Bearing LensModel::bearing(Pixel p) const { return to_bearing(direction(p)); }

Pixel LensModel::project(const Eigen::Vector3d& d) const {
  const double n = d.norm();
  const double theta = std::acos(std::clamp(d.x() / n, -1.0, 1.0));
  const double phi = std::atan2(d.z(), -d.y());

  // Solve theta_of(s) = theta; the polynomial is the identity when k1 = k2 = 0.
  double s = theta;
  if (k1 != 0.0 || k2 != 0.0) {
    for (int i = 0; i < 20; ++i) {
      const double s2 = s * s;
      const double g = theta_of(*this, s) - theta;
      const double dg = 1.0 + 3.0 * k1 * s2 + 5.0 * k2 * s2 * s2;
      const double step = g / dg;
      s -= step;
      if (std::abs(step) < 1e-14) break;
    }
  }
  const double r = s * f;
  return {cx + r * std::cos(phi), cy - r * std::sin(phi)};
}

}  // namespace nop::vision
