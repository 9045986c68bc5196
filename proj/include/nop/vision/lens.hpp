#pragma once

#include <optional>
#include <stdexcept>

#include <Eigen/Core>

namespace nop::vision {

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// Polar ray description: theta from the optical axis, phi around it (0 = right, +pi/2 = up).
struct PolarRay {
  double theta = 0.0;
  double phi = 0.0;
};

/// Camera-frame bearing: x along the optical axis, y left, z up.
struct Bearing {
  double azimuth = 0.0;
  double elevation = 0.0;
};

class OutOfModel : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Equidistant fisheye with an odd radial polynomial: theta = s(1 + k1 s^2 + k2 s^4), s = r/f.
struct LensModel {
  double cx = 400.0;
  double cy = 300.0;
  double f = 254.65;
  double k1 = 0.0;
  double k2 = 0.0;

  /// Throws OutOfModel when theta exceeds pi.
  PolarRay undistort(Pixel p) const;
  std::optional<PolarRay> try_undistort(Pixel p) const;

  /// Unit direction in the camera frame.
  Eigen::Vector3d direction(Pixel p) const;
  std::optional<Eigen::Vector3d> try_direction(Pixel p) const;

  /// Inverse mapping used by the renderer. `d` need not be normalized.
  Pixel project(const Eigen::Vector3d& d) const;

  Bearing bearing(Pixel p) const;
};

Eigen::Vector3d ray_direction(PolarRay r);
Bearing to_bearing(const Eigen::Vector3d& d);

}  // namespace nop::vision
