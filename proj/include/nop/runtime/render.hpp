#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "nop/runtime/world.hpp"
#include "nop/vision/color_lut.hpp"
#include "nop/vision/image.hpp"
#include "nop/vision/lens.hpp"

namespace nop::runtime {

enum class Material : std::uint8_t { Background, Field, Line, Ball, Goal, Obstacle };

/// Fixed YUV value per material; the goal color follows /vision/goal_class_hue.
struct RenderPalette {
  vision::Yuv background = vision::palette::kGray;
  vision::Yuv field = vision::palette::kGreen;
  vision::Yuv line = vision::palette::kWhite;
  vision::Yuv ball = vision::palette::kOrange;
  vision::Yuv goal = vision::palette::kYellow;
  vision::Yuv obstacle = vision::palette::kBlack;

  vision::Yuv of(Material m) const;
};

/// World-from-camera transform. Camera axes: x optical, y left, z up.
struct CameraPlacement {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
};

/// Camera on top of a body that pivots about its feet: R = Rz(theta) Ry(pitch) Rx(roll) Rz(neck_yaw) Ry(neck_pitch).
CameraPlacement place_camera(const Pose2& robot, double height, double roll, double pitch, double neck_yaw,
                             double neck_pitch);

/// Ray-casting fisheye renderer. Pixel rays come from the lens model's undistortion and are
/// computed once per lens.
class Renderer {
public:
  explicit Renderer(const vision::LensModel& lens, int width = vision::kImageWidth,
                    int height = vision::kImageHeight);

  std::vector<Material> materials(const WorldState& world, const FieldGeometry& field,
                                  const CameraPlacement& cam) const;
  vision::YuyvImage render(const WorldState& world, const FieldGeometry& field, const CameraPlacement& cam,
                           const RenderPalette& palette = {}) const;

  const vision::LensModel& lens() const { return lens_; }
  int width() const { return w_; }
  int height() const { return h_; }

private:
  struct Box {
    int u0, u1, v0, v1;
  };
  Box project_box(const std::vector<Eigen::Vector3d>& world_points, const CameraPlacement& cam) const;

  vision::LensModel lens_;
  int w_;
  int h_;
  std::vector<Eigen::Vector3f> rays_;  // camera frame; zero when outside the model
};

/// Class colors for the overlay image served to the dashboard.
vision::RgbImage class_overlay(const vision::YuyvImage& img, const vision::ColorLUT& lut);

}  // namespace nop::runtime
