#pragma once

// Frames, pinhole projection and projective line algebra.
//
// World frame is right-handed with z up. The vehicle frame has x forward,
// y left, z up. Camera optical frames have z along the optical axis, x right
// and y down, so pixel coordinates grow right and down from the top-left
// image corner.

#include <Eigen/Dense>

namespace dkff {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

/// Vehicle (or sensor) pose. Roll is always zero. Positive pitch lifts the
/// nose, so a vehicle climbing a slope has pitch > 0.
struct Pose {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
  double pitch = 0.0;

  Pose() = default;
  Pose(const Vec3& p, double yaw_rad, double pitch_rad);

  /// Rotation taking body-frame vectors to the parent frame:
  /// Rz(yaw) * Ry(-pitch) in right-hand elementary rotations.
  Mat3 rotation() const;
};

/// d(rotation)/d(yaw) and d(rotation)/d(pitch).
Mat3 rotation_dyaw(const Pose& pose);
Mat3 rotation_dpitch(const Pose& pose);

Vec3 vehicle_to_world(const Pose& pose, const Vec3& p_vehicle);
Vec3 world_to_vehicle(const Pose& pose, const Vec3& p_world);

struct CameraModel {
  Mat3 intrinsics = Mat3::Identity();
  /// Camera body frame (x forward, y left, z up) expressed in the vehicle frame.
  Pose mount;
  int width = 0;
  int height = 0;

  /// Throws kInvalidArgument when focal lengths are not positive or the
  /// principal point lies outside the image.
  void validate() const;

  static CameraModel pinhole(double focal_px, int width, int height,
                             const Pose& mount);
};

/// Rotation from camera body axes (x fwd, y left, z up) to optical axes.
Mat3 body_to_optical();

/// 3x4 projection K [R | t] mapping homogeneous world points to pixels for a
/// camera mounted on a vehicle at `vehicle`.
Mat34 projection_matrix(const CameraModel& camera, const Pose& vehicle);

/// Point expressed in the camera's optical frame.
Vec3 world_to_optical(const CameraModel& camera, const Pose& vehicle,
                      const Vec3& p_world);

struct PluckerLine {
  Mat4 L = Mat4::Zero();
};

/// Line in Hesse normal form: x cos(gamma) + y sin(gamma) - rho = 0.
struct HesseLine {
  double gamma = 0.0;
  double rho = 0.0;
};

/// Homogeneous image line l1 x + l2 y + l3 = 0, defined up to scale.
struct HomogeneousLine2D {
  Vec3 l = Vec3::Zero();
};

/// L = A B^T - B A^T. Throws kDegeneratePoints for proportional inputs.
PluckerLine plucker_from_points(const Vec4& a, const Vec4& b);

/// Dehomogenized P X. Throws kAtCameraCenter or kBehindCamera.
Vec2 project_point(const Mat34& P, const Vec4& X);

/// Image of a 3D line, read off [l]x = P L P^T. Throws kThroughCameraCenter.
HomogeneousLine2D project_line(const Mat34& P, const PluckerLine& line);

/// Canonical Hesse parameters: rho >= 0, and gamma in (-pi/2, pi/2] when the
/// line passes through the origin. Throws kLineAtInfinity.
HesseLine line_to_hesse(const HomogeneousLine2D& line);

/// (d_rho, d_gamma) with d_gamma wrapped to (-pi, pi].
Vec2 hesse_residual(const HesseLine& measured, const HesseLine& predicted);

/// Signed distance of pixel `x` from the line (positive on the far side of
/// the origin).
double hesse_distance(const HesseLine& line, const Vec2& x);

}  // namespace dkff
