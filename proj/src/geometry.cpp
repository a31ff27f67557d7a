#include "dkff/geometry.hpp"

#include <cmath>
#include <numbers>

#include "dkff/angles.hpp"
#include "dkff/error.hpp"

namespace dkff {

namespace {
constexpr double kDegenerateTol = 1e-12;
constexpr double kCenterTol = 1e-12;
}  // namespace

Pose::Pose(const Vec3& p, double yaw_rad, double pitch_rad)
    : position(p), yaw(wrap_angle(yaw_rad)), pitch(wrap_angle(pitch_rad)) {}

Mat3 Pose::rotation() const {
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  Mat3 r;
  r << cy * cp, -sy, -cy * sp,
       sy * cp,  cy, -sy * sp,
       sp,      0.0,  cp;
  return r;
}

Mat3 rotation_dyaw(const Pose& pose) {
  const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
  const double cp = std::cos(pose.pitch), sp = std::sin(pose.pitch);
  Mat3 r;
  r << -sy * cp, -cy,  sy * sp,
        cy * cp, -sy, -cy * sp,
        0.0,     0.0,  0.0;
  return r;
}

Mat3 rotation_dpitch(const Pose& pose) {
  const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
  const double cp = std::cos(pose.pitch), sp = std::sin(pose.pitch);
  Mat3 r;
  r << -cy * sp, 0.0, -cy * cp,
       -sy * sp, 0.0, -sy * cp,
        cp,      0.0, -sp;
  return r;
}

Vec3 vehicle_to_world(const Pose& pose, const Vec3& p_vehicle) {
  return pose.rotation() * p_vehicle + pose.position;
}

Vec3 world_to_vehicle(const Pose& pose, const Vec3& p_world) {
  return pose.rotation().transpose() * (p_world - pose.position);
}

void CameraModel::validate() const {
  if (!(intrinsics(0, 0) > 0.0) || !(intrinsics(1, 1) > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "camera focal lengths must be positive");
  }
  const double cx = intrinsics(0, 2), cy = intrinsics(1, 2);
  if (width <= 0 || height <= 0 || cx < 0.0 || cx > width || cy < 0.0 || cy > height) {
    throw Error(ErrorKind::kInvalidArgument, "principal point outside image bounds");
  }
}

CameraModel CameraModel::pinhole(double focal_px, int width, int height,
                                 const Pose& mount) {
  CameraModel c;
  c.intrinsics << focal_px, 0.0, 0.5 * width,
                  0.0, focal_px, 0.5 * height,
                  0.0, 0.0, 1.0;
  c.mount = mount;
  c.width = width;
  c.height = height;
  c.validate();
  return c;
}

Mat3 body_to_optical() {
  Mat3 c;
  c << 0.0, -1.0, 0.0,
       0.0, 0.0, -1.0,
       1.0, 0.0, 0.0;
  return c;
}

Mat34 projection_matrix(const CameraModel& camera, const Pose& vehicle) {
  // world -> vehicle -> camera body -> optical
  const Mat3 r_wv = vehicle.rotation();
  const Mat3 r_vc = camera.mount.rotation();
  const Mat3 r = body_to_optical() * r_vc.transpose() * r_wv.transpose();
  const Vec3 t = -body_to_optical() * r_vc.transpose() *
                 (r_wv.transpose() * vehicle.position + camera.mount.position);
  Mat34 rt;
  rt.leftCols<3>() = r;
  rt.col(3) = t;
  return camera.intrinsics * rt;
}

Vec3 world_to_optical(const CameraModel& camera, const Pose& vehicle,
                      const Vec3& p_world) {
  const Vec3 p_vehicle = world_to_vehicle(vehicle, p_world);
  return body_to_optical() *
         (camera.mount.rotation().transpose() * (p_vehicle - camera.mount.position));
}

PluckerLine plucker_from_points(const Vec4& a, const Vec4& b) {
  PluckerLine line;
  line.L = a * b.transpose() - b * a.transpose();
  if (line.L.norm() <= kDegenerateTol * a.norm() * b.norm()) {
    throw Error(ErrorKind::kDegeneratePoints, "points are proportional");
  }
  return line;
}

Vec2 project_point(const Mat34& P, const Vec4& X) {
  const Vec3 x = P * X;
  if (x.norm() <= kCenterTol * P.norm() * X.norm()) {
    throw Error(ErrorKind::kAtCameraCenter, "point coincides with camera center");
  }
  // Depth is positive in front of the camera for P = K [R | t], det(R) > 0.
  const double orientation = P.leftCols<3>().determinant() >= 0.0 ? 1.0 : -1.0;
  const double depth = orientation * x.z() * X.w();
  if (depth <= 0.0) {
    throw Error(ErrorKind::kBehindCamera, "point has non-positive depth");
  }
  return x.head<2>() / x.z();
}

HomogeneousLine2D project_line(const Mat34& P, const PluckerLine& line) {
  const Mat3 m = P * line.L * P.transpose();
  // Degeneracy is judged with the world origin moved to the camera center,
  // so the test does not weaken with distance from the origin.
  Mat4 shift = Mat4::Identity();
  const Eigen::FullPivLU<Mat3> lu(P.leftCols<3>());
  if (lu.isInvertible()) shift.topRightCorner<3, 1>() = -lu.solve(P.col(3));
  const Mat34 pc = P * shift;
  const Mat4 inv = shift.inverse();
  const Mat4 lc = inv * line.L * inv.transpose();
  if (m.norm() <= 1e-10 * pc.squaredNorm() * lc.norm()) {
    throw Error(ErrorKind::kThroughCameraCenter, "line passes through camera center");
  }
  return HomogeneousLine2D{Vec3(m(2, 1), m(0, 2), m(1, 0))};
}

HesseLine line_to_hesse(const HomogeneousLine2D& line) {
  const Vec3& l = line.l;
  const double n = std::hypot(l.x(), l.y());
  if (n <= 1e-300 || n <= 1e-15 * std::abs(l.z())) {
    throw Error(ErrorKind::kLineAtInfinity, "line has no finite normal");
  }
  double a = l.x() / n, b = l.y() / n;
  const double c = l.z() / n;
  // a x + b y + c = 0  ->  x cos g + y sin g - rho = 0 with rho = -c >= 0
  if (c > 0.0) {
    a = -a;
    b = -b;
  } else if (c == 0.0 && (a < 0.0 || (a == 0.0 && b < 0.0))) {
    a = -a;
    b = -b;
  }
  return HesseLine{std::atan2(b, a), std::abs(c)};
}

Vec2 hesse_residual(const HesseLine& measured, const HesseLine& predicted) {
  return Vec2(measured.rho - predicted.rho,
              wrap_angle(measured.gamma - predicted.gamma));
}

double hesse_distance(const HesseLine& line, const Vec2& x) {
  return x.x() * std::cos(line.gamma) + x.y() * std::sin(line.gamma) - line.rho;
}

}  // namespace dkff
