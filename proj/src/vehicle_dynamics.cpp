#include "dkff/vehicle_dynamics.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

#include "dkff/angles.hpp"
#include "dkff/error.hpp"

namespace dkff {

const char* to_string(Variant v) { return v == Variant::kPlanar ? "2d" : "3d"; }

Variant parse_variant(const char* text) {
  if (std::strcmp(text, "2d") == 0) return Variant::kPlanar;
  if (std::strcmp(text, "3d") == 0) return Variant::kSpatial;
  throw Error(ErrorKind::kInvalidArgument, std::string("unknown variant '") + text + "'");
}

void VehicleParams::validate() const {
  if (!(wheelbase > 0.0)) throw Error(ErrorKind::kInvalidArgument, "wheelbase must be > 0");
  if (!(preview_distance > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "preview distance must be > 0");
  }
}

namespace {

void check_steering(double steer) {
  if (!(std::abs(steer) < 0.5 * std::numbers::pi)) {
    throw Error(ErrorKind::kSteeringSingularity, "|steer| must be < pi/2");
  }
}

}  // namespace

double speed(const State2D& s) { return std::hypot(s(2), s(3)); }

double speed(const State3D& s) { return s.segment<3>(3).norm(); }

double speed(Variant variant, const Eigen::VectorXd& s) {
  const auto& l = layout(variant);
  if (variant == Variant::kPlanar) return std::hypot(s(l.vx), s(l.vy));
  return s.segment<3>(l.vx).norm();
}

State2D derivative_2d(const State2D& s, const VehicleParams& p) {
  check_steering(s(6));
  const double v = speed(s);
  State2D d = State2D::Zero();
  d(0) = s(2);
  d(1) = s(3);
  d(4) = v / p.wheelbase * std::tan(s(6));
  return d;
}

State3D derivative_3d(const State3D& s, const VehicleParams& p) {
  check_steering(s(10));
  const double v = speed(s);
  const double pitch = s(8), c0 = s(11), c1 = s(12);
  State3D d = State3D::Zero();
  d(0) = s(3);
  d(1) = s(4);
  d(2) = v * std::sin(pitch);
  d(5) = v * v * c0 * std::cos(pitch);
  d(6) = v / p.wheelbase * std::tan(s(10));
  d(8) = c0 * v;
  d(11) = c1 * v;
  return d;
}

Jacobian2D jacobian_2d(const State2D& s, const VehicleParams& p) {
  check_steering(s(6));
  const double v = speed(s);
  const double L = p.wheelbase;
  const double tan_phi = std::tan(s(6));
  const double cos_phi = std::cos(s(6));
  Jacobian2D j = Jacobian2D::Zero();
  j(0, 2) = 1.0;
  j(1, 3) = 1.0;
  if (v >= kMinSpeed) {
    j(4, 2) = s(2) / (v * L) * tan_phi;
    j(4, 3) = s(3) / (v * L) * tan_phi;
  }
  j(4, 6) = v / L / (cos_phi * cos_phi);
  return j;
}

Jacobian3D jacobian_3d(const State3D& s, const VehicleParams& p) {
  check_steering(s(10));
  const Eigen::Vector3d vel = s.segment<3>(3);
  const double v = vel.norm();
  const double L = p.wheelbase;
  const double pitch = s(8), c0 = s(11), c1 = s(12);
  const double sp = std::sin(pitch), cp = std::cos(pitch);
  const double tan_phi = std::tan(s(10));
  const double cos_phi = std::cos(s(10));
  const Eigen::RowVector3d u =
      v >= kMinSpeed ? Eigen::RowVector3d(vel.transpose() / v) : Eigen::RowVector3d::Zero();

  Jacobian3D j = Jacobian3D::Zero();
  j(0, 3) = 1.0;
  j(1, 4) = 1.0;
  // z' = v sin(pitch)
  j.block<1, 3>(2, 3) = sp * u;
  j(2, 8) = v * cp;
  // vz' = v^2 c0 cos(pitch)
  j.block<1, 3>(5, 3) = 2.0 * c0 * cp * vel.transpose();
  j(5, 8) = -v * v * c0 * sp;
  j(5, 11) = v * v * cp;
  // yaw' = v / L tan(steer)
  j.block<1, 3>(6, 3) = tan_phi / L * u;
  j(6, 10) = v / L / (cos_phi * cos_phi);
  // pitch' = c0 v
  j.block<1, 3>(8, 3) = c0 * u;
  j(8, 11) = v;
  // c0' = c1 v
  j.block<1, 3>(11, 3) = c1 * u;
  j(11, 12) = v;
  return j;
}

Eigen::VectorXd derivative(Variant variant, const Eigen::VectorXd& s,
                           const VehicleParams& p) {
  if (variant == Variant::kPlanar) return derivative_2d(State2D(s), p);
  return derivative_3d(State3D(s), p);
}

Eigen::MatrixXd jacobian(Variant variant, const Eigen::VectorXd& s,
                         const VehicleParams& p) {
  if (variant == Variant::kPlanar) return jacobian_2d(State2D(s), p);
  return jacobian_3d(State3D(s), p);
}

ProcessNoise ProcessNoise::defaults(Variant variant) {
  ProcessNoise q;
  if (variant == Variant::kPlanar) {
    q.density.resize(7);
    //           x     y     vx   vy   yaw   yaw_rate steer
    q.density << 1e-3, 1e-3, 0.5, 0.5, 1e-6, 1e-2,    1e-4;
  } else {
    q.density.resize(13);
    //           x     y     z     vx   vy   vz   yaw   yaw_rate pitch pitch_rate steer c0    c1
    q.density << 1e-3, 1e-3, 1e-3, 0.5, 0.5, 0.1, 1e-6, 1e-2,    1e-4, 1e-2,      1e-4, 1e-6, 1e-8;
  }
  return q;
}

void ProcessNoise::validate(Variant variant) const {
  if (density.size() != state_dim(variant)) {
    throw Error(ErrorKind::kInvalidArgument, "process noise has wrong dimension");
  }
  if ((density.array() < 0.0).any() || !density.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "process noise densities must be >= 0");
  }
}

void wrap_state_angles(Variant variant, Eigen::VectorXd& s) {
  const auto& l = layout(variant);
  s(l.yaw) = wrap_angle(s(l.yaw));
  s(l.steer) = wrap_angle(s(l.steer));
  if (l.pitch >= 0) s(l.pitch) = wrap_angle(s(l.pitch));
}

Eigen::VectorXd state_difference(Variant variant, const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& b) {
  Eigen::VectorXd d = a - b;
  wrap_state_angles(variant, d);
  return d;
}

StepResult step(Variant variant, const Eigen::VectorXd& s, double dt,
                const ProcessNoise& noise, const VehicleParams& p) {
  if (!(dt > 0.0 && dt <= 0.5)) {
    throw Error(ErrorKind::kInvalidArgument, "step dt must be in (0, 0.5] s");
  }
  const int n = state_dim(variant);
  if (s.size() != n) throw Error(ErrorKind::kInvalidArgument, "state has wrong dimension");

  const Eigen::VectorXd k1 = derivative(variant, s, p);
  const Eigen::VectorXd k2 = derivative(variant, s + 0.5 * dt * k1, p);
  const Eigen::VectorXd k3 = derivative(variant, s + 0.5 * dt * k2, p);
  const Eigen::VectorXd k4 = derivative(variant, s + dt * k3, p);

  StepResult r;
  r.state = s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  wrap_state_angles(variant, r.state);
  r.transition = Eigen::MatrixXd::Identity(n, n) + jacobian(variant, s, p) * dt;
  r.process_cov = (noise.density * dt).asDiagonal();
  return r;
}

double vertical_height(double c0, double c1, double d) {
  return 0.5 * c0 * d * d + c1 / 6.0 * d * d * d;
}

}  // namespace dkff
