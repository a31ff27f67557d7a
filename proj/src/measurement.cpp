#include "dkff/measurement.hpp"

#include <cmath>
#include <numbers>

#include "dkff/angles.hpp"
#include "dkff/error.hpp"
#include "dkff/numeric_diff.hpp"

namespace dkff {

const char* to_string(SensorKind kind) {
  switch (kind) {
    case SensorKind::kGps: return "gps";
    case SensorKind::kOdometry: return "odometry";
    case SensorKind::kPoint3D: return "point3d";
    case SensorKind::kCameraPoint: return "camera_point";
    case SensorKind::kCameraLine: return "camera_line";
  }
  return "?";
}

SensorKind parse_sensor_kind(const std::string& text) {
  for (int k = 0; k < kSensorKindCount; ++k) {
    if (text == to_string(static_cast<SensorKind>(k))) return static_cast<SensorKind>(k);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown sensor kind '" + text + "'");
}

FeatureId Measurement::feature() const {
  return std::visit(
      [](const auto& d) -> FeatureId {
        if constexpr (requires { d.feature; }) {
          return d.feature;
        } else {
          return -1;
        }
      },
      data);
}

void Measurement::set_feature(FeatureId id) {
  std::visit(
      [id](auto& d) {
        if constexpr (requires { d.feature; }) d.feature = id;
      },
      data);
}

Pose state_pose(Variant variant, const Eigen::VectorXd& s) {
  const auto& l = layout(variant);
  if (variant == Variant::kPlanar) return Pose(Vec3(s(l.x), s(l.y), 0.0), s(l.yaw), 0.0);
  return Pose(Vec3(s(l.x), s(l.y), s(l.z)), s(l.yaw), s(l.pitch));
}

int measurement_dim(SensorKind kind, Variant variant) {
  const bool planar = variant == Variant::kPlanar;
  switch (kind) {
    case SensorKind::kGps: return planar ? 2 : 3;
    case SensorKind::kOdometry: return planar ? 3 : 5;
    case SensorKind::kPoint3D: return planar ? 2 : 3;
    case SensorKind::kCameraPoint: return 2;
    case SensorKind::kCameraLine: return 2;
  }
  return 0;
}

namespace {

// Channels of the full odometry bundle used by the planar filter.
constexpr int kPlanarOdometry[3] = {0, 1, 3};

Eigen::VectorXd full_vector(const Measurement& m) {
  return std::visit(
      [](const auto& d) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, GpsFix>) {
          return d.position;
        } else if constexpr (std::is_same_v<T, OdometryBundle>) {
          Eigen::VectorXd v(5);
          v << d.speed, d.yaw_rate, d.pitch_rate, d.steering, d.height;
          return v;
        } else if constexpr (std::is_same_v<T, Point3DObservation>) {
          return d.point;
        } else if constexpr (std::is_same_v<T, CameraPointObservation>) {
          return d.pixel;
        } else {
          return Eigen::Vector2d(d.line.rho, d.line.gamma);
        }
      },
      m.data);
}

}  // namespace

Eigen::VectorXd measured_vector(const Measurement& m, Variant variant) {
  const Eigen::VectorXd full = full_vector(m);
  if (variant == Variant::kSpatial) return full;
  switch (m.kind()) {
    case SensorKind::kGps:
    case SensorKind::kPoint3D: return full.head<2>();
    case SensorKind::kOdometry: {
      Eigen::VectorXd v(3);
      for (int i = 0; i < 3; ++i) v(i) = full(kPlanarOdometry[i]);
      return v;
    }
    default: return full;
  }
}

Eigen::MatrixXd measured_noise(const Measurement& m, Variant variant) {
  const int full_dim = static_cast<int>(full_vector(m).size());
  if (m.noise.rows() != full_dim || m.noise.cols() != full_dim) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string("noise covariance has wrong shape for ") + to_string(m.kind()));
  }
  if (variant == Variant::kSpatial) return m.noise;
  switch (m.kind()) {
    case SensorKind::kGps:
    case SensorKind::kPoint3D: return m.noise.topLeftCorner<2, 2>();
    case SensorKind::kOdometry: {
      Eigen::MatrixXd r(3, 3);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) r(i, j) = m.noise(kPlanarOdometry[i], kPlanarOdometry[j]);
      }
      return r;
    }
    default: return m.noise;
  }
}

// GPS ---------------------------------------------------------------------------

Eigen::MatrixXd gps_jacobian(Variant variant) {
  const auto& l = layout(variant);
  const int rows = measurement_dim(SensorKind::kGps, variant);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(rows, l.dim);
  h(0, l.x) = 1.0;
  h(1, l.y) = 1.0;
  if (rows == 3) h(2, l.z) = 1.0;
  return h;
}

namespace {
Eigen::VectorXd gps_predict(Variant variant, const Eigen::VectorXd& s) {
  return gps_jacobian(variant) * s;
}
}  // namespace

// Odometry ----------------------------------------------------------------------

Eigen::VectorXd odometry_predict(Variant variant, const Eigen::VectorXd& s,
                                 const VehicleParams& params) {
  const auto& l = layout(variant);
  const double v = speed(variant, s);
  if (variant == Variant::kPlanar) {
    Eigen::VectorXd z(3);
    z << v, s(l.yaw_rate), s(l.steer);
    return z;
  }
  Eigen::VectorXd z(5);
  z << v, s(l.yaw_rate), s(l.pitch_rate), s(l.steer),
      vertical_height(s(l.c0), s(l.c1), params.preview_distance);
  return z;
}

Eigen::MatrixXd odometry_jacobian(Variant variant, const Eigen::VectorXd& s,
                                  const VehicleParams& params) {
  const auto& l = layout(variant);
  const double v = speed(variant, s);
  const int rows = measurement_dim(SensorKind::kOdometry, variant);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(rows, l.dim);
  if (v >= kMinSpeed) {
    h(0, l.vx) = s(l.vx) / v;
    h(0, l.vy) = s(l.vy) / v;
    if (l.vz >= 0) h(0, l.vz) = s(l.vz) / v;
  }
  h(1, l.yaw_rate) = 1.0;
  if (variant == Variant::kPlanar) {
    h(2, l.steer) = 1.0;
  } else {
    const double d = params.preview_distance;
    h(2, l.pitch_rate) = 1.0;
    h(3, l.steer) = 1.0;
    h(4, l.c0) = 0.5 * d * d;
    h(4, l.c1) = d * d * d / 6.0;
  }
  return h;
}

// 3D sensor point ---------------------------------------------------------------

Eigen::VectorXd point3d_sensor_predict(Variant variant, const Eigen::VectorXd& s,
                                       const Vec3& landmark) {
  const Vec3 z = world_to_vehicle(state_pose(variant, s), landmark);
  if (variant == Variant::kPlanar) return z.head<2>();
  return z;
}

Eigen::Matrix<double, 2, 7> point3d_sensor_jacobian_2d(const State2D& s, const Vec3& landmark) {
  const double c = std::cos(s(4)), sn = std::sin(s(4));
  // Lever arm from landmark to vehicle.
  const double dx = s(0) - landmark.x();
  const double dy = s(1) - landmark.y();
  Eigen::Matrix<double, 2, 7> h = Eigen::Matrix<double, 2, 7>::Zero();
  h(0, 0) = -c;
  h(0, 1) = -sn;
  h(0, 4) = sn * dx - c * dy;
  h(1, 0) = sn;
  h(1, 1) = -c;
  h(1, 4) = c * dx + sn * dy;
  return h;
}

Eigen::MatrixXd point3d_sensor_jacobian(Variant variant, const Eigen::VectorXd& s,
                                        const Vec3& landmark) {
  if (variant == Variant::kPlanar) return point3d_sensor_jacobian_2d(State2D(s), landmark);
  const auto& l = layout(variant);
  const Pose pose = state_pose(variant, s);
  const Vec3 lever = landmark - pose.position;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, l.dim);
  h.block<3, 3>(0, l.x) = -pose.rotation().transpose();
  h.col(l.yaw) = rotation_dyaw(pose).transpose() * lever;
  h.col(l.pitch) = rotation_dpitch(pose).transpose() * lever;
  return h;
}

// Camera point ------------------------------------------------------------------

Vec2 point_camera_predict(Variant variant, const Eigen::VectorXd& s, const CameraModel& camera,
                          const Vec3& landmark) {
  const Mat34 p = projection_matrix(camera, state_pose(variant, s));
  return project_point(p, landmark.homogeneous());
}

Eigen::MatrixXd point_camera_jacobian(Variant variant, const Eigen::VectorXd& s,
                                      const CameraModel& camera, const Vec3& landmark) {
  const auto& l = layout(variant);
  const Pose pose = state_pose(variant, s);
  const Mat3 to_optical = body_to_optical() * camera.mount.rotation().transpose();
  const Vec3 z_vehicle = world_to_vehicle(pose, landmark);
  const Vec3 q = camera.intrinsics * to_optical * (z_vehicle - camera.mount.position);
  if (!(q.z() > 0.0)) throw Error(ErrorKind::kBehindCamera, "landmark behind camera");

  Eigen::Matrix<double, 2, 3> dpix_dq;
  dpix_dq << 1.0 / q.z(), 0.0, -q.x() / (q.z() * q.z()),
             0.0, 1.0 / q.z(), -q.y() / (q.z() * q.z());

  // d(z_vehicle)/d(state), full 3 rows for both variants.
  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(3, l.dim);
  const Vec3 lever = landmark - pose.position;
  dz.block<3, 2>(0, l.x) = -pose.rotation().transpose().leftCols<2>();
  if (l.z >= 0) dz.col(l.z) = -pose.rotation().transpose().col(2);
  dz.col(l.yaw) = rotation_dyaw(pose).transpose() * lever;
  if (l.pitch >= 0) dz.col(l.pitch) = rotation_dpitch(pose).transpose() * lever;

  return dpix_dq * camera.intrinsics * to_optical * dz;
}

// Camera line -------------------------------------------------------------------

HesseLine line_camera_predict(Variant variant, const Eigen::VectorXd& s,
                              const CameraModel& camera, const Vec3& a, const Vec3& b) {
  const Mat34 p = projection_matrix(camera, state_pose(variant, s));
  const PluckerLine line = plucker_from_points(a.homogeneous(), b.homogeneous());
  return line_to_hesse(project_line(p, line));
}

namespace {

// (rho, gamma) of `h` on the branch nearest to `reference_gamma`.
Eigen::Vector2d hesse_on_branch(const HesseLine& h, double reference_gamma) {
  if (std::abs(wrap_angle(h.gamma - reference_gamma)) > 0.5 * std::numbers::pi) {
    return {-h.rho, wrap_angle(h.gamma + std::numbers::pi)};
  }
  return {h.rho, h.gamma};
}

Eigen::VectorXd rho_gamma_difference(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return Eigen::Vector2d(a(0) - b(0), wrap_angle(a(1) - b(1)));
}

}  // namespace

Vec2 line_residual(const HesseLine& measured, const HesseLine& predicted) {
  const Eigen::Vector2d p = hesse_on_branch(predicted, measured.gamma);
  return Vec2(measured.rho - p(0), wrap_angle(measured.gamma - p(1)));
}

Eigen::MatrixXd line_camera_jacobian(Variant variant, const Eigen::VectorXd& s,
                                     const CameraModel& camera, const Vec3& a, const Vec3& b,
                                     double step) {
  const HesseLine nominal = line_camera_predict(variant, s, camera, a, b);
  auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return hesse_on_branch(line_camera_predict(variant, x, camera, a, b), nominal.gamma);
  };
  return central_difference(f, s, step, rho_gamma_difference);
}

// Ground lift -------------------------------------------------------------------

Eigen::VectorXd lift_to_ground(const Eigen::VectorXd& s, const GroundFn& ground) {
  const auto& p = kPlanarLayout;
  const auto& q = kSpatialLayout;
  if (s.size() != p.dim) throw Error(ErrorKind::kInvalidArgument, "lift needs a planar state");
  const Vec2 surface = ground(Vec2(s(p.x), s(p.y)), s(p.yaw));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(q.dim);
  out(q.x) = s(p.x);
  out(q.y) = s(p.y);
  out(q.z) = surface(0);
  out(q.vx) = s(p.vx);
  out(q.vy) = s(p.vy);
  out(q.yaw) = s(p.yaw);
  out(q.yaw_rate) = s(p.yaw_rate);
  out(q.pitch) = surface(1);
  out(q.steer) = s(p.steer);
  return out;
}

Eigen::MatrixXd lift_jacobian(const Eigen::VectorXd& s, const GroundFn& ground) {
  const auto& p = kPlanarLayout;
  const auto& q = kSpatialLayout;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(q.dim, p.dim);
  j(q.x, p.x) = j(q.y, p.y) = j(q.vx, p.vx) = j(q.vy, p.vy) = 1.0;
  j(q.yaw, p.yaw) = j(q.yaw_rate, p.yaw_rate) = j(q.steer, p.steer) = 1.0;
  constexpr double step = 1e-4;
  for (int col : {p.x, p.y, p.yaw}) {
    Eigen::VectorXd hi = s, lo = s;
    hi(col) += step;
    lo(col) -= step;
    const Vec2 d = (ground(Vec2(hi(p.x), hi(p.y)), hi(p.yaw)) - ground(Vec2(lo(p.x), lo(p.y)), lo(p.yaw))) /
                   (2.0 * step);
    j(q.z, col) = d(0);
    j(q.pitch, col) = d(1);
  }
  return j;
}

namespace {

bool on_ground(SensorKind kind, Variant variant, const MeasurementContext& ctx) {
  return variant == Variant::kPlanar && ctx.ground &&
         (kind == SensorKind::kPoint3D || kind == SensorKind::kCameraPoint || kind == SensorKind::kCameraLine);
}

}  // namespace

// Dispatch ----------------------------------------------------------------------

Eigen::VectorXd predict(SensorKind kind, Variant variant, const Eigen::VectorXd& s,
                        const VehicleParams& params, const MeasurementContext& ctx) {
  if (on_ground(kind, variant, ctx)) {
    MeasurementContext flat = ctx;
    flat.ground = nullptr;
    const Eigen::VectorXd z = predict(kind, Variant::kSpatial, lift_to_ground(s, ctx.ground), params, flat);
    return kind == SensorKind::kPoint3D ? Eigen::VectorXd(z.head<2>()) : z;
  }
  switch (kind) {
    case SensorKind::kGps: return gps_predict(variant, s);
    case SensorKind::kOdometry: return odometry_predict(variant, s, params);
    case SensorKind::kPoint3D: return point3d_sensor_predict(variant, s, ctx.landmark);
    case SensorKind::kCameraPoint:
      return point_camera_predict(variant, s, *ctx.camera, ctx.landmark);
    case SensorKind::kCameraLine: {
      const HesseLine h = line_camera_predict(variant, s, *ctx.camera, ctx.segment_a, ctx.segment_b);
      return Eigen::Vector2d(h.rho, h.gamma);
    }
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown sensor kind");
}

Eigen::VectorXd innovation(const Measurement& measured, SensorKind predicted_kind,
                           const Eigen::VectorXd& predicted, Variant variant) {
  if (measured.kind() != predicted_kind) {
    throw Error(ErrorKind::kKindMismatch, std::string(to_string(measured.kind())) + " vs " +
                                              to_string(predicted_kind));
  }
  const Eigen::VectorXd z = measured_vector(measured, variant);
  if (z.size() != predicted.size()) {
    throw Error(ErrorKind::kKindMismatch, "measurement and prediction dimensions differ");
  }
  switch (measured.kind()) {
    case SensorKind::kOdometry: {
      Eigen::VectorXd nu = z - predicted;
      const int steer_row = variant == Variant::kPlanar ? 2 : 3;
      nu(steer_row) = wrap_angle(nu(steer_row));
      return nu;
    }
    case SensorKind::kCameraLine: {
      const auto& line = std::get<CameraLineObservation>(measured.data).line;
      return line_residual(line, HesseLine{predicted(1), predicted(0)});
    }
    default: return z - predicted;
  }
}

Linearization linearize(const Measurement& m, Variant variant, const Eigen::VectorXd& s,
                        const VehicleParams& params, const MeasurementContext& ctx) {
  if (on_ground(m.kind(), variant, ctx)) {
    // Linearize the spatial model at the lifted state and chain through the lift.
    MeasurementContext flat = ctx;
    flat.ground = nullptr;
    Linearization lin = linearize(m, Variant::kSpatial, lift_to_ground(s, ctx.ground), params, flat);
    lin.H = lin.H * lift_jacobian(s, ctx.ground);
    if (m.kind() == SensorKind::kPoint3D) {
      lin.H = Eigen::MatrixXd(lin.H.topRows(2));
      lin.innovation = Eigen::VectorXd(lin.innovation.head(2));
    }
    lin.R = measured_noise(m, variant);
    return lin;
  }
  Linearization lin;
  lin.R = measured_noise(m, variant);
  switch (m.kind()) {
    case SensorKind::kGps:
      lin.H = gps_jacobian(variant);
      break;
    case SensorKind::kOdometry:
      lin.H = odometry_jacobian(variant, s, params);
      break;
    case SensorKind::kPoint3D:
      lin.H = point3d_sensor_jacobian(variant, s, ctx.landmark);
      break;
    case SensorKind::kCameraPoint:
      lin.H = point_camera_jacobian(variant, s, *ctx.camera, ctx.landmark);
      break;
    case SensorKind::kCameraLine: {
      const auto& measured = std::get<CameraLineObservation>(m.data).line;
      const HesseLine predicted =
          line_camera_predict(variant, s, *ctx.camera, ctx.segment_a, ctx.segment_b);
      lin.H = line_camera_jacobian(variant, s, *ctx.camera, ctx.segment_a, ctx.segment_b);
      // (gamma, rho) and (gamma + pi, -rho) are the same line; compare on the
      // measured branch.
      const Eigen::Vector2d on_branch = hesse_on_branch(predicted, measured.gamma);
      if (on_branch(0) != predicted.rho) lin.H.row(0) *= -1.0;
      lin.innovation = line_residual(measured, predicted);
      return lin;
    }
  }
  lin.innovation = innovation(m, m.kind(), predict(m.kind(), variant, s, params, ctx), variant);
  return lin;
}

}  // namespace dkff
