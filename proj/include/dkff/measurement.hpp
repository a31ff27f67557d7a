#pragma once

// Sensor measurement types and their observation models: prediction from a
// filter state, innovation, and the Jacobian H used by the Kalman update.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <variant>

#include "dkff/geometry.hpp"
#include "dkff/map.hpp"
#include "dkff/vehicle_dynamics.hpp"

namespace dkff {

enum class SensorKind { kGps = 0, kOdometry, kPoint3D, kCameraPoint, kCameraLine };
inline constexpr int kSensorKindCount = 5;

const char* to_string(SensorKind kind);
SensorKind parse_sensor_kind(const std::string& text);

struct GpsFix {
  Vec3 position = Vec3::Zero();
};

/// Wheel/IMU odometry sample plus the road height h measured at the preview
/// distance ahead.
struct OdometryBundle {
  double speed = 0.0;
  double yaw_rate = 0.0;
  double pitch_rate = 0.0;
  double steering = 0.0;
  double height = 0.0;
};

/// Landmark seen by a 3D sensor, in vehicle-frame coordinates.
struct Point3DObservation {
  FeatureId feature = -1;
  Vec3 point = Vec3::Zero();
};

struct CameraPointObservation {
  FeatureId feature = -1;
  Vec2 pixel = Vec2::Zero();
};

struct CameraLineObservation {
  FeatureId feature = -1;
  HesseLine line;
};

using MeasurementData = std::variant<GpsFix, OdometryBundle, Point3DObservation,
                                     CameraPointObservation, CameraLineObservation>;

struct Measurement {
  double timestamp = 0.0;
  MeasurementData data;
  /// Full-dimension noise covariance: 3 (GPS), 5 (odometry), 3 (3D point),
  /// 2 (camera point), 2 (camera line, ordered rho then gamma).
  Eigen::MatrixXd noise;

  SensorKind kind() const { return static_cast<SensorKind>(data.index()); }
  /// -1 for kinds without map association.
  FeatureId feature() const;
  void set_feature(FeatureId id);
};

/// Map geometry and sensor configuration a prediction needs.
/// Road surface under a planar state: (height, pitch) at horizontal position
/// and heading.
using GroundFn = std::function<Vec2(const Vec2& xy, double yaw)>;

struct MeasurementContext {
  const CameraModel* camera = nullptr;
  Vec3 landmark = Vec3::Zero();
  Vec3 segment_a = Vec3::Zero();
  Vec3 segment_b = Vec3::Zero();
  /// When set, the planar filter's map-feature models place the vehicle on
  /// this surface instead of z = 0, pitch = 0.
  GroundFn ground;
};

/// Spatial state with the planar pose placed on `ground`; velocity, rates and
/// steering are copied, the clothoid terms are zero.
Eigen::VectorXd lift_to_ground(const Eigen::VectorXd& planar, const GroundFn& ground);
/// d(lift_to_ground)/d(planar state), 13x7, ground slopes by central differences.
Eigen::MatrixXd lift_jacobian(const Eigen::VectorXd& planar, const GroundFn& ground);

Pose state_pose(Variant variant, const Eigen::VectorXd& state);

/// Measurement dimension seen by a filter variant.
int measurement_dim(SensorKind kind, Variant variant);

/// Reduced measurement vector / noise for a variant (e.g. the planar filter
/// drops GPS z and the pitch-rate and height odometry channels).
Eigen::VectorXd measured_vector(const Measurement& m, Variant variant);
Eigen::MatrixXd measured_noise(const Measurement& m, Variant variant);

// GPS -------------------------------------------------------------------------

/// Selection of the position block: 2x7 (planar) or 3x13 (spatial).
Eigen::MatrixXd gps_jacobian(Variant variant);

// Odometry --------------------------------------------------------------------

/// (v, yaw_rate, steer) for the planar filter, (v, yaw_rate, pitch_rate,
/// steer, h) for the spatial one.
Eigen::VectorXd odometry_predict(Variant variant, const Eigen::VectorXd& state,
                                 const VehicleParams& params);
Eigen::MatrixXd odometry_jacobian(Variant variant, const Eigen::VectorXd& state,
                                  const VehicleParams& params);

// 3D sensor point -------------------------------------------------------------

/// Landmark in the vehicle frame; the planar filter keeps (x, y).
Eigen::VectorXd point3d_sensor_predict(Variant variant, const Eigen::VectorXd& state,
                                       const Vec3& landmark);
/// The printed flat-road Jacobian (2x7).
Eigen::Matrix<double, 2, 7> point3d_sensor_jacobian_2d(const State2D& state,
                                                       const Vec3& landmark);
Eigen::MatrixXd point3d_sensor_jacobian(Variant variant, const Eigen::VectorXd& state,
                                        const Vec3& landmark);

// Camera point ----------------------------------------------------------------

/// Pixel of a landmark. Throws kBehindCamera.
Vec2 point_camera_predict(Variant variant, const Eigen::VectorXd& state,
                          const CameraModel& camera, const Vec3& landmark);
/// Chain rule through the pose, mount and pinhole.
Eigen::MatrixXd point_camera_jacobian(Variant variant, const Eigen::VectorXd& state,
                                      const CameraModel& camera, const Vec3& landmark);

// Camera line -----------------------------------------------------------------

/// Hesse parameters of the image of the 3D line through a map segment.
HesseLine line_camera_predict(Variant variant, const Eigen::VectorXd& state,
                              const CameraModel& camera, const Vec3& a, const Vec3& b);

/// measured - predicted with the prediction moved onto the measured
/// (gamma, rho) ~ (gamma + pi, -rho) branch, ordered (d_rho, d_gamma).
Vec2 line_residual(const HesseLine& measured, const HesseLine& predicted);

inline constexpr double kLineJacobianStep = 1e-6;

/// Central-difference Jacobian of (rho, gamma) w.r.t. the state. Perturbed
/// evaluations are expressed on the same (gamma, rho) ~ (gamma+pi, -rho)
/// branch as the nominal one so lines near the image origin stay smooth.
Eigen::MatrixXd line_camera_jacobian(Variant variant, const Eigen::VectorXd& state,
                                     const CameraModel& camera, const Vec3& a, const Vec3& b,
                                     double step = kLineJacobianStep);

// Generic dispatch ------------------------------------------------------------

Eigen::VectorXd predict(SensorKind kind, Variant variant, const Eigen::VectorXd& state,
                        const VehicleParams& params, const MeasurementContext& ctx);

/// measured - predicted with angle components wrapped. Throws kKindMismatch
/// when kinds or dimensions disagree.
Eigen::VectorXd innovation(const Measurement& measured, SensorKind predicted_kind,
                           const Eigen::VectorXd& predicted, Variant variant);

/// Innovation, Jacobian and noise evaluated at `state`, ready for an update.
struct Linearization {
  Eigen::VectorXd innovation;
  Eigen::MatrixXd H;
  Eigen::MatrixXd R;
};

Linearization linearize(const Measurement& m, Variant variant, const Eigen::VectorXd& state,
                        const VehicleParams& params, const MeasurementContext& ctx);

}  // namespace dkff
