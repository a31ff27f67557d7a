#pragma once

// Kinematic bicycle model with a vertical clothoid road profile.
//
// Two state layouts share one set of functions:
//   planar (7):   x y vx vy yaw yaw_rate steer
//   spatial (13): x y z vx vy vz yaw yaw_rate pitch pitch_rate steer c0 c1
// Speed is derived from the velocity components and is not a state element.

#include <Eigen/Dense>

namespace dkff {

enum class Variant { kPlanar, kSpatial };

const char* to_string(Variant v);
Variant parse_variant(const char* text);  // "2d" | "3d"

/// Index map of a state layout; -1 marks elements absent from the variant.
struct StateLayout {
  int dim;
  int x, y, z;
  int vx, vy, vz;
  int yaw, yaw_rate;
  int pitch, pitch_rate;
  int steer;
  int c0, c1;

  bool is_angle(int i) const { return i == yaw || (pitch >= 0 && i == pitch) || i == steer; }
};

inline constexpr StateLayout kPlanarLayout{7, 0, 1, -1, 2, 3, -1, 4, 5, -1, -1, 6, -1, -1};
inline constexpr StateLayout kSpatialLayout{13, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};

inline constexpr const StateLayout& layout(Variant v) {
  return v == Variant::kPlanar ? kPlanarLayout : kSpatialLayout;
}
inline constexpr int state_dim(Variant v) { return layout(v).dim; }

using State2D = Eigen::Matrix<double, 7, 1>;
using State3D = Eigen::Matrix<double, 13, 1>;
using Jacobian2D = Eigen::Matrix<double, 7, 7>;
using Jacobian3D = Eigen::Matrix<double, 13, 13>;

struct VehicleParams {
  double wheelbase = 2.7;          // m
  double preview_distance = 10.0;  // m, where road height h is measured

  void validate() const;
};

/// Below this speed the velocity partials that divide by v are zeroed.
inline constexpr double kMinSpeed = 0.1;

double speed(const State2D& s);
double speed(const State3D& s);
double speed(Variant variant, const Eigen::VectorXd& s);

/// Throws kSteeringSingularity when |steer| >= pi/2.
State2D derivative_2d(const State2D& s, const VehicleParams& p);
State3D derivative_3d(const State3D& s, const VehicleParams& p);

/// Analytic d(derivative)/d(state). The planar one is the printed
/// transition Jacobian of the flat-road filter, entry for entry.
Jacobian2D jacobian_2d(const State2D& s, const VehicleParams& p);
Jacobian3D jacobian_3d(const State3D& s, const VehicleParams& p);

Eigen::VectorXd derivative(Variant variant, const Eigen::VectorXd& s,
                           const VehicleParams& p);
Eigen::MatrixXd jacobian(Variant variant, const Eigen::VectorXd& s,
                         const VehicleParams& p);

/// Diagonal spectral densities, one per state element.
struct ProcessNoise {
  Eigen::VectorXd density;

  static ProcessNoise defaults(Variant variant);
  void validate(Variant variant) const;
};

struct StepResult {
  Eigen::VectorXd state;
  Eigen::MatrixXd transition;  // I + J dt
  Eigen::MatrixXd process_cov; // diag(density) dt
};

/// One RK4 step of `dt` in (0, 0.5] s. Angles are re-wrapped.
StepResult step(Variant variant, const Eigen::VectorXd& s, double dt,
                const ProcessNoise& noise, const VehicleParams& p);

/// Height of the road at distance d ahead relative to the local tangent
/// plane: c0/2 d^2 + c1/6 d^3.
double vertical_height(double c0, double c1, double d);

/// Wraps all angle elements of a state vector in place.
void wrap_state_angles(Variant variant, Eigen::VectorXd& s);

/// a - b with angle elements wrapped.
Eigen::VectorXd state_difference(Variant variant, const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& b);

}  // namespace dkff
