#pragma once

// Decentralized Kalman filter with feedback.
//
// Every cycle each local filter updates the shared prior (m, M) with its own
// measurements, the master filter fuses the local posteriors, and the fused
// estimate becomes the prior of every local filter for the next cycle.
// All updates are in information form; inverses go through Cholesky.

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "dkff/error.hpp"
#include "dkff/measurement.hpp"
#include "dkff/vehicle_dynamics.hpp"

namespace dkff {

struct StateEstimate {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  int dim() const { return static_cast<int>(mean.size()); }
  /// Throws kInvalidArgument on shape mismatch, kSingularCovariance when the
  /// covariance is not symmetric positive definite.
  void validate() const;
};

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a);

/// Inverse of a symmetric positive definite matrix, symmetrized. Throws
/// `failure` when the Cholesky factorization fails.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, ErrorKind failure);

/// a - b in state space. The default is plain subtraction.
using StateDifference =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// M <- F M F^T + Q for a linear model with mean m <- F m.
StateEstimate predict_linear(const StateEstimate& prior, const Eigen::MatrixXd& F,
                             const Eigen::MatrixXd& Q);

/// Nonlinear prediction through the vehicle model.
StateEstimate predict(const StateEstimate& prior, Variant variant, double dt,
                      const ProcessNoise& noise, const VehicleParams& params);

/// Information-form update with linearized measurements stacked:
///   P^-1 = M^-1 + sum H^T R^-1 H,  x = m + P sum H^T R^-1 nu.
/// With nu = z - H m this is the linear update exactly. The returned mean is
/// not angle-wrapped, so x - m is the update step.
StateEstimate local_update(const StateEstimate& prior, const std::vector<Linearization>& lins);
StateEstimate local_update(const StateEstimate& prior, const Linearization& lin);

/// Single update with every measurement stacked into one H and a
/// block-diagonal R. Reference for the decentralized fusion.
StateEstimate centralized_update(const StateEstimate& prior,
                                 const std::vector<Linearization>& lins);

/// Master fusion of n local posteriors computed from the same prior:
///   P^-1 = sum P_i^-1 - (n-1) M^-1
///   x    = P [sum P_i^-1 x_i - (n-1) M^-1 m]
/// evaluated as m + P sum P_i^-1 (x_i - m). Throws
/// kIndefiniteFusedPrecision when P^-1 is not positive definite.
StateEstimate master_fuse(const StateEstimate& prior, const std::vector<StateEstimate>& locals,
                          const StateDifference& difference = {});

/// Squared Mahalanobis distance nu^T S^-1 nu. Throws kSingularCovariance.
double mahalanobis_squared(const Eigen::VectorXd& innovation, const Eigen::MatrixXd& S);

/// True iff nu^T S^-1 nu <= threshold.
bool gate(const Eigen::VectorXd& innovation, const Eigen::MatrixXd& S, double threshold);

/// Chi-square quantile for `dof` degrees of freedom.
double chi2_threshold(int dof, double probability = 0.99);

/// Observation routed to the filter: the measurement plus the map geometry
/// of its associated feature.
struct Observation {
  Measurement measurement;
  MeasurementContext context;
};

struct LocalFilter {
  int id = 0;
  std::vector<SensorKind> kinds;
  StateEstimate last;  // local posterior of the latest cycle

  bool subscribes(SensorKind kind) const;
};

/// One local filter per sensor kind.
std::vector<LocalFilter> one_filter_per_kind();

struct FilterConfig {
  Variant variant = Variant::kPlanar;
  ProcessNoise process_noise = ProcessNoise::defaults(Variant::kPlanar);
  VehicleParams params;
  /// Chi-square gate on map-associated measurements (points, lines). GPS and
  /// odometry carry no association and are never gated.
  bool gating = false;
  double gate_probability = 0.99;
};

struct CycleStats {
  int accepted = 0;
  int gated = 0;       // rejected by the innovation gate
  int unusable = 0;    // prediction undefined (behind camera, degenerate line)
  int active_filters = 0;
};

class FilterBank {
 public:
  /// Throws kInvariantViolation when two local filters share a kind.
  FilterBank(FilterConfig config, StateEstimate initial,
             std::vector<LocalFilter> filters = one_filter_per_kind());

  const FilterConfig& config() const { return config_; }
  const StateEstimate& estimate() const { return master_; }
  const std::vector<LocalFilter>& filters() const { return filters_; }
  double time() const { return time_; }

  void predict(double dt);

  /// Routes observations to their subscribed local filters, runs the local
  /// updates against the current prior, fuses and feeds back. Filters without
  /// an accepted observation sit the cycle out.
  CycleStats update(const std::vector<Observation>& observations);

  /// Replaces the master estimate and every local prior.
  void feedback(const StateEstimate& fused);

 private:
  FilterConfig config_;
  StateEstimate master_;
  std::vector<LocalFilter> filters_;
  double time_ = 0.0;
};

}  // namespace dkff
