#pragma once

// Built-in numerical checks: analytic Jacobians against central differences,
// decentralized fusion against the centralized update, and projective line
// incidence. Failures are reported, never thrown.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dkff {

struct CheckResult {
  std::string name;
  int cases = 0;
  double worst = 0.0;      // largest error seen
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;      // first failure or exception, empty when clean
};

/// Analytic Jacobian paired with the function it differentiates. States come
/// from `sample`, which receives a case index.
struct JacobianCase {
  std::string name;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> analytic;
  std::function<Eigen::VectorXd(std::mt19937_64&)> sample;
};

inline constexpr double kJacobianTolerance = 1e-5;
inline constexpr double kJacobianStep = 1e-5;

/// Largest entrywise |J - J_fd| / max(1, |J_fd|) over `states` samples.
CheckResult check_jacobian(const JacobianCase& c, int states, std::uint64_t seed,
                           double tolerance = kJacobianTolerance);

/// Planar and spatial transition Jacobians, the printed flat-road 3D-sensor
/// point Jacobian, and both odometry Jacobians.
std::vector<JacobianCase> model_jacobian_cases();

/// Same cases with `delta` added to one entry of every analytic Jacobian.
std::vector<JacobianCase> perturbed_jacobian_cases(double delta);

/// master_fuse of per-filter local updates against centralized_update on
/// random linear-Gaussian systems (dim 4..13, 2..5 filters). Error is the
/// max-norm of the mean and covariance differences.
CheckResult check_fusion_equivalence(int systems, std::uint64_t seed, double tolerance = 1e-9);

/// Random cameras and 3D segments: Plucker skew symmetry and rank 2, the
/// projected line through the projected points, the back-projected plane
/// through the 3D points, and invariance to scaling and endpoint order.
CheckResult check_line_incidence(int pairs, std::uint64_t seed, double tolerance = 1e-9);

struct SelftestOptions {
  int jacobian_states = 1000;
  int fusion_systems = 200;
  int incidence_pairs = 10000;
  std::uint64_t seed = 20240601;
  double jacobian_perturbation = 0.0;  // nonzero injects an error (test fixture)
};

std::vector<CheckResult> run_selftest(const SelftestOptions& options = {});

/// "PASS name (cases, worst <= tolerance)" or "FAIL ...".
std::string format_check(const CheckResult& r);

}  // namespace dkff
