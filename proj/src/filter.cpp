#include "dkff/filter.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <limits>
#include <string>

#include "dkff/error.hpp"

namespace dkff {

void StateEstimate::validate() const {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw Error(ErrorKind::kInvalidArgument, "covariance shape does not match mean");
  }
  if (!mean.allFinite() || !cov.allFinite()) {
    throw Error(ErrorKind::kSingularCovariance, "non-finite estimate");
  }
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::kSingularCovariance, "covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kSingularCovariance, "covariance is not positive definite");
  }
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, ErrorKind failure) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::kInvalidArgument, "inverse of non-square matrix");
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success || !a.allFinite()) {
    throw Error(failure, "Cholesky factorization failed (" + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + ")");
  }
  return symmetrize(llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols())));
}

StateEstimate predict_linear(const StateEstimate& prior, const Eigen::MatrixXd& F,
                             const Eigen::MatrixXd& Q) {
  if (F.rows() != prior.dim() || F.cols() != prior.dim() || Q.rows() != prior.dim() ||
      Q.cols() != prior.dim()) {
    throw Error(ErrorKind::kInvalidArgument, "transition / process noise shape mismatch");
  }
  return {F * prior.mean, symmetrize(F * prior.cov * F.transpose() + Q)};
}

StateEstimate predict(const StateEstimate& prior, Variant variant, double dt,
                      const ProcessNoise& noise, const VehicleParams& params) {
  const StepResult r = step(variant, prior.mean, dt, noise, params);
  return {r.state,
          symmetrize(r.transition * prior.cov * r.transition.transpose() + r.process_cov)};
}

namespace {

struct Information {
  Eigen::MatrixXd matrix;  // sum H^T R^-1 H
  Eigen::VectorXd vector;  // sum H^T R^-1 nu
};

Information accumulate(int n, const std::vector<Linearization>& lins) {
  Information info{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  for (const auto& lin : lins) {
    const auto m = lin.innovation.size();
    if (lin.H.rows() != m || lin.H.cols() != n || lin.R.rows() != m || lin.R.cols() != m) {
      throw Error(ErrorKind::kInvalidArgument, "linearization shape mismatch");
    }
    const Eigen::MatrixXd r_inv = spd_inverse(lin.R, ErrorKind::kIndefiniteNoise);
    const Eigen::MatrixXd ht_rinv = lin.H.transpose() * r_inv;
    info.matrix += ht_rinv * lin.H;
    info.vector += ht_rinv * lin.innovation;
  }
  return info;
}

StateEstimate information_update(const StateEstimate& prior, const std::vector<Linearization>& lins) {
  const Eigen::MatrixXd m_inv = spd_inverse(prior.cov, ErrorKind::kSingularCovariance);
  const Information info = accumulate(prior.dim(), lins);
  const Eigen::MatrixXd p = spd_inverse(symmetrize(m_inv + info.matrix),
                                        ErrorKind::kSingularCovariance);
  return {prior.mean + p * info.vector, p};
}

}  // namespace

StateEstimate local_update(const StateEstimate& prior, const std::vector<Linearization>& lins) {
  return information_update(prior, lins);
}

StateEstimate local_update(const StateEstimate& prior, const Linearization& lin) {
  return information_update(prior, {lin});
}

StateEstimate centralized_update(const StateEstimate& prior,
                                 const std::vector<Linearization>& lins) {
  Eigen::Index rows = 0;
  for (const auto& l : lins) rows += l.innovation.size();
  if (rows == 0) return prior;
  Linearization stacked;
  stacked.innovation.resize(rows);
  stacked.H.resize(rows, prior.dim());
  stacked.R = Eigen::MatrixXd::Zero(rows, rows);
  Eigen::Index at = 0;
  for (const auto& l : lins) {
    const auto m = l.innovation.size();
    if (l.H.rows() != m || l.H.cols() != prior.dim() || l.R.rows() != m || l.R.cols() != m) {
      throw Error(ErrorKind::kInvalidArgument, "linearization shape mismatch");
    }
    stacked.innovation.segment(at, m) = l.innovation;
    stacked.H.middleRows(at, m) = l.H;
    stacked.R.block(at, at, m, m) = l.R;
    at += m;
  }
  return information_update(prior, {stacked});
}

StateEstimate master_fuse(const StateEstimate& prior, const std::vector<StateEstimate>& locals,
                          const StateDifference& difference) {
  if (locals.empty()) throw Error(ErrorKind::kInvalidArgument, "master_fuse needs a local estimate");
  for (const auto& l : locals) {
    if (l.dim() != prior.dim() || l.cov.rows() != prior.dim() || l.cov.cols() != prior.dim()) {
      throw Error(ErrorKind::kInvalidArgument, "local estimate shape mismatch");
    }
  }
  if (locals.size() == 1) return locals.front();

  const Eigen::MatrixXd m_inv = spd_inverse(prior.cov, ErrorKind::kSingularCovariance);
  Eigen::MatrixXd precision = m_inv;
  Eigen::VectorXd weighted = Eigen::VectorXd::Zero(prior.dim());
  for (const auto& l : locals) {
    const Eigen::MatrixXd y = spd_inverse(l.cov, ErrorKind::kSingularCovariance);
    precision += y - m_inv;
    const Eigen::VectorXd step = difference ? difference(l.mean, prior.mean) : Eigen::VectorXd(l.mean - prior.mean);
    weighted += y * step;
  }
  const Eigen::MatrixXd p = spd_inverse(symmetrize(precision), ErrorKind::kIndefiniteFusedPrecision);
  return {prior.mean + p * weighted, p};
}

double mahalanobis_squared(const Eigen::VectorXd& innovation, const Eigen::MatrixXd& S) {
  if (S.rows() != innovation.size() || S.cols() != innovation.size()) {
    throw Error(ErrorKind::kInvalidArgument, "innovation covariance shape mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kSingularCovariance, "innovation covariance is not positive definite");
  }
  const Eigen::VectorXd w = llt.matrixL().solve(innovation);
  return w.squaredNorm();
}

bool gate(const Eigen::VectorXd& innovation, const Eigen::MatrixXd& S, double threshold) {
  return mahalanobis_squared(innovation, S) <= threshold;
}

double chi2_threshold(int dof, double probability) {
  if (dof < 1 || !(probability > 0.0 && probability < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "chi-square quantile needs dof >= 1, 0 < p < 1");
  }
  return boost::math::quantile(boost::math::chi_squared(dof), probability);
}

bool LocalFilter::subscribes(SensorKind kind) const {
  return std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
}

std::vector<LocalFilter> one_filter_per_kind() {
  std::vector<LocalFilter> filters;
  for (int k = 0; k < kSensorKindCount; ++k) {
    filters.push_back(LocalFilter{k, {static_cast<SensorKind>(k)}, {}});
  }
  return filters;
}

FilterBank::FilterBank(FilterConfig config, StateEstimate initial, std::vector<LocalFilter> filters)
    : config_(std::move(config)), master_(std::move(initial)), filters_(std::move(filters)) {
  if (filters_.empty()) throw Error(ErrorKind::kInvalidArgument, "filter bank needs a local filter");
  if (master_.dim() != state_dim(config_.variant)) {
    throw Error(ErrorKind::kInvalidArgument, "initial state has wrong dimension for variant");
  }
  config_.process_noise.validate(config_.variant);
  config_.params.validate();
  master_.cov = symmetrize(master_.cov);
  master_.validate();
  std::vector<bool> taken(kSensorKindCount, false);
  for (const auto& f : filters_) {
    for (SensorKind k : f.kinds) {
      if (taken[static_cast<int>(k)]) {
        throw Error(ErrorKind::kInvariantViolation,
                    std::string("sensor kind ") + to_string(k) + " subscribed by two local filters");
      }
      taken[static_cast<int>(k)] = true;
    }
  }
  feedback(master_);
}

void FilterBank::predict(double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::kInvalidArgument, "predict needs dt > 0");
  master_ = dkff::predict(master_, config_.variant, dt, config_.process_noise, config_.params);
  time_ += dt;
  for (auto& f : filters_) f.last = master_;
}

CycleStats FilterBank::update(const std::vector<Observation>& observations) {
  CycleStats stats;
  const Variant variant = config_.variant;
  std::vector<std::vector<Linearization>> routed(filters_.size());

  for (const auto& obs : observations) {
    const SensorKind kind = obs.measurement.kind();
    std::size_t target = filters_.size();
    for (std::size_t i = 0; i < filters_.size(); ++i) {
      if (filters_[i].subscribes(kind)) target = i;
    }
    if (target == filters_.size()) continue;

    Linearization lin;
    try {
      lin = linearize(obs.measurement, variant, master_.mean, config_.params, obs.context);
    } catch (const Error& e) {
      const ErrorKind k = e.kind();
      if (k == ErrorKind::kBehindCamera || k == ErrorKind::kAtCameraCenter ||
          k == ErrorKind::kThroughCameraCenter || k == ErrorKind::kLineAtInfinity ||
          k == ErrorKind::kDegeneratePoints) {
        ++stats.unusable;
        continue;
      }
      throw;
    }
    if (config_.gating && obs.measurement.feature() >= 0) {
      const Eigen::MatrixXd S = symmetrize(lin.H * master_.cov * lin.H.transpose() + lin.R);
      const double threshold =
          chi2_threshold(static_cast<int>(lin.innovation.size()), config_.gate_probability);
      if (!gate(lin.innovation, S, threshold)) {
        ++stats.gated;
        continue;
      }
    }
    ++stats.accepted;
    routed[target].push_back(std::move(lin));
  }

  // Local filters are independent given the prior snapshot.
  std::vector<StateEstimate> locals;
  for (std::size_t i = 0; i < filters_.size(); ++i) {
    if (routed[i].empty()) continue;
    filters_[i].last = local_update(master_, routed[i]);
    locals.push_back(filters_[i].last);
  }
  stats.active_filters = static_cast<int>(locals.size());
  if (locals.empty()) return stats;

  StateEstimate fused = master_fuse(
      master_, locals, [variant](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return state_difference(variant, a, b);
      });
  wrap_state_angles(variant, fused.mean);
  feedback(fused);
  return stats;
}

void FilterBank::feedback(const StateEstimate& fused) {
  master_ = fused;
  for (auto& f : filters_) f.last = master_;
}

}  // namespace dkff
