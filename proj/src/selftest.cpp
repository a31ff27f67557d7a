#include "dkff/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "dkff/error.hpp"
#include "dkff/filter.hpp"
#include "dkff/geometry.hpp"
#include "dkff/measurement.hpp"
#include "dkff/numeric_diff.hpp"
#include "dkff/vehicle_dynamics.hpp"

namespace dkff {

namespace {

constexpr double kPi = std::numbers::pi;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  }
  return m;
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double floor) {
  const Eigen::MatrixXd a = random_matrix(rng, n, n) / std::sqrt(static_cast<double>(n));
  return a * a.transpose() + floor * Eigen::MatrixXd::Identity(n, n);
}

// Moving states with speed well above kMinSpeed.
Eigen::VectorXd sample_state(Variant variant, std::mt19937_64& rng) {
  const auto& l = layout(variant);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(l.dim);
  const double v = uniform(rng, 1.0, 30.0);
  const double course = uniform(rng, -kPi, kPi);
  s(l.x) = uniform(rng, -500.0, 500.0);
  s(l.y) = uniform(rng, -500.0, 500.0);
  s(l.vx) = v * std::cos(course);
  s(l.vy) = v * std::sin(course);
  s(l.yaw) = uniform(rng, -kPi, kPi);
  s(l.yaw_rate) = uniform(rng, -0.5, 0.5);
  s(l.steer) = uniform(rng, -0.5, 0.5);
  if (variant == Variant::kSpatial) {
    s(l.z) = uniform(rng, -20.0, 20.0);
    s(l.vz) = uniform(rng, -2.0, 2.0);
    s(l.pitch) = uniform(rng, -0.2, 0.2);
    s(l.pitch_rate) = uniform(rng, -0.1, 0.1);
    s(l.c0) = uniform(rng, -0.02, 0.02);
    s(l.c1) = uniform(rng, -1e-3, 1e-3);
  }
  return s;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

void record(CheckResult& r, double error, const std::string& what) {
  r.worst = std::max(r.worst, error);
  if (!(error <= r.tolerance) && r.detail.empty()) r.detail = what;
}

}  // namespace

CheckResult check_jacobian(const JacobianCase& c, int states, std::uint64_t seed, double tolerance) {
  CheckResult r{c.name, 0, 0.0, tolerance, false, ""};
  std::mt19937_64 rng(seed);
  try {
    for (int i = 0; i < states; ++i) {
      const Eigen::VectorXd x = c.sample(rng);
      const Eigen::MatrixXd an = c.analytic(x);
      // Inputs past the analytic columns are parameters sampled with the state.
      const Eigen::MatrixXd fd =
          central_difference(c.f, x, kJacobianStep).leftCols(std::min<Eigen::Index>(an.cols(), x.size()));
      if (an.rows() != fd.rows() || an.cols() != fd.cols()) {
        r.detail = "shape mismatch";
        r.worst = INFINITY;
        break;
      }
      const Eigen::MatrixXd scale = fd.cwiseAbs().cwiseMax(1.0);
      const double err = max_abs((an - fd).cwiseQuotient(scale));
      record(r, err, "state " + std::to_string(i));
      ++r.cases;
    }
  } catch (const std::exception& e) {
    r.detail = e.what();
    r.worst = INFINITY;
  }
  r.passed = r.detail.empty() && r.worst <= tolerance;
  return r;
}

std::vector<JacobianCase> model_jacobian_cases() {
  const VehicleParams params;
  std::vector<JacobianCase> cases;
  for (Variant v : {Variant::kPlanar, Variant::kSpatial}) {
    const std::string suffix = v == Variant::kPlanar ? "_2d" : "_3d";
    cases.push_back({"transition" + suffix,
                     [v, params](const Eigen::VectorXd& s) { return derivative(v, s, params); },
                     [v, params](const Eigen::VectorXd& s) { return jacobian(v, s, params); },
                     [v](std::mt19937_64& rng) { return sample_state(v, rng); }});
  }
  // Landmarks ride along at the end of the sampled vector.
  cases.push_back(
      {"point3d_sensor_2d",
       [](const Eigen::VectorXd& x) {
         return point3d_sensor_predict(Variant::kPlanar, x.head<7>(), x.tail<3>());
       },
       [](const Eigen::VectorXd& x) {
         return Eigen::MatrixXd(point3d_sensor_jacobian_2d(x.head<7>(), x.tail<3>()));
       },
       [](std::mt19937_64& rng) {
         Eigen::VectorXd x(10);
         x.head<7>() = sample_state(Variant::kPlanar, rng);
         x(7) = x(0) + uniform(rng, -60.0, 60.0);
         x(8) = x(1) + uniform(rng, -60.0, 60.0);
         x(9) = uniform(rng, 0.0, 5.0);
         return x;
       }});
  static const CameraModel camera =
      CameraModel::pinhole(800.0, 1280, 720, Pose(Vec3(1.5, 0.0, 1.4), 0.0, 0.0));
  for (Variant v : {Variant::kPlanar, Variant::kSpatial}) {
    const int n = state_dim(v);
    const std::string suffix = v == Variant::kPlanar ? "_2d" : "_3d";
    cases.push_back(
        {"camera_point" + suffix,
         [v, n](const Eigen::VectorXd& x) -> Eigen::VectorXd {
           return point_camera_predict(v, x.head(n), camera, x.tail<3>());
         },
         [v, n](const Eigen::VectorXd& x) {
           return point_camera_jacobian(v, x.head(n), camera, x.tail<3>());
         },
         [v, n](std::mt19937_64& rng) {
           Eigen::VectorXd x(n + 3);
           x.head(n) = sample_state(v, rng);
           const Vec3 ahead(uniform(rng, 8.0, 60.0), uniform(rng, -5.0, 5.0), uniform(rng, 0.0, 4.0));
           x.tail<3>() = vehicle_to_world(state_pose(v, x.head(n)), ahead);
           return x;
         }});
  }
  for (Variant v : {Variant::kPlanar, Variant::kSpatial}) {
    const std::string suffix = v == Variant::kPlanar ? "_2d" : "_3d";
    cases.push_back({"odometry" + suffix,
                     [v, params](const Eigen::VectorXd& s) { return odometry_predict(v, s, params); },
                     [v, params](const Eigen::VectorXd& s) { return odometry_jacobian(v, s, params); },
                     [v](std::mt19937_64& rng) { return sample_state(v, rng); }});
  }
  return cases;
}

std::vector<JacobianCase> perturbed_jacobian_cases(double delta) {
  std::vector<JacobianCase> cases = model_jacobian_cases();
  for (auto& c : cases) {
    auto analytic = c.analytic;
    c.analytic = [analytic, delta](const Eigen::VectorXd& x) {
      Eigen::MatrixXd j = analytic(x);
      j(0, 0) += delta;
      return j;
    };
  }
  return cases;
}

CheckResult check_fusion_equivalence(int systems, std::uint64_t seed, double tolerance) {
  CheckResult r{"dkff_vs_centralized", 0, 0.0, tolerance, false, ""};
  std::mt19937_64 rng(seed);
  try {
    for (int k = 0; k < systems; ++k) {
      const int n = uniform_int(rng, 4, 13);
      const int filters = uniform_int(rng, 2, 5);
      StateEstimate prior{random_matrix(rng, n, 1), random_spd(rng, n, 0.5)};
      std::vector<Linearization> all;
      std::vector<StateEstimate> locals;
      for (int f = 0; f < filters; ++f) {
        std::vector<Linearization> mine;
        const int count = uniform_int(rng, 1, 3);
        for (int c = 0; c < count; ++c) {
          const int m = uniform_int(rng, 1, 3);
          Linearization lin;
          lin.H = random_matrix(rng, m, n);
          lin.R = random_spd(rng, m, 0.1);
          const Eigen::VectorXd z = random_matrix(rng, m, 1);
          lin.innovation = z - lin.H * prior.mean;
          mine.push_back(lin);
          all.push_back(lin);
        }
        locals.push_back(local_update(prior, mine));
      }
      const StateEstimate fused = master_fuse(prior, locals);
      const StateEstimate central = centralized_update(prior, all);
      const double err =
          std::max(max_abs(fused.mean - central.mean), max_abs(fused.cov - central.cov));
      record(r, err, "system " + std::to_string(k) + " (n=" + std::to_string(n) +
                         ", filters=" + std::to_string(filters) + ")");
      ++r.cases;
    }
  } catch (const std::exception& e) {
    r.detail = e.what();
    r.worst = INFINITY;
  }
  r.passed = r.detail.empty() && r.worst <= tolerance;
  return r;
}

namespace {

double hesse_difference(const HesseLine& a, const HesseLine& b) {
  const Vec2 d = hesse_residual(a, b);
  return std::max(std::abs(d(0)) / (1.0 + std::abs(a.rho)), std::abs(d(1)));
}

double incidence(const Vec3& l, const Vec3& x) { return std::abs(l.dot(x)) / (l.norm() * x.norm()); }

}  // namespace

CheckResult check_line_incidence(int pairs, std::uint64_t seed, double tolerance) {
  CheckResult r{"line_incidence", 0, 0.0, tolerance, false, ""};
  std::mt19937_64 rng(seed);
  int attempts = 0;
  while (r.cases < pairs && attempts < 4 * pairs) {
    ++attempts;
    try {
      const CameraModel camera = CameraModel::pinhole(
          uniform(rng, 300.0, 1500.0), uniform_int(rng, 640, 1920), uniform_int(rng, 480, 1080),
          Pose(Vec3(uniform(rng, -1.0, 2.0), uniform(rng, -1.0, 1.0), uniform(rng, 0.5, 2.0)),
               uniform(rng, -0.3, 0.3), uniform(rng, -0.2, 0.2)));
      const Pose vehicle(Vec3(uniform(rng, -1000.0, 1000.0), uniform(rng, -1000.0, 1000.0),
                              uniform(rng, -50.0, 50.0)),
                         uniform(rng, -kPi, kPi), uniform(rng, -0.2, 0.2));
      auto world_point = [&] {
        const Vec3 p(uniform(rng, 3.0, 80.0), uniform(rng, -20.0, 20.0), uniform(rng, -3.0, 10.0));
        return Vec4(vehicle_to_world(vehicle, p).homogeneous());
      };
      const Vec4 a = world_point();
      const Vec4 b = world_point();
      const Mat34 P = projection_matrix(camera, vehicle);
      const PluckerLine L = plucker_from_points(a, b);
      const Vec3 l = project_line(P, L).l;
      const std::string id = "pair " + std::to_string(r.cases);

      const double scale = max_abs(L.L);
      record(r, max_abs(L.L + L.L.transpose()) / scale, id + ": not skew-symmetric");
      const Eigen::Vector4d sv = Eigen::JacobiSVD<Mat4>(L.L).singularValues();
      record(r, sv(2) / sv(0), id + ": rank above 2");
      if (std::abs(sv(1) - sv(0)) > 1e-6 * sv(0)) record(r, INFINITY, id + ": rank below 2");

      const double t = uniform(rng, -2.0, 3.0);
      for (const Vec4& X : {a, b, Vec4(a + t * (b - a))}) {
        record(r, incidence(l, P * X), id + ": projected point off the projected line");
      }
      const Vec4 plane = P.transpose() * l;
      for (const Vec4& X : {a, b}) {
        record(r, std::abs(plane.dot(X)) / (plane.norm() * X.norm()),
               id + ": back-projected plane misses the 3D line");
      }

      const HesseLine h = line_to_hesse(HomogeneousLine2D{l});
      const double s = uniform(rng, 0.01, 100.0) * (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0);
      record(r, hesse_difference(h, line_to_hesse(project_line(P, PluckerLine{s * L.L}))),
             id + ": not invariant to Plucker scale");
      record(r, hesse_difference(h, line_to_hesse(project_line(Mat34(s * P), L))),
             id + ": not invariant to camera matrix scale");
      record(r, hesse_difference(h, line_to_hesse(project_line(P, plucker_from_points(s * a, b)))),
             id + ": not invariant to homogeneous point scale");
      record(r, hesse_difference(h, line_to_hesse(project_line(P, plucker_from_points(b, a)))),
             id + ": not invariant to endpoint order");
      ++r.cases;
    } catch (const Error& e) {
      // Segments through the camera center or lines imaging at infinity are
      // valid rejections; redraw.
      if (e.kind() != ErrorKind::kThroughCameraCenter && e.kind() != ErrorKind::kLineAtInfinity &&
          e.kind() != ErrorKind::kDegeneratePoints) {
        r.detail = e.what();
        r.worst = INFINITY;
        break;
      }
    }
  }
  if (r.cases < pairs && r.detail.empty()) r.detail = "too many degenerate draws";
  r.passed = r.detail.empty() && r.worst <= tolerance;
  return r;
}

std::vector<CheckResult> run_selftest(const SelftestOptions& options) {
  std::vector<CheckResult> results;
  const auto cases = options.jacobian_perturbation != 0.0
                         ? perturbed_jacobian_cases(options.jacobian_perturbation)
                         : model_jacobian_cases();
  std::uint64_t seed = options.seed;
  for (const auto& c : cases) {
    results.push_back(check_jacobian(c, options.jacobian_states, seed++));
  }
  results.push_back(check_fusion_equivalence(options.fusion_systems, seed++));
  results.push_back(check_line_incidence(options.incidence_pairs, seed++));
  return results;
}

std::string format_check(const CheckResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s %-22s %6d cases, worst %.3e (tolerance %.0e)",
                r.passed ? "PASS" : "FAIL", r.name.c_str(), r.cases, r.worst, r.tolerance);
  std::string line = buf;
  if (!r.detail.empty()) line += ": " + r.detail;
  return line;
}

}  // namespace dkff
