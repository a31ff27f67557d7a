#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dkff/error.hpp"
#include "dkff/numeric_diff.hpp"
#include "dkff/vehicle_dynamics.hpp"

using namespace dkff;

namespace {

constexpr double kPi = std::numbers::pi;

State2D planar(double vx, double vy, double yaw, double steer) {
  State2D s = State2D::Zero();
  s(2) = vx;
  s(3) = vy;
  s(4) = yaw;
  s(6) = steer;
  return s;
}

State3D spatial_from(const State2D& p) {
  State3D s = State3D::Zero();
  s(0) = p(0);
  s(1) = p(1);
  s(3) = p(2);
  s(4) = p(3);
  s(6) = p(4);
  s(7) = p(5);
  s(10) = p(6);
  return s;
}

// Planar index -> spatial index.
constexpr int kEmbed[7] = {0, 1, 3, 4, 6, 7, 10};

VehicleParams wheelbase(double L) {
  VehicleParams p;
  p.wheelbase = L;
  return p;
}

ProcessNoise zero_noise(Variant v) { return {Eigen::VectorXd::Zero(state_dim(v))}; }

}  // namespace

TEST(Speed, Examples) {
  EXPECT_DOUBLE_EQ(speed(planar(3, 4, 0, 0)), 5.0);
  EXPECT_DOUBLE_EQ(speed(State2D(State2D::Zero())), 0.0);
  State3D s = State3D::Zero();
  s(3) = 1;
  s(5) = 1;
  EXPECT_DOUBLE_EQ(speed(s), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(speed(Variant::kSpatial, s), std::sqrt(2.0));
}

TEST(Params, Validate) {
  EXPECT_NO_THROW(VehicleParams{}.validate());
  EXPECT_THROW(wheelbase(0.0).validate(), Error);
  VehicleParams p;
  p.preview_distance = -1;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Derivative2D, Examples) {
  const VehicleParams p;
  State2D d = derivative_2d(planar(10, 0, 0, 0), p);
  EXPECT_DOUBLE_EQ(d(0), 10.0);
  EXPECT_DOUBLE_EQ(d(1), 0.0);
  EXPECT_DOUBLE_EQ(d(4), 0.0);
  d = derivative_2d(planar(0, 10, kPi / 2, 0), p);
  EXPECT_NEAR(d(0), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(d(1), 10.0);
  d = derivative_2d(planar(10, 0, 0, 0.1), wheelbase(2.5));
  EXPECT_NEAR(d(4), 10.0 / 2.5 * std::tan(0.1), 1e-15);
  EXPECT_NEAR(d(4), 0.40134, 1e-5);
  // Velocities, yaw rate and steering are noise driven.
  EXPECT_EQ(d(2), 0.0);
  EXPECT_EQ(d(3), 0.0);
  EXPECT_EQ(d(5), 0.0);
  EXPECT_EQ(d(6), 0.0);
}

TEST(Derivative2D, SteeringSingularity) {
  try {
    derivative_2d(planar(10, 0, 0, kPi / 2), VehicleParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSteeringSingularity);
  }
}

TEST(Derivative3D, Examples) {
  const VehicleParams p;
  State3D s = State3D::Zero();
  s(3) = 10;
  s(11) = 0.01;
  EXPECT_NEAR(derivative_3d(s, p)(8), 0.1, 1e-15);
  s(11) = 0.0;
  s(12) = 0.001;
  EXPECT_NEAR(derivative_3d(s, p)(11), 0.01, 1e-15);
}

TEST(Derivative3D, FlatCaseMatchesPlanar) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  const VehicleParams p;
  for (int i = 0; i < 50; ++i) {
    State2D s2 = planar(20 * u(rng), 20 * u(rng), kPi * u(rng), 0.5 * u(rng));
    s2(0) = 100 * u(rng);
    s2(5) = u(rng);
    const State2D d2 = derivative_2d(s2, p);
    const State3D d3 = derivative_3d(spatial_from(s2), p);
    for (int k = 0; k < 7; ++k) EXPECT_NEAR(d2(k), d3(kEmbed[k]), 1e-12 * (1 + std::abs(d2(k))));
    EXPECT_EQ(d3(2), 0.0);
    EXPECT_EQ(d3(5), 0.0);
  }
}

TEST(Jacobian2D, PrintedEntries) {
  const Jacobian2D j = jacobian_2d(planar(10, 0, 0, 0), wheelbase(2.5));
  EXPECT_EQ(j(0, 2), 1.0);
  EXPECT_EQ(j(1, 3), 1.0);
  EXPECT_EQ(j(4, 2), 0.0);
  EXPECT_DOUBLE_EQ(j(4, 6), 4.0);
  // Rows of noise-driven elements are zero.
  for (int r : {2, 3, 5, 6}) EXPECT_EQ(j.row(r).norm(), 0.0);
}

TEST(Jacobian2D, YawRowOffAxis) {
  const State2D s = planar(6, 8, 0.3, 0.2);
  const Jacobian2D j = jacobian_2d(s, wheelbase(2.5));
  EXPECT_NEAR(j(4, 2), 6 / (10 * 2.5) * std::tan(0.2), 1e-15);
  EXPECT_NEAR(j(4, 3), 8 / (10 * 2.5) * std::tan(0.2), 1e-15);
  EXPECT_NEAR(j(4, 6), 10 / 2.5 / std::pow(std::cos(0.2), 2), 1e-12);
}

TEST(Jacobian2D, VelocityPartialsZeroedBelowMinSpeed) {
  const Jacobian2D j = jacobian_2d(planar(0.05, 0, 0, 0.2), VehicleParams{});
  EXPECT_EQ(j(4, 2), 0.0);
  EXPECT_EQ(j(4, 3), 0.0);
}

TEST(Jacobians, MatchFiniteDifferences) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1, 1);
  const VehicleParams p;
  for (int i = 0; i < 200; ++i) {
    State3D s;
    for (int k = 0; k < 13; ++k) s(k) = u(rng);
    s(3) = 5 + 10 * u(rng);
    s(4) = 10 * u(rng);
    s(5) = u(rng);
    s(6) *= kPi;
    s(8) *= 0.2;
    s(10) *= 0.5;
    s(11) *= 0.02;
    s(12) *= 1e-3;
    const Eigen::MatrixXd fd3 = central_difference(
        [&](const Eigen::VectorXd& x) { return derivative(Variant::kSpatial, x, p); }, s, 1e-6);
    const Eigen::MatrixXd an3 = jacobian_3d(s, p);
    EXPECT_LE(((an3 - fd3).cwiseAbs().array() / fd3.cwiseAbs().cwiseMax(1.0).array()).maxCoeff(), 1e-5);

    State2D s2;
    for (int k = 0; k < 7; ++k) s2(k) = s(kEmbed[k]);
    const Eigen::MatrixXd fd2 = central_difference(
        [&](const Eigen::VectorXd& x) { return derivative(Variant::kPlanar, x, p); }, s2, 1e-6);
    const Eigen::MatrixXd an2 = jacobian_2d(s2, p);
    EXPECT_LE(((an2 - fd2).cwiseAbs().array() / fd2.cwiseAbs().cwiseMax(1.0).array()).maxCoeff(), 1e-5);
  }
}

TEST(Jacobian3D, FlatBlockEmbedsPlanar) {
  const State2D s2 = planar(7, 3, 0.4, 0.15);
  const Jacobian2D j2 = jacobian_2d(s2, VehicleParams{});
  const Jacobian3D j3 = jacobian_3d(spatial_from(s2), VehicleParams{});
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 7; ++c) EXPECT_DOUBLE_EQ(j2(r, c), j3(kEmbed[r], kEmbed[c])) << r << "," << c;
  }
}

TEST(Jacobian3D, PitchRateWrtC0IsSpeed) {
  State3D s = State3D::Zero();
  s(3) = 6;
  s(4) = 8;
  EXPECT_DOUBLE_EQ(jacobian_3d(s, VehicleParams{})(8, 11), 10.0);
}

TEST(Step, ZeroVelocityFixedPoint) {
  for (Variant v : {Variant::kPlanar, Variant::kSpatial}) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(state_dim(v));
    s(0) = 3;
    s(1) = -2;
    const StepResult r = step(v, s, 0.1, zero_noise(v), VehicleParams{});
    EXPECT_EQ(r.state, s);
    EXPECT_TRUE(r.transition.isApprox(Eigen::MatrixXd::Identity(s.size(), s.size()) +
                                      jacobian(v, s, VehicleParams{}) * 0.1));
    EXPECT_EQ(r.process_cov.norm(), 0.0);
  }
}

TEST(Step, StraightDriving) {
  Eigen::VectorXd s = planar(10, 0, 0, 0);
  for (int i = 0; i < 10; ++i) s = step(Variant::kPlanar, s, 0.1, zero_noise(Variant::kPlanar), {}).state;
  EXPECT_NEAR(s(0), 10.0, 1e-9);
  EXPECT_NEAR(s(1), 0.0, 1e-12);
}

TEST(Step, ProcessCovariance) {
  ProcessNoise q{Eigen::VectorXd::LinSpaced(7, 1, 7)};
  const StepResult r = step(Variant::kPlanar, planar(1, 0, 0, 0), 0.2, q, {});
  EXPECT_TRUE(r.process_cov.isApprox(Eigen::MatrixXd((q.density * 0.2).asDiagonal())));
}

TEST(Step, ConstantSteeringAgainstFineReference) {
  const VehicleParams p;
  Eigen::VectorXd coarse = planar(10, 0, 0, 0.1);
  for (int i = 0; i < 100; ++i) coarse = step(Variant::kPlanar, coarse, 0.01, zero_noise(Variant::kPlanar), p).state;
  Eigen::VectorXd fine = planar(10, 0, 0, 0.1);
  for (int i = 0; i < 100000; ++i) fine = step(Variant::kPlanar, fine, 1e-5, zero_noise(Variant::kPlanar), p).state;
  EXPECT_LE((coarse.head<2>() - fine.head<2>()).norm(), 1e-4);
  // Closed form: yaw advances by v/L tan(phi) t.
  EXPECT_NEAR(coarse(4), 10.0 / p.wheelbase * std::tan(0.1), 1e-12);
}

TEST(Step, FourthOrderOnSpatialHill) {
  const VehicleParams p;
  State3D s = State3D::Zero();
  s(3) = 15;
  s(8) = 0.05;
  s(11) = 0.02;
  s(12) = -0.003;
  s(5) = 15 * std::sin(0.05);
  auto advance = [&](double dt, int n) {
    Eigen::VectorXd x = s;
    for (int i = 0; i < n; ++i) x = step(Variant::kSpatial, x, dt, zero_noise(Variant::kSpatial), p).state;
    return x;
  };
  const Eigen::VectorXd ref = advance(1e-4, 4000);
  const double e1 = (advance(0.4, 1) - ref).head<3>().norm();
  const double e2 = (advance(0.2, 2) - ref).head<3>().norm();
  EXPECT_GT(e1, 0.0);
  EXPECT_GE(e1 / e2, 8.0);
  // A single step (local error, O(dt^5)) halves by well over 8x too.
  const Eigen::VectorXd ref_half = advance(1e-4, 2000);
  const double l1 = (advance(0.4, 1) - ref).head<3>().norm();
  const double l2 = (advance(0.2, 1) - ref_half).head<3>().norm();
  EXPECT_GE(l1 / l2, 8.0);
}

TEST(Step, AnglesStayWrapped) {
  Eigen::VectorXd s = planar(10, 0, 3.1, 0.4);
  for (int i = 0; i < 200; ++i) {
    s = step(Variant::kPlanar, s, 0.1, zero_noise(Variant::kPlanar), {}).state;
    EXPECT_GT(s(4), -kPi);
    EXPECT_LE(s(4), kPi);
  }
}

TEST(Step, RejectsBadTimeStep) {
  EXPECT_THROW(step(Variant::kPlanar, planar(1, 0, 0, 0), 0.0, zero_noise(Variant::kPlanar), {}), Error);
  EXPECT_THROW(step(Variant::kPlanar, planar(1, 0, 0, 0), 0.6, zero_noise(Variant::kPlanar), {}), Error);
}

TEST(VerticalHeight, Examples) {
  EXPECT_DOUBLE_EQ(vertical_height(0.02, 0, 10), 1.0);
  EXPECT_DOUBLE_EQ(vertical_height(0, 0, 37), 0.0);
  EXPECT_NEAR(vertical_height(0.02, 0.0006, 10), 1.1, 1e-12);
}

TEST(ProcessNoise, DefaultsValidate) {
  for (Variant v : {Variant::kPlanar, Variant::kSpatial}) {
    const ProcessNoise q = ProcessNoise::defaults(v);
    EXPECT_EQ(q.density.size(), state_dim(v));
    EXPECT_NO_THROW(q.validate(v));
  }
  ProcessNoise bad = ProcessNoise::defaults(Variant::kPlanar);
  bad.density(2) = -1;
  EXPECT_THROW(bad.validate(Variant::kPlanar), Error);
  EXPECT_THROW(ProcessNoise::defaults(Variant::kPlanar).validate(Variant::kSpatial), Error);
}

TEST(StateDifference, WrapsAngles) {
  Eigen::VectorXd a = planar(0, 0, kPi - 0.1, 0), b = planar(0, 0, -kPi + 0.1, 0);
  a(0) = 5;
  const Eigen::VectorXd d = state_difference(Variant::kPlanar, a, b);
  EXPECT_DOUBLE_EQ(d(0), 5.0);
  EXPECT_NEAR(d(4), -0.2, 1e-12);
}

TEST(Layout, Variants) {
  EXPECT_EQ(state_dim(Variant::kPlanar), 7);
  EXPECT_EQ(state_dim(Variant::kSpatial), 13);
  EXPECT_EQ(parse_variant("2d"), Variant::kPlanar);
  EXPECT_EQ(parse_variant("3d"), Variant::kSpatial);
  EXPECT_THROW(parse_variant("4d"), Error);
  EXPECT_TRUE(kPlanarLayout.is_angle(4));
  EXPECT_TRUE(kSpatialLayout.is_angle(8));
  EXPECT_FALSE(kSpatialLayout.is_angle(7));
}
