#include "dkff/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "dkff/angles.hpp"
#include "dkff/error.hpp"
#include "dkff/random.hpp"

namespace dkff {

namespace {

constexpr int kSubsteps = 10;
constexpr std::uint64_t kInitStream = 100;

const ControlPoint& control_at(const std::vector<ControlPoint>& control, double t) {
  auto it = std::upper_bound(control.begin(), control.end(), t,
                             [](double v, const ControlPoint& c) { return v < c.t; });
  return it == control.begin() ? control.front() : *(it - 1);
}

struct Planar {
  double x, y, yaw;
};

Planar horizontal_rate(const Map& map, const Planar& s, double speed, double steer,
                       double wheelbase) {
  const double grade = locate_on_road(map, Vec2(s.x, s.y), s.yaw).slope;
  const double v = speed * std::sqrt(1.0 + grade * grade);  // along the road surface
  return {speed * std::cos(s.yaw), speed * std::sin(s.yaw), v / wheelbase * std::tan(steer)};
}

Planar rk4(const Map& map, const Planar& s, double h, double speed, double steer, double wheelbase) {
  auto add = [](const Planar& a, const Planar& k, double f) {
    return Planar{a.x + f * k.x, a.y + f * k.y, a.yaw + f * k.yaw};
  };
  const Planar k1 = horizontal_rate(map, s, speed, steer, wheelbase);
  const Planar k2 = horizontal_rate(map, add(s, k1, h / 2), speed, steer, wheelbase);
  const Planar k3 = horizontal_rate(map, add(s, k2, h / 2), speed, steer, wheelbase);
  const Planar k4 = horizontal_rate(map, add(s, k3, h), speed, steer, wheelbase);
  return {s.x + h / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x),
          s.y + h / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y),
          s.yaw + h / 6 * (k1.yaw + 2 * k2.yaw + 2 * k3.yaw + k4.yaw)};
}

double normal(std::uint64_t seed, SensorKind kind, int tick, FeatureId feature, int component) {
  return standard_normal(NoiseKey{seed, static_cast<std::uint64_t>(kind) + 1,
                                  static_cast<std::uint64_t>(tick),
                                  static_cast<std::uint64_t>(feature + 1),
                                  static_cast<std::uint64_t>(component)});
}

// Shortest image segment worth fitting a line to.
constexpr double kMinLinePixels = 40.0;

// Liang-Barsky clip of segment ab to the image rectangle.
bool clip_to_image(Vec2& a, Vec2& b, int width, int height) {
  const Vec2 d = b - a;
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {a.x(), width - a.x(), a.y(), height - a.y()};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) t0 = std::max(t0, r);
    else t1 = std::min(t1, r);
    if (t0 > t1) return false;
  }
  const Vec2 start = a;
  a = start + t0 * d;
  b = start + t1 * d;
  return true;
}

// Line through two pixels packed as (ax, ay, bx, by), rho >= 0.
HesseLine hesse_through(const Eigen::Vector4d& e) {
  return line_to_hesse(HomogeneousLine2D(Vec3(e(0), e(1), 1.0).cross(Vec3(e(2), e(3), 1.0))));
}

// d(rho, gamma)/d(endpoints) by central differences, on the nominal branch.
Eigen::Matrix<double, 2, 4> hesse_endpoint_jacobian(const Eigen::Vector4d& e) {
  const HesseLine nominal = hesse_through(e);
  auto branch = [&](const HesseLine& h) {
    if (std::abs(wrap_angle(h.gamma - nominal.gamma)) > 0.5 * std::numbers::pi) {
      return Vec2(-h.rho, wrap_angle(h.gamma + std::numbers::pi));
    }
    return Vec2(h.rho, h.gamma);
  };
  Eigen::Matrix<double, 2, 4> j;
  const double step = 1e-3;
  for (int i = 0; i < 4; ++i) {
    Eigen::Vector4d hi = e, lo = e;
    hi(i) += step;
    lo(i) -= step;
    const Vec2 up = branch(hesse_through(hi)), down = branch(hesse_through(lo));
    j.col(i) = Vec2(up(0) - down(0), wrap_angle(up(1) - down(1))) / (2 * step);
  }
  return j;
}

int emission_interval(const SensorConfig& c, double dt) {
  return std::max(1, static_cast<int>(std::lround(1.0 / (c.rate * dt))));
}

template <typename T, typename Distance>
void keep_nearest(std::vector<T>& items, int cap, const Distance& distance) {
  if (cap <= 0 || static_cast<int>(items.size()) <= cap) return;
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < items.size(); ++i) order.emplace_back(distance(items[i]), i);
  std::sort(order.begin(), order.end());
  std::vector<std::size_t> keep;
  for (int i = 0; i < cap; ++i) keep.push_back(order[i].second);
  std::sort(keep.begin(), keep.end());
  std::vector<T> out;
  for (std::size_t i : keep) out.push_back(items[i]);
  items = std::move(out);
}

Eigen::Matrix2d floor_noise(const Eigen::Matrix2d& r, double floor) {
  return 0.5 * (r + r.transpose()) + floor * Eigen::Matrix2d::Identity();
}

Eigen::MatrixXd diag(std::initializer_list<double> variances, double floor) {
  Eigen::VectorXd d(variances.size());
  int i = 0;
  for (double v : variances) d(i++) = std::max(v, floor);
  return d.asDiagonal();
}

Eigen::VectorXd to_variant(Variant variant, const State3D& s) {
  if (variant == Variant::kSpatial) return s;
  const auto& l = kSpatialLayout;
  Eigen::VectorXd p(7);
  p << s(l.x), s(l.y), s(l.vx), s(l.vy), s(l.yaw), s(l.yaw_rate), s(l.steer);
  return p;
}

}  // namespace

Pose Truth::pose(int tick) const {
  const State3D& s = states.at(tick);
  const auto& l = kSpatialLayout;
  return Pose(Vec3(s(l.x), s(l.y), s(l.z)), s(l.yaw), s(l.pitch));
}

Truth simulate_truth(const Scenario& scenario, const Map& map) {
  const double dt = scenario.dt;
  const int n = scenario.ticks();
  const double wheelbase = scenario.vehicle.wheelbase;
  const auto& control = scenario.control;
  const auto& l = kSpatialLayout;

  std::vector<Planar> planar{{scenario.start_position.x(), scenario.start_position.y(),
                              scenario.start_yaw}};
  for (int k = 0; k < n; ++k) {
    const double t0 = k * dt, t1 = (k + 1) * dt;
    std::vector<double> cuts{t0};
    for (const auto& c : control) {
      if (c.t > t0 && c.t < t1) cuts.push_back(c.t);
    }
    cuts.push_back(t1);
    Planar s = planar.back();
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const ControlPoint& c = control_at(control, cuts[i]);
      const double span = cuts[i + 1] - cuts[i];
      const int steps = std::max(1, static_cast<int>(std::ceil(span / (dt / kSubsteps) - 1e-9)));
      for (int j = 0; j < steps; ++j) s = rk4(map, s, span / steps, c.speed, c.steer, wheelbase);
    }
    planar.push_back(s);
  }

  Truth truth;
  truth.dt = dt;
  std::vector<double> pitch(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double t = k * dt;
    const Planar& p = planar[k];
    const ControlPoint& c = control_at(control, t);
    const Vec2 xy(p.x, p.y);
    const RoadPoint road = locate_on_road(map, xy, p.yaw);
    const VerticalProfile profile =
        local_vertical_profile(map, xy, p.yaw, scenario.vehicle.preview_distance);
    pitch[k] = std::atan(road.slope);
    const double v = c.speed / std::cos(pitch[k]);

    State3D s = State3D::Zero();
    s(l.x) = p.x;
    s(l.y) = p.y;
    s(l.z) = road.height;
    s(l.vx) = c.speed * std::cos(p.yaw);
    s(l.vy) = c.speed * std::sin(p.yaw);
    s(l.vz) = c.speed * road.slope;
    s(l.yaw) = wrap_angle(p.yaw);
    s(l.yaw_rate) = v / wheelbase * std::tan(c.steer);
    s(l.pitch) = pitch[k];
    s(l.steer) = c.steer;
    s(l.c0) = profile.c0;
    s(l.c1) = profile.c1;
    truth.time.push_back(t);
    truth.states.push_back(s);
    truth.height_ahead.push_back(profile.height_ahead);
  }
  for (int k = 0; k <= n; ++k) {
    const int a = std::max(0, k - 1), b = std::min(n, k + 1);
    truth.states[k](l.pitch_rate) = b > a ? (pitch[b] - pitch[a]) / ((b - a) * dt) : 0.0;
  }
  return truth;
}

MeasurementStream simulate_measurements(const Scenario& scenario, const Map& map,
                                        const Truth& truth, std::uint64_t seed) {
  const double floor = scenario.noise_floor;
  const int n = truth.ticks();
  MeasurementStream stream(n + 1);
  const auto& sgps = scenario.sensor(SensorKind::kGps);
  const auto& sodo = scenario.sensor(SensorKind::kOdometry);
  const auto& s3d = scenario.sensor(SensorKind::kPoint3D);
  const auto& scp = scenario.sensor(SensorKind::kCameraPoint);
  const auto& scl = scenario.sensor(SensorKind::kCameraLine);
  const OdometryNoise& on = scenario.odometry_noise;
  const CameraModel& camera = scenario.camera;

  for (int k = 0; k <= n; ++k) {
    const double t = truth.time[k];
    const State3D& s = truth.states[k];
    const Pose pose = truth.pose(k);
    auto& out = stream[k];
    auto due = [&](const SensorConfig& c) { return c.enabled && k % emission_interval(c, scenario.dt) == 0; };

    if (due(sgps)) {
      const double sigma = std::sqrt(sgps.variance);
      GpsFix fix;
      for (int i = 0; i < 3; ++i) {
        fix.position(i) = pose.position(i) + sigma * normal(seed, SensorKind::kGps, k, -1, i);
      }
      out.push_back({t, fix, diag({sgps.variance, sgps.variance, sgps.variance}, floor)});
    }

    if (due(sodo)) {
      Eigen::VectorXd z = odometry_predict(Variant::kSpatial, s, scenario.vehicle);
      const double var[5] = {on.speed, on.yaw_rate, on.pitch_rate, on.steer, on.height};
      for (int i = 0; i < 5; ++i) z(i) += std::sqrt(var[i]) * normal(seed, SensorKind::kOdometry, k, -1, i);
      OdometryBundle b{z(0), z(1), z(2), wrap_angle(z(3)), z(4)};
      out.push_back({t, b, diag({var[0], var[1], var[2], var[3], var[4]}, floor)});
    }

    if (due(s3d)) {
      auto vis = visible_landmarks(map, pose, scenario.point3d_spec);
      keep_nearest(vis, s3d.max_features, [&](const VisibleLandmark& v) {
        return (v.position - pose.position).norm();
      });
      const double sigma = std::sqrt(s3d.variance);
      for (const auto& v : vis) {
        Point3DObservation o{v.id, world_to_vehicle(pose, v.position)};
        for (int i = 0; i < 3; ++i) o.point(i) += sigma * normal(seed, SensorKind::kPoint3D, k, v.id, i);
        out.push_back({t, o, diag({s3d.variance, s3d.variance, s3d.variance}, floor)});
      }
    }

    if (due(scp)) {
      auto vis = visible_camera_landmarks(map, pose, camera, scp.max_range);
      keep_nearest(vis, scp.max_features, [&](const VisibleLandmark& v) {
        return world_to_optical(camera, pose, v.position).norm();
      });
      const Mat34 p = projection_matrix(camera, pose);
      for (const auto& v : vis) {
        const double range = world_to_optical(camera, pose, v.position).norm();
        const double var = scp.variance * std::pow(range / scenario.camera_range_ref, 2);
        CameraPointObservation o{v.id, project_point(p, v.position.homogeneous())};
        for (int i = 0; i < 2; ++i) {
          o.pixel(i) += std::sqrt(var) * normal(seed, SensorKind::kCameraPoint, k, v.id, i);
        }
        out.push_back({t, o, diag({var, var}, floor)});
      }
    }

    if (due(scl)) {
      const Mat34 p = projection_matrix(camera, pose);
      struct Detected {
        VisibleSegment segment;
        Vec2 a, b;
      };
      std::vector<Detected> vis;
      for (const auto& v : visible_segments(map, pose, camera, scl.max_range)) {
        Vec2 a = project_point(p, v.a.homogeneous());
        Vec2 b = project_point(p, v.b.homogeneous());
        if (clip_to_image(a, b, camera.width, camera.height) && (b - a).norm() >= kMinLinePixels) {
          vis.push_back({v, a, b});
        }
      }
      const Vec3 cam_world = vehicle_to_world(pose, camera.mount.position);
      keep_nearest(vis, scl.max_features, [&](const Detected& d) {
        const Vec3 dir = d.segment.b - d.segment.a;
        const double u = std::clamp((cam_world - d.segment.a).dot(dir) / dir.squaredNorm(), 0.0, 1.0);
        return (d.segment.a + u * dir - cam_world).norm();
      });
      for (const auto& [v, a, b] : vis) {
        // Pixel noise on the detected endpoints, carried to (rho, gamma) to
        // first order and drawn there.
        const Eigen::Vector4d ends(a.x(), a.y(), b.x(), b.y());
        const Eigen::Matrix<double, 2, 4> j = hesse_endpoint_jacobian(ends);
        const Eigen::Matrix2d r = floor_noise(scl.variance * j * j.transpose(), floor);
        const Eigen::Matrix2d chol = Eigen::LLT<Eigen::Matrix2d>(r).matrixL();
        const Vec2 w = chol * Vec2(normal(seed, SensorKind::kCameraLine, k, v.id, 0),
                                   normal(seed, SensorKind::kCameraLine, k, v.id, 1));
        HesseLine h = hesse_through(ends);
        h.rho += w(0);
        h.gamma = wrap_angle(h.gamma + w(1));
        Eigen::Matrix2d cov = r;
        if (h.rho < 0.0) {
          // Same line on the other branch: rho changes sign, so does its correlation with gamma.
          h = {wrap_angle(h.gamma + std::numbers::pi), -h.rho};
          cov(0, 1) = cov(1, 0) = -r(0, 1);
        }
        out.push_back({t, CameraLineObservation{v.id, h}, cov});
      }
    }
  }
  return stream;
}

Simulation simulate(const Scenario& scenario, const Map& map) {
  Simulation sim;
  sim.truth = simulate_truth(scenario, map);
  sim.measurements = simulate_measurements(scenario, map, sim.truth, scenario.seed);
  return sim;
}

StateEstimate initial_estimate(const Scenario& scenario, const Truth& truth,
                               const MeasurementStream& stream, std::uint64_t seed) {
  const Variant variant = scenario.variant;
  const auto& l = layout(variant);
  const int n = l.dim;
  StateEstimate e;
  if (scenario.init.mode == InitMode::kDiffuse) {
    const GpsFix* fix = nullptr;
    for (const auto& m : stream.at(0)) {
      if (m.kind() == SensorKind::kGps) fix = &std::get<GpsFix>(m.data);
    }
    if (!fix) throw Error(ErrorKind::kInvalidArgument, "diffuse initialization needs a GPS fix at t = 0");
    e.mean = Eigen::VectorXd::Zero(n);
    e.mean(l.x) = fix->position.x();
    e.mean(l.y) = fix->position.y();
    e.cov = 1e6 * Eigen::MatrixXd::Identity(n, n);
    return e;
  }

  const InitConfig& c = scenario.init;
  Eigen::VectorXd sigma(n);
  for (int i = 0; i < n; ++i) {
    if (i == l.x || i == l.y || i == l.z) sigma(i) = c.position;
    else if (i == l.vx || i == l.vy || i == l.vz) sigma(i) = c.velocity;
    else if (i == l.yaw || i == l.pitch || i == l.steer) sigma(i) = c.angle;
    else if (i == l.yaw_rate || i == l.pitch_rate) sigma(i) = c.rate;
    else if (i == l.c0) sigma(i) = c.curvature;
    else sigma(i) = c.curvature_rate;
  }
  e.mean = to_variant(variant, truth.states.at(0));
  for (int i = 0; i < n; ++i) {
    e.mean(i) += sigma(i) * standard_normal(NoiseKey{seed, kInitStream, 0, 0, static_cast<std::uint64_t>(i)});
  }
  wrap_state_angles(variant, e.mean);
  e.cov = sigma.array().square().max(1e-10).matrix().asDiagonal();
  return e;
}

namespace {

bool feature_based(SensorKind k) {
  return k == SensorKind::kPoint3D || k == SensorKind::kCameraPoint || k == SensorKind::kCameraLine;
}

// The planar filter carries no height or pitch; map-feature models sit it on
// the road surface instead.
GroundFn road_surface(const Map& map) {
  return [&map](const Vec2& xy, double yaw) -> Vec2 {
    try {
      const RoadPoint road = locate_on_road(map, xy, yaw);
      return {road.height, std::atan(road.slope)};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kOffMap) throw;
      return Vec2::Zero();
    }
  };
}

MeasurementContext context_for(const Scenario& scenario, const Map& map, SensorKind kind, FeatureId id) {
  MeasurementContext ctx;
  ctx.camera = &scenario.camera;
  if (scenario.variant == Variant::kPlanar) ctx.ground = road_surface(map);
  if (kind == SensorKind::kCameraLine) {
    const auto [a, b] = map.segment(id);
    ctx.segment_a = a;
    ctx.segment_b = b;
  } else {
    const Landmark* lm = map.find_landmark(static_cast<int>(id));
    if (!lm) throw Error(ErrorKind::kInvalidArgument, "unknown landmark id " + std::to_string(id));
    ctx.landmark = lm->position;
  }
  return ctx;
}

// Nearest-neighbour association of one sensor kind's detections against the
// map features visible from the current estimate.
std::vector<Observation> associate_nn(const Scenario& scenario, const Map& map, const StateEstimate& prior,
                                      SensorKind kind, const std::vector<const Measurement*>& ms) {
  const Variant variant = scenario.variant;
  Pose pose = state_pose(variant, prior.mean);
  if (variant == Variant::kPlanar) {
    const Vec2 surface = road_surface(map)(pose.position.head<2>(), pose.yaw);
    pose = Pose(Vec3(pose.position.x(), pose.position.y(), surface(0)), pose.yaw, surface(1));
  }
  std::vector<std::pair<FeatureId, MeasurementContext>> features;
  if (kind == SensorKind::kPoint3D) {
    SensorSpec spec = scenario.point3d_spec;
    spec.max_range += 5.0;
    for (const auto& v : visible_landmarks(map, pose, spec)) {
      features.emplace_back(v.id, context_for(scenario, map, kind, v.id));
    }
  } else if (kind == SensorKind::kCameraPoint) {
    for (const auto& v : visible_camera_landmarks(map, pose, scenario.camera,
                                                  scenario.sensor(kind).max_range + 5.0)) {
      features.emplace_back(v.id, context_for(scenario, map, kind, v.id));
    }
  } else {
    for (const auto& v : visible_segments(map, pose, scenario.camera, scenario.sensor(kind).max_range + 5.0)) {
      features.emplace_back(v.id, context_for(scenario, map, kind, v.id));
    }
  }

  std::vector<Candidate> candidates;
  std::vector<MeasurementContext> contexts;
  for (const auto& [id, ctx] : features) {
    try {
      Measurement probe;
      probe.data = ms.front()->data;
      probe.noise = ms.front()->noise;
      probe.set_feature(id);
      const Linearization lin = linearize(probe, variant, prior.mean, scenario.vehicle, ctx);
      Eigen::VectorXd predicted = predict(kind, variant, prior.mean, scenario.vehicle, ctx);
      candidates.push_back({id, predicted, lin.H * prior.cov * lin.H.transpose()});
      contexts.push_back(ctx);
    } catch (const Error&) {
    }
  }
  std::vector<Detection> detections;
  for (const Measurement* m : ms) {
    detections.push_back({measured_vector(*m, variant), measured_noise(*m, variant), m->feature()});
  }
  ResidualFn residual;
  if (kind == SensorKind::kCameraLine) {
    residual = [](const Eigen::VectorXd& z, const Eigen::VectorXd& p) -> Eigen::VectorXd {
      return line_residual(HesseLine{z(1), z(0)}, HesseLine{p(1), p(0)});
    };
  }
  const int dim = measurement_dim(kind, variant);
  std::vector<Observation> out;
  for (const auto& a : associate(AssociationMode::kNearestNeighbor, detections, candidates,
                                 chi2_threshold(dim, 0.99), residual)) {
    Observation o{*ms[a.detection], {}};
    o.measurement.set_feature(a.feature);
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (candidates[j].id == a.feature) o.context = contexts[j];
    }
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace

Estimates run_filter(const Scenario& scenario, const Map& map, const Truth& truth,
                     const MeasurementStream& stream, std::uint64_t seed) {
  const Variant variant = scenario.variant;
  const auto& l = layout(variant);
  const int n = static_cast<int>(stream.size()) - 1;
  Estimates est;
  FilterBank bank(scenario.filter_config(), initial_estimate(scenario, truth, stream, seed));

  auto record = [&](double t) {
    const auto& m = bank.estimate().mean;
    est.time.push_back(t);
    est.position.push_back(Vec3(m(l.x), m(l.y), l.z >= 0 ? m(l.z) : 0.0));
    est.yaw.push_back(m(l.yaw));
    est.cov_trace.push_back(bank.estimate().cov.trace());
  };

  for (int k = 1; k <= n; ++k) {
    const double t = k * scenario.dt;
    if (est.failed) {
      record(t);
      continue;
    }
    try {
      bank.predict(scenario.dt);
      std::vector<Observation> obs;
      std::vector<const Measurement*> pending[kSensorKindCount];
      for (const auto& m : stream[k]) {
        const SensorKind kind = m.kind();
        if (!feature_based(kind)) {
          obs.push_back({m, {}});
        } else if (scenario.association == AssociationMode::kOracle) {
          obs.push_back({m, context_for(scenario, map, kind, m.feature())});
        } else {
          pending[static_cast<int>(kind)].push_back(&m);
        }
      }
      for (int kk = 0; kk < kSensorKindCount; ++kk) {
        if (pending[kk].empty()) continue;
        auto matched = associate_nn(scenario, map, bank.estimate(), static_cast<SensorKind>(kk), pending[kk]);
        est.unassociated += static_cast<long>(pending[kk].size() - matched.size());
        for (auto& o : matched) obs.push_back(std::move(o));
      }
      const CycleStats stats = bank.update(obs);
      est.accepted += stats.accepted;
      est.gated += stats.gated;
      est.unusable += stats.unusable;
    } catch (const Error& e) {
      est.failed = true;
      est.failure = e.what();
    }
    record(t);
  }
  return est;
}

RunResult metrics(const Truth& truth, const Estimates& estimates, Variant variant) {
  const int n = truth.ticks();
  if (static_cast<int>(estimates.position.size()) != n || static_cast<int>(estimates.yaw.size()) != n) {
    throw Error(ErrorKind::kLengthMismatch, "estimate trajectory has " +
                                                std::to_string(estimates.position.size()) +
                                                " ticks, truth has " + std::to_string(n));
  }
  const auto& l = kSpatialLayout;
  RunResult r;
  r.estimates = estimates;
  RunSummary& s = r.summary;
  s.ticks = n;
  for (int k = 1; k <= n; ++k) {
    const State3D& x = truth.states[k];
    TickRecord rec;
    rec.t = truth.time[k];
    rec.truth_position = Vec3(x(l.x), x(l.y), x(l.z));
    rec.truth_yaw = x(l.yaw);
    rec.est_position = estimates.position[k - 1];
    rec.est_yaw = estimates.yaw[k - 1];
    const Vec2 e = (rec.est_position - rec.truth_position).head<2>();
    const double c = std::cos(rec.truth_yaw), sn = std::sin(rec.truth_yaw);
    rec.longitudinal = e.x() * c + e.y() * sn;
    rec.lateral = -e.x() * sn + e.y() * c;
    s.mean_abs_lateral += std::abs(rec.lateral);
    s.mean_abs_longitudinal += std::abs(rec.longitudinal);
    s.max_abs_lateral = std::max(s.max_abs_lateral, std::abs(rec.lateral));
    s.max_abs_longitudinal = std::max(s.max_abs_longitudinal, std::abs(rec.longitudinal));
    r.records.push_back(rec);
  }
  if (n > 0) {
    s.mean_abs_lateral /= n;
    s.mean_abs_longitudinal /= n;
    const TickRecord& last = r.records.back();
    s.final_position_error = variant == Variant::kPlanar
                                 ? (last.est_position - last.truth_position).head<2>().norm()
                                 : (last.est_position - last.truth_position).norm();
  }
  s.diverged = estimates.failed || !(s.max_abs_lateral <= kDivergenceLateral);
  return r;
}

RunResult run_seed(const Scenario& scenario, const Map& map, const Truth& truth, std::uint64_t seed) {
  const MeasurementStream stream = simulate_measurements(scenario, map, truth, seed);
  return metrics(truth, run_filter(scenario, map, truth, stream, seed), scenario.variant);
}

RunResult run_scenario(const Scenario& scenario, const Map& map) {
  const Truth truth = simulate_truth(scenario, map);
  return run_seed(scenario, map, truth, scenario.seed);
}

}  // namespace dkff
