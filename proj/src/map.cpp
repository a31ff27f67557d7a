#include "dkff/map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <tuple>

#include "dkff/angles.hpp"
#include "dkff/error.hpp"

namespace dkff {

using nlohmann::json;

const char* to_string(LaneRole role) {
  switch (role) {
    case LaneRole::kCenter: return "center";
    case LaneRole::kBoundary: return "boundary";
    case LaneRole::kMarking: return "marking";
  }
  return "boundary";
}

void SensorSpec::validate() const {
  if (!(max_range > 0.0)) throw Error(ErrorKind::kInvalidArgument, "sensor range must be > 0");
  const double pi = 3.141592653589793;
  if (!(fov_horizontal > 0.0 && fov_horizontal <= pi) ||
      !(fov_vertical > 0.0 && fov_vertical <= pi)) {
    throw Error(ErrorKind::kInvalidArgument, "sensor FOV must be in (0, pi]");
  }
}

// ---------------------------------------------------------------------------
// Map

Map::Map(std::vector<Landmark> landmarks, std::vector<Polyline> polylines)
    : landmarks_(std::move(landmarks)), polylines_(std::move(polylines)) {
  for (std::size_t i = 0; i < landmarks_.size(); ++i) {
    if (!landmark_by_id_.emplace(landmarks_[i].id, static_cast<int>(i)).second) {
      throw Error(ErrorKind::kInvariantViolation,
                  "/landmarks/" + std::to_string(i) + "/id: duplicate landmark id " +
                      std::to_string(landmarks_[i].id));
    }
  }
  for (std::size_t i = 0; i < polylines_.size(); ++i) {
    const auto& pl = polylines_[i];
    const std::string where = "/polylines/" + std::to_string(i);
    if (pl.id < 0 || pl.id >= std::numeric_limits<int>::max() / kSegmentStride) {
      throw Error(ErrorKind::kInvariantViolation, where + "/id: polyline id out of range");
    }
    if (!polyline_by_id_.emplace(pl.id, static_cast<int>(i)).second) {
      throw Error(ErrorKind::kInvariantViolation,
                  where + "/id: duplicate polyline id " + std::to_string(pl.id));
    }
    if (pl.points.size() < 2) {
      throw Error(ErrorKind::kInvariantViolation,
                  where + "/points: polyline needs at least 2 shape points");
    }
    if (pl.points.size() >= static_cast<std::size_t>(kSegmentStride)) {
      throw Error(ErrorKind::kInvariantViolation, where + "/points: too many shape points");
    }
    for (std::size_t k = 1; k < pl.points.size(); ++k) {
      if ((pl.points[k] - pl.points[k - 1]).head<2>().norm() <= 0.0) {
        throw Error(ErrorKind::kInvariantViolation,
                    where + "/points/" + std::to_string(k) +
                        ": consecutive shape points must be distinct");
      }
    }
  }
  arcs_.resize(polylines_.size());
  for (std::size_t i = 0; i < polylines_.size(); ++i) {
    const auto& pts = polylines_[i].points;
    auto& arc = arcs_[i];
    arc.resize(pts.size());
    arc[0] = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) {
      arc[k] = arc[k - 1] + (pts[k] - pts[k - 1]).head<2>().norm();
    }
  }
  build_index();
}

const Landmark* Map::find_landmark(int id) const {
  auto it = landmark_by_id_.find(id);
  return it == landmark_by_id_.end() ? nullptr : &landmarks_[it->second];
}

const Polyline* Map::find_polyline(int id) const {
  auto it = polyline_by_id_.find(id);
  return it == polyline_by_id_.end() ? nullptr : &polylines_[it->second];
}

bool Map::is_closed(int index) const {
  const auto& pts = polylines_[index].points;
  return pts.size() > 2 && (pts.front() - pts.back()).norm() < 1e-6;
}

std::pair<Vec3, Vec3> Map::segment(FeatureId id) const {
  const Polyline* pl = find_polyline(segment_polyline(id));
  const int k = segment_index(id);
  if (pl == nullptr || k < 0 || k + 1 >= static_cast<int>(pl->points.size())) {
    throw Error(ErrorKind::kInvalidArgument, "unknown segment id " + std::to_string(id));
  }
  return {pl->points[k], pl->points[k + 1]};
}

std::int64_t Map::cell_key(std::int64_t cx, std::int64_t cy) {
  return (cx << 32) ^ (cy & 0xffffffffLL);
}

void Map::build_index() {
  auto cell = [](double v) { return static_cast<std::int64_t>(std::floor(v / kCellSize)); };
  for (std::size_t i = 0; i < landmarks_.size(); ++i) {
    const auto& p = landmarks_[i].position;
    landmark_cells_[cell_key(cell(p.x()), cell(p.y()))].push_back(static_cast<int>(i));
  }
  for (std::size_t i = 0; i < polylines_.size(); ++i) {
    const auto& pts = polylines_[i].points;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      const auto x0 = cell(std::min(pts[k].x(), pts[k + 1].x()));
      const auto x1 = cell(std::max(pts[k].x(), pts[k + 1].x()));
      const auto y0 = cell(std::min(pts[k].y(), pts[k + 1].y()));
      const auto y1 = cell(std::max(pts[k].y(), pts[k + 1].y()));
      for (auto cx = x0; cx <= x1; ++cx) {
        for (auto cy = y0; cy <= y1; ++cy) {
          segment_cells_[cell_key(cx, cy)].emplace_back(static_cast<int>(i), static_cast<int>(k));
        }
      }
    }
  }
}

std::vector<int> Map::landmarks_near(const Vec2& center, double radius) const {
  std::vector<int> out;
  auto cell = [](double v) { return static_cast<std::int64_t>(std::floor(v / kCellSize)); };
  for (auto cx = cell(center.x() - radius); cx <= cell(center.x() + radius); ++cx) {
    for (auto cy = cell(center.y() - radius); cy <= cell(center.y() + radius); ++cy) {
      auto it = landmark_cells_.find(cell_key(cx, cy));
      if (it != landmark_cells_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<int, int>> Map::segments_near(const Vec2& center, double radius) const {
  std::vector<std::pair<int, int>> out;
  auto cell = [](double v) { return static_cast<std::int64_t>(std::floor(v / kCellSize)); };
  for (auto cx = cell(center.x() - radius); cx <= cell(center.x() + radius); ++cx) {
    for (auto cy = cell(center.y() - radius); cy <= cell(center.y() + radius); ++cy) {
      auto it = segment_cells_.find(cell_key(cx, cy));
      if (it != segment_cells_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

[[noreturn]] void schema_error(const std::string& source, const std::string& pointer,
                               const std::string& what) {
  throw Error(ErrorKind::kParse, source + ":" + (pointer.empty() ? "/" : pointer) + ": " + what);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                std::initializer_list<const char*> required, const std::string& source,
                const std::string& pointer) {
  if (!obj.is_object()) schema_error(source, pointer, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) schema_error(source, pointer + "/" + key, "unknown field");
  }
  for (const char* r : required) {
    if (!obj.contains(r)) schema_error(source, pointer + "/" + r, "missing required field");
  }
}

Vec3 read_vec3(const json& j, const std::string& source, const std::string& pointer) {
  if (!j.is_array() || j.size() != 3) schema_error(source, pointer, "expected [x, y, z]");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) {
      schema_error(source, pointer + "/" + std::to_string(i), "expected a number");
    }
    v(i) = j[i].get<double>();
    if (!std::isfinite(v(i))) schema_error(source, pointer + "/" + std::to_string(i), "not finite");
  }
  return v;
}

int read_id(const json& j, const std::string& source, const std::string& pointer) {
  if (!j.is_number_integer()) schema_error(source, pointer, "expected an integer id");
  const auto id = j.get<std::int64_t>();
  if (id < 0 || id > std::numeric_limits<int>::max()) {
    schema_error(source, pointer, "id out of range");
  }
  return static_cast<int>(id);
}

LaneRole read_role(const json& j, const std::string& source, const std::string& pointer) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "center") return LaneRole::kCenter;
    if (s == "boundary") return LaneRole::kBoundary;
    if (s == "marking") return LaneRole::kMarking;
  }
  schema_error(source, pointer, "role must be one of \"center\", \"boundary\", \"marking\"");
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

Map parse_map(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, source + ": " + e.what());
  }
  check_keys(doc, {"landmarks", "polylines"}, {}, source, "");

  std::vector<Landmark> landmarks;
  if (doc.contains("landmarks")) {
    const auto& arr = doc["landmarks"];
    if (!arr.is_array()) schema_error(source, "/landmarks", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "/landmarks/" + std::to_string(i);
      check_keys(arr[i], {"id", "position"}, {"id", "position"}, source, p);
      landmarks.push_back({read_id(arr[i]["id"], source, p + "/id"),
                           read_vec3(arr[i]["position"], source, p + "/position")});
    }
  }
  std::vector<Polyline> polylines;
  if (doc.contains("polylines")) {
    const auto& arr = doc["polylines"];
    if (!arr.is_array()) schema_error(source, "/polylines", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "/polylines/" + std::to_string(i);
      check_keys(arr[i], {"id", "role", "points"}, {"id", "role", "points"}, source, p);
      Polyline pl;
      pl.id = read_id(arr[i]["id"], source, p + "/id");
      pl.role = read_role(arr[i]["role"], source, p + "/role");
      const auto& pts = arr[i]["points"];
      if (!pts.is_array()) schema_error(source, p + "/points", "expected an array");
      for (std::size_t k = 0; k < pts.size(); ++k) {
        pl.points.push_back(read_vec3(pts[k], source, p + "/points/" + std::to_string(k)));
      }
      polylines.push_back(std::move(pl));
    }
  }
  try {
    return Map(std::move(landmarks), std::move(polylines));
  } catch (const Error& e) {
    throw Error(e.kind(), source + ":" + std::string(e.what()).substr(
                                             std::string(to_string(e.kind())).size() + 2));
  }
}

Map load_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open map file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_map(buf.str(), path.string());
}

std::string save_map(const Map& map) {
  json doc = json::object();
  json landmarks = json::array();
  for (const auto& lm : map.landmarks()) {
    landmarks.push_back({{"id", lm.id}, {"position", vec_json(lm.position)}});
  }
  json polylines = json::array();
  for (const auto& pl : map.polylines()) {
    json pts = json::array();
    for (const auto& p : pl.points) pts.push_back(vec_json(p));
    polylines.push_back({{"id", pl.id}, {"role", to_string(pl.role)}, {"points", std::move(pts)}});
  }
  doc["landmarks"] = std::move(landmarks);
  doc["polylines"] = std::move(polylines);
  return doc.dump(1) + "\n";
}

// ---------------------------------------------------------------------------
// Visibility

std::vector<VisibleLandmark> visible_landmarks(const Map& map, const Pose& vehicle,
                                               const SensorSpec& spec) {
  std::vector<VisibleLandmark> out;
  const Mat3 r_mount_t = spec.mount.rotation().transpose();
  for (int i : map.landmarks_near(vehicle.position.head<2>(), spec.max_range + 1.0)) {
    const auto& lm = map.landmarks()[i];
    const Vec3 p = r_mount_t * (world_to_vehicle(vehicle, lm.position) - spec.mount.position);
    const double range = p.norm();
    if (range > spec.max_range) continue;
    const double azimuth = std::atan2(p.y(), p.x());
    const double elevation = std::atan2(p.z(), p.head<2>().norm());
    if (std::abs(azimuth) > 0.5 * spec.fov_horizontal) continue;
    if (std::abs(elevation) > 0.5 * spec.fov_vertical) continue;
    out.push_back({lm.id, lm.position});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

namespace {

bool inside_image(const CameraModel& c, const Vec2& px) {
  return px.x() >= 0.0 && px.x() < c.width && px.y() >= 0.0 && px.y() < c.height;
}

Vec2 pixel(const CameraModel& c, const Vec3& optical) {
  const Vec3 h = c.intrinsics * optical;
  return h.head<2>() / h.z();
}

// Liang-Barsky: clipped length of segment p0-p1 inside [0,w]x[0,h].
double clipped_length(const Vec2& p0, const Vec2& p1, double w, double h) {
  const Vec2 d = p1 - p0;
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {p0.x(), w - p0.x(), p0.y(), h - p0.y()};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return 0.0;
    } else {
      const double r = q[i] / p[i];
      if (p[i] < 0.0) {
        t0 = std::max(t0, r);
      } else {
        t1 = std::min(t1, r);
      }
    }
  }
  return t1 > t0 ? (t1 - t0) * d.norm() : 0.0;
}

double distance_to_segment(const Vec3& a, const Vec3& b) {
  const Vec3 d = b - a;
  const double t = std::clamp(-a.dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (a + t * d).norm();
}

}  // namespace

std::vector<VisibleLandmark> visible_camera_landmarks(const Map& map, const Pose& vehicle,
                                                      const CameraModel& camera,
                                                      double max_range) {
  std::vector<VisibleLandmark> out;
  for (int i : map.landmarks_near(vehicle.position.head<2>(), max_range + 5.0)) {
    const auto& lm = map.landmarks()[i];
    const Vec3 p = world_to_optical(camera, vehicle, lm.position);
    if (p.z() < kNearPlane || p.norm() > max_range) continue;
    if (!inside_image(camera, pixel(camera, p))) continue;
    out.push_back({lm.id, lm.position});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::vector<VisibleSegment> visible_segments(const Map& map, const Pose& vehicle,
                                             const CameraModel& camera, double max_range) {
  std::vector<VisibleSegment> out;
  const Mat3 to_optical = body_to_optical() * camera.mount.rotation().transpose();
  const Mat3 r_wv_t = vehicle.rotation().transpose();
  for (const auto& [pi, k] : map.segments_near(vehicle.position.head<2>(), max_range + 5.0)) {
    const auto& pl = map.polylines()[pi];
    if (pl.role == LaneRole::kCenter) continue;
    const Vec3& wa = pl.points[k];
    const Vec3& wb = pl.points[k + 1];
    Vec3 a = to_optical * (r_wv_t * (wa - vehicle.position) - camera.mount.position);
    Vec3 b = to_optical * (r_wv_t * (wb - vehicle.position) - camera.mount.position);
    if (a.z() < kNearPlane && b.z() < kNearPlane) continue;
    double ta = 0.0, tb = 1.0;
    if (a.z() < kNearPlane || b.z() < kNearPlane) {
      const double t = (kNearPlane - a.z()) / (b.z() - a.z());
      if (a.z() < kNearPlane) ta = t; else tb = t;
      const Vec3 ca = a + ta * (b - a);
      const Vec3 cb = a + tb * (b - a);
      a = ca;
      b = cb;
    }
    if (distance_to_segment(a, b) > max_range) continue;
    if (clipped_length(pixel(camera, a), pixel(camera, b), camera.width, camera.height) < 1.0) {
      continue;
    }
    out.push_back({segment_id(pl.id, k), wa + ta * (wb - wa), wa + tb * (wb - wa)});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

// ---------------------------------------------------------------------------
// Road geometry

namespace {

double segment_slope(const Polyline& pl, const std::vector<double>& arc, int k) {
  return (pl.points[k + 1].z() - pl.points[k].z()) / (arc[k + 1] - arc[k]);
}

double vertex_slope(const Map& map, int pi, int k) {
  const auto& pl = map.polylines()[pi];
  const auto& arc = map.arc_lengths(pi);
  const int last = static_cast<int>(pl.points.size()) - 1;
  const bool closed = map.is_closed(pi);
  if (k == 0 || k == last) {
    if (closed) return 0.5 * (segment_slope(pl, arc, 0) + segment_slope(pl, arc, last - 1));
    return segment_slope(pl, arc, k == 0 ? 0 : last - 1);
  }
  return 0.5 * (segment_slope(pl, arc, k - 1) + segment_slope(pl, arc, k));
}

// Height at horizontal arc position s, wrapping on closed polylines.
double height_at_arc(const Map& map, int pi, double s) {
  const auto& pl = map.polylines()[pi];
  const auto& arc = map.arc_lengths(pi);
  const double total = arc.back();
  if (map.is_closed(pi)) {
    s = std::fmod(s, total);
    if (s < 0.0) s += total;
  } else {
    s = std::clamp(s, 0.0, total);
  }
  auto it = std::upper_bound(arc.begin(), arc.end(), s);
  int k = static_cast<int>(it - arc.begin()) - 1;
  k = std::clamp(k, 0, static_cast<int>(arc.size()) - 2);
  const double t = (s - arc[k]) / (arc[k + 1] - arc[k]);
  return pl.points[k].z() + t * (pl.points[k + 1].z() - pl.points[k].z());
}

}  // namespace

RoadPoint locate_on_road(const Map& map, const Vec2& position, double heading) {
  bool has_center = false;
  for (const auto& pl : map.polylines()) has_center = has_center || pl.role == LaneRole::kCenter;

  RoadPoint best;
  best.lateral = std::numeric_limits<double>::infinity();
  for (const auto& [pi, k] : map.segments_near(position, kMaxLateralOffset)) {
    const auto& pl = map.polylines()[pi];
    if (has_center && pl.role != LaneRole::kCenter) continue;
    const Vec2 a = pl.points[k].head<2>();
    const Vec2 d = pl.points[k + 1].head<2>() - a;
    const double t = std::clamp((position - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
    const double dist = (a + t * d - position).norm();
    if (dist < best.lateral - 1e-12) {
      best.polyline = pi;
      best.segment = k;
      best.t = t;
      best.lateral = dist;
    }
  }
  if (best.polyline < 0 || best.lateral > kMaxLateralOffset) {
    throw Error(ErrorKind::kOffMap, "no road within " + std::to_string(kMaxLateralOffset) +
                                        " m of (" + std::to_string(position.x()) + ", " +
                                        std::to_string(position.y()) + ")");
  }
  const auto& pl = map.polylines()[best.polyline];
  const auto& arc = map.arc_lengths(best.polyline);
  const int k = best.segment;
  best.arc = arc[k] + best.t * (arc[k + 1] - arc[k]);
  best.height = pl.points[k].z() + best.t * (pl.points[k + 1].z() - pl.points[k].z());
  const Vec2 tangent = (pl.points[k + 1] - pl.points[k]).head<2>();
  best.direction = tangent.dot(Vec2(std::cos(heading), std::sin(heading))) >= 0.0 ? 1 : -1;
  const double slope = vertex_slope(map, best.polyline, k) * (1.0 - best.t) +
                       vertex_slope(map, best.polyline, k + 1) * best.t;
  best.slope = best.direction * slope;
  return best;
}

VerticalProfile local_vertical_profile(const Map& map, const Vec2& position, double heading,
                                       double preview_distance) {
  const RoadPoint road = locate_on_road(map, position, heading);
  const int pi = road.polyline;
  const auto& pl = map.polylines()[pi];
  const auto& arc = map.arc_lengths(pi);
  const bool closed = map.is_closed(pi);
  const double total = arc.back();
  const double window = 2.0 * preview_distance;

  std::vector<double> ls, zs;
  const std::size_t n_points = closed ? pl.points.size() - 1 : pl.points.size();
  for (std::size_t k = 0; k < n_points; ++k) {
    double l = road.direction * (arc[k] - road.arc);
    if (closed) {
      l = std::fmod(l, total);
      if (l < -1e-9) l += total;
    }
    if (l >= -1e-9 && l <= window + 1e-9) {
      ls.push_back(l);
      zs.push_back(pl.points[k].z());
    }
  }
  if (ls.size() < 8) {
    // Sparse polyline: sample the piecewise-linear surface instead.
    ls.clear();
    zs.clear();
    const double end = closed ? window : std::min(window, road.direction > 0 ? total - road.arc
                                                                               : road.arc);
    for (double l = 0.0; l <= end + 1e-9; l += 0.5) {
      ls.push_back(l);
      zs.push_back(height_at_arc(map, pi, road.arc + road.direction * l));
    }
  }
  if (ls.size() < 4) {
    throw Error(ErrorKind::kOffMap, "not enough road ahead for a vertical profile fit");
  }
  Eigen::MatrixXd a(ls.size(), 4);
  Eigen::VectorXd b(ls.size());
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const double l = ls[i];
    a.row(i) << 1.0, l, 0.5 * l * l, l * l * l / 6.0;
    b(i) = zs[i];
  }
  const Eigen::Vector4d coef = a.colPivHouseholderQr().solve(b);
  VerticalProfile out;
  out.slope = coef(1);
  out.c0 = coef(2);
  out.c1 = coef(3);
  const double d = preview_distance;
  out.height_ahead =
      height_at_arc(map, pi, road.arc + road.direction * d) - road.height - out.slope * d;
  return out;
}

// ---------------------------------------------------------------------------
// Association

const char* to_string(AssociationMode m) {
  return m == AssociationMode::kOracle ? "oracle" : "nn";
}

AssociationMode parse_association(const std::string& text) {
  if (text == "oracle") return AssociationMode::kOracle;
  if (text == "nn") return AssociationMode::kNearestNeighbor;
  throw Error(ErrorKind::kInvalidArgument, "association must be 'oracle' or 'nn', got '" + text + "'");
}

std::vector<Association> associate(AssociationMode mode,
                                   const std::vector<Detection>& detections,
                                   const std::vector<Candidate>& candidates, double gate,
                                   const ResidualFn& residual) {
  std::vector<Association> out;
  if (mode == AssociationMode::kOracle) {
    for (std::size_t i = 0; i < detections.size(); ++i) {
      if (detections[i].truth_id >= 0) out.push_back({static_cast<int>(i), detections[i].truth_id});
    }
    return out;
  }
  std::vector<std::tuple<double, int, int>> pairs;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      const auto& det = detections[i];
      const auto& cand = candidates[j];
      if (det.z.size() != cand.predicted.size()) continue;
      const Eigen::VectorXd nu = residual ? residual(det.z, cand.predicted)
                                          : Eigen::VectorXd(det.z - cand.predicted);
      Eigen::MatrixXd s = det.cov;
      if (cand.cov.size() == s.size()) s += cand.cov;
      Eigen::LLT<Eigen::MatrixXd> llt(s);
      if (llt.info() != Eigen::Success) continue;
      const double d2 = nu.dot(llt.solve(nu));
      if (d2 <= gate) pairs.emplace_back(d2, static_cast<int>(i), static_cast<int>(j));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<char> det_used(detections.size(), 0), cand_used(candidates.size(), 0);
  for (const auto& [d2, i, j] : pairs) {
    if (det_used[i] || cand_used[j]) continue;
    det_used[i] = cand_used[j] = 1;
    out.push_back({i, candidates[j].id});
  }
  std::sort(out.begin(), out.end(),
            [](const Association& a, const Association& b) { return a.detection < b.detection; });
  return out;
}

}  // namespace dkff
