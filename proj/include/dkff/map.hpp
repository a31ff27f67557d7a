#pragma once

// 3D map of identified landmarks and lane polylines, with the visibility and
// road-geometry queries the simulator and filter need.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dkff/geometry.hpp"

namespace dkff {

using FeatureId = std::int64_t;

/// Segment k of polyline p is addressed as p * kSegmentStride + k.
inline constexpr FeatureId kSegmentStride = 1'000'000;
inline constexpr FeatureId segment_id(int polyline_id, int index) {
  return static_cast<FeatureId>(polyline_id) * kSegmentStride + index;
}
inline constexpr int segment_polyline(FeatureId id) { return static_cast<int>(id / kSegmentStride); }
inline constexpr int segment_index(FeatureId id) { return static_cast<int>(id % kSegmentStride); }

enum class LaneRole { kCenter, kBoundary, kMarking };

const char* to_string(LaneRole role);

struct Landmark {
  int id = 0;
  Vec3 position = Vec3::Zero();
};

struct Polyline {
  int id = 0;
  LaneRole role = LaneRole::kBoundary;
  std::vector<Vec3> points;
};

struct SensorSpec {
  double max_range = 60.0;                 // m, inclusive
  double fov_horizontal = 3.141592653589793;  // rad, total
  double fov_vertical = 1.5707963267948966;   // rad, total
  Pose mount;

  void validate() const;
};

class Map {
 public:
  Map() = default;
  /// Validates and indexes. Throws kInvariantViolation.
  Map(std::vector<Landmark> landmarks, std::vector<Polyline> polylines);

  const std::vector<Landmark>& landmarks() const { return landmarks_; }
  const std::vector<Polyline>& polylines() const { return polylines_; }

  const Landmark* find_landmark(int id) const;
  /// Cumulative horizontal arc length at each shape point of polyline `index`.
  const std::vector<double>& arc_lengths(int index) const { return arcs_[index]; }
  /// True when the polyline's last shape point coincides with its first.
  bool is_closed(int index) const;
  const Polyline* find_polyline(int id) const;
  /// Endpoints of a segment feature; throws kInvalidArgument for unknown ids.
  std::pair<Vec3, Vec3> segment(FeatureId id) const;

  /// Indices of landmarks / (polyline index, segment index) pairs whose
  /// grid cells intersect the horizontal disk (center, radius).
  std::vector<int> landmarks_near(const Vec2& center, double radius) const;
  std::vector<std::pair<int, int>> segments_near(const Vec2& center, double radius) const;

 private:
  void build_index();
  static std::int64_t cell_key(std::int64_t cx, std::int64_t cy);

  std::vector<Landmark> landmarks_;
  std::vector<Polyline> polylines_;
  std::unordered_map<int, int> landmark_by_id_;
  std::unordered_map<int, int> polyline_by_id_;
  std::vector<std::vector<double>> arcs_;

  static constexpr double kCellSize = 25.0;
  std::unordered_map<std::int64_t, std::vector<int>> landmark_cells_;
  std::unordered_map<std::int64_t, std::vector<std::pair<int, int>>> segment_cells_;
};

/// Strict JSON map reader. Unknown fields, wrong types and invariant
/// violations are reported with the JSON pointer of the offending field.
Map parse_map(const std::string& text, const std::string& source = "<map>");
Map load_map(const std::filesystem::path& path);
/// Canonical JSON text; parse_map(save_map(m)) re-saves byte-identically.
std::string save_map(const Map& map);

struct VisibleLandmark {
  int id;
  Vec3 position;
};

struct VisibleSegment {
  FeatureId id;
  Vec3 a;  // endpoints after clipping to the camera near plane
  Vec3 b;
};

/// Landmarks inside range (closed) and FOV of a mounted 3D sensor, by id.
std::vector<VisibleLandmark> visible_landmarks(const Map& map, const Pose& vehicle,
                                               const SensorSpec& spec);

/// Landmarks that project inside the image and lie within `max_range`, by id.
std::vector<VisibleLandmark> visible_camera_landmarks(const Map& map, const Pose& vehicle,
                                                      const CameraModel& camera,
                                                      double max_range);

/// Near plane used to clip segments that cross behind the camera.
inline constexpr double kNearPlane = 0.5;

/// Boundary/marking segments whose clipped projection intersects the image,
/// ordered by feature id.
std::vector<VisibleSegment> visible_segments(const Map& map, const Pose& vehicle,
                                             const CameraModel& camera, double max_range);

/// Position of the vehicle relative to the nearest centerline.
struct RoadPoint {
  int polyline = -1;      // index into Map::polylines()
  int segment = -1;
  double t = 0.0;         // parameter along the segment
  double arc = 0.0;       // horizontal arc length from the polyline start
  double lateral = 0.0;   // horizontal distance to the polyline
  double height = 0.0;    // road height, linear in arc length between shape points
  double slope = 0.0;     // dz/d(arc), interpolated between vertex slopes
  int direction = 1;      // +1 if the heading runs with the polyline order
};

inline constexpr double kMaxLateralOffset = 12.0;

/// Throws kOffMap when no centerline lies within kMaxLateralOffset.
RoadPoint locate_on_road(const Map& map, const Vec2& position, double heading);

struct VerticalProfile {
  double c0 = 0.0;
  double c1 = 0.0;
  double height_ahead = 0.0;  // h at the preview distance, relative to the tangent
  double slope = 0.0;         // fitted dz/dl at the vehicle
};

/// Least-squares clothoid fit z(l) = a0 + a1 l + c0 l^2/2 + c1 l^3/6 to the
/// centerline heights over l in [0, 2 d] ahead of the vehicle.
VerticalProfile local_vertical_profile(const Map& map, const Vec2& position,
                                       double heading, double preview_distance);

enum class AssociationMode { kOracle, kNearestNeighbor };

const char* to_string(AssociationMode m);
AssociationMode parse_association(const std::string& text);

struct Detection {
  Eigen::VectorXd z;
  Eigen::MatrixXd cov;
  FeatureId truth_id = -1;
};

struct Candidate {
  FeatureId id = -1;
  Eigen::VectorXd predicted;
  Eigen::MatrixXd cov;  // prediction uncertainty in measurement space
};

struct Association {
  int detection;
  FeatureId feature;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// Oracle mode passes the ground-truth ids through. Nearest-neighbour mode
/// greedily pairs detections and candidates by Mahalanobis distance, cheapest
/// first, rejecting pairs above `gate`. Unmatched detections are dropped.
/// Output is ordered by detection index.
std::vector<Association> associate(AssociationMode mode,
                                   const std::vector<Detection>& detections,
                                   const std::vector<Candidate>& candidates, double gate,
                                   const ResidualFn& residual = {});

}  // namespace dkff
