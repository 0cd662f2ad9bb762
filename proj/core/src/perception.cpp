#include "mobman/perception.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mobman {

const char* to_string(GraspOrientation o) {
  return o == GraspOrientation::Horizontal ? "horizontal" : "vertical";
}

AccumulateResult accumulate_handle(const HandleAccumulator& acc, const PointCloud& observation,
                                   int min_points, int min_frames) {
  AccumulateResult result;
  result.acc = acc;
  result.acc.merged.append(observation.filtered(SegLabel::Handle));
  result.acc.frames_seen = acc.frames_seen + 1;
  result.ready = static_cast<int>(result.acc.merged.size()) >= min_points ||
                 result.acc.frames_seen >= min_frames;
  return result;
}

namespace {

// Canonical sign for a horizontal unit vector: x >= 0, ties toward +y.
Vec3 canonical_sign(const Vec3& v) {
  constexpr double tol = 1e-12;
  if (v.x() < -tol || (std::abs(v.x()) <= tol && v.y() < 0.0)) return -v;
  return v;
}

struct Extent {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double t) {
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  double span() const { return hi - lo; }
  double mid() const { return (hi + lo) / 2.0; }
};

}  // namespace

std::vector<GraspCandidate> estimate_handle_grasps(const PointCloud& handle,
                                                   double max_jaw_width,
                                                   const GraspEstimationParams& params) {
  if (handle.empty()) throw Error(ErrorKind::EmptySelection, "handle cloud is empty");
  if (!(max_jaw_width > 0.0))
    throw Error(ErrorKind::InvalidParameter, "max_jaw_width must be positive");

  const Vec3 center = centroid(handle);

  Extent z_extent;
  for (const auto& p : handle.points) z_extent.add(p.z());

  PlanarAxes planar;
  bool planar_ok = true;
  try {
    planar = pca_planar_axes(handle);
  } catch (const Error&) {
    planar_ok = false;  // all points on one vertical line: a vertical bar
  }

  Extent planar_extent;
  if (planar_ok)
    for (const auto& p : handle.points) planar_extent.add(planar.major.dot(p));

  // Dominant direction within 45 degrees of horizontal <=> the planar spread
  // beats the vertical spread.
  const bool horizontal_bar = planar_ok && planar_extent.span() >= z_extent.span();

  GraspOrientation orientation;
  Vec3 station_axis;  // long axis the stations march along
  Vec3 closing_axis;  // fingers travel along it
  Vec3 approach;
  if (horizontal_bar) {
    orientation = GraspOrientation::Vertical;
    station_axis = planar.major;
    closing_axis = Vec3::UnitZ();
    approach = canonical_sign(planar.major.cross(Vec3::UnitZ()).normalized());
  } else {
    orientation = GraspOrientation::Horizontal;
    station_axis = Vec3::UnitZ();
    // Close across the thinnest horizontal direction of the cross-section.
    closing_axis = planar_ok ? canonical_sign(planar.minor) : Vec3::UnitY();
    approach = canonical_sign(Vec3::UnitZ().cross(closing_axis).normalized());
  }

  Extent axis_extent;
  for (const auto& p : handle.points) axis_extent.add(station_axis.dot(p));

  std::vector<double> stations;
  const double usable = axis_extent.span() - 2.0 * params.slab_half_width;
  if (usable <= params.station_spacing) {
    stations.push_back(axis_extent.mid());
  } else {
    const int n = static_cast<int>(std::floor(usable / params.station_spacing)) + 1;
    const double start = axis_extent.mid() - params.station_spacing * (n - 1) / 2.0;
    for (int i = 0; i < n; ++i) stations.push_back(start + params.station_spacing * i);
  }

  std::vector<GraspCandidate> candidates;
  for (double s : stations) {
    Extent closing_extent;
    Vec3 slab_sum = Vec3::Zero();
    std::size_t slab_count = 0;
    for (const auto& p : handle.points) {
      if (std::abs(station_axis.dot(p) - s) > params.slab_half_width) continue;
      closing_extent.add(closing_axis.dot(p));
      slab_sum += p;
      ++slab_count;
    }
    if (slab_count < 2) continue;

    const double width = closing_extent.span();
    if (width > max_jaw_width) continue;

    Vec3 position = slab_sum / static_cast<double>(slab_count);
    position += (closing_extent.mid() - closing_axis.dot(position)) * closing_axis;

    GraspCandidate cand;
    cand.pose.rotation.col(0) = approach;
    cand.pose.rotation.col(1) = closing_axis;
    cand.pose.rotation.col(2) = approach.cross(closing_axis);
    cand.pose.translation = position;
    cand.width = width;
    cand.orientation_class = orientation;
    cand.centroid_distance = (position - center).norm();
    candidates.push_back(std::move(cand));
  }

  if (candidates.empty())
    throw Error(ErrorKind::NoGraspFound, "every antipodal width exceeds the jaw");

  std::sort(candidates.begin(), candidates.end(),
            [](const GraspCandidate& a, const GraspCandidate& b) {
              if (a.centroid_distance != b.centroid_distance)
                return a.centroid_distance < b.centroid_distance;
              const Vec3& pa = a.pose.translation;
              const Vec3& pb = b.pose.translation;
              if (pa.x() != pb.x()) return pa.x() < pb.x();
              if (pa.y() != pb.y()) return pa.y() < pb.y();
              return pa.z() < pb.z();
            });
  return candidates;
}

double detect_open_displacement(const PointCloud& current, const PointCloud& initial,
                                SegLabel panel_label, const Vec3& outward_axis) {
  const Vec3 now = centroid(current, panel_label);
  const Vec3 before = centroid(initial, panel_label);
  return outward_axis.dot(now - before);
}

int rim_min_count_for(std::size_t cloud_size) {
  return std::max(1, static_cast<int>(std::lround(100.0 * static_cast<double>(cloud_size) / 2000.0)));
}

RimEstimate estimate_bucket_rim(const PointCloud& bucket, double bin_height, int min_count) {
  if (bucket.empty()) throw Error(ErrorKind::EmptySelection, "bucket cloud is empty");
  if (!(bin_height > 0.0)) throw Error(ErrorKind::InvalidParameter, "bin_height must be positive");
  if (min_count < 1) throw Error(ErrorKind::InvalidParameter, "min_count must be >= 1");

  const std::vector<ZBin> bins = z_slice_histogram(bucket, bin_height);
  int chosen = -1;
  for (int k = static_cast<int>(bins.size()) - 1; k >= 0; --k) {
    if (bins[static_cast<std::size_t>(k)].count >= static_cast<std::size_t>(min_count)) {
      chosen = k;
      break;
    }
  }
  if (chosen < 0) throw Error(ErrorKind::NoRimFound, "no z-slice reaches min_count");

  const double z_low = bins[static_cast<std::size_t>(chosen)].z_low;
  const double z_high = z_low + bin_height;

  RimEstimate rim;
  rim.rim_height = z_low + bin_height / 2.0;
  for (std::size_t i = 0; i < bucket.size(); ++i) {
    const double z = bucket.points[i].z();
    const bool last_bin = chosen == static_cast<int>(bins.size()) - 1;
    if (z >= z_low && (z < z_high || (last_bin && z <= z_high)))
      rim.rim_points.push_back(bucket.points[i], bucket.labels[i]);
  }

  Vec3 center = centroid(rim.rim_points);
  center.z() = rim.rim_height;
  rim.rim_center = center;

  double sum_r = 0.0;
  double min_r = std::numeric_limits<double>::infinity();
  double max_r = 0.0;
  for (const auto& p : rim.rim_points.points) {
    const double r = (p.head<2>() - center.head<2>()).norm();
    sum_r += r;
    min_r = std::min(min_r, r);
    max_r = std::max(max_r, r);
  }
  rim.rim_radius = sum_r / static_cast<double>(rim.rim_points.size());
  rim.rim_thickness = max_r - min_r;
  return rim;
}

Vec3 estimate_chair_center(const PointCloud& chair, double cushion_height) {
  PointCloud upper;
  for (std::size_t i = 0; i < chair.size(); ++i)
    if (chair.points[i].z() >= cushion_height) upper.push_back(chair.points[i], chair.labels[i]);
  if (upper.size() < 2)
    throw Error(ErrorKind::EmptySelection, "fewer than 2 points above cushion height");

  if (upper.size() == 2) {
    return (upper.points[0] + upper.points[1]) / 2.0;
  }

  PlanarAxes axes;
  try {
    axes = pca_planar_axes(upper);
  } catch (const Error&) {
    axes = PlanarAxes{};  // coincident in plan view: box degenerates to a z-segment
  }
  return oriented_bbox(upper, axes).center;
}

bool rim_graspable(const RimEstimate& rim, double max_jaw_width, double margin) {
  return rim.rim_thickness + margin <= max_jaw_width;
}

}  // namespace mobman
