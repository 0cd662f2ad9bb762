#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mobman/error.hpp"

namespace mobman {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Segmentation tags carried per point. The sensor assigns them exactly;
/// there is no label noise.
enum class SegLabel : std::uint8_t {
  Handle,
  DoorPanel,
  DrawerPanel,
  Bucket,
  Chair,
  TargetRegion,
  Robot,
  Other,
};

const char* to_string(SegLabel label);

/// Rigid transform. Rotation is kept orthonormal (det +1); composition and
/// inverse are exact up to floating point.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static Pose from_rotation(const Mat3& r) { return {r, Vec3::Zero()}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  Pose compose(const Pose& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
  Pose operator*(const Pose& other) const { return compose(other); }

  Pose inverse() const {
    Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  bool is_orthonormal(double tol = 1e-9) const;
};

/// Yaw rotation about world z.
Mat3 rot_z(double angle);

/// Timestamped segmented cloud; the sole sensory input of the pipeline.
/// colors is either empty or one RGB triple in [0,1] per point.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> colors;
  std::vector<SegLabel> labels;
  int frame_index = 0;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_colors() const { return !colors.empty(); }

  void push_back(const Vec3& p, SegLabel label);
  void push_back(const Vec3& p, SegLabel label, const Vec3& color);

  /// Points carrying the given label, as a new cloud (colors preserved).
  PointCloud filtered(SegLabel label) const;
  std::size_t count_label(SegLabel label) const;

  /// Appends every point of other (colors dropped unless both clouds carry them).
  void append(const PointCloud& other);

  PointCloud transformed(const Pose& pose) const;
};

struct OrientedBox {
  Vec3 center = Vec3::Zero();
  std::array<Vec3, 3> axes = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  Vec3 half_extents = Vec3::Zero();
};

struct PlanarAxes {
  Vec3 major = Vec3::UnitX();  // z = 0, unit
  Vec3 minor = Vec3::UnitY();  // major rotated +90 deg about z
};

struct ZBin {
  double z_low = 0.0;
  std::size_t count = 0;
};

/// Arithmetic mean of the points surviving the optional label filter.
/// Throws EmptySelection when nothing survives.
Vec3 centroid(const PointCloud& cloud, std::optional<SegLabel> label_filter = std::nullopt);

/// Principal axes of the x-y covariance (z discarded), closed-form 2x2
/// eigendecomposition, population (1/N) normalization. Sign convention:
/// major.x >= 0, ties broken toward +y. Throws DegenerateCloud when all
/// projected points coincide.
PlanarAxes pca_planar_axes(const PointCloud& cloud);

/// Tight box aligned to (major, minor, world-z). Center is the midpoint of
/// the per-axis extrema, which is the chair-center estimate downstream.
OrientedBox oriented_bbox(const PointCloud& cloud, const PlanarAxes& axes);

/// Histogram of point heights in bins of bin_height covering [min_z, max_z].
/// Counts sum to the cloud size.
std::vector<ZBin> z_slice_histogram(const PointCloud& cloud, double bin_height);

/// ASCII PLY dump (x y z, uchar rgb, int label) for external viewers.
void write_ply(const PointCloud& cloud, std::ostream& out);
void write_ply_file(const PointCloud& cloud, const std::string& path);

}  // namespace mobman
