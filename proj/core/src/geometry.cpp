#include "mobman/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

namespace mobman {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptySelection: return "EmptySelection";
    case ErrorKind::DegenerateCloud: return "DegenerateCloud";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::NoGraspFound: return "NoGraspFound";
    case ErrorKind::NoRimFound: return "NoRimFound";
    case ErrorKind::UnknownFrame: return "UnknownFrame";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonFiniteTarget: return "NonFiniteTarget";
    case ErrorKind::EpisodeOver: return "EpisodeOver";
    case ErrorKind::BadModel: return "BadModel";
    case ErrorKind::BadScenario: return "BadScenario";
  }
  return "UnknownError";
}

const char* to_string(SegLabel label) {
  switch (label) {
    case SegLabel::Handle: return "Handle";
    case SegLabel::DoorPanel: return "DoorPanel";
    case SegLabel::DrawerPanel: return "DrawerPanel";
    case SegLabel::Bucket: return "Bucket";
    case SegLabel::Chair: return "Chair";
    case SegLabel::TargetRegion: return "TargetRegion";
    case SegLabel::Robot: return "Robot";
    case SegLabel::Other: return "Other";
  }
  return "Unknown";
}

bool Pose::is_orthonormal(double tol) const {
  Mat3 should_be_identity = rotation * rotation.transpose();
  if ((should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

Mat3 rot_z(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
}

void PointCloud::push_back(const Vec3& p, SegLabel label) {
  points.push_back(p);
  labels.push_back(label);
}

void PointCloud::push_back(const Vec3& p, SegLabel label, const Vec3& color) {
  points.push_back(p);
  labels.push_back(label);
  colors.push_back(color);
}

PointCloud PointCloud::filtered(SegLabel label) const {
  PointCloud out;
  out.frame_index = frame_index;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] != label) continue;
    if (has_colors())
      out.push_back(points[i], labels[i], colors[i]);
    else
      out.push_back(points[i], labels[i]);
  }
  return out;
}

std::size_t PointCloud::count_label(SegLabel label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

void PointCloud::append(const PointCloud& other) {
  bool keep_colors = (has_colors() || empty()) && other.has_colors();
  points.insert(points.end(), other.points.begin(), other.points.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  if (keep_colors)
    colors.insert(colors.end(), other.colors.begin(), other.colors.end());
  else
    colors.clear();
}

PointCloud PointCloud::transformed(const Pose& pose) const {
  PointCloud out = *this;
  for (auto& p : out.points) p = pose.apply(p);
  return out;
}

Vec3 centroid(const PointCloud& cloud, std::optional<SegLabel> label_filter) {
  Vec3 sum = Vec3::Zero();
  std::size_t n = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (label_filter && cloud.labels[i] != *label_filter) continue;
    sum += cloud.points[i];
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::EmptySelection, "no point matches the centroid filter");
  return sum / static_cast<double>(n);
}

PlanarAxes pca_planar_axes(const PointCloud& cloud) {
  if (cloud.size() < 2)
    throw Error(ErrorKind::DegenerateCloud, "planar PCA needs at least 2 points");

  double mx = 0, my = 0;
  for (const auto& p : cloud.points) {
    mx += p.x();
    my += p.y();
  }
  const double n = static_cast<double>(cloud.size());
  mx /= n;
  my /= n;

  // Population covariance of the x-y projection.
  double a = 0, b = 0, c = 0;
  for (const auto& p : cloud.points) {
    const double dx = p.x() - mx;
    const double dy = p.y() - my;
    a += dx * dx;
    b += dx * dy;
    c += dy * dy;
  }
  a /= n;
  b /= n;
  c /= n;

  if (a + c <= 1e-24)
    throw Error(ErrorKind::DegenerateCloud, "planar covariance has rank 0");

  // Closed-form 2x2 symmetric eigendecomposition: the major eigenvector
  // direction is theta = atan2(2b, a - c) / 2.
  const double theta = 0.5 * std::atan2(2.0 * b, a - c);
  Vec3 major(std::cos(theta), std::sin(theta), 0.0);

  constexpr double kSignTol = 1e-12;
  if (major.x() < -kSignTol || (std::abs(major.x()) <= kSignTol && major.y() < 0.0))
    major = -major;

  PlanarAxes axes;
  axes.major = major;
  axes.minor = Vec3(-major.y(), major.x(), 0.0);
  return axes;
}

OrientedBox oriented_bbox(const PointCloud& cloud, const PlanarAxes& axes) {
  if (cloud.empty()) throw Error(ErrorKind::DegenerateCloud, "oriented_bbox on empty cloud");

  const std::array<Vec3, 3> dirs = {axes.major, axes.minor, Vec3::UnitZ()};
  Vec3 lo(std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& p : cloud.points) {
    for (int k = 0; k < 3; ++k) {
      const double t = dirs[k].dot(p);
      lo[k] = std::min(lo[k], t);
      hi[k] = std::max(hi[k], t);
    }
  }

  OrientedBox box;
  box.axes = dirs;
  box.half_extents = (hi - lo) / 2.0;
  box.center = Vec3::Zero();
  for (int k = 0; k < 3; ++k) box.center += dirs[k] * ((hi[k] + lo[k]) / 2.0);
  return box;
}

std::vector<ZBin> z_slice_histogram(const PointCloud& cloud, double bin_height) {
  if (cloud.empty()) throw Error(ErrorKind::EmptySelection, "z_slice_histogram on empty cloud");
  if (!(bin_height > 0.0))
    throw Error(ErrorKind::InvalidParameter, "bin_height must be positive");

  double min_z = cloud.points.front().z();
  double max_z = min_z;
  for (const auto& p : cloud.points) {
    min_z = std::min(min_z, p.z());
    max_z = std::max(max_z, p.z());
  }

  const std::size_t n_bins =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((max_z - min_z) / bin_height)));
  std::vector<ZBin> bins(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k)
    bins[k].z_low = min_z + static_cast<double>(k) * bin_height;

  for (const auto& p : cloud.points) {
    auto k = static_cast<std::size_t>((p.z() - min_z) / bin_height);
    if (k >= n_bins) k = n_bins - 1;  // max_z lands in the last bin
    ++bins[k].count;
  }
  return bins;
}

void write_ply(const PointCloud& cloud, std::ostream& out) {
  out << "ply\nformat ascii 1.0\n";
  out << "comment per-point segmentation label stored as int property\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "property int label\nend_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    Vec3 c = cloud.has_colors() ? cloud.colors[i] : Vec3(1.0, 1.0, 1.0);
    auto channel = [](double v) {
      return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    };
    out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << channel(c.x()) << ' '
        << channel(c.y()) << ' ' << channel(c.z()) << ' '
        << static_cast<int>(cloud.labels[i]) << '\n';
  }
}

void write_ply_file(const PointCloud& cloud, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::InvalidParameter, "cannot open " + path);
  write_ply(cloud, f);
}

}  // namespace mobman
