#include <cmath>

#include "mobman/rng.hpp"
#include "mobman/sim.hpp"

namespace mobman {

namespace {

// Rigid bodies a station can ride.
enum Body : int { kStatic = 0, kPanel = 1, kBucket = 2, kChair = 3 };

Vec3 label_color(SegLabel label) {
  switch (label) {
    case SegLabel::Handle: return {0.9, 0.2, 0.2};
    case SegLabel::DoorPanel: return {0.8, 0.6, 0.2};
    case SegLabel::DrawerPanel: return {0.8, 0.7, 0.3};
    case SegLabel::Bucket: return {0.2, 0.4, 0.9};
    case SegLabel::Chair: return {0.3, 0.7, 0.3};
    case SegLabel::TargetRegion: return {0.9, 0.9, 0.1};
    case SegLabel::Robot: return {0.4, 0.4, 0.4};
    case SegLabel::Other: return {0.55, 0.55, 0.55};
  }
  return {0.5, 0.5, 0.5};
}

struct BoxSpec {
  Vec3 center;
  Vec3 half;  // along local x, y, z
  Mat3 rot = Mat3::Identity();
};

void sample_box(Rng& rng, const BoxSpec& box, int count, SegLabel label, int body,
                std::vector<SurfaceStation>& out) {
  // Face areas: +-x, +-y, +-z pairs.
  const double ax = box.half.y() * box.half.z();
  const double ay = box.half.x() * box.half.z();
  const double az = box.half.x() * box.half.y();
  const double total = 2.0 * (ax + ay + az);
  if (total <= 0.0) return;

  for (int i = 0; i < count; ++i) {
    double pick = rng.uniform01() * total;
    int axis;
    double sign;
    if (pick < 2 * ax) {
      axis = 0;
      sign = pick < ax ? 1.0 : -1.0;
    } else if (pick < 2 * ax + 2 * ay) {
      axis = 1;
      sign = (pick - 2 * ax) < ay ? 1.0 : -1.0;
    } else {
      axis = 2;
      sign = (pick - 2 * ax - 2 * ay) < az ? 1.0 : -1.0;
    }
    Vec3 local;
    for (int k = 0; k < 3; ++k)
      local[k] = k == axis ? sign * box.half[k]
                           : rng.uniform(-box.half[k], box.half[k]);
    Vec3 normal_local = Vec3::Zero();
    normal_local[axis] = sign;

    SurfaceStation st;
    st.position = box.center + box.rot * local;
    st.normal = box.rot * normal_local;
    st.label = label;
    st.color = label_color(label);
    st.body = body;
    out.push_back(st);
  }
}

void sample_disc(Rng& rng, const Vec3& center, double radius, double z, int count,
                 SegLabel label, std::vector<SurfaceStation>& out) {
  for (int i = 0; i < count; ++i) {
    const double rho = radius * std::sqrt(rng.uniform01());
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    SurfaceStation st;
    st.position = Vec3(center.x() + rho * std::cos(phi), center.y() + rho * std::sin(phi), z);
    st.normal = Vec3::UnitZ();
    st.label = label;
    st.color = label_color(label);
    st.body = kStatic;
    out.push_back(st);
  }
}

}  // namespace

void Simulator::build_stations() {
  Rng rng(scenario_.seed ^ 0xa5a5a5a5a5a5a5a5ull);
  const int P = scenario_.sensor.points_per_object;
  stations_.clear();

  if (scenario_.cabinet) {
    const CabinetSpec& cab = *scenario_.cabinet;
    const Mat3 rot = rot_z(cab.yaw);
    const SegLabel panel_label =
        cab.prismatic ? SegLabel::DrawerPanel : SegLabel::DoorPanel;

    // Cabinet body behind the panel plane.
    const double body_height = cab.panel_center_z + cab.panel_height / 2.0 + 0.12;
    BoxSpec body;
    body.center = cab.position - cab.outward() * (0.25 + cab.panel_thickness / 2.0) +
                  Vec3(0, 0, body_height / 2.0);
    body.half = Vec3(0.25, cab.panel_width / 2.0 + 0.06, body_height / 2.0);
    body.rot = rot;
    sample_box(rng, body, static_cast<int>(0.40 * P), SegLabel::Other, kStatic, stations_);

    BoxSpec panel;
    panel.center = cab.position + Vec3(0, 0, cab.panel_center_z);
    panel.half = Vec3(cab.panel_thickness / 2.0, cab.panel_width / 2.0,
                      cab.panel_height / 2.0);
    panel.rot = rot;
    sample_box(rng, panel, static_cast<int>(0.35 * P), panel_label, kPanel, stations_);

    BoxSpec handle;
    handle.center = handle_center_at_rest(cab);
    const double ht = cab.handle_thickness / 2.0;
    handle.half = cab.handle_vertical ? Vec3(ht, ht, cab.handle_length / 2.0)
                                      : Vec3(ht, cab.handle_length / 2.0, ht);
    handle.rot = rot;
    const int handle_count = std::max(50, static_cast<int>(0.09 * P));
    sample_box(rng, handle, handle_count, SegLabel::Handle, kPanel, stations_);
  }

  if (scenario_.bucket) {
    const BucketSpec& b = *scenario_.bucket;
    const double inner_r = std::max(0.02, b.radius - b.rim_thickness);
    auto wall = [&](double radius, double normal_sign, int count) {
      for (int i = 0; i < count; ++i) {
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double z = rng.uniform(0.0, b.height);
        const Vec3 radial(std::cos(phi), std::sin(phi), 0.0);
        SurfaceStation st;
        st.position = radial * radius + Vec3(0, 0, z);
        st.normal = radial * normal_sign;
        st.label = SegLabel::Bucket;
        st.color = label_color(SegLabel::Bucket);
        st.body = kBucket;
        stations_.push_back(st);
      }
    };
    wall(b.radius, 1.0, static_cast<int>(0.36 * P));
    wall(inner_r, -1.0, static_cast<int>(0.36 * P));
    // Flat top edge of the wall: seen all around from the head viewpoint, so
    // rim statistics sample the full circle.
    for (int i = 0; i < static_cast<int>(0.10 * P); ++i) {
      const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double rho = rng.uniform(inner_r, b.radius);
      SurfaceStation st;
      st.position = Vec3(rho * std::cos(phi), rho * std::sin(phi), b.height);
      st.normal = Vec3::UnitZ();
      st.label = SegLabel::Bucket;
      st.color = label_color(SegLabel::Bucket);
      st.body = kBucket;
      stations_.push_back(st);
    }
    // Inner floor, visible over the rim from the head viewpoint.
    for (int i = 0; i < static_cast<int>(0.08 * P); ++i) {
      const double rho = inner_r * std::sqrt(rng.uniform01());
      const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
      SurfaceStation st;
      st.position = Vec3(rho * std::cos(phi), rho * std::sin(phi), 0.01);
      st.normal = Vec3::UnitZ();
      st.label = SegLabel::Bucket;
      st.color = label_color(SegLabel::Bucket);
      st.body = kBucket;
      stations_.push_back(st);
    }
    if (b.handle_over_rim) {
      const double az = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const Vec3 dir(std::cos(az), std::sin(az), 0.0);
      const int count = std::max(30, static_cast<int>(0.05 * P));
      for (int i = 0; i < count; ++i) {
        const double t = rng.uniform01();
        SurfaceStation st;
        st.position = dir * (b.radius * std::cos(std::numbers::pi * t)) +
                      Vec3(0, 0, b.height + b.handle_rise * std::sin(std::numbers::pi * t));
        Vec3 n = st.position - Vec3(0, 0, b.height);
        st.normal = n.norm() > 1e-9 ? Vec3(n.normalized()) : Vec3(Vec3::UnitZ());
        st.label = SegLabel::Bucket;  // the rim voter must cope with it
        st.color = label_color(SegLabel::Bucket);
        st.body = kBucket;
        stations_.push_back(st);
      }
    }
  }

  if (scenario_.chair) {
    const ChairSpec& c = *scenario_.chair;
    BoxSpec seat;
    seat.center = Vec3(0, 0, c.seat_height - c.seat_thickness / 2.0);
    seat.half = Vec3(c.seat_width / 2.0, c.seat_depth / 2.0, c.seat_thickness / 2.0);
    sample_box(rng, seat, static_cast<int>(0.30 * P), SegLabel::Chair, kChair, stations_);

    BoxSpec back;
    back.center = Vec3(0, -c.seat_depth / 2.0 + c.back_thickness / 2.0,
                       (c.seat_height + c.back_height) / 2.0);
    back.half = Vec3(c.seat_width / 2.0 * 0.95, c.back_thickness / 2.0,
                     (c.back_height - c.seat_height) / 2.0);
    sample_box(rng, back, static_cast<int>(0.30 * P), SegLabel::Chair, kChair, stations_);

    const double leg_h = c.seat_height - c.seat_thickness;
    for (double sx : {-1.0, 1.0}) {
      for (double sy : {-1.0, 1.0}) {
        BoxSpec leg;
        leg.center = Vec3(sx * (c.seat_width / 2.0 - 0.05), sy * (c.seat_depth / 2.0 - 0.05),
                          leg_h / 2.0);
        leg.half = Vec3(0.02, 0.02, leg_h / 2.0);
        sample_box(rng, leg, static_cast<int>(0.03 * P), SegLabel::Chair, kChair, stations_);
      }
    }
  }

  if (scenario_.target) {
    sample_disc(rng, scenario_.target->center, scenario_.target->radius,
                scenario_.target->platform_height + 0.002,
                static_cast<int>(0.12 * P), SegLabel::TargetRegion, stations_);
  }
}

Pose Simulator::body_pose(const WorldState& world, int body) const {
  switch (body) {
    case kStatic:
      return Pose::identity();
    case kPanel: {
      const CabinetSpec& cab = *scenario_.cabinet;
      if (cab.prismatic)
        return Pose::from_translation(cab.outward() * world.object_joint);
      const Vec3 hinge = hinge_position(cab);
      Pose p;
      p.rotation = rot_z(hinge_sign(cab) * world.object_joint);
      p.translation = hinge - p.rotation * hinge;
      return p;
    }
    case kBucket:
    case kChair:
      return world.object_pose;
  }
  return Pose::identity();
}

Vec3 Simulator::head_viewpoint(const WorldState& world) const {
  return forward_kinematics(*model_, world.robot, "head").translation;
}

PointCloud Simulator::render(const WorldState& world) const {
  return render(world, scenario_.sensor.points_per_object);
}

PointCloud Simulator::render(const WorldState& world, int points_per_object) const {
  if (points_per_object < 100)
    throw Error(ErrorKind::InvalidParameter, "points_per_object must be >= 100");

  const Vec3 view = head_viewpoint(world);
  Pose poses[4] = {body_pose(world, 0), body_pose(world, 1), body_pose(world, 2),
                   body_pose(world, 3)};

  // Station sets are sized for the scenario default; subsample uniformly when
  // the caller asks for fewer.
  const double keep_ratio =
      std::min(1.0, static_cast<double>(points_per_object) /
                        static_cast<double>(scenario_.sensor.points_per_object));

  PointCloud cloud;
  cloud.frame_index = world.step_count;
  std::size_t index = 0;
  for (const SurfaceStation& st : stations_) {
    ++index;
    if (keep_ratio < 1.0 &&
        static_cast<double>(index % 1000) >= keep_ratio * 1000.0)
      continue;
    const Pose& pose = poses[st.body];
    const Vec3 p = pose.apply(st.position);
    const Vec3 n = pose.rotation * st.normal;
    if (n.dot(view - p) <= 1e-12) continue;  // back-face culling
    cloud.push_back(p, st.label, st.color);
  }
  return cloud;
}

}  // namespace mobman
