#include <cmath>

#include "mobman/behavior.hpp"
#include "mobman/sim.hpp"

namespace mobman {

const char* to_string(AttachMode mode) {
  switch (mode) {
    case AttachMode::HandleGrasp: return "handle_grasp";
    case AttachMode::RimGrasp: return "rim_grasp";
    case AttachMode::Hug: return "hug";
  }
  return "unknown";
}

namespace {

Vec3 planar(const Vec3& v) { return Vec3(v.x(), v.y(), 0.0); }

double signed_planar_angle(const Vec3& from, const Vec3& to) {
  const double cross = from.x() * to.y() - from.y() * to.x();
  const double dot = from.x() * to.x() + from.y() * to.y();
  return std::atan2(cross, dot);
}

double dist_point_segment_2d(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Eigen::Vector2d ap = (p - a).head<2>();
  const Eigen::Vector2d ab = (b - a).head<2>();
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp(ap.dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (ap - t * ab).norm();
}

Pose planar_pose(const Pose& p) {
  Pose out;
  const double yaw = std::atan2(p.rotation(1, 0), p.rotation(0, 0));
  out.rotation = rot_z(yaw);
  out.translation = Vec3(p.translation.x(), p.translation.y(), 0.0);
  return out;
}

}  // namespace

Simulator::Simulator(Scenario scenario, const KinematicModel* model)
    : scenario_(std::move(scenario)), model_(model) {
  if (!model_) throw Error(ErrorKind::InvalidParameter, "simulator needs a model");
  if (scenario_.robot_start.size() != model_->dof())
    throw Error(ErrorKind::BadScenario, "robot_start length does not match the model");
  build_stations();
}

WorldState Simulator::initial_world() const {
  WorldState w;
  w.robot = clamp_to_limits(*model_, JointState(scenario_.robot_start));
  w.object_joint = 0.0;
  if (scenario_.bucket) w.object_pose = Pose::from_translation(scenario_.bucket->center);
  if (scenario_.chair) {
    w.object_pose.rotation = rot_z(scenario_.chair->yaw);
    w.object_pose.translation = scenario_.chair->center;
  }
  return w;
}

Vec3 Simulator::handle_point(double object_joint, double bar_param) const {
  const CabinetSpec& cab = *scenario_.cabinet;
  const Vec3 rest = handle_center_at_rest(cab) + handle_axis(cab) * bar_param;
  if (cab.prismatic) return rest + cab.outward() * object_joint;
  const Vec3 hinge = hinge_position(cab);
  return hinge + rot_z(hinge_sign(cab) * object_joint) * (rest - hinge);
}

void Simulator::update_cabinet_coupling(WorldState& w) const {
  const CabinetSpec& cab = *scenario_.cabinet;
  const std::string prefix = arm_prefix_of(model_->gripper_frames().front());
  const Vec3 mid = gripper_midpoint(*model_, w.robot, prefix);
  const double jaw = jaw_width(*model_, w.robot, prefix);

  if (w.attachment) {
    Attachment& att = *w.attachment;
    const Vec3 h_prev = handle_point(w.object_joint, att.handle_param);

    double j_new = w.object_joint;
    if (cab.prismatic) {
      j_new += cab.outward().dot(mid - h_prev);
    } else {
      const Vec3 hinge = hinge_position(cab);
      const double dphi =
          signed_planar_angle(planar(h_prev - hinge), planar(mid - hinge));
      j_new += hinge_sign(cab) * dphi;
    }
    j_new = std::clamp(j_new, 0.0, cab.joint_range);
    w.object_joint = j_new;

    // The holonomic coupling drags the base/torso so the gripper midpoint
    // stays on the handle; limit clamping may leave a residual separation.
    const Vec3 h_new = handle_point(j_new, att.handle_param);
    const Vec3 corr = h_new - mid;
    auto add = [&](const char* name, double delta) {
      const int i = model_->joint_index(name);
      w.robot.q[i] = std::clamp(w.robot.q[i] + delta, model_->joint(i).lower,
                                model_->joint(i).upper);
    };
    add("base_x", corr.x());
    add("base_y", corr.y());
    add("torso_lift", corr.z());

    const Vec3 mid_after = gripper_midpoint(*model_, w.robot, prefix);
    if ((h_new - mid_after).norm() > kHoldBreakDistance) {
      w.attachment.reset();
      w.grasp_lost_event = true;
    } else if (jaw_width(*model_, w.robot, prefix) > att.attach_jaw + kReleaseJawSlack) {
      w.attachment.reset();  // deliberate release
    }
  } else if (jaw <= cab.handle_thickness + kAttachJawSlack) {
    const Vec3 axis = handle_axis(cab);
    const Vec3 center_now = handle_point(w.object_joint, 0.0);
    const double s = std::clamp(axis.dot(mid - center_now),
                                -cab.handle_length * 0.45, cab.handle_length * 0.45);
    const Vec3 grasp_pt = handle_point(w.object_joint, s);
    if ((mid - grasp_pt).norm() <= 0.025) {
      Attachment att;
      att.mode = AttachMode::HandleGrasp;
      att.handle_param = s;
      att.attach_jaw = jaw;
      w.attachment = att;
    }
  }

  if (!cab.prismatic) apply_door_pry(w);
}

void Simulator::apply_door_pry(WorldState& w) const {
  const CabinetSpec& cab = *scenario_.cabinet;
  const int bx = model_->joint_index("base_x");
  const int by = model_->joint_index("base_y");
  const Vec3 base(w.robot.q[bx], w.robot.q[by], 0.0);

  const Vec3 hinge = hinge_position(cab);
  const Vec3 free_rest = cab.position + Vec3(0, 0, cab.panel_center_z) -
                         cab.lateral() * cab.hinge_side * (cab.panel_width / 2.0);
  auto free_edge = [&](double j) {
    return hinge + rot_z(hinge_sign(cab) * j) * (free_rest - hinge);
  };
  auto clearance = [&](double j) {
    return dist_point_segment_2d(base, hinge, free_edge(j));
  };

  const double d0 = clearance(w.object_joint);
  if (d0 >= kBaseRadius) return;

  const double hi = std::min(0.5, cab.joint_range - w.object_joint);
  if (hi <= 1e-9) return;
  if (clearance(w.object_joint + hi) <= d0) return;  // opening does not separate

  double lo_dj = 0.0, hi_dj = hi;
  if (clearance(w.object_joint + hi) < kBaseRadius) {
    w.object_joint += hi;  // pinned against the swing limit of this step
    return;
  }
  for (int i = 0; i < 48; ++i) {
    const double mid_dj = (lo_dj + hi_dj) / 2.0;
    if (clearance(w.object_joint + mid_dj) < kBaseRadius)
      lo_dj = mid_dj;
    else
      hi_dj = mid_dj;
  }
  w.object_joint += hi_dj;
}

void Simulator::update_bucket_coupling(WorldState& w) const {
  const BucketSpec& b = *scenario_.bucket;
  const Vec3 ml = gripper_midpoint(*model_, w.robot, "l");
  const Vec3 mr = gripper_midpoint(*model_, w.robot, "r");
  const double jl = jaw_width(*model_, w.robot, "l");
  const double jr = jaw_width(*model_, w.robot, "r");

  auto rest_height = [&]() {
    if (!scenario_.target) return 0.0;
    const double d =
        planar(w.object_pose.translation - scenario_.target->center).norm();
    return d <= scenario_.target->radius + 0.02 ? scenario_.target->platform_height : 0.0;
  };
  auto drop = [&]() {
    w.attachment.reset();
    w.object_pose.translation.z() = rest_height();
    w.bucket_tilt = 0.0;
  };

  if (w.attachment) {
    const Pose torso = forward_kinematics(*model_, w.robot, "torso_lift");
    w.object_pose = torso * w.attachment->object_rel_torso;
    w.object_pose.translation.z() = std::max(w.object_pose.translation.z(), rest_height());

    const Vec3 axis = w.object_pose.translation;
    const double top = axis.z() + b.height;

    if (w.attachment->mode == AttachMode::RimGrasp) {
      const double span = std::max(0.05, planar(ml - mr).norm());
      w.bucket_tilt = std::atan2(std::abs(ml.z() - mr.z()), span);
      if (w.bucket_tilt > kTiltLimit) {
        w.topple_event = true;
        drop();
        return;
      }
      const double release_jaw = w.attachment->attach_jaw + kReleaseJawSlack;
      if (jl > release_jaw || jr > release_jaw) {
        drop();
        return;
      }
      for (const Vec3& m : {ml, mr}) {
        if (std::abs(planar(m - axis).norm() - b.radius) > 0.06 ||
            std::abs(m.z() - top) > 0.08) {
          w.grasp_lost_event = true;
          drop();
          return;
        }
      }
    } else {  // Hug
      w.bucket_tilt = 0.0;
      for (const Vec3& m : {ml, mr}) {
        if (planar(m - axis).norm() > b.radius + 0.12 || m.z() < -0.02 ||
            m.z() > top + 0.10) {
          drop();
          return;
        }
      }
    }
    return;
  }

  // Resting: settle on the platform or the floor.
  w.object_pose.translation.z() = rest_height();
  w.bucket_tilt = 0.0;

  const Vec3 axis = w.object_pose.translation;
  const double top = axis.z() + b.height;
  const Pose torso = forward_kinematics(*model_, w.robot, "torso_lift");

  const bool rim_l = std::abs(planar(ml - axis).norm() - b.radius) <= 0.035 &&
                     std::abs(ml.z() - top) <= 0.05;
  const bool rim_r = std::abs(planar(mr - axis).norm() - b.radius) <= 0.035 &&
                     std::abs(mr.z() - top) <= 0.05;
  const bool jaws_closed = jl <= b.rim_thickness + kAttachJawSlack &&
                           jr <= b.rim_thickness + kAttachJawSlack &&
                           jl >= b.rim_thickness - 0.002 && jr >= b.rim_thickness - 0.002;
  if (rim_l && rim_r && jaws_closed) {
    Attachment att;
    att.mode = AttachMode::RimGrasp;
    att.attach_jaw = std::max(jl, jr);
    att.object_rel_torso = torso.inverse() * w.object_pose;
    w.attachment = att;
    return;
  }

  const double spread = std::abs(signed_planar_angle(planar(ml - axis), planar(mr - axis)));
  const bool hug_l = planar(ml - axis).norm() <= b.radius + 0.06 && ml.z() > 0.02 &&
                     ml.z() < top + 0.05;
  const bool hug_r = planar(mr - axis).norm() <= b.radius + 0.06 && mr.z() > 0.02 &&
                     mr.z() < top + 0.05;
  if (hug_l && hug_r && spread >= 1.6) {
    Attachment att;
    att.mode = AttachMode::Hug;
    att.object_rel_torso = torso.inverse() * w.object_pose;
    w.attachment = att;
  }
}

void Simulator::update_chair_coupling(WorldState& w) const {
  const ChairSpec& c = *scenario_.chair;
  const double hug_radius = std::max(c.seat_width, c.seat_depth) / 2.0 + 0.08;
  const Vec3 ml = gripper_midpoint(*model_, w.robot, "l");
  const Vec3 mr = gripper_midpoint(*model_, w.robot, "r");
  const Pose torso_planar = planar_pose(forward_kinematics(*model_, w.robot, "torso_lift"));

  if (w.attachment) {
    w.object_pose = torso_planar * w.attachment->object_rel_torso;
    const Vec3 axis = w.object_pose.translation;
    for (const Vec3& m : {ml, mr}) {
      if (planar(m - axis).norm() > hug_radius + 0.10 || m.z() < 0.18 ||
          m.z() > c.back_height + 0.15) {
        w.attachment.reset();
        return;
      }
    }
    return;
  }

  const Vec3 axis = w.object_pose.translation;
  const double spread = std::abs(signed_planar_angle(planar(ml - axis), planar(mr - axis)));
  const bool in_l = planar(ml - axis).norm() <= hug_radius && ml.z() > 0.22 &&
                    ml.z() < c.back_height + 0.10;
  const bool in_r = planar(mr - axis).norm() <= hug_radius && mr.z() > 0.22 &&
                    mr.z() < c.back_height + 0.10;
  if (in_l && in_r && spread >= 1.4) {
    Attachment att;
    att.mode = AttachMode::Hug;
    att.object_rel_torso = torso_planar.inverse() * w.object_pose;
    w.attachment = att;
  }
}

StepOutput Simulator::step(const WorldState& world, const ActionVector& action) const {
  if (world.step_count >= scenario_.episode_limit)
    throw Error(ErrorKind::EpisodeOver, "episode limit reached");

  const Eigen::VectorXd v = action_to_velocity(action, model_->velocity_ranges());

  StepOutput out;
  out.world = world;
  out.world.robot.q += v * scenario_.dt;
  out.world.robot = clamp_to_limits(*model_, out.world.robot);

  switch (scenario_.task) {
    case TaskKind::OpenDrawer:
    case TaskKind::OpenDoor:
      update_cabinet_coupling(out.world);
      break;
    case TaskKind::MoveBucket:
      update_bucket_coupling(out.world);
      break;
    case TaskKind::PushChair:
      update_chair_coupling(out.world);
      break;
  }

  out.world.step_count = world.step_count + 1;
  out.observation = render(out.world);
  return out;
}

SuccessCheck Simulator::check_success(const WorldState& world) const {
  SuccessCheck sc;
  switch (scenario_.task) {
    case TaskKind::OpenDrawer:
      sc.success = world.object_joint >= 0.9 * scenario_.cabinet->joint_range;
      break;
    case TaskKind::OpenDoor:
      sc.success = world.object_joint >= std::numbers::pi / 2.0;
      break;
    case TaskKind::MoveBucket: {
      const TargetRegionSpec& t = *scenario_.target;
      const double d = planar(world.object_pose.translation - t.center).norm();
      sc.success = !world.attachment && d <= t.radius &&
                   world.bucket_tilt < kTiltLimit &&
                   std::abs(world.object_pose.translation.z() - t.platform_height) <= 0.02;
      break;
    }
    case TaskKind::PushChair: {
      const TargetRegionSpec& t = *scenario_.target;
      const double d = planar(world.object_pose.translation - t.center).norm();
      const bool upright = world.object_pose.rotation.col(2).dot(Vec3::UnitZ()) >=
                           std::cos(15.0 * std::numbers::pi / 180.0);
      sc.success = d <= t.radius && upright;
      break;
    }
  }
  sc.done = sc.success || world.step_count >= scenario_.episode_limit;
  return sc;
}

}  // namespace mobman
