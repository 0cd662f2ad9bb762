#include <cmath>

#include "mobman/behavior.hpp"

namespace mobman {

namespace {

constexpr double kPosReachTol = 0.025;
constexpr double kGraspReachTol = 0.015;
constexpr double kRotReachTol = 0.30;
constexpr double kBaseReachTol = 0.07;

Vec3 planar(const Vec3& v) { return Vec3(v.x(), v.y(), 0.0); }

double signed_planar_angle(const Vec3& from, const Vec3& to) {
  const double cross = from.x() * to.y() - from.y() * to.x();
  const double dot = from.x() * to.x() + from.y() * to.y();
  return std::atan2(cross, dot);
}

const std::string& gripper_frame(const TaskContext& c, std::size_t i = 0) {
  return c.model->gripper_frames()[i];
}

BaseWaypoint current_base(const TaskContext& c, const JointState& q) {
  BaseWaypoint wp;
  wp.x = q.q[c.model->joint_index("base_x")];
  wp.y = q.q[c.model->joint_index("base_y")];
  wp.yaw = q.q[c.model->joint_index("base_rot")];
  wp.torso = q.q[c.model->joint_index("torso_lift")];
  return wp;
}

bool base_at(const TaskContext& c, const JointState& q, const BaseWaypoint& goal,
             double pos_tol = kBaseReachTol, double yaw_tol = 0.35) {
  const BaseWaypoint cur = current_base(c, q);
  const double dx = cur.x - goal.x;
  const double dy = cur.y - goal.y;
  return std::hypot(dx, dy) <= pos_tol && std::abs(cur.yaw - goal.yaw) <= yaw_tol &&
         std::abs(cur.torso - goal.torso) <= 0.02;
}

bool gripper_at(const TaskContext& c, const JointState& q,
                const std::vector<GripperPoseTarget>& goals, double pos_tol,
                double rot_tol = kRotReachTol) {
  for (const GripperPoseTarget& g : goals) {
    const Pose cur = forward_kinematics(*c.model, q, g.frame);
    if ((cur.translation - g.pose.translation).norm() > pos_tol) return false;
    if (g.orientation_weight > 0.0 &&
        rotation_error(g.pose.rotation, cur.rotation).norm() > rot_tol)
      return false;
  }
  return true;
}

// Reorients a candidate so the approach points at the handle from the
// robot's side. Horizontal-class grasps (vertical bars) are re-pinched about
// the bar axis: square cross sections leave the PCA closing axis arbitrary,
// and a head-on approach keeps the wrist near its neutral posture.
GraspCandidate oriented_toward_cabinet(GraspCandidate g, const Vec3& outward) {
  if (g.orientation_class == GraspOrientation::Horizontal) {
    const Vec3 approach = -planar(outward).normalized();
    const Vec3 closing = Vec3::UnitZ().cross(approach);
    g.pose.rotation.col(0) = approach;
    g.pose.rotation.col(1) = closing;
    g.pose.rotation.col(2) = approach.cross(closing);
    return g;
  }
  Vec3 approach = g.pose.rotation.col(0);
  if (approach.dot(outward) > 0.0) {
    const Vec3 closing = g.pose.rotation.col(1);
    g.pose.rotation.col(0) = -approach;
    g.pose.rotation.col(2) = (-approach).cross(closing);
  }
  return g;
}

// --- estimates shared by the cabinet trees ---------------------------------

double drawer_open_estimate(TaskContext& c, const PointCloud& obs) {
  try {
    c.last_open_estimate = detect_open_displacement(obs, c.initial_panel,
                                                    SegLabel::DrawerPanel, c.statics.outward_axis);
  } catch (const Error&) {
    // panel invisible this frame, keep the previous estimate
  }
  return c.last_open_estimate;
}

double door_angle_estimate(TaskContext& c, const PointCloud& obs) {
  try {
    const Vec3 before = centroid(c.initial_panel, SegLabel::DoorPanel);
    const Vec3 now = centroid(obs, SegLabel::DoorPanel);
    const Vec3 hinge = c.statics.hinge_position;
    c.last_open_estimate =
        std::abs(signed_planar_angle(planar(before - hinge), planar(now - hinge)));
  } catch (const Error&) {
  }
  return c.last_open_estimate;
}

void update_tracked_handle(TaskContext& c, const PointCloud& obs) {
  if (obs.count_label(SegLabel::Handle) >= 3) {
    c.tracked_handle = centroid(obs, SegLabel::Handle);
    c.have_tracked_handle = true;
  }
}

bool grasp_lost(TaskContext& c, const JointState& q) {
  if (!c.have_tracked_handle) return false;
  const Vec3 mid = gripper_midpoint(*c.model, q, arm_prefix_of(gripper_frame(c)));
  return (mid - c.tracked_handle).norm() > c.cfg.hold_distance * 1.8;
}

// --- node builders ----------------------------------------------------------

EnterFn reset_cabinet_perception() {
  return [](TaskContext& c) {
    c.acc = HandleAccumulator{};
    c.acc_ready = false;
    c.grasp.reset();
    c.ik_failed = false;
    c.perception_failed = false;
    c.have_tracked_handle = false;
  };
}

BtNode make_accumulate_node(const std::string& on_success) {
  BtNode n;
  n.name = "AccumulateHandle";
  n.on_enter = reset_cabinet_perception();
  n.target = [](TaskContext& c, const PointCloud& obs, const JointState&, const NodeRuntime&) {
    if (!c.have_initial_panel) {
      c.initial_panel = obs;
      c.have_initial_panel = true;
    }
    AccumulateResult r = accumulate_handle(c.acc, obs, c.cfg.accumulate_min_points,
                                           c.cfg.accumulate_min_frames);
    c.acc = std::move(r.acc);
    c.acc_ready = c.acc_ready || r.ready;
    // Fingers reopen here so a re-grasp after a slip starts clean.
    return MotionTarget::gripper_command(GripperAction::Open);
  };
  n.success = [](TaskContext& c, const PointCloud&, const JointState&) {
    return c.acc_ready && !c.acc.merged.empty();
  };
  n.failure = [](TaskContext& c, const PointCloud&, const JointState&) {
    return c.acc_ready && c.acc.merged.empty();
  };
  n.on_success = on_success;
  n.on_failure = "AccumulateHandle";
  n.budget = 15;
  return n;
}

BtNode make_pre_grasp_node(const std::string& on_success) {
  BtNode n;
  n.name = "PreGrasp";
  n.target = [](TaskContext& c, const PointCloud&, const JointState&, const NodeRuntime&) {
    if (!c.gripper_goal) {
      if (!c.grasp) {
        try {
          auto grasps = estimate_handle_grasps(c.acc.merged, c.statics.max_jaw_width);
          c.grasp = oriented_toward_cabinet(grasps.front(), c.statics.outward_axis);
          c.tracked_handle = c.grasp->pose.translation;
          c.have_tracked_handle = true;
        } catch (const Error&) {
          c.perception_failed = true;
          return MotionTarget::hold();
        }
      }
      Pose pose = c.grasp->pose;
      pose.translation -= pose.rotation.col(0) * c.cfg.pre_grasp_offset;
      c.gripper_goal = {{gripper_frame(c), pose, 1.0, 1.0}};
    }
    return MotionTarget::poses(*c.gripper_goal);
  };
  n.success = [](TaskContext& c, const PointCloud&, const JointState& q) {
    return c.gripper_goal && gripper_at(c, q, *c.gripper_goal, kPosReachTol);
  };
  n.failure = [](TaskContext& c, const PointCloud&, const JointState&) {
    return c.ik_failed || c.perception_failed;
  };
  n.on_success = on_success;
  n.on_failure = "AccumulateHandle";
  n.budget = 40;
  return n;
}

BtNode make_grasp_node(const std::string& on_success) {
  BtNode n;
  n.name = "Grasp";
  n.target = [](TaskContext& c, const PointCloud&, const JointState&, const NodeRuntime&) {
    if (!c.gripper_goal) {
      Pose pose = c.grasp->pose;
      pose.translation += pose.rotation.col(0) * c.cfg.grasp_depth;
      c.gripper_goal = {{gripper_frame(c), pose, 1.0, 1.0}};
    }
    return MotionTarget::poses(*c.gripper_goal);
  };
  n.success = [](TaskContext& c, const PointCloud&, const JointState& q) {
    return c.gripper_goal && gripper_at(c, q, *c.gripper_goal, kGraspReachTol, 0.18);
  };
  n.failure = [](TaskContext& c, const PointCloud&, const JointState&) {
    return c.ik_failed || !c.grasp;
  };
  n.on_success = on_success;
  n.on_failure = "AccumulateHandle";
  n.budget = 35;
  return n;
}

BtNode make_close_gripper_node(const std::string& on_success) {
  BtNode n;
  n.name = "CloseGripper";
  n.target = [](TaskContext& c, const PointCloud&, const JointState& q, const NodeRuntime& rt) {
    if (rt.ticks_in_node == 0) {
      c.handle_at_grasp = c.tracked_handle;
      c.torso_at_grasp = q.q[c.model->joint_index("torso_lift")];
    }
    return MotionTarget::gripper_command(GripperAction::Close);
  };
  n.success = [](TaskContext& c, const PointCloud&, const JointState& q) {
    if (!c.grasp) return false;
    const std::string prefix = arm_prefix_of(gripper_frame(c));
    const bool closed = jaw_width(*c.model, q, prefix) <= c.grasp->width + 0.004;
    const Vec3 mid = gripper_midpoint(*c.model, q, prefix);
    return closed && (mid - c.tracked_handle).norm() <= c.cfg.hold_distance;
  };
  n.on_success = on_success;
  n.on_failure = "AccumulateHandle";
  n.budget = 28;
  return n;
}

PredicateFn always() {
  return [](TaskContext&, const PointCloud&, const JointState&) { return true; };
}

TargetFn hold_target() {
  return [](TaskContext&, const PointCloud&, const JointState&, const NodeRuntime&) {
    return MotionTarget::hold();
  };
}

}  // namespace

// ---------------------------------------------------------------------------
// Open Cabinet Drawer
// ---------------------------------------------------------------------------

BehaviorTree build_drawer_tree() {
  BehaviorTree tree;
  tree.task = TaskKind::OpenDrawer;
  tree.initial = "AccumulateHandle";

  tree.nodes.push_back(make_accumulate_node("PreGrasp"));
  tree.nodes.push_back(make_pre_grasp_node("Grasp"));
  tree.nodes.push_back(make_grasp_node("CloseGripper"));
  tree.nodes.push_back(make_close_gripper_node("PullBase"));

  BtNode pull;
  pull.name = "PullBase";
  pull.target = [](TaskContext& c, const PointCloud& obs, const JointState& q,
                   const NodeRuntime&) {
    update_tracked_handle(c, obs);
    drawer_open_estimate(c, obs);
    if (!c.base_goal) {
      BaseWaypoint wp = current_base(c, q);
      const Vec3 dir = planar(c.statics.outward_axis).normalized();
      const double pull = c.statics.joint_range * 1.1 + 0.15;
      wp.x += dir.x() * pull;
      wp.y += dir.y() * pull;
      c.base_goal = wp;
    }
    return MotionTarget::waypoint(*c.base_goal);
  };
  pull.success = [](TaskContext& c, const PointCloud& obs, const JointState&) {
    return drawer_open_estimate(c, obs) >= 0.9 * c.statics.joint_range + 0.02;
  };
  pull.failure = [](TaskContext& c, const PointCloud&, const JointState& q) {
    return grasp_lost(c, q);
  };
  pull.on_success = "CheckOpen";
  pull.on_failure = "AccumulateHandle";
  pull.budget = 60;
  tree.nodes.push_back(std::move(pull));

  BtNode check;
  check.name = "CheckOpen";
  check.target = hold_target();
  check.success = [](TaskContext& c, const PointCloud& obs, const JointState&) {
    return drawer_open_estimate(c, obs) >= 0.9 * c.statics.joint_range + 0.02;
  };
  check.failure = always();
  check.on_success = kTerminalNode;
  check.on_failure = "AccumulateHandle";
  check.budget = 2;
  tree.nodes.push_back(std::move(check));

  tree.current = tree.initial;
  tree.validate();
  return tree;
}

// ---------------------------------------------------------------------------
// Open Cabinet Door
// ---------------------------------------------------------------------------

namespace {

// Direction the panel surface travels at opening angle `angle`, at the
// radial direction of the initial handle.
Vec3 door_push_direction(const TaskContext& c, double angle) {
  const Vec3 radial0 = planar(c.handle_at_grasp - c.statics.hinge_position).normalized();
  const Vec3 tangent0 = c.statics.hinge_sign * Vec3::UnitZ().cross(radial0);
  return rot_z(c.statics.hinge_sign * angle) * tangent0;
}

Vec3 door_contact_point(const TaskContext& c, double angle, double radius_fraction) {
  const Vec3 radial0 = planar(c.handle_at_grasp - c.statics.hinge_position).normalized();
  const Vec3 radial = rot_z(c.statics.hinge_sign * angle) * radial0;
  return c.statics.hinge_position + radial * (radius_fraction * c.statics.door_panel_width);
}

}  // namespace

BehaviorTree build_door_tree(bool use_circular) {
  BehaviorTree tree;
  tree.task = TaskKind::OpenDoor;
  tree.initial = "AccumulateHandle";

  BtNode acc = make_accumulate_node("PreGrasp");
  acc.budget = 12;
  tree.nodes.push_back(std::move(acc));
  BtNode pre = make_pre_grasp_node("Grasp");
  pre.budget = 36;
  tree.nodes.push_back(std::move(pre));
  BtNode grasp = make_grasp_node("CloseGripper");
  grasp.budget = 30;
  tree.nodes.push_back(std::move(grasp));
  BtNode close = make_close_gripper_node(use_circular ? "CircularPull" : "DiagonalPull");
  close.budget = 28;
  tree.nodes.push_back(std::move(close));

  if (use_circular) {
    // Alternative opening: track N key poses on the hinge arc with the
    // gripper instead of dragging the base diagonally.
    BtNode circ;
    circ.name = "CircularPull";
    circ.target = [](TaskContext& c, const PointCloud& obs, const JointState& q,
                     const NodeRuntime&) {
      update_tracked_handle(c, obs);
      door_angle_estimate(c, obs);
      if (!c.gripper_goal) {
        Pose start = forward_kinematics(*c.model, q, gripper_frame(c));
        const auto waypoints = circular_pull_waypoints(
            c.statics.hinge_position, c.statics.hinge_sign, start, c.cfg.door_done_angle, 10);
        // March through the arc: pick the first waypoint not yet reached.
        for (const Pose& p : waypoints) {
          if ((forward_kinematics(*c.model, q, gripper_frame(c)).translation - p.translation)
                  .norm() > 0.04) {
            c.gripper_goal = {{gripper_frame(c), p, 1.0, 0.3}};
            break;
          }
        }
        if (!c.gripper_goal)
          c.gripper_goal = {{gripper_frame(c), waypoints.back(), 1.0, 0.3}};
      } else if (gripper_at(c, q, *c.gripper_goal, 0.04, 10.0)) {
        c.gripper_goal.reset();  // advance to the next arc pose next tick
      }
      return MotionTarget::poses(
          c.gripper_goal ? *c.gripper_goal
                         : std::vector<GripperPoseTarget>{{gripper_frame(c),
                                                           forward_kinematics(
                                                               *c.model, q, gripper_frame(c)),
                                                           1.0, 0.3}});
    };
    circ.success = [](TaskContext& c, const PointCloud& obs, const JointState&) {
      return door_angle_estimate(c, obs) >= c.cfg.door_done_angle;
    };
    circ.failure = [](TaskContext& c, const PointCloud&, const JointState& q) {
      return c.ik_failed || grasp_lost(c, q);
    };
    circ.on_success = "CheckOpen";
    circ.on_failure = "AccumulateHandle";
    circ.budget = 120;
    tree.nodes.push_back(std::move(circ));
  } else {
    BtNode diag;
    diag.name = "DiagonalPull";
    diag.target = [](TaskContext& c, const PointCloud& obs, const JointState& q,
                     const NodeRuntime&) {
      update_tracked_handle(c, obs);
      door_angle_estimate(c, obs);
      if (!c.base_goal) {
        BaseWaypoint wp = current_base(c, q);
        const Vec3 dir = door_push_direction(c, 0.6);
        const double radius =
            planar(c.handle_at_grasp - c.statics.hinge_position).norm();
        const double pull = std::max(0.35, radius * 1.25);
        wp.x += dir.x() * pull;
        wp.y += dir.y() * pull;
        c.base_goal = wp;
      }
      return MotionTarget::waypoint(*c.base_goal);
    };
    diag.success = [](TaskContext& c, const PointCloud& obs, const JointState&) {
      return door_angle_estimate(c, obs) >= c.cfg.door_partial_angle;
    };
    diag.failure = [](TaskContext& c, const PointCloud&, const JointState& q) {
      return grasp_lost(c, q);
    };
    diag.on_success = "CheckOpen";
    diag.on_failure = "AccumulateHandle";
    diag.budget = 45;
    tree.nodes.push_back(std::move(diag));
  }

  BtNode check;
  check.name = "CheckOpen";
  check.target = hold_target();
  check.success = [](TaskContext& c, const PointCloud& obs, const JointState&) {
    return door_angle_estimate(c, obs) >= c.cfg.door_done_angle;
  };
  check.failure = always();
  check.on_success = kTerminalNode;
  check.on_failure = use_circular ? "AccumulateHandle" : "ReleaseGrasp";
  check.budget = 2;
  tree.nodes.push_back(std::move(check));

  if (!use_circular) {
    BtNode release;
    release.name = "ReleaseGrasp";
    release.target = [](TaskContext&, const PointCloud&, const JointState&, const NodeRuntime&) {
      return MotionTarget::gripper_command(GripperAction::Open);
    };
    release.success = [](TaskContext& c, const PointCloud&, const JointState& q) {
      return jaw_width(*c.model, q, arm_prefix_of(gripper_frame(c))) >= 0.055;
    };
    release.on_success = "RepositionForPry";
    release.on_failure = "RepositionForPry";
    release.budget = 10;
    tree.nodes.push_back(std::move(release));

    // The panel swings toward the robot, so the free region to push from is
    // the doorway it has already swept. Station the base just behind the
    // panel's current angle, then chase a point ahead of it; the simulator's
    // contact resolution turns that pursuit into hinge rotation.
    BtNode repos;
    repos.name = "RepositionForPry";
    repos.target = [](TaskContext& c, const PointCloud& obs, const JointState& q,
                      const NodeRuntime&) {
      door_angle_estimate(c, obs);
      if (!c.base_goal) {
        const double behind = std::max(0.10, c.last_open_estimate - 0.30);
        const Vec3 station = door_contact_point(c, behind, 0.72);
        BaseWaypoint wp = current_base(c, q);
        wp.x = station.x();
        wp.y = station.y();
        c.base_goal = wp;
      }
      return MotionTarget::waypoint(*c.base_goal);
    };
    repos.success = [](TaskContext& c, const PointCloud&, const JointState& q) {
      return c.base_goal && base_at(c, q, *c.base_goal, 0.10, 10.0);
    };
    repos.on_success = "PryPush";
    repos.on_failure = "PryPush";
    repos.budget = 40;
    tree.nodes.push_back(std::move(repos));

    BtNode pry;
    pry.name = "PryPush";
    pry.target = [](TaskContext& c, const PointCloud& obs, const JointState& q,
                    const NodeRuntime&) {
      const double angle = door_angle_estimate(c, obs);
      // Which side of the panel is the base on, in the opening sense?
      const BaseWaypoint cur = current_base(c, q);
      const Vec3 radial0 = planar(c.handle_at_grasp - c.statics.hinge_position).normalized();
      const Vec3 radial = rot_z(c.statics.hinge_sign * angle) * radial0;
      const Vec3 to_base = planar(Vec3(cur.x, cur.y, 0) - c.statics.hinge_position);
      const double side = c.statics.hinge_sign * signed_planar_angle(radial, to_base);
      Vec3 goal;
      if (side > -0.05) {
        goal = door_contact_point(c, std::max(0.10, angle - 0.35), 0.72);
      } else {
        const double ahead = std::min(angle + 0.40, c.statics.joint_range * 0.98);
        goal = door_contact_point(c, ahead, 0.72);
      }
      BaseWaypoint wp = cur;
      wp.x = goal.x();
      wp.y = goal.y();
      return MotionTarget::waypoint(wp);
    };
    pry.success = [](TaskContext& c, const PointCloud& obs, const JointState&) {
      return door_angle_estimate(c, obs) >= c.cfg.door_done_angle;
    };
    pry.on_success = "CheckOpen";
    pry.on_failure = "RepositionForPry";
    pry.budget = 45;
    tree.nodes.push_back(std::move(pry));
  }

  tree.current = tree.initial;
  tree.validate();
  return tree;
}

// ---------------------------------------------------------------------------
// Move Bucket
// ---------------------------------------------------------------------------

namespace {

void update_rim(TaskContext& c, const PointCloud& obs) {
  const PointCloud bucket = obs.filtered(SegLabel::Bucket);
  if (bucket.empty()) return;
  try {
    c.rim = estimate_bucket_rim(bucket, c.cfg.rim_bin_height,
                                rim_min_count_for(bucket.size()));
  } catch (const Error&) {
  }
}

// Lateral direction across the line of sight from the base to the center.
Vec3 flank_lateral(const TaskContext& c, const JointState& q, const Vec3& center) {
  const BaseWaypoint base = current_base(c, q);
  const Vec3 approach = planar(center - Vec3(base.x, base.y, 0)).normalized();
  return Vec3::UnitZ().cross(approach);
}

BtNode make_approach_node(const std::string& name, const std::string& next,
                          const std::string& on_fail, double extra_standoff) {
  BtNode n;
  n.name = name;
  n.target = [extra_standoff](TaskContext& c, const PointCloud& obs, const JointState& q,
                              const NodeRuntime&) {
    update_rim(c, obs);
    if (!c.base_goal && c.rim) {
      const BaseWaypoint cur = current_base(c, q);
      const Vec3 center = c.rim->rim_center;
      Vec3 dir = planar(Vec3(cur.x, cur.y, 0) - center);
      dir = dir.norm() < 1e-6 ? Vec3::UnitX() : Vec3(dir.normalized());
      BaseWaypoint wp = cur;
      const double stand = c.rim->rim_radius + extra_standoff;
      wp.x = center.x() + dir.x() * stand;
      wp.y = center.y() + dir.y() * stand;
      c.base_goal = wp;  // heading stays put, the arms absorb the bearing
    }
    return c.base_goal ? MotionTarget::waypoint(*c.base_goal) : MotionTarget::hold();
  };
  n.success = [](TaskContext& c, const PointCloud&, const JointState& q) {
    return c.base_goal && base_at(c, q, *c.base_goal, kBaseReachTol, 0.35);
  };
  n.on_success = next;
  n.on_failure = on_fail;
  n.budget = 30;
  return n;
}

}  // namespace

BehaviorTree build_bucket_tree() {
  BehaviorTree tree;
  tree.task = TaskKind::MoveBucket;
  tree.initial = "EstimateRim";

  BtNode est;
  est.name = "EstimateRim";
  est.on_enter = [](TaskContext& c) {
    c.rim.reset();
    c.branch.reset();
    c.ik_failed = false;
  };
  est.target = [](TaskContext& c, const PointCloud& obs, const JointState&, const NodeRuntime&) {
    update_rim(c, obs);
    if (c.rim && !c.branch)
      c.branch = rim_graspable(*c.rim, c.statics.max_jaw_width, c.cfg.rim_grasp_margin)
                     ? CarryBranch::Prehensile
                     : CarryBranch::Hug;
    return MotionTarget::gripper_command(GripperAction::Open);
  };
  est.success = [](TaskContext& c, const PointCloud&, const JointState&) {
    return c.rim.has_value() && c.branch.has_value();
  };
  est.on_success = "DecideCarry";
  est.on_failure = "EstimateRim";
  est.budget = 8;
  tree.nodes.push_back(std::move(est));

  // Routing node of the decision diagram: success edge takes the thin-rim
  // prehensile branch, failure edge the hugging branch.
  BtNode decide;
  decide.name = "DecideCarry";
  decide.target = hold_target();
  decide.success = [](TaskContext& c, const PointCloud&, const JointState&) {
    return c.branch == CarryBranch::Prehensile;
  };
  decide.failure = always();
  decide.on_success = "ApproachGrasp";
  decide.on_failure = "ApproachHug";
  decide.budget = 2;
  tree.nodes.push_back(std::move(decide));

  tree.nodes.push_back(
      make_approach_node("ApproachGrasp", "DualGrasp", "EstimateRim", 0.42));

  BtNode dual;
  dual.name = "DualGrasp";
  dual.target = [](TaskContext& c, const PointCloud& obs, const JointState& q,
                   const NodeRuntime&) {
    update_rim(c, obs);
    if (!c.gripper_goal && c.rim) {
      const Vec3 lateral = flank_lateral(c, q, c.rim->rim_center);
      auto rim_pose = [&](double side) {
        const Vec3 radial = lateral * side;
        Pose p;
        p.rotation.col(0) = -Vec3::UnitZ();       // approach straight down
        p.rotation.col(1) = radial;               // close across the wall
        p.rotation.col(2) = (-Vec3::UnitZ()).cross(radial);
        p.translation = c.rim->rim_center + radial * c.rim->rim_radius;
        p.translation.z() = c.rim->rim_height - 0.015;
        return p;
      };
      c.gripper_goal = {{"l_gripper", rim_pose(+1.0), 1.0, 1.0},
                        {"r_gripper", rim_pose(-1.0), 1.0, 1.0}};
    }
    return c.gripper_goal ? MotionTarget::poses(*c.gripper_goal) : MotionTarget::hold();
  };
  dual.success = [](TaskContext& c, const PointCloud&, const JointState& q) {
    return c.gripper_goal && gripper_at(c, q, *c.gripper_goal, 0.02, 0.3);
  };
  dual.failure = [](TaskContext& c, const PointCloud&, const JointState&) {
    return c.ik_failed;
  };
  dual.on_success = "CloseGrippers";
  dual.on_failure = "EstimateRim";
  dual.budget = 30;
  tree.nodes.push_back(std::move(dual));

  BtNode closeg;
  closeg.name = "CloseGrippers";
  closeg.target = [](TaskContext& c, const PointCloud&, const JointState& q,
                     const NodeRuntime& rt) {
    if (rt.ticks_in_node == 0) c.torso_at_grasp = q.q[c.model->joint_index("torso_lift")];
    return MotionTarget::gripper_command(GripperAction::Close);
  };
  closeg.success = [](TaskContext& c, const PointCloud&, const JointState& q) {
    if (!c.rim) return false;
    const double want = c.rim->rim_thickness + 0.004;
    return jaw_width(*c.model, q, "l") <= want && jaw_width(*c.model, q, "r") <= want;
  };
  closeg.on_success = "LiftTorso";
  closeg.on_failure = "EstimateRim";
  closeg.budget = 12;
  tree.nodes.push_back(std::move(closeg));

  auto lift_node = [](const std::string& name, const std::string& next,
                      const std::string& fail) {
    BtNode n;
    n.name = name;
    n.target = [](TaskContext& c, const PointCloud&, const JointState& q, const NodeRuntime&) {
      if (!c.base_goal) {
        BaseWaypoint wp = current_base(c, q);
        wp.torso = std::min(wp.torso + c.cfg.lift_height, 0.6);
        c.base_goal = wp;
      }
      return MotionTarget::waypoint(*c.base_goal);
    };
    n.success = [](TaskContext& c, const PointCloud&, const JointState& q) {
      return c.base_goal &&
             std::abs(current_base(c, q).torso - c.base_goal->torso) <= 0.01;
    };
    n.on_success = next;
    n.on_failure = fail;
    n.budget = 30;
    return n;
  };

  auto carry_node = [](const std::string& name, const std::string& next,
                       const std::string& fail) {
    BtNode n;
    n.name = name;
    n.target = [](TaskContext& c, const PointCloud& obs, const JointState& q,
                  const NodeRuntime&) {
      update_rim(c, obs);
      BaseWaypoint wp = current_base(c, q);
      if (c.rim) {
        wp.x += c.statics.target_center.x() - c.rim->rim_center.x();
        wp.y += c.statics.target_center.y() - c.rim->rim_center.y();
      }
      return MotionTarget::waypoint(wp);
    };
    n.success = [](TaskContext& c, const PointCloud&, const JointState&) {
      if (!c.rim) return false;
      const Vec3 err = planar(c.rim->rim_center - c.statics.target_center);
      return err.norm() <= c.statics.target_radius * 0.45;
    };
    n.on_success = next;
    n.on_failure = fail;
    n.budget = 55;
    return n;
  };

  auto lower_node = [](const std::string& name, const std::string& next,
                       const std::string& fail) {
    BtNode n;
    n.name = name;
    n.target = [](TaskContext& c, const PointCloud&, const JointState& q, const NodeRuntime&) {
      if (!c.base_goal) {
        BaseWaypoint wp = current_base(c, q);
        wp.torso = c.torso_at_grasp + c.statics.platform_height;
        c.base_goal = wp;
      }
      return MotionTarget::waypoint(*c.base_goal);
    };
    n.success = [](TaskContext& c, const PointCloud&, const JointState& q) {
      return c.base_goal &&
             std::abs(current_base(c, q).torso - c.base_goal->torso) <= 0.012;
    };
    n.on_success = next;
    n.on_failure = fail;
    n.budget = 20;
    return n;
  };

  tree.nodes.push_back(lift_node("LiftTorso", "CarryToTarget", "EstimateRim"));
  tree.nodes.push_back(carry_node("CarryToTarget", "LowerTorso", "EstimateRim"));
  tree.nodes.push_back(lower_node("LowerTorso", "ReleaseBucket", "ReleaseBucket"));

  BtNode release;
  release.name = "ReleaseBucket";
  release.target = [](TaskContext&, const PointCloud&, const JointState&, const NodeRuntime&) {
    return MotionTarget::gripper_command(GripperAction::Open);
  };
  release.success = [](TaskContext& c, const PointCloud&, const JointState& q) {
    return jaw_width(*c.model, q, "l") >= 0.05 && jaw_width(*c.model, q, "r") >= 0.05;
  };
  release.on_success = kTerminalNode;
  release.on_failure = "ReleaseBucket";
  release.budget = 10;
  tree.nodes.push_back(std::move(release));

  // Hugging branch for rims too thick to pinch.
  tree.nodes.push_back(make_approach_node("ApproachHug", "PreHug", "EstimateRim", 0.30));

  BtNode prehug;
  prehug.name = "PreHug";
  prehug.target = [](TaskContext& c, const PointCloud& obs, const JointState& q,
                     const NodeRuntime&) {
    update_rim(c, obs);
    if (!c.gripper_goal && c.rim) {
      const Vec3 lateral = flank_lateral(c, q, c.rim->rim_center);
      const double z = std::max(0.12, c.rim->rim_height * 0.55);
      auto side_pose = [&](double side) {
        Pose p;
        p.translation = c.rim->rim_center + lateral * side * (c.rim->rim_radius + 0.10);
        p.translation.z() = z;
        return p;
      };
      c.gripper_goal = {{"l_gripper", side_pose(+1.0), 1.0, 0.0},
                        {"r_gripper", side_pose(-1.0), 1.0, 0.0}};
    }
    return c.gripper_goal ? MotionTarget::poses(*c.gripper_goal) : MotionTarget::hold();
  };
  prehug.success = [](TaskContext& c, const PointCloud&, const JointState& q) {
    return c.gripper_goal && gripper_at(c, q, *c.gripper_goal, 0.035);
  };
  prehug.failure = [](TaskContext& c, const PointCloud&, const JointState&) {
    return c.ik_failed;
  };
  prehug.on_success = "HugClose";
  prehug.on_failure = "EstimateRim";
  prehug.budget = 25;
  tree.nodes.push_back(std::move(prehug));

  BtNode hugclose;
  hugclose.name = "HugClose";
  hugclose.target = [](TaskContext& c, const PointCloud& obs, const JointState& q,
                       const NodeRuntime& rt) {
    update_rim(c, obs);
    if (rt.ticks_in_node == 0) c.torso_at_grasp = q.q[c.model->joint_index("torso_lift")];
    if (!c.gripper_goal && c.rim) {
      const Vec3 lateral = flank_lateral(c, q, c.rim->rim_center);
      const double z = std::max(0.12, c.rim->rim_height * 0.55);
      auto side_pose = [&](double side) {
        Pose p;
        p.translation =
            c.rim->rim_center + lateral * side * std::max(0.02, c.rim->rim_radius - 0.02);
        p.translation.z() = z;
        return p;
      };
      c.gripper_goal = {{"l_gripper", side_pose(+1.0), 1.0, 0.0},
                        {"r_gripper", side_pose(-1.0), 1.0, 0.0}};
    }
    return c.gripper_goal ? MotionTarget::poses(*c.gripper_goal) : MotionTarget::hold();
  };
  hugclose.success = [](TaskContext& c, const PointCloud&, const JointState& q) {
    if (!c.rim) return false;
    const Vec3 axis = c.rim->rim_center;
    const Vec3 ml = gripper_midpoint(*c.model, q, "l");
    const Vec3 mr = gripper_midpoint(*c.model, q, "r");
    const double dl = planar(ml - axis).norm();
    const double dr = planar(mr - axis).norm();
    const double spread =
        std::abs(signed_planar_angle(planar(ml - axis), planar(mr - axis)));
    return dl <= c.rim->rim_radius + 0.05 && dr <= c.rim->rim_radius + 0.05 && spread >= 1.7;
  };
  hugclose.failure = [](TaskContext& c, const PointCloud&, const JointState&) {
    return c.ik_failed;
  };
  hugclose.on_success = "LiftTorsoHug";
  hugclose.on_failure = "EstimateRim";
  hugclose.budget = 25;
  tree.nodes.push_back(std::move(hugclose));

  tree.nodes.push_back(lift_node("LiftTorsoHug", "CarryToTargetHug", "EstimateRim"));
  tree.nodes.push_back(carry_node("CarryToTargetHug", "LowerTorsoHug", "EstimateRim"));
  tree.nodes.push_back(lower_node("LowerTorsoHug", "UnHug", "UnHug"));

  BtNode unhug;
  unhug.name = "UnHug";
  unhug.target = [](TaskContext& c, const PointCloud& obs, const JointState& q,
                    const NodeRuntime&) {
    update_rim(c, obs);
    if (!c.gripper_goal && c.rim) {
      const Vec3 lateral = flank_lateral(c, q, c.rim->rim_center);
      const double z = std::max(0.12, c.rim->rim_height * 0.55);
      auto side_pose = [&](double side) {
        Pose p;
        p.translation = c.rim->rim_center + lateral * side * (c.rim->rim_radius + 0.14);
        p.translation.z() = z;
        return p;
      };
      c.gripper_goal = {{"l_gripper", side_pose(+1.0), 1.0, 0.0},
                        {"r_gripper", side_pose(-1.0), 1.0, 0.0}};
    }
    return c.gripper_goal ? MotionTarget::poses(*c.gripper_goal) : MotionTarget::hold();
  };
  unhug.success = [](TaskContext& c, const PointCloud&, const JointState& q) {
    if (!c.rim) return false;
    const Vec3 axis = c.rim->rim_center;
    const double dl = planar(gripper_midpoint(*c.model, q, "l") - axis).norm();
    const double dr = planar(gripper_midpoint(*c.model, q, "r") - axis).norm();
    return dl >= c.rim->rim_radius + 0.11 && dr >= c.rim->rim_radius + 0.11;
  };
  unhug.on_success = kTerminalNode;
  unhug.on_failure = "UnHug";
  unhug.budget = 20;
  tree.nodes.push_back(std::move(unhug));

  tree.current = tree.initial;
  tree.validate();
  return tree;
}

// ---------------------------------------------------------------------------
// Push Chair
// ---------------------------------------------------------------------------

namespace {

void update_chair(TaskContext& c, const PointCloud& obs) {
  const PointCloud chair = obs.filtered(SegLabel::Chair);
  if (chair.size() < 2) return;
  try {
    c.chair_center = estimate_chair_center(chair, c.statics.cushion_height);
  } catch (const Error&) {
  }
}

double chair_hug_halfwidth(const TaskContext& c, const PointCloud& obs) {
  const PointCloud chair = obs.filtered(SegLabel::Chair);
  PointCloud upper;
  for (std::size_t i = 0; i < chair.size(); ++i)
    if (chair.points[i].z() >= c.statics.cushion_height)
      upper.push_back(chair.points[i], chair.labels[i]);
  if (upper.size() < 3) return 0.30;
  try {
    const OrientedBox box = oriented_bbox(upper, pca_planar_axes(upper));
    return std::max(box.half_extents.x(), box.half_extents.y());
  } catch (const Error&) {
    return 0.30;
  }
}

}  // namespace

BehaviorTree build_chair_tree() {
  BehaviorTree tree;
  tree.task = TaskKind::PushChair;
  tree.initial = "EstimateChair";

  BtNode est;
  est.name = "EstimateChair";
  est.on_enter = [](TaskContext& c) { c.ik_failed = false; };
  est.target = [](TaskContext& c, const PointCloud& obs, const JointState&, const NodeRuntime&) {
    update_chair(c, obs);
    return MotionTarget::hold();
  };
  est.success = [](TaskContext& c, const PointCloud&, const JointState&) {
    return c.chair_center.has_value();
  };
  est.on_success = "CheckAtTarget";
  est.on_failure = "EstimateChair";
  est.budget = 8;
  tree.nodes.push_back(std::move(est));

  BtNode check;
  check.name = "CheckAtTarget";
  check.target = hold_target();
  check.success = [](TaskContext& c, const PointCloud& obs, const JointState&) {
    update_chair(c, obs);
    if (!c.chair_center) return false;
    return planar(*c.chair_center - c.statics.target_center).norm() <=
           c.statics.target_radius * 0.5;
  };
  check.failure = always();
  check.on_success = kTerminalNode;
  check.on_failure = "ApproachChair";
  check.budget = 2;
  tree.nodes.push_back(std::move(check));

  BtNode approach;
  approach.name = "ApproachChair";
  approach.target = [](TaskContext& c, const PointCloud& obs, const JointState& q,
                       const NodeRuntime&) {
    update_chair(c, obs);
    if (!c.base_goal && c.chair_center) {
      const Vec3 push = planar(c.statics.target_center - *c.chair_center).normalized();
      BaseWaypoint wp = current_base(c, q);
      wp.x = c.chair_center->x() - push.x() * 0.58;
      wp.y = c.chair_center->y() - push.y() * 0.58;
      c.base_goal = wp;
    }
    return c.base_goal ? MotionTarget::waypoint(*c.base_goal) : MotionTarget::hold();
  };
  approach.success = [](TaskContext& c, const PointCloud&, const JointState& q) {
    return c.base_goal && base_at(c, q, *c.base_goal, kBaseReachTol, 0.30);
  };
  approach.on_success = "HugChair";
  approach.on_failure = "EstimateChair";
  approach.budget = 45;
  tree.nodes.push_back(std::move(approach));

  BtNode hug;
  hug.name = "HugChair";
  hug.target = [](TaskContext& c, const PointCloud& obs, const JointState& q,
                  const NodeRuntime&) {
    update_chair(c, obs);
    if (!c.gripper_goal && c.chair_center) {
      const double half_w = chair_hug_halfwidth(c, obs);
      const Vec3 lateral = flank_lateral(c, q, *c.chair_center);
      const double z = c.statics.cushion_height + 0.18;
      auto side_pose = [&](double side) {
        Pose p;
        p.translation = *c.chair_center + lateral * side * std::max(0.05, half_w - 0.02);
        p.translation.z() = z;
        return p;
      };
      c.gripper_goal = {{"l_gripper", side_pose(+1.0), 1.0, 0.0},
                        {"r_gripper", side_pose(-1.0), 1.0, 0.0}};
    }
    return c.gripper_goal ? MotionTarget::poses(*c.gripper_goal) : MotionTarget::hold();
  };
  hug.success = [](TaskContext& c, const PointCloud& obs, const JointState& q) {
    if (!c.chair_center) return false;
    const double hug_r = chair_hug_halfwidth(c, obs) + 0.06;
    const Vec3 ml = gripper_midpoint(*c.model, q, "l");
    const Vec3 mr = gripper_midpoint(*c.model, q, "r");
    const Vec3 axis = *c.chair_center;
    const double spread =
        std::abs(signed_planar_angle(planar(ml - axis), planar(mr - axis)));
    return planar(ml - axis).norm() <= hug_r && planar(mr - axis).norm() <= hug_r &&
           spread >= 1.5;
  };
  hug.failure = [](TaskContext& c, const PointCloud&, const JointState&) {
    return c.ik_failed;
  };
  hug.on_success = "PushToTarget";
  hug.on_failure = "EstimateChair";
  hug.budget = 30;
  tree.nodes.push_back(std::move(hug));

  BtNode push;
  push.name = "PushToTarget";
  push.target = [](TaskContext& c, const PointCloud& obs, const JointState& q,
                   const NodeRuntime&) {
    update_chair(c, obs);
    BaseWaypoint wp = current_base(c, q);
    if (c.chair_center) {
      wp.x += c.statics.target_center.x() - c.chair_center->x();
      wp.y += c.statics.target_center.y() - c.chair_center->y();
    }
    return MotionTarget::waypoint(wp);
  };
  push.success = [](TaskContext& c, const PointCloud&, const JointState&) {
    if (!c.chair_center) return false;
    return planar(*c.chair_center - c.statics.target_center).norm() <=
           c.statics.target_radius * 0.6;
  };
  push.on_success = "Nudge";
  push.on_failure = "EstimateChair";
  push.budget = 50;
  tree.nodes.push_back(std::move(push));

  BtNode nudge;
  nudge.name = "Nudge";
  nudge.target = [](TaskContext& c, const PointCloud& obs, const JointState& q,
                    const NodeRuntime&) {
    update_chair(c, obs);
    BaseWaypoint wp = current_base(c, q);
    if (c.chair_center) {
      Vec3 err = planar(c.statics.target_center - *c.chair_center);
      Vec3 corr = c.cfg.k_nudge * err;
      if (corr.norm() > c.cfg.nudge_cap) corr = corr.normalized() * c.cfg.nudge_cap;
      wp.x += corr.x();
      wp.y += corr.y();
    }
    return MotionTarget::waypoint(wp);
  };
  nudge.success = [](TaskContext& c, const PointCloud&, const JointState&) {
    if (!c.chair_center) return false;
    return planar(*c.chair_center - c.statics.target_center).norm() <=
           c.statics.target_radius * 0.4;
  };
  nudge.on_success = "CheckAtTarget";
  nudge.on_failure = "CheckAtTarget";
  nudge.budget = 30;
  tree.nodes.push_back(std::move(nudge));

  tree.current = tree.initial;
  tree.validate();
  return tree;
}

BehaviorTree build_tree(TaskKind task) {
  switch (task) {
    case TaskKind::OpenDrawer: return build_drawer_tree();
    case TaskKind::OpenDoor: return build_door_tree();
    case TaskKind::MoveBucket: return build_bucket_tree();
    case TaskKind::PushChair: return build_chair_tree();
  }
  throw Error(ErrorKind::InvalidParameter, "unknown task");
}

}  // namespace mobman
