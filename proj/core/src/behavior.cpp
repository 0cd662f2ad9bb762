#include "mobman/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace mobman {

const char* to_string(TaskKind task) {
  switch (task) {
    case TaskKind::OpenDrawer: return "open_drawer";
    case TaskKind::OpenDoor: return "open_door";
    case TaskKind::MoveBucket: return "move_bucket";
    case TaskKind::PushChair: return "push_chair";
  }
  return "unknown";
}

TaskKind task_from_string(const std::string& s) {
  if (s == "open_drawer" || s == "drawer") return TaskKind::OpenDrawer;
  if (s == "open_door" || s == "door") return TaskKind::OpenDoor;
  if (s == "move_bucket" || s == "bucket") return TaskKind::MoveBucket;
  if (s == "push_chair" || s == "chair") return TaskKind::PushChair;
  throw Error(ErrorKind::InvalidParameter, "unknown task '" + s + "'");
}

const char* to_string(CarryBranch branch) {
  return branch == CarryBranch::Prehensile ? "prehensile" : "hug";
}

const char* to_string(NodeStatus status) {
  switch (status) {
    case NodeStatus::Running: return "running";
    case NodeStatus::Success: return "success";
    case NodeStatus::Failure: return "failure";
  }
  return "unknown";
}

MotionTarget MotionTarget::poses(std::vector<GripperPoseTarget> targets) {
  MotionTarget t;
  t.kind = TargetKind::GripperPoses;
  t.gripper_poses = std::move(targets);
  return t;
}

MotionTarget MotionTarget::waypoint(const BaseWaypoint& wp) {
  MotionTarget t;
  t.kind = TargetKind::BaseWaypoint;
  t.base = wp;
  return t;
}

MotionTarget MotionTarget::gripper_command(GripperAction action) {
  MotionTarget t;
  t.kind = TargetKind::GripperCommand;
  t.gripper = action;
  return t;
}

bool operator==(const GripperPoseTarget& a, const GripperPoseTarget& b) {
  return a.frame == b.frame && a.position_weight == b.position_weight &&
         a.orientation_weight == b.orientation_weight &&
         a.pose.translation == b.pose.translation && a.pose.rotation == b.pose.rotation;
}

bool operator==(const BaseWaypoint& a, const BaseWaypoint& b) {
  return a.x == b.x && a.y == b.y && a.yaw == b.yaw && a.torso == b.torso;
}

bool operator==(const MotionTarget& a, const MotionTarget& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case TargetKind::Hold: return true;
    case TargetKind::GripperPoses: return a.gripper_poses == b.gripper_poses;
    case TargetKind::BaseWaypoint: return a.base == b.base;
    case TargetKind::GripperCommand: return a.gripper == b.gripper;
  }
  return false;
}

const BtNode& BehaviorTree::node(const std::string& name) const {
  for (const BtNode& n : nodes)
    if (n.name == name) return n;
  throw Error(ErrorKind::InvalidParameter, "no node named '" + name + "'");
}

bool BehaviorTree::has_node(const std::string& name) const {
  return std::any_of(nodes.begin(), nodes.end(),
                     [&](const BtNode& n) { return n.name == name; });
}

void BehaviorTree::validate() const {
  if (nodes.empty()) throw Error(ErrorKind::InvalidParameter, "tree has no nodes");
  if (!has_node(initial)) throw Error(ErrorKind::InvalidParameter, "initial node missing");

  std::set<std::string> names;
  for (const BtNode& n : nodes) {
    if (!names.insert(n.name).second)
      throw Error(ErrorKind::InvalidParameter, "duplicate node '" + n.name + "'");
    if (n.name == kTerminalNode)
      throw Error(ErrorKind::InvalidParameter, "'done' is reserved");
    if (!n.success || !n.target)
      throw Error(ErrorKind::InvalidParameter, "node '" + n.name + "' lacks target/success");
    if (n.budget < 1)
      throw Error(ErrorKind::InvalidParameter, "node '" + n.name + "' budget < 1");
    for (const std::string& edge : {n.on_success, n.on_failure}) {
      if (edge != kTerminalNode && !has_node(edge))
        throw Error(ErrorKind::InvalidParameter,
                    "node '" + n.name + "' edge targets unknown node '" + edge + "'");
    }
  }

  // Terminal must be reachable from every node via success edges, and the
  // costliest acyclic success path must fit the episode budget.
  for (const BtNode& start : nodes) {
    std::set<std::string> seen;
    std::string cur = start.name;
    int path_budget = 0;
    bool reached = false;
    while (true) {
      if (cur == kTerminalNode) {
        reached = true;
        break;
      }
      if (!seen.insert(cur).second) break;  // success-edge cycle
      const BtNode& n = node(cur);
      path_budget += n.budget;
      cur = n.on_success;
    }
    if (!reached)
      throw Error(ErrorKind::InvalidParameter,
                  "terminal unreachable from '" + start.name + "' via success edges");
    if (start.name == initial && path_budget > episode_limit)
      throw Error(ErrorKind::InvalidParameter, "success-path budgets exceed the episode limit");
  }
}

TickResult tick(const BehaviorTree& tree, const TaskContext& context,
                const PointCloud& observation, const JointState& state) {
  TickResult r;
  r.tree = tree;
  r.context = context;
  r.target = MotionTarget::hold();

  BehaviorTree& t = r.tree;
  TaskContext& c = r.context;

  if (t.current.empty()) t.current = t.initial;
  t.total_ticks += 1;

  if (t.terminal_reached) {
    r.status = NodeStatus::Success;
    r.episode_done = true;
    return r;
  }
  if (t.total_ticks > t.episode_limit) {
    r.status = NodeStatus::Running;
    r.episode_done = true;
    return r;
  }

  NodeStatus transition_status = NodeStatus::Running;
  const std::size_t guard_limit = t.nodes.size() + 2;
  for (std::size_t guard = 0; guard <= guard_limit; ++guard) {
    const BtNode& n = t.node(t.current);

    auto follow = [&](const std::string& next, NodeStatus status) {
      transition_status = status;
      c.gripper_goal.reset();
      c.base_goal.reset();
      if (next == kTerminalNode) {
        t.terminal_reached = true;
        return true;
      }
      t.current = next;
      t.ticks_in_node = 0;
      if (const EnterFn& enter = t.node(next).on_enter) enter(c);
      return false;
    };

    if (n.success(c, observation, state)) {
      if (follow(n.on_success, NodeStatus::Success)) {
        r.status = NodeStatus::Success;
        r.episode_done = true;
        return r;
      }
      continue;
    }
    const bool failed =
        (n.failure && n.failure(c, observation, state)) || t.ticks_in_node >= n.budget;
    if (failed) {
      if (follow(n.on_failure, NodeStatus::Failure)) {
        r.status = NodeStatus::Failure;
        r.episode_done = true;
        return r;
      }
      continue;
    }

    NodeRuntime rt{t.ticks_in_node};
    r.target = n.target(c, observation, state, rt);
    t.ticks_in_node += 1;
    r.status = transition_status;
    r.episode_done = t.total_ticks >= t.episode_limit;
    return r;
  }

  // A transition cycle that never settles within one tick: hold station.
  r.status = transition_status;
  return r;
}

std::string dump_tree(const BehaviorTree& tree) {
  std::ostringstream out;
  out << "tree " << to_string(tree.task) << "\n";
  out << "initial " << tree.initial << "\n";
  out << "episode_limit " << tree.episode_limit << "\n";
  for (const BtNode& n : tree.nodes) {
    out << "node " << n.name << " budget=" << n.budget << " on_success=" << n.on_success
        << " on_failure=" << n.on_failure << "\n";
  }
  out << "terminal " << kTerminalNode << "\n";
  return out.str();
}

std::vector<Pose> circular_pull_waypoints(const Vec3& hinge, double hinge_sign,
                                          const Pose& grasp_pose, double total_angle, int count) {
  if (count < 1) throw Error(ErrorKind::InvalidParameter, "waypoint count must be >= 1");
  std::vector<Pose> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 1; k <= count; ++k) {
    const double angle = hinge_sign * total_angle * static_cast<double>(k) / count;
    const Mat3 rot = rot_z(angle);
    Pose p;
    p.rotation = rot * grasp_pose.rotation;
    p.translation = hinge + rot * (grasp_pose.translation - hinge);
    out.push_back(p);
  }
  return out;
}

std::string arm_prefix_of(const std::string& gripper_frame) {
  const auto pos = gripper_frame.find('_');
  return gripper_frame.substr(0, pos);
}

double jaw_width(const KinematicModel& model, const JointState& state,
                 const std::string& prefix) {
  const int l = model.joint_index(prefix + "_finger_l");
  const int r = model.joint_index(prefix + "_finger_r");
  if (l < 0 || r < 0) throw Error(ErrorKind::UnknownFrame, prefix + "_finger_*");
  return state.q[l] - state.q[r];
}

Vec3 gripper_midpoint(const KinematicModel& model, const JointState& state,
                      const std::string& prefix) {
  const Pose a = forward_kinematics(model, state, prefix + "_fingertip_l");
  const Pose b = forward_kinematics(model, state, prefix + "_fingertip_r");
  return (a.translation + b.translation) / 2.0;
}

ResolveResult resolve_target(const MotionTarget& target, const KinematicModel& model,
                             const JointState& state, const ResolveConfig& config) {
  ResolveResult result;
  result.desired = state;

  switch (target.kind) {
    case TargetKind::Hold:
      return result;

    case TargetKind::BaseWaypoint: {
      const int bx = model.joint_index("base_x");
      const int by = model.joint_index("base_y");
      const int br = model.joint_index("base_rot");
      const int tl = model.joint_index("torso_lift");
      if (bx < 0 || by < 0 || br < 0 || tl < 0)
        throw Error(ErrorKind::UnknownFrame, "base waypoint needs the stock base joints");
      result.desired.q[bx] = target.base.x;
      result.desired.q[by] = target.base.y;
      result.desired.q[br] = target.base.yaw;
      result.desired.q[tl] = target.base.torso;
      result.desired = clamp_to_limits(model, result.desired);
      return result;
    }

    case TargetKind::GripperCommand: {
      const bool open = target.gripper == GripperAction::Open;
      for (const std::string& gripper : model.gripper_frames()) {
        const std::string prefix = arm_prefix_of(gripper);
        const int l = model.joint_index(prefix + "_finger_l");
        const int rj = model.joint_index(prefix + "_finger_r");
        if (l < 0 || rj < 0) continue;
        result.desired.q[l] = open ? config.finger_open : config.finger_closed;
        result.desired.q[rj] = open ? -config.finger_open : -config.finger_closed;
      }
      result.desired = clamp_to_limits(model, result.desired);
      return result;
    }

    case TargetKind::GripperPoses: {
      IkRequest req;
      for (const GripperPoseTarget& g : target.gripper_poses)
        req.targets.push_back({g.frame, g.pose, g.position_weight, g.orientation_weight});
      req.seed = state;
      // Base rotation tracks far too slowly for within-node IK; hold it and
      // let the planar base plus the arm absorb the error.
      if (model.joint_index("base_rot") >= 0) req.locked_joints.push_back("base_rot");
      req.base_min_distance = config.base_min_distance;
      req.max_iterations = config.ik_iterations;
      req.tolerance_pos = config.tolerance_pos;
      req.tolerance_rot = config.tolerance_rot;
      IkResult ik = solve_ik(model, req);
      if (!ik.achieved) {
        // Retry from a canonical elbow-down ready pose; awkward arm
        // configurations trap the damped iteration in local minima.
        JointState ready = state;
        for (const std::string prefix : {std::string("l"), std::string("r")}) {
          auto set = [&](const std::string& name, double v) {
            const int i = model.joint_index(name);
            if (i >= 0) ready.q[i] = v;
          };
          set(prefix + "_arm_j2", 0.9);
          set(prefix + "_arm_j3", 0.0);
          set(prefix + "_arm_j4", -1.8);
          set(prefix + "_arm_j5", 0.0);
          set(prefix + "_arm_j6", 0.9);
          set(prefix + "_arm_j7", 0.0);
        }
        req.seed = ready;
        ik = solve_ik(model, req);
      }
      if (ik.achieved)
        result.desired = ik.state;
      else
        result.ik_ok = false;  // hold position, let the tree replan
      return result;
    }
  }
  return result;
}

}  // namespace mobman
