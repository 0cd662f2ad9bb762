#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mobman/control.hpp"
#include "mobman/kinematics.hpp"
#include "mobman/perception.hpp"
#include "mobman/task.hpp"

namespace mobman {

enum class NodeStatus { Running, Success, Failure };

const char* to_string(NodeStatus status);

enum class TargetKind { Hold, GripperPoses, BaseWaypoint, GripperCommand };
enum class GripperAction { Open, Close };

struct GripperPoseTarget {
  std::string frame;
  Pose pose;
  double position_weight = 1.0;
  double orientation_weight = 1.0;
};

struct BaseWaypoint {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double torso = 0.0;
};

/// What the active node wants the robot to do this tick.
struct MotionTarget {
  TargetKind kind = TargetKind::Hold;
  std::vector<GripperPoseTarget> gripper_poses;
  BaseWaypoint base;
  GripperAction gripper = GripperAction::Close;

  static MotionTarget hold() { return {}; }
  static MotionTarget poses(std::vector<GripperPoseTarget> targets);
  static MotionTarget waypoint(const BaseWaypoint& wp);
  static MotionTarget gripper_command(GripperAction action);
};

bool operator==(const GripperPoseTarget& a, const GripperPoseTarget& b);
bool operator==(const BaseWaypoint& a, const BaseWaypoint& b);
bool operator==(const MotionTarget& a, const MotionTarget& b);

/// Scenario ground truth the policies are allowed to read: facing axes,
/// hinge geometry, joint range and target region. Everything else comes
/// from perception.
struct TaskStatics {
  Vec3 outward_axis = Vec3::UnitX();  // cabinet front normal, toward the robot
  Vec3 hinge_position = Vec3::Zero();
  double hinge_sign = 1.0;    // door opening rotation sign about +z
  double door_panel_width = 0.4;
  double joint_range = 0.3;   // drawer meters / door radians
  Vec3 target_center = Vec3::Zero();
  double target_radius = 0.25;
  double platform_height = 0.0;
  double cushion_height = 0.35;
  double max_jaw_width = 0.08;
};

struct BehaviorConfig {
  double pre_grasp_offset = 0.10;
  double grasp_depth = 0.02;
  double hold_distance = 0.03;      // grasp considered held within this
  double lift_height = 0.10;        // torso raise for the bucket carry
  double k_nudge = 0.5;
  double nudge_cap = 0.05;          // meters per tick
  double door_partial_angle = 0.9;  // switch from pulling to prying, rad
  double door_done_angle = 1.70;    // policy-side open goal, rad
  double approach_standoff = 0.42;  // base distance beyond the rim radius
  double hug_standoff = 0.30;
  int accumulate_min_points = 50;
  int accumulate_min_frames = 10;
  double rim_bin_height = 0.01;
  double rim_grasp_margin = 0.01;
  double cushion_height = 0.35;
};

/// Episode-local blackboard threaded through tick(): perception state,
/// chosen grasp, branch, and per-node scratch.
struct TaskContext {
  TaskKind task = TaskKind::OpenDrawer;
  TaskStatics statics;
  BehaviorConfig cfg;
  const KinematicModel* model = nullptr;

  HandleAccumulator acc;
  bool acc_ready = false;
  PointCloud initial_panel;
  bool have_initial_panel = false;
  std::optional<RimEstimate> rim;
  std::optional<Vec3> chair_center;
  std::optional<GraspCandidate> grasp;
  std::optional<CarryBranch> branch;

  bool ik_failed = false;
  bool perception_failed = false;
  Vec3 tracked_handle = Vec3::Zero();
  bool have_tracked_handle = false;
  Vec3 handle_at_grasp = Vec3::Zero();
  double last_open_estimate = 0.0;  // drawer meters / door radians
  double torso_at_grasp = 0.0;

  std::optional<std::vector<GripperPoseTarget>> gripper_goal;
  std::optional<BaseWaypoint> base_goal;
};

struct NodeRuntime {
  int ticks_in_node = 0;
};

using TargetFn = std::function<MotionTarget(TaskContext&, const PointCloud&, const JointState&,
                                            const NodeRuntime&)>;
using PredicateFn = std::function<bool(TaskContext&, const PointCloud&, const JointState&)>;
using EnterFn = std::function<void(TaskContext&)>;

/// Edge target name of the terminal pseudo-node.
inline constexpr const char* kTerminalNode = "done";

struct BtNode {
  std::string name;
  TargetFn target;
  PredicateFn success;           // checked first, follows on_success
  PredicateFn failure;           // optional; budget exhaustion also fails
  EnterFn on_enter;              // optional context reset on entry
  std::string on_success;
  std::string on_failure;
  int budget = 40;               // ticks before the failure edge fires
};

/// Decision-diagram executor state. The structure is immutable after
/// validation; the cursor advances through tick().
struct BehaviorTree {
  TaskKind task = TaskKind::OpenDrawer;
  std::vector<BtNode> nodes;
  std::string initial;
  int episode_limit = 200;

  std::string current;
  int ticks_in_node = 0;
  int total_ticks = 0;
  bool terminal_reached = false;

  const BtNode& node(const std::string& name) const;
  bool has_node(const std::string& name) const;

  /// Structural checks: edges resolve, terminal reachable from every node
  /// via success edges, and no success path outspends the episode limit.
  /// Throws InvalidParameter on violation.
  void validate() const;
};

struct TickResult {
  BehaviorTree tree;
  TaskContext context;
  MotionTarget target;
  NodeStatus status = NodeStatus::Running;
  bool episode_done = false;
};

/// Advances the tree one control tick: evaluates the current node's
/// predicates, follows success/failure edges (chaining through nodes that
/// resolve immediately), and emits the active node's motion target.
TickResult tick(const BehaviorTree& tree, const TaskContext& context,
                const PointCloud& observation, const JointState& state);

BehaviorTree build_drawer_tree();
/// use_circular swaps the diagonal base pull for a gripper waypoint arc.
BehaviorTree build_door_tree(bool use_circular = false);
BehaviorTree build_bucket_tree();
BehaviorTree build_chair_tree();
BehaviorTree build_tree(TaskKind task);

/// Node list + edges in a line-oriented text form for docs and diffing.
std::string dump_tree(const BehaviorTree& tree);

/// Evenly spaced gripper waypoints on the hinge arc from the start pose.
std::vector<Pose> circular_pull_waypoints(const Vec3& hinge, double hinge_sign,
                                          const Pose& grasp_pose, double total_angle, int count);

struct ResolveConfig {
  double base_min_distance = 0.35;
  int ik_iterations = 150;
  double tolerance_pos = 3e-3;
  double tolerance_rot = 5e-2;
  double finger_open = 0.04;   // magnitude per finger joint
  double finger_closed = 0.0;
};

struct ResolveResult {
  JointState desired;
  bool ik_ok = true;
};

/// Maps a motion target onto a desired joint state: IK for gripper poses,
/// direct joint substitution for base waypoints and gripper commands. IK
/// failure is reported in the result, never thrown.
ResolveResult resolve_target(const MotionTarget& target, const KinematicModel& model,
                             const JointState& state, const ResolveConfig& config = {});

/// Jaw opening of one arm: q[finger_l] - q[finger_r].
double jaw_width(const KinematicModel& model, const JointState& state, const std::string& prefix);

/// Midpoint between the two fingertips of one arm.
Vec3 gripper_midpoint(const KinematicModel& model, const JointState& state,
                      const std::string& prefix);

/// Arm prefix ("l"/"r") of a gripper frame name like "r_gripper".
std::string arm_prefix_of(const std::string& gripper_frame);

}  // namespace mobman
