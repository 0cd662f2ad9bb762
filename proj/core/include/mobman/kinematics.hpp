#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mobman/geometry.hpp"

namespace mobman {

enum class JointKind {
  PrismaticX,
  PrismaticY,
  PrismaticZ,
  RevoluteZ,
  RevoluteArbitrary,
};

const char* to_string(JointKind kind);
JointKind joint_kind_from_string(const std::string& s);

/// One joint of the tree. The joint's child link shares the joint's name.
struct JointSpec {
  std::string name;
  JointKind kind = JointKind::RevoluteZ;
  Vec3 axis = Vec3::UnitZ();  // only used by RevoluteArbitrary, unit length
  std::string parent;         // parent link ("world" for roots)
  Pose origin;                // fixed transform from parent link to joint frame
  double lower = -1.0;
  double upper = 1.0;
  double velocity_limit = 1.0;
};

/// Named fixed frame rigidly attached to a link (tool center points etc.).
struct FixedFrame {
  std::string name;
  std::string parent;
  Pose origin;
};

struct JointState {
  Eigen::VectorXd q;

  JointState() = default;
  explicit JointState(Eigen::VectorXd values) : q(std::move(values)) {}
  static JointState zero(int dof) { return JointState(Eigen::VectorXd::Zero(dof)); }
  int dof() const { return static_cast<int>(q.size()); }
};

/// Immutable joint tree with name lookups and per-frame root paths resolved
/// at construction. Safe to share across threads.
class KinematicModel {
 public:
  KinematicModel(std::string name, std::vector<JointSpec> joints,
                 std::vector<FixedFrame> frames, std::vector<std::string> gripper_frames,
                 std::string base_frame);

  const std::string& name() const { return name_; }
  int dof() const { return static_cast<int>(joints_.size()); }
  const std::vector<JointSpec>& joints() const { return joints_; }
  const JointSpec& joint(int i) const { return joints_[static_cast<std::size_t>(i)]; }
  int joint_index(const std::string& name) const;  // -1 when absent
  bool has_frame(const std::string& name) const;
  const std::vector<FixedFrame>& frame_list() const { return frames_; }
  const std::vector<std::string>& gripper_frames() const { return gripper_frames_; }
  const std::string& base_frame() const { return base_frame_; }

  /// Joint indices on the root-to-frame path, root first.
  const std::vector<int>& path_to(const std::string& frame) const;
  /// Extra fixed offset applied after the last path joint (identity for joint frames).
  const Pose& frame_offset(const std::string& frame) const;

  Eigen::VectorXd lower_limits() const;
  Eigen::VectorXd upper_limits() const;
  /// Per-joint symmetric velocity range (-velocity_limit, +velocity_limit).
  std::vector<std::pair<double, double>> velocity_ranges() const;

 private:
  struct FrameInfo {
    std::vector<int> path;
    Pose offset;
  };

  std::string name_;
  std::vector<JointSpec> joints_;
  std::vector<FixedFrame> frames_;
  std::vector<std::string> gripper_frames_;
  std::string base_frame_;
  std::unordered_map<std::string, int> joint_by_name_;
  std::unordered_map<std::string, FrameInfo> frame_info_;

  void build_frame_table();
};

/// Pose contributed by one joint at value q (origin already composed).
Pose joint_transform(const JointSpec& joint, double q);

Pose forward_kinematics(const KinematicModel& model, const JointState& state,
                        const std::string& frame);

/// Geometric Jacobian, rows 0-2 linear (m), rows 3-5 angular (rad); columns
/// of joints off the root-to-frame path are zero.
Eigen::MatrixXd jacobian(const KinematicModel& model, const JointState& state,
                         const std::string& frame);

JointState clamp_to_limits(const KinematicModel& model, const JointState& state);

struct IkTarget {
  std::string frame;
  Pose pose;
  double position_weight = 1.0;
  double orientation_weight = 1.0;
};

struct IkRequest {
  std::vector<IkTarget> targets;
  JointState seed;
  std::optional<double> base_min_distance;  // planar base-to-target clearance, meters
  std::vector<std::string> locked_joints;   // held at the seed value
  int max_iterations = 100;
  double tolerance_pos = 1e-3;   // meters
  double tolerance_rot = 8.7266462599716477e-3;  // 0.5 degrees in radians
};

struct IkResidual {
  double pos_err = 0.0;
  double rot_err = 0.0;
};

struct IkResult {
  JointState state;
  bool achieved = false;
  std::vector<IkResidual> residuals;
  int iterations = 0;
};

/// Damped-least-squares IK over the stacked multi-target error with joint
/// limit clamping every iteration and a quadratic penalty keeping the base
/// a minimum planar distance from each target. Deterministic.
IkResult solve_ik(const KinematicModel& model, const IkRequest& request);

/// Axis-angle rotation error vector of target relative to current.
Vec3 rotation_error(const Mat3& target, const Mat3& current);

}  // namespace mobman
