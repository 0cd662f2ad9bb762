#include "mobman/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace mobman {

const char* to_string(JointKind kind) {
  switch (kind) {
    case JointKind::PrismaticX: return "prismatic_x";
    case JointKind::PrismaticY: return "prismatic_y";
    case JointKind::PrismaticZ: return "prismatic_z";
    case JointKind::RevoluteZ: return "revolute_z";
    case JointKind::RevoluteArbitrary: return "revolute";
  }
  return "unknown";
}

JointKind joint_kind_from_string(const std::string& s) {
  if (s == "prismatic_x") return JointKind::PrismaticX;
  if (s == "prismatic_y") return JointKind::PrismaticY;
  if (s == "prismatic_z") return JointKind::PrismaticZ;
  if (s == "revolute_z") return JointKind::RevoluteZ;
  if (s == "revolute") return JointKind::RevoluteArbitrary;
  throw Error(ErrorKind::BadModel, "unknown joint kind '" + s + "'");
}

KinematicModel::KinematicModel(std::string name, std::vector<JointSpec> joints,
                               std::vector<FixedFrame> frames,
                               std::vector<std::string> gripper_frames, std::string base_frame)
    : name_(std::move(name)),
      joints_(std::move(joints)),
      frames_(std::move(frames)),
      gripper_frames_(std::move(gripper_frames)),
      base_frame_(std::move(base_frame)) {
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    const JointSpec& j = joints_[i];
    if (!(j.lower < j.upper))
      throw Error(ErrorKind::BadModel, "joint " + j.name + " needs lower < upper");
    if (!(j.velocity_limit > 0.0))
      throw Error(ErrorKind::BadModel, "joint " + j.name + " needs velocity_limit > 0");
    if (j.kind == JointKind::RevoluteArbitrary &&
        std::abs(j.axis.norm() - 1.0) > 1e-9)
      throw Error(ErrorKind::BadModel, "joint " + j.name + " axis must be unit length");
    if (joint_by_name_.count(j.name))
      throw Error(ErrorKind::BadModel, "duplicate joint/link name " + j.name);
    joint_by_name_[j.name] = static_cast<int>(i);
  }
  build_frame_table();
}

void KinematicModel::build_frame_table() {
  auto resolve_link_path = [&](const std::string& link) -> std::vector<int> {
    std::vector<int> path;
    std::string cur = link;
    std::size_t guard = 0;
    while (cur != "world") {
      auto it = joint_by_name_.find(cur);
      if (it == joint_by_name_.end())
        throw Error(ErrorKind::BadModel, "link '" + cur + "' not found while walking to world");
      path.push_back(it->second);
      cur = joints_[static_cast<std::size_t>(it->second)].parent;
      if (++guard > joints_.size())
        throw Error(ErrorKind::BadModel, "joint tree contains a cycle at '" + link + "'");
    }
    std::reverse(path.begin(), path.end());
    return path;
  };

  for (const JointSpec& j : joints_) {
    FrameInfo info;
    info.path = resolve_link_path(j.name);
    info.offset = Pose::identity();
    frame_info_[j.name] = std::move(info);
  }
  for (const FixedFrame& f : frames_) {
    if (frame_info_.count(f.name) || f.name == "world")
      throw Error(ErrorKind::BadModel, "duplicate frame name " + f.name);
    FrameInfo info;
    info.path = f.parent == "world" ? std::vector<int>{} : resolve_link_path(f.parent);
    info.offset = f.origin;
    frame_info_[f.name] = std::move(info);
  }
  for (const std::string& g : gripper_frames_)
    if (!frame_info_.count(g))
      throw Error(ErrorKind::BadModel, "gripper frame '" + g + "' missing");
  if (!frame_info_.count(base_frame_))
    throw Error(ErrorKind::BadModel, "base frame '" + base_frame_ + "' missing");
}

int KinematicModel::joint_index(const std::string& name) const {
  auto it = joint_by_name_.find(name);
  return it == joint_by_name_.end() ? -1 : it->second;
}

bool KinematicModel::has_frame(const std::string& name) const {
  return frame_info_.count(name) > 0;
}

const std::vector<int>& KinematicModel::path_to(const std::string& frame) const {
  auto it = frame_info_.find(frame);
  if (it == frame_info_.end()) throw Error(ErrorKind::UnknownFrame, frame);
  return it->second.path;
}

const Pose& KinematicModel::frame_offset(const std::string& frame) const {
  auto it = frame_info_.find(frame);
  if (it == frame_info_.end()) throw Error(ErrorKind::UnknownFrame, frame);
  return it->second.offset;
}

Eigen::VectorXd KinematicModel::lower_limits() const {
  Eigen::VectorXd lo(dof());
  for (int i = 0; i < dof(); ++i) lo[i] = joints_[static_cast<std::size_t>(i)].lower;
  return lo;
}

Eigen::VectorXd KinematicModel::upper_limits() const {
  Eigen::VectorXd hi(dof());
  for (int i = 0; i < dof(); ++i) hi[i] = joints_[static_cast<std::size_t>(i)].upper;
  return hi;
}

std::vector<std::pair<double, double>> KinematicModel::velocity_ranges() const {
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(dof()));
  for (const JointSpec& j : joints_) out.emplace_back(-j.velocity_limit, j.velocity_limit);
  return out;
}

Pose joint_transform(const JointSpec& joint, double q) {
  Pose motion;
  switch (joint.kind) {
    case JointKind::PrismaticX: motion.translation = Vec3(q, 0, 0); break;
    case JointKind::PrismaticY: motion.translation = Vec3(0, q, 0); break;
    case JointKind::PrismaticZ: motion.translation = Vec3(0, 0, q); break;
    case JointKind::RevoluteZ:
      motion.rotation = Eigen::AngleAxisd(q, Vec3::UnitZ()).toRotationMatrix();
      break;
    case JointKind::RevoluteArbitrary:
      motion.rotation = Eigen::AngleAxisd(q, joint.axis).toRotationMatrix();
      break;
  }
  return joint.origin * motion;
}

namespace {

void check_state(const KinematicModel& model, const JointState& state) {
  if (state.dof() != model.dof())
    throw Error(ErrorKind::DimensionMismatch,
                "state has " + std::to_string(state.dof()) + " values, model wants " +
                    std::to_string(model.dof()));
}

Vec3 world_joint_axis(const JointSpec& joint, const Mat3& parent_rotation) {
  Vec3 local;
  switch (joint.kind) {
    case JointKind::PrismaticX: local = Vec3::UnitX(); break;
    case JointKind::PrismaticY: local = Vec3::UnitY(); break;
    case JointKind::PrismaticZ: local = Vec3::UnitZ(); break;
    case JointKind::RevoluteZ: local = Vec3::UnitZ(); break;
    case JointKind::RevoluteArbitrary: local = joint.axis; break;
  }
  return parent_rotation * joint.origin.rotation * local;
}

bool is_prismatic(JointKind kind) {
  return kind == JointKind::PrismaticX || kind == JointKind::PrismaticY ||
         kind == JointKind::PrismaticZ;
}

}  // namespace

Pose forward_kinematics(const KinematicModel& model, const JointState& state,
                        const std::string& frame) {
  check_state(model, state);
  const auto& path = model.path_to(frame);
  Pose pose = Pose::identity();
  for (int idx : path) pose = pose * joint_transform(model.joint(idx), state.q[idx]);
  return pose * model.frame_offset(frame);
}

Eigen::MatrixXd jacobian(const KinematicModel& model, const JointState& state,
                         const std::string& frame) {
  check_state(model, state);
  const auto& path = model.path_to(frame);

  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(6, model.dof());
  // Walk the chain once, recording each joint's world axis and origin.
  Pose pose = Pose::identity();
  std::vector<Vec3> axes(path.size());
  std::vector<Vec3> origins(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    const JointSpec& j = model.joint(path[k]);
    axes[k] = world_joint_axis(j, pose.rotation);
    origins[k] = pose.apply(j.origin.translation);
    pose = pose * joint_transform(j, state.q[path[k]]);
  }
  const Vec3 tip = (pose * model.frame_offset(frame)).translation;

  for (std::size_t k = 0; k < path.size(); ++k) {
    const JointSpec& j = model.joint(path[k]);
    const int col = path[k];
    if (is_prismatic(j.kind)) {
      jac.block<3, 1>(0, col) = axes[k];
    } else {
      jac.block<3, 1>(0, col) = axes[k].cross(tip - origins[k]);
      jac.block<3, 1>(3, col) = axes[k];
    }
  }
  return jac;
}

JointState clamp_to_limits(const KinematicModel& model, const JointState& state) {
  check_state(model, state);
  JointState out = state;
  for (int i = 0; i < model.dof(); ++i)
    out.q[i] = std::clamp(out.q[i], model.joint(i).lower, model.joint(i).upper);
  return out;
}

Vec3 rotation_error(const Mat3& target, const Mat3& current) {
  Eigen::AngleAxisd aa(target * current.transpose());
  return aa.axis() * aa.angle();
}

namespace {

struct IkWorkspace {
  Eigen::VectorXd residual;
  Eigen::MatrixXd jac;
  std::vector<IkResidual> per_target;
  double penalty_violation = 0.0;  // worst base-distance shortfall, meters
};

// Penalty activates slightly above the requested clearance so converged
// solutions settle at >= base_min_distance.
constexpr double kPenaltyActivationMargin = 5e-3;
constexpr double kPenaltyWeight = 10.0;

IkWorkspace evaluate(const KinematicModel& model, const IkRequest& req, const JointState& q) {
  IkWorkspace ws;
  const int n_targets = static_cast<int>(req.targets.size());
  const int rows = 6 * n_targets + (req.base_min_distance ? n_targets : 0);
  ws.residual = Eigen::VectorXd::Zero(rows);
  ws.jac = Eigen::MatrixXd::Zero(rows, model.dof());
  ws.per_target.resize(static_cast<std::size_t>(n_targets));

  for (int t = 0; t < n_targets; ++t) {
    const IkTarget& target = req.targets[static_cast<std::size_t>(t)];
    const Pose current = forward_kinematics(model, q, target.frame);
    const Eigen::MatrixXd full_jac = jacobian(model, q, target.frame);

    const Vec3 pos_err = target.pose.translation - current.translation;
    const Vec3 rot_err = rotation_error(target.pose.rotation, current.rotation);
    ws.per_target[static_cast<std::size_t>(t)] = {pos_err.norm(), rot_err.norm()};

    ws.residual.segment<3>(6 * t) = target.position_weight * pos_err;
    ws.residual.segment<3>(6 * t + 3) = target.orientation_weight * rot_err;
    ws.jac.middleRows(6 * t, 3) = target.position_weight * full_jac.topRows(3);
    ws.jac.middleRows(6 * t + 3, 3) = target.orientation_weight * full_jac.bottomRows(3);
  }

  if (req.base_min_distance) {
    const Pose base = forward_kinematics(model, q, model.base_frame());
    const Eigen::MatrixXd base_jac = jacobian(model, q, model.base_frame());
    for (int t = 0; t < n_targets; ++t) {
      const IkTarget& target = req.targets[static_cast<std::size_t>(t)];
      Eigen::Vector2d delta = base.translation.head<2>() - target.pose.translation.head<2>();
      double dist = delta.norm();
      ws.penalty_violation =
          std::max(ws.penalty_violation, *req.base_min_distance - dist);
      const double activation = *req.base_min_distance + kPenaltyActivationMargin - dist;
      const int row = 6 * n_targets + t;
      if (activation <= 0.0 || dist < 1e-9) continue;
      const Eigen::Vector2d grad_dir = delta / dist;
      ws.residual[row] = std::sqrt(kPenaltyWeight) * activation;
      // d(dist)/dq projected onto the base frame's planar motion.
      ws.jac.row(row) = std::sqrt(kPenaltyWeight) *
                        (grad_dir.transpose() * base_jac.topRows(2));
    }
  }
  return ws;
}

bool within_tolerance(const IkRequest& req, const IkWorkspace& ws) {
  for (std::size_t i = 0; i < ws.per_target.size(); ++i) {
    const IkResidual& r = ws.per_target[i];
    const IkTarget& t = req.targets[i];
    // A zero weight opts the component out of the achievement check.
    if (t.position_weight != 0.0 && r.pos_err >= req.tolerance_pos) return false;
    if (t.orientation_weight != 0.0 && r.rot_err >= req.tolerance_rot) return false;
  }
  if (req.base_min_distance && ws.penalty_violation > 1e-6) return false;
  return true;
}

}  // namespace

IkResult solve_ik(const KinematicModel& model, const IkRequest& request) {
  if (request.targets.empty() ||
      request.targets.size() > model.gripper_frames().size())
    throw Error(ErrorKind::InvalidParameter,
                "target count must be in [1, gripper frame count]");
  for (const IkTarget& t : request.targets) {
    if (!t.pose.translation.allFinite() || !t.pose.rotation.allFinite())
      throw Error(ErrorKind::NonFiniteTarget, "target pose for " + t.frame);
    if (!model.has_frame(t.frame)) throw Error(ErrorKind::UnknownFrame, t.frame);
  }
  check_state(model, request.seed);
  if (!(request.tolerance_pos > 0.0) || !(request.tolerance_rot > 0.0))
    throw Error(ErrorKind::InvalidParameter, "tolerances must be positive");

  std::vector<int> locked;
  for (const std::string& name : request.locked_joints) {
    const int idx = model.joint_index(name);
    if (idx < 0) throw Error(ErrorKind::UnknownFrame, "locked joint " + name);
    locked.push_back(idx);
  }

  JointState q = clamp_to_limits(model, request.seed);
  double lambda = 1e-2;

  IkWorkspace ws = evaluate(model, request, q);
  double cost = ws.residual.squaredNorm();
  JointState best_q = q;
  IkWorkspace best_ws = ws;
  double best_cost = cost;

  IkResult result;
  result.iterations = 0;

  for (int iter = 0; iter < request.max_iterations; ++iter) {
    result.iterations = iter + 1;
    if (within_tolerance(request, ws)) break;

    Eigen::MatrixXd jac = ws.jac;
    for (int idx : locked) jac.col(idx).setZero();
    Eigen::MatrixXd normal = jac.transpose() * jac;
    normal.diagonal().array() += lambda * lambda;
    Eigen::VectorXd step = normal.ldlt().solve(jac.transpose() * ws.residual);

    JointState q_try = q;
    q_try.q += step;
    q_try = clamp_to_limits(model, q_try);

    IkWorkspace ws_try = evaluate(model, request, q_try);
    const double cost_try = ws_try.residual.squaredNorm();
    if (cost_try <= cost) {
      q = std::move(q_try);
      ws = std::move(ws_try);
      cost = cost_try;
      lambda = std::max(lambda / 2.0, 1e-6);
      if (cost < best_cost) {
        best_cost = cost;
        best_q = q;
        best_ws = ws;
      }
    } else {
      lambda = std::min(lambda * 10.0, 1e8);
      if (lambda >= 1e8) break;  // damping saturated, no further progress
    }
  }

  if (within_tolerance(request, ws)) {
    best_q = q;
    best_ws = ws;
  }
  result.state = best_q;
  result.residuals = best_ws.per_target;
  result.achieved = within_tolerance(request, best_ws);
  return result;
}

}  // namespace mobman
