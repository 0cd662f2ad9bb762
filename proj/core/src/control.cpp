#include "mobman/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mobman {

const char* to_string(JointGroup group) {
  switch (group) {
    case JointGroup::BaseTranslation: return "base_translation";
    case JointGroup::BaseRotation: return "base_rotation";
    case JointGroup::BaseHeight: return "base_height";
    case JointGroup::Arm: return "arm";
    case JointGroup::Gripper: return "gripper";
  }
  return "unknown";
}

const PidGains& ControlConfig::gains(JointGroup group) const {
  switch (group) {
    case JointGroup::BaseTranslation: return base_translation;
    case JointGroup::BaseRotation: return base_rotation;
    case JointGroup::BaseHeight: return base_height;
    case JointGroup::Arm: return arm;
    case JointGroup::Gripper: return gripper;
  }
  return arm;
}

double lowpass_alpha(double dt, double cutoff_hz) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidParameter, "dt must be positive");
  const double nyquist = 1.0 / (2.0 * dt);
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < nyquist))
    throw Error(ErrorKind::InvalidParameter, "cutoff must lie in (0, Nyquist)");
  const double rc = 1.0 / (2.0 * std::numbers::pi * cutoff_hz);
  return dt / (rc + dt);
}

LowpassResult lowpass_step(double state, double input, double dt, double cutoff_hz) {
  const double alpha = lowpass_alpha(dt, cutoff_hz);
  const double output = state + alpha * (input - state);
  return {output, output};
}

ControllerBank ControllerBank::from_groups(std::vector<JointGroup> groups, ControlConfig config) {
  ControllerBank bank;
  bank.config = config;
  bank.groups = std::move(groups);
  const auto n = static_cast<Eigen::Index>(bank.groups.size());
  bank.integral = Eigen::VectorXd::Zero(n);
  bank.prev_error = Eigen::VectorXd::Zero(n);
  bank.filter_state = Eigen::VectorXd::Zero(n);
  return bank;
}

ControllerBank ControllerBank::for_model(const KinematicModel& model, ControlConfig config) {
  std::vector<JointGroup> groups;
  groups.reserve(static_cast<std::size_t>(model.dof()));
  for (const JointSpec& j : model.joints()) {
    if (j.name == "base_x" || j.name == "base_y")
      groups.push_back(JointGroup::BaseTranslation);
    else if (j.name == "base_rot")
      groups.push_back(JointGroup::BaseRotation);
    else if (j.name == "torso_lift")
      groups.push_back(JointGroup::BaseHeight);
    else if (j.name.find("finger") != std::string::npos)
      groups.push_back(JointGroup::Gripper);
    else
      groups.push_back(JointGroup::Arm);
  }
  return from_groups(std::move(groups), config);
}

PidStepResult pid_step(const ControllerBank& bank, const JointState& q_desired,
                       const JointState& q_current) {
  if (q_desired.dof() != bank.dof() || q_current.dof() != bank.dof())
    throw Error(ErrorKind::DimensionMismatch, "pid_step state/bank sizes disagree");

  PidStepResult result;
  result.bank = bank;
  result.velocity.resize(bank.dof());
  const double dt = bank.config.dt;
  const double cap = bank.config.integral_cap;

  for (int i = 0; i < bank.dof(); ++i) {
    const PidGains& g = bank.config.gains(bank.groups[static_cast<std::size_t>(i)]);
    const double e = q_desired.q[i] - q_current.q[i];

    double integral = result.bank.integral[i] + e * dt;
    integral = std::clamp(integral, -cap, cap);

    const double de = (e - result.bank.prev_error[i]) / dt;
    const double raw = g.kp * e + g.ki * integral + g.kd * de;

    const LowpassResult lp =
        lowpass_step(result.bank.filter_state[i], raw, dt, bank.config.cutoff_hz);

    result.bank.integral[i] = integral;
    result.bank.prev_error[i] = e;
    result.bank.filter_state[i] = lp.state;
    result.velocity[i] = lp.output;
  }
  return result;
}

JointState proximate_setpoint(const ControllerBank& bank, const KinematicModel& model,
                              const JointState& desired, const JointState& current,
                              double headroom) {
  if (desired.dof() != bank.dof() || current.dof() != bank.dof() ||
      model.dof() != bank.dof())
    throw Error(ErrorKind::DimensionMismatch, "proximate_setpoint sizes disagree");

  JointState out = current;
  for (int i = 0; i < bank.dof(); ++i) {
    const PidGains& g = bank.config.gains(bank.groups[static_cast<std::size_t>(i)]);
    const double delta = desired.q[i] - current.q[i];
    if (g.kp <= 0.0) {
      out.q[i] = desired.q[i];
      continue;
    }
    const double cap = headroom * model.joint(i).velocity_limit / g.kp;
    out.q[i] = current.q[i] + std::clamp(delta, -cap, cap);
  }
  return out;
}

namespace {

void check_limits(const std::vector<std::pair<double, double>>& limits, Eigen::Index n) {
  if (static_cast<Eigen::Index>(limits.size()) != n)
    throw Error(ErrorKind::DimensionMismatch, "velocity limit count mismatch");
  for (const auto& [lo, hi] : limits)
    if (!(lo < hi)) throw Error(ErrorKind::InvalidParameter, "degenerate velocity limits");
}

}  // namespace

ActionEncodeResult velocity_to_action(
    const Eigen::VectorXd& v, const std::vector<std::pair<double, double>>& velocity_limits) {
  check_limits(velocity_limits, v.size());
  ActionEncodeResult result;
  result.action.a.resize(v.size());
  result.saturated.assign(static_cast<std::size_t>(v.size()), false);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto& [lo, hi] = velocity_limits[static_cast<std::size_t>(i)];
    const double a = (2.0 * v[i] - (hi + lo)) / (hi - lo);
    if (a < -1.0 || a > 1.0) result.saturated[static_cast<std::size_t>(i)] = true;
    result.action.a[i] = std::clamp(a, -1.0, 1.0);
  }
  return result;
}

Eigen::VectorXd action_to_velocity(const ActionVector& action,
                                   const std::vector<std::pair<double, double>>& velocity_limits) {
  check_limits(velocity_limits, action.a.size());
  for (Eigen::Index i = 0; i < action.a.size(); ++i)
    if (action.a[i] < -1.0 - 1e-12 || action.a[i] > 1.0 + 1e-12)
      throw Error(ErrorKind::InvalidParameter, "action component outside [-1, 1]");
  Eigen::VectorXd v(action.a.size());
  for (Eigen::Index i = 0; i < action.a.size(); ++i) {
    const auto& [lo, hi] = velocity_limits[static_cast<std::size_t>(i)];
    v[i] = (hi - lo) / 2.0 * action.a[i] + (hi + lo) / 2.0;
  }
  return v;
}

}  // namespace mobman
