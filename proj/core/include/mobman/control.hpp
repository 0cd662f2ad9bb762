#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mobman/kinematics.hpp"

namespace mobman {

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
};

enum class JointGroup {
  BaseTranslation,
  BaseRotation,
  BaseHeight,
  Arm,
  Gripper,
};

const char* to_string(JointGroup group);

/// Per-group gain schedule plus loop timing. Defaults reproduce the tuned
/// 100 Hz schedule: base translation/height (20, 0.5, 0), arm (10, 2, 0),
/// base rotation (0.5, 0.2, 0); kd stays 0 everywhere because derivative
/// action jitters at this control rate.
struct ControlConfig {
  PidGains base_translation{20.0, 0.5, 0.0};
  PidGains base_rotation{0.5, 0.2, 0.0};
  PidGains base_height{20.0, 0.5, 0.0};
  PidGains arm{10.0, 2.0, 0.0};
  PidGains gripper{10.0, 2.0, 0.0};
  double dt = 0.01;         // 100 Hz
  double cutoff_hz = 40.0;  // output low-pass
  double integral_cap = 1.0;

  const PidGains& gains(JointGroup group) const;
};

/// Normalized action in [-1, 1]^dof, the wire format the simulator accepts.
struct ActionVector {
  Eigen::VectorXd a;
};

struct LowpassResult {
  double state = 0.0;
  double output = 0.0;
};

/// First-order IIR step: alpha = dt / (1 / (2*pi*cutoff) + dt).
LowpassResult lowpass_step(double state, double input, double dt, double cutoff_hz);
double lowpass_alpha(double dt, double cutoff_hz);

/// Joint-space PID state, threaded through the loop as a value.
struct ControllerBank {
  ControlConfig config;
  std::vector<JointGroup> groups;  // one per joint
  Eigen::VectorXd integral;
  Eigen::VectorXd prev_error;
  Eigen::VectorXd filter_state;

  /// Groups assigned by stock joint naming: base_x/base_y translation,
  /// base_rot rotation, torso_lift height, *_finger_* gripper, rest arm.
  static ControllerBank for_model(const KinematicModel& model, ControlConfig config = {});
  static ControllerBank from_groups(std::vector<JointGroup> groups, ControlConfig config = {});

  int dof() const { return static_cast<int>(groups.size()); }
};

struct PidStepResult {
  ControllerBank bank;
  Eigen::VectorXd velocity;
};

/// One PID update toward q_desired with anti-windup and low-pass output.
PidStepResult pid_step(const ControllerBank& bank, const JointState& q_desired,
                       const JointState& q_current);

/// Rate-limited reference for large setpoint jumps: caps the per-joint error
/// fed to the PID at headroom * velocity_limit / kp, so the proportional
/// command cruises just under the joint's velocity range instead of
/// saturating for many ticks and winding the integral up.
JointState proximate_setpoint(const ControllerBank& bank, const KinematicModel& model,
                              const JointState& desired, const JointState& current,
                              double headroom = 0.85);

struct ActionEncodeResult {
  ActionVector action;
  std::vector<bool> saturated;  // per joint, command exceeded the velocity range
};

/// Inverse of the simulator's action scaling, with clipping to [-1, 1]:
/// a = (2 v - (upper + lower)) / (upper - lower).
ActionEncodeResult velocity_to_action(const Eigen::VectorXd& v,
                                      const std::vector<std::pair<double, double>>& velocity_limits);

/// The simulator's scaling: v = (upper - lower) / 2 * a + (upper + lower) / 2.
Eigen::VectorXd action_to_velocity(const ActionVector& action,
                                   const std::vector<std::pair<double, double>>& velocity_limits);

}  // namespace mobman
