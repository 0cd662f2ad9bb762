#pragma once

#include <string>

#include "mobman/kinematics.hpp"

namespace mobman {

/// Stock 13-DOF robot: planar base (x, y, yaw) + torso lift + 7-DOF right
/// arm + 2 finger joints. Gripper frame convention: +x approach, +y closing.
KinematicModel make_single_arm_model();

/// Stock 22-DOF robot: same base and torso with left and right arms.
KinematicModel make_dual_arm_model();

/// "single_arm" or "dual_arm"; throws BadModel otherwise.
KinematicModel stock_model(const std::string& name);

KinematicModel load_model_file(const std::string& path);
void save_model_file(const KinematicModel& model, const std::string& path);

/// Directory holding the shipped stock model files (source tree fallback).
std::string stock_model_dir();

}  // namespace mobman
