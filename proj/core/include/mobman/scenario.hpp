#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "mobman/behavior.hpp"
#include "mobman/control.hpp"
#include "mobman/geometry.hpp"
#include "mobman/task.hpp"

namespace mobman {

/// Articulated cabinet (drawer or door). The local frame sits at the front
/// panel center projected to the floor; outward = rot_z(yaw) * +x points at
/// the robot side.
struct CabinetSpec {
  Vec3 position = Vec3::Zero();  // front-center at floor level
  double yaw = 0.0;
  bool prismatic = true;         // drawer slide; false = door hinge
  double joint_range = 0.3;      // meters (drawer) or radians (door)
  double panel_width = 0.4;
  double panel_height = 0.2;
  double panel_thickness = 0.02;
  double panel_center_z = 0.55;
  int hinge_side = 1;            // +1 hinge on +lateral side, -1 on -lateral
  double handle_length = 0.12;
  double handle_thickness = 0.02;
  double handle_depth = 0.05;    // stand-off of the handle bar from the panel
  bool handle_vertical = false;  // doors get vertical bars

  Vec3 outward() const { return rot_z(yaw) * Vec3::UnitX(); }
  Vec3 lateral() const { return rot_z(yaw) * Vec3::UnitY(); }
};

struct BucketSpec {
  Vec3 center = Vec3::Zero();  // bottom center at floor level
  double radius = 0.16;        // outer wall radius
  double height = 0.30;
  double rim_thickness = 0.03;
  bool handle_over_rim = false;
  double handle_rise = 0.10;
};

struct ChairSpec {
  Vec3 center = Vec3::Zero();  // footprint center at floor level
  double yaw = 0.0;
  double seat_height = 0.45;
  double seat_width = 0.42;
  double seat_depth = 0.44;
  double seat_thickness = 0.06;
  double back_height = 0.92;   // top of the backrest
  double back_thickness = 0.07;
};

struct TargetRegionSpec {
  Vec3 center = Vec3::Zero();
  double radius = 0.25;
  double platform_height = 0.0;  // bucket platforms sit above the floor
};

struct SensorConfig {
  int points_per_object = 700;
};

struct Scenario {
  TaskKind task = TaskKind::OpenDrawer;
  std::uint64_t seed = 0;
  int episode_limit = 200;
  double dt = 0.01;
  std::string robot_model = "single_arm";
  Eigen::VectorXd robot_start;

  std::optional<CabinetSpec> cabinet;
  std::optional<BucketSpec> bucket;
  std::optional<ChairSpec> chair;
  std::optional<TargetRegionSpec> target;

  SensorConfig sensor;
  ControlConfig control;
  BehaviorConfig behavior;
};

/// Seeded randomized scenario from the default corpus distributions.
Scenario make_scenario(TaskKind task, std::uint64_t seed);

Scenario load_scenario_file(const std::string& path);
void save_scenario_file(const Scenario& scenario, const std::string& path);

/// Ground-truth fields the behavior layer is allowed to consume.
TaskStatics statics_from(const Scenario& scenario);

/// Handle bar center in world coordinates at object joint value 0.
Vec3 handle_center_at_rest(const CabinetSpec& cabinet);
/// Handle bar axis direction (lateral for drawer bars, +z for door bars).
Vec3 handle_axis(const CabinetSpec& cabinet);
/// Hinge line position (door): panel edge on the hinge side.
Vec3 hinge_position(const CabinetSpec& cabinet);
/// Door opening rotation sign about +z.
double hinge_sign(const CabinetSpec& cabinet);

}  // namespace mobman
