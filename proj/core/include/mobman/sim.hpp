#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "mobman/control.hpp"
#include "mobman/kinematics.hpp"
#include "mobman/scenario.hpp"

namespace mobman {

enum class AttachMode { HandleGrasp, RimGrasp, Hug };

struct Attachment {
  AttachMode mode = AttachMode::HandleGrasp;
  double handle_param = 0.0;  // grasp point along the handle bar, meters
  double attach_jaw = 0.0;    // jaw width at attach; reopening past it releases
  Pose object_rel_torso;      // carried object pose in the torso frame
};

struct WorldState {
  JointState robot;
  double object_joint = 0.0;  // drawer extension (m) or door angle (rad)
  Pose object_pose;           // bucket/chair pose, origin at the footprint center
  double bucket_tilt = 0.0;   // rad
  std::optional<Attachment> attachment;
  int step_count = 0;
  bool grasp_lost_event = false;
  bool topple_event = false;
};

struct StepOutput {
  WorldState world;
  PointCloud observation;
};

struct SuccessCheck {
  bool done = false;
  bool success = false;
};

/// One surface sample point in object-local coordinates. Stations are fixed
/// per scenario; the current world state places them.
struct SurfaceStation {
  Vec3 position;
  Vec3 normal;
  SegLabel label = SegLabel::Other;
  Vec3 color = Vec3(0.5, 0.5, 0.5);
  int body = 0;  // rigid body the station rides (Body enum in the source)
};

/// Quasi-static kinematic world: robot joints integrate commanded
/// velocities; objects move only through attach/hug/push couplings.
/// All methods are const and deterministic; episodes can run in parallel.
class Simulator {
 public:
  Simulator(Scenario scenario, const KinematicModel* model);

  const Scenario& scenario() const { return scenario_; }
  const KinematicModel& model() const { return *model_; }

  WorldState initial_world() const;

  /// Applies one normalized action. Throws EpisodeOver past the limit.
  StepOutput step(const WorldState& world, const ActionVector& action) const;

  /// Renders from the robot head viewpoint with back-face culling.
  PointCloud render(const WorldState& world) const;
  PointCloud render(const WorldState& world, int points_per_object) const;

  SuccessCheck check_success(const WorldState& world) const;

  /// Handle grasp point at joint value j and bar parameter s (world frame).
  Vec3 handle_point(double object_joint, double bar_param) const;

  static constexpr double kBaseRadius = 0.26;
  static constexpr double kTiltLimit = 0.349;       // ~20 degrees
  static constexpr double kHoldBreakDistance = 0.03;
  static constexpr double kAttachJawSlack = 0.006;
  static constexpr double kReleaseJawSlack = 0.012;

 private:
  Scenario scenario_;
  const KinematicModel* model_;
  std::vector<SurfaceStation> stations_;

  void build_stations();
  Vec3 head_viewpoint(const WorldState& world) const;
  Pose body_pose(const WorldState& world, int body) const;

  void update_cabinet_coupling(WorldState& world) const;
  void update_bucket_coupling(WorldState& world) const;
  void update_chair_coupling(WorldState& world) const;
  void apply_door_pry(WorldState& world) const;
};

const char* to_string(AttachMode mode);

}  // namespace mobman
