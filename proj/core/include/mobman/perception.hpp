#pragma once

#include <vector>

#include "mobman/geometry.hpp"

namespace mobman {

enum class GraspOrientation { Horizontal, Vertical };

const char* to_string(GraspOrientation o);

/// Antipodal two-finger grasp on a handle. Pose axes: +x approach (toward
/// the handle), +y closing (the fingers travel along it), +z = x cross y.
struct GraspCandidate {
  Pose pose;
  double width = 0.0;               // antipodal jaw opening, meters
  GraspOrientation orientation_class = GraspOrientation::Vertical;
  double centroid_distance = 0.0;   // score, lower is better
};

/// Handle points merged across frames in world coordinates. A value type:
/// accumulate_handle returns the updated copy.
struct HandleAccumulator {
  PointCloud merged;
  int frames_seen = 0;
};

struct AccumulateResult {
  HandleAccumulator acc;
  bool ready = false;
};

/// Appends the observation's Handle points and reports readiness: at least
/// min_points merged or min_frames observed, whichever comes first.
AccumulateResult accumulate_handle(const HandleAccumulator& acc, const PointCloud& observation,
                                   int min_points = 50, int min_frames = 10);

struct GraspEstimationParams {
  double station_spacing = 0.005;  // sampling pitch along the handle, meters
  double slab_half_width = 0.0025;
};

/// Antipodal candidates across the handle's thin dimension, sampled along
/// its long axis and sorted by distance to the handle centroid (ties by
/// lexicographic position). Orientation heuristic: a handle whose dominant
/// axis is within 45 degrees of horizontal takes Vertical grasps (fingers
/// closing along z), otherwise Horizontal ones.
std::vector<GraspCandidate> estimate_handle_grasps(const PointCloud& handle,
                                                   double max_jaw_width,
                                                   const GraspEstimationParams& params = {});

/// Displacement of the panel-region centroid along the cabinet's outward
/// axis, signed so that positive means opening.
double detect_open_displacement(const PointCloud& current, const PointCloud& initial,
                                SegLabel panel_label, const Vec3& outward_axis = Vec3::UnitX());

struct RimEstimate {
  PointCloud rim_points;
  double rim_height = 0.0;   // z of the selected slice center
  Vec3 rim_center = Vec3::Zero();
  double rim_radius = 0.0;   // mean planar distance of rim points to center
  double rim_thickness = 0.0;  // max - min radial distance
};

/// Highest z-slice holding at least min_count points; sparse over-rim
/// structure (a handle arc) never wins the vote.
RimEstimate estimate_bucket_rim(const PointCloud& bucket, double bin_height = 0.01,
                                int min_count = 100);

/// min_count scaled from the 100-per-2000-points default.
int rim_min_count_for(std::size_t cloud_size);

/// Center of the PCA-aligned bounding box of the upper body (z >=
/// cushion_height); robust to the self-occluded far half.
Vec3 estimate_chair_center(const PointCloud& chair, double cushion_height = 0.35);

/// True when the rim is thin enough to pinch: thickness + margin <= jaw.
bool rim_graspable(const RimEstimate& rim, double max_jaw_width, double margin = 0.01);

}  // namespace mobman
