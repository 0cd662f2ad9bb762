#pragma once

#include <functional>
#include <optional>
#include <string>

#include "mobman/sim.hpp"

namespace mobman {

enum class FailureReason { Timeout, GraspLost, ObjectToppled, IkFailure };

const char* to_string(FailureReason reason);

struct EpisodeResult {
  bool success = false;
  int steps_used = 0;
  std::optional<FailureReason> failure_reason;
  std::optional<CarryBranch> branch;  // bucket episodes record the branch taken
  std::string trajectory_csv;         // full per-tick log
};

struct EpisodeOptions {
  /// Called after every simulator step with the fresh observation; used by
  /// the CLI for optional PLY dumps. Does not influence the run.
  std::function<void(int step, const PointCloud&)> observer;
};

/// Closed loop: perception -> behavior tick -> IK resolve -> PID -> action
/// scaling -> simulator step until success, tree termination, or the step
/// limit. Deterministic for a given scenario.
EpisodeResult run_episode(const Scenario& scenario, const EpisodeOptions& options = {});

struct EvalSummary {
  TaskKind task = TaskKind::OpenDrawer;
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_steps = 0.0;
  int timeout_count = 0;
  int grasp_lost_count = 0;
  int toppled_count = 0;
  int ik_failure_count = 0;
  int prehensile_count = 0;
  int hug_count = 0;
  std::string episodes_csv;  // one row per episode
  std::string summary_csv;
  std::string summary_text;  // aligned table
};

/// Runs n seeded scenarios (seed, seed+1, ...) and aggregates.
EvalSummary evaluate(TaskKind task, int n_episodes, std::uint64_t seed);

std::string format_summary_table(const std::vector<EvalSummary>& summaries);

}  // namespace mobman
