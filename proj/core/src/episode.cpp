#include "mobman/episode.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "mobman/behavior.hpp"
#include "mobman/episode.hpp"
#include "mobman/model_library.hpp"

namespace mobman {

const char* to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::Timeout: return "timeout";
    case FailureReason::GraspLost: return "grasp_lost";
    case FailureReason::ObjectToppled: return "object_toppled";
    case FailureReason::IkFailure: return "ik_failure";
  }
  return "unknown";
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void log_header(std::ostringstream& log, int dof) {
  log << "step,node,status,object_joint,obj_x,obj_y,obj_z,tilt,attached,est_open,"
         "est_cx,est_cy,ik_failed";
  for (int i = 0; i < dof; ++i) log << ",q" << i;
  for (int i = 0; i < dof; ++i) log << ",v" << i;
  log << "\n";
}

void log_row(std::ostringstream& log, const WorldState& world, const std::string& node,
             NodeStatus status, const TaskContext& ctx, const Eigen::VectorXd& v,
             bool ik_failed) {
  log << world.step_count << ',' << node << ',' << to_string(status) << ','
      << fmt(world.object_joint) << ',' << fmt(world.object_pose.translation.x()) << ','
      << fmt(world.object_pose.translation.y()) << ','
      << fmt(world.object_pose.translation.z()) << ',' << fmt(world.bucket_tilt) << ','
      << (world.attachment ? to_string(world.attachment->mode) : "none") << ','
      << fmt(ctx.last_open_estimate) << ','
      << fmt(ctx.chair_center ? ctx.chair_center->x()
                              : (ctx.rim ? ctx.rim->rim_center.x() : 0.0))
      << ','
      << fmt(ctx.chair_center ? ctx.chair_center->y()
                              : (ctx.rim ? ctx.rim->rim_center.y() : 0.0))
      << ',' << (ik_failed ? 1 : 0);
  for (int i = 0; i < world.robot.dof(); ++i) log << ',' << fmt(world.robot.q[i]);
  for (Eigen::Index i = 0; i < v.size(); ++i) log << ',' << fmt(v[i]);
  log << "\n";
}

}  // namespace

EpisodeResult run_episode(const Scenario& scenario, const EpisodeOptions& options) {
  const KinematicModel model = stock_model(scenario.robot_model);
  const Simulator sim(scenario, &model);

  WorldState world = sim.initial_world();
  PointCloud obs = sim.render(world);
  if (options.observer) options.observer(0, obs);

  BehaviorTree tree = build_tree(scenario.task);
  tree.episode_limit = scenario.episode_limit;

  TaskContext ctx;
  ctx.task = scenario.task;
  ctx.statics = statics_from(scenario);
  ctx.cfg = scenario.behavior;
  ctx.model = &model;

  ControllerBank bank = ControllerBank::for_model(model, scenario.control);
  const auto velocity_limits = model.velocity_ranges();

  std::optional<MotionTarget> cached_target;
  JointState cached_desired;

  EpisodeResult result;
  std::ostringstream log;
  log_header(log, model.dof());

  int ik_failures = 0;
  bool tree_done = false;

  while (true) {
    const SuccessCheck sc = sim.check_success(world);
    if (sc.success) {
      result.success = true;
      break;
    }
    if (world.step_count >= scenario.episode_limit || tree_done) break;

    TickResult tr = tick(tree, ctx, obs, world.robot);
    tree = std::move(tr.tree);
    ctx = std::move(tr.context);
    tree_done = tr.episode_done;

    bool ik_failed = false;
    JointState desired;
    if (cached_target && *cached_target == tr.target) {
      desired = cached_desired;
    } else {
      const ResolveResult rr = resolve_target(tr.target, model, world.robot);
      desired = rr.desired;
      ik_failed = !rr.ik_ok;
      if (ik_failed) {
        ++ik_failures;
        cached_target.reset();
      } else {
        cached_target = tr.target;
        cached_desired = desired;
      }
    }
    ctx.ik_failed = ctx.ik_failed || ik_failed;

    const JointState reference = proximate_setpoint(bank, model, desired, world.robot);
    PidStepResult pid = pid_step(bank, reference, world.robot);
    bank = std::move(pid.bank);
    const ActionVector action = velocity_to_action(pid.velocity, velocity_limits).action;

    StepOutput so = sim.step(world, action);
    world = std::move(so.world);
    obs = std::move(so.observation);
    if (options.observer) options.observer(world.step_count, obs);

    log_row(log, world, tree.current, tr.status, ctx, pid.velocity, ik_failed);
  }

  result.steps_used = world.step_count;
  result.branch = ctx.branch;
  if (!result.success) {
    if (world.topple_event)
      result.failure_reason = FailureReason::ObjectToppled;
    else if (world.grasp_lost_event)
      result.failure_reason = FailureReason::GraspLost;
    else if (ik_failures > 0)
      result.failure_reason = FailureReason::IkFailure;
    else
      result.failure_reason = FailureReason::Timeout;
  }
  result.trajectory_csv = log.str();
  return result;
}

EvalSummary evaluate(TaskKind task, int n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw Error(ErrorKind::InvalidParameter, "n_episodes must be >= 1");

  EvalSummary s;
  s.task = task;
  s.episodes = n_episodes;

  std::ostringstream episodes_csv;
  episodes_csv << "episode,seed,success,steps,failure_reason,branch\n";

  double step_sum = 0.0;
  for (int i = 0; i < n_episodes; ++i) {
    const std::uint64_t ep_seed = seed + static_cast<std::uint64_t>(i);
    const Scenario scenario = make_scenario(task, ep_seed);
    const EpisodeResult r = run_episode(scenario);

    if (r.success) ++s.successes;
    step_sum += r.steps_used;
    if (r.failure_reason) {
      switch (*r.failure_reason) {
        case FailureReason::Timeout: ++s.timeout_count; break;
        case FailureReason::GraspLost: ++s.grasp_lost_count; break;
        case FailureReason::ObjectToppled: ++s.toppled_count; break;
        case FailureReason::IkFailure: ++s.ik_failure_count; break;
      }
    }
    if (r.branch) {
      if (*r.branch == CarryBranch::Prehensile)
        ++s.prehensile_count;
      else
        ++s.hug_count;
    }

    episodes_csv << i << ',' << ep_seed << ',' << (r.success ? 1 : 0) << ',' << r.steps_used
                 << ',' << (r.failure_reason ? to_string(*r.failure_reason) : "none") << ','
                 << (r.branch ? to_string(*r.branch) : "none") << "\n";
  }

  s.success_rate = static_cast<double>(s.successes) / n_episodes;
  s.mean_steps = step_sum / n_episodes;
  s.episodes_csv = episodes_csv.str();

  std::ostringstream summary_csv;
  summary_csv << "task,episodes,successes,success_rate,mean_steps,timeout,grasp_lost,"
                 "toppled,ik_failure,prehensile,hug\n";
  summary_csv << to_string(task) << ',' << s.episodes << ',' << s.successes << ','
              << s.success_rate << ',' << s.mean_steps << ',' << s.timeout_count << ','
              << s.grasp_lost_count << ',' << s.toppled_count << ',' << s.ik_failure_count
              << ',' << s.prehensile_count << ',' << s.hug_count << "\n";
  s.summary_csv = summary_csv.str();
  s.summary_text = format_summary_table({s});
  return s;
}

std::string format_summary_table(const std::vector<EvalSummary>& summaries) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-12s %8s %8s %8s %10s %8s %10s %8s %8s\n", "task",
                "episodes", "success", "rate", "mean_steps", "timeout", "grasp_lost",
                "toppled", "ik_fail");
  out << line;
  for (const EvalSummary& s : summaries) {
    std::snprintf(line, sizeof(line), "%-12s %8d %8d %8.3f %10.1f %8d %10d %8d %8d\n",
                  to_string(s.task), s.episodes, s.successes, s.success_rate, s.mean_steps,
                  s.timeout_count, s.grasp_lost_count, s.toppled_count, s.ik_failure_count);
    out << line;
  }
  return out.str();
}

}  // namespace mobman
