// Command-line front end: run single episodes, batch evaluations, the
// kinematics self-test, and behavior-tree dumps.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mobman/behavior.hpp"
#include "mobman/episode.hpp"
#include "mobman/model_library.hpp"
#include "mobman/rng.hpp"

namespace fs = std::filesystem;
using namespace mobman;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidParameter, "cannot write " + path.string());
  out << content;
}

std::vector<TaskKind> parse_tasks(const std::string& name) {
  if (name == "all")
    return {TaskKind::OpenDrawer, TaskKind::OpenDoor, TaskKind::MoveBucket,
            TaskKind::PushChair};
  return {task_from_string(name)};
}

int cmd_run(const std::string& task_name, std::uint64_t seed,
            const std::string& scenario_file, const std::string& out_dir, bool dump_clouds) {
  Scenario scenario = scenario_file.empty()
                          ? make_scenario(task_from_string(task_name), seed)
                          : load_scenario_file(scenario_file);

  EpisodeOptions options;
  fs::path out;
  if (!out_dir.empty()) {
    out = out_dir;
    fs::create_directories(out);
    if (dump_clouds) {
      fs::create_directories(out / "clouds");
      options.observer = [out](int step, const PointCloud& cloud) {
        char name[32];
        std::snprintf(name, sizeof(name), "step_%04d.ply", step);
        write_ply_file(cloud, (out / "clouds" / name).string());
      };
    }
  }

  const EpisodeResult result = run_episode(scenario, options);

  std::cout << "task: " << to_string(scenario.task) << "\n";
  std::cout << "seed: " << scenario.seed << "\n";
  std::cout << "success: " << (result.success ? "yes" : "no") << "\n";
  std::cout << "steps: " << result.steps_used << "\n";
  if (result.failure_reason)
    std::cout << "failure_reason: " << to_string(*result.failure_reason) << "\n";
  if (result.branch) std::cout << "branch: " << to_string(*result.branch) << "\n";

  if (!out.empty()) {
    write_file(out / "trajectory.csv", result.trajectory_csv);
    save_scenario_file(scenario, (out / "scenario.json").string());
    std::cout << "trajectory: " << (out / "trajectory.csv").string() << "\n";
  }
  return result.success ? 0 : 1;
}

int cmd_eval(const std::string& task_name, int episodes, std::uint64_t seed,
             const std::string& out_dir) {
  const std::vector<TaskKind> tasks = parse_tasks(task_name);

  fs::path out;
  if (!out_dir.empty()) {
    out = out_dir;
    fs::create_directories(out);
  }

  std::vector<EvalSummary> summaries;
  for (TaskKind task : tasks) {
    EvalSummary s = evaluate(task, episodes, seed);
    if (!out.empty()) {
      const std::string base = to_string(task);
      write_file(out / (base + "_episodes.csv"), s.episodes_csv);
      write_file(out / (base + "_summary.csv"), s.summary_csv);
    }
    summaries.push_back(std::move(s));
  }

  const std::string table = format_summary_table(summaries);
  std::cout << table;
  if (!out.empty()) write_file(out / "summary.txt", table);
  return 0;
}

int cmd_ik_check(const std::string& model_name, int samples, std::uint64_t seed) {
  const KinematicModel model = stock_model(model_name);
  Rng rng(seed);

  const Eigen::VectorXd lo = model.lower_limits();
  const Eigen::VectorXd hi = model.upper_limits();
  auto random_state = [&]() {
    JointState q = JointState::zero(model.dof());
    for (int i = 0; i < model.dof(); ++i) q.q[i] = rng.uniform(lo[i], hi[i]);
    return q;
  };

  // FK/Jacobian consistency against central finite differences.
  double max_jac_err = 0.0;
  const std::string tip = model.gripper_frames().front();
  for (int s = 0; s < samples; ++s) {
    const JointState q = random_state();
    const Eigen::MatrixXd jac = jacobian(model, q, tip);
    const double h = 1e-6;
    for (int i = 0; i < model.dof(); ++i) {
      JointState qp = q, qm = q;
      qp.q[i] += h;
      qm.q[i] -= h;
      const Pose pp = forward_kinematics(model, qp, tip);
      const Pose pm = forward_kinematics(model, qm, tip);
      const Vec3 lin = (pp.translation - pm.translation) / (2 * h);
      const Vec3 ang = rotation_error(pp.rotation, pm.rotation) / (2 * h);
      max_jac_err = std::max(max_jac_err, (jac.block<3, 1>(0, i) - lin).cwiseAbs().maxCoeff());
      max_jac_err = std::max(max_jac_err, (jac.block<3, 1>(3, i) - ang).cwiseAbs().maxCoeff());
    }
  }
  std::cout << "jacobian_vs_fd_max_err: " << max_jac_err << "\n";

  // IK round trips from perturbed seeds.
  int achieved = 0;
  double worst_pos = 0.0, worst_rot = 0.0;
  for (int s = 0; s < samples; ++s) {
    const JointState q = random_state();
    IkRequest req;
    req.targets = {{tip, forward_kinematics(model, q, tip), 1.0, 1.0}};
    JointState seed_state = q;
    for (int i = 0; i < model.dof(); ++i) seed_state.q[i] += rng.uniform(-0.1, 0.1);
    req.seed = clamp_to_limits(model, seed_state);
    const IkResult r = solve_ik(model, req);
    if (r.achieved) {
      ++achieved;
      worst_pos = std::max(worst_pos, r.residuals[0].pos_err);
      worst_rot = std::max(worst_rot, r.residuals[0].rot_err);
    }
  }
  std::cout << "ik_round_trip: " << achieved << "/" << samples
            << " achieved, worst_pos_err " << worst_pos << " m, worst_rot_err "
            << worst_rot << " rad\n";
  return max_jac_err < 1e-4 && achieved == samples ? 0 : 1;
}

int cmd_trees(const std::string& task_name, const std::string& out_file) {
  std::string text;
  for (TaskKind task : parse_tasks(task_name)) text += dump_tree(build_tree(task)) + "\n";
  if (out_file.empty())
    std::cout << text;
  else
    write_file(out_file, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mobile manipulation pipeline: perception, IK, PID and behavior trees "
               "closed against a kinematic simulator"};
  app.require_subcommand(1);

  std::string task = "drawer";
  std::uint64_t seed = 0;
  int episodes = 100;
  std::string scenario_file, out_dir, out_file, model_name = "single_arm";
  bool dump_clouds = false;
  int samples = 50;

  CLI::App* run = app.add_subcommand("run", "run one episode with a full trajectory log");
  run->add_option("--task", task, "drawer|door|bucket|chair");
  run->add_option("--seed", seed, "scenario seed");
  run->add_option("--scenario", scenario_file, "scenario JSON file (overrides task/seed)");
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--dump-clouds", dump_clouds, "write per-step PLY clouds under out/");

  CLI::App* eval = app.add_subcommand("eval", "batch evaluation with summary + CSV");
  eval->add_option("--task", task, "drawer|door|bucket|chair|all");
  eval->add_option("--episodes", episodes, "episodes per task");
  eval->add_option("--seed", seed, "base seed");
  eval->add_option("--out", out_dir, "output directory");

  CLI::App* ik = app.add_subcommand("ik-check", "kinematics self-test report");
  ik->add_option("--model", model_name, "single_arm|dual_arm");
  ik->add_option("--samples", samples, "random states per check");
  ik->add_option("--seed", seed, "rng seed");

  CLI::App* trees = app.add_subcommand("trees", "dump behavior-tree graphs");
  trees->add_option("--task", task, "drawer|door|bucket|chair|all");
  trees->add_option("--out", out_file, "output file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(task, seed, scenario_file, out_dir, dump_clouds);
    if (eval->parsed()) return cmd_eval(task, episodes, seed, out_dir);
    if (ik->parsed()) return cmd_ik_check(model_name, samples, seed);
    if (trees->parsed()) return cmd_trees(task, out_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
