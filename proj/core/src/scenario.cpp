#include "mobman/scenario.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mobman/model_library.hpp"
#include "mobman/rng.hpp"

namespace mobman {

namespace {

using nlohmann::json;

Eigen::VectorXd neutral_start(const KinematicModel& model, double yaw) {
  Eigen::VectorXd q = Eigen::VectorXd::Zero(model.dof());
  auto set = [&](const std::string& name, double v) {
    const int i = model.joint_index(name);
    if (i >= 0) q[i] = v;
  };
  set("base_rot", yaw);
  set("torso_lift", 0.12);
  for (const std::string prefix : {std::string("l"), std::string("r")}) {
    set(prefix + "_arm_j2", 0.5);
    set(prefix + "_arm_j4", -1.2);
    set(prefix + "_arm_j6", 0.7);
    set(prefix + "_finger_l", 0.04);
    set(prefix + "_finger_r", -0.04);
  }
  return q;
}

CabinetSpec random_cabinet(Rng& rng, bool prismatic) {
  CabinetSpec cab;
  const double bearing = rng.uniform(-0.25, 0.25);
  const double dist = rng.uniform(1.05, 1.35);
  cab.position = Vec3(dist * std::cos(bearing), dist * std::sin(bearing), 0.0);
  cab.yaw = bearing + std::numbers::pi + rng.uniform(-0.12, 0.12);
  cab.prismatic = prismatic;
  cab.panel_width = rng.uniform(0.34, 0.46);
  cab.panel_thickness = 0.02;
  cab.handle_depth = 0.05;
  if (prismatic) {
    cab.joint_range = rng.uniform(0.25, 0.35);
    cab.panel_height = rng.uniform(0.16, 0.24);
    cab.panel_center_z = rng.uniform(0.42, 0.72);
    cab.handle_length = 0.12 * rng.uniform(0.5, 1.5);
    cab.handle_thickness = rng.uniform(0.012, 0.030);
    cab.handle_vertical = false;
  } else {
    cab.joint_range = rng.uniform(1.9, 2.2);
    cab.panel_height = rng.uniform(0.45, 0.65);
    cab.panel_center_z = rng.uniform(0.50, 0.70);
    cab.handle_length = 0.12 * rng.uniform(0.7, 1.3);
    cab.handle_thickness = rng.uniform(0.012, 0.028);
    cab.handle_vertical = true;
    cab.hinge_side = rng.bernoulli(0.5) ? 1 : -1;
  }
  return cab;
}

}  // namespace

Vec3 handle_center_at_rest(const CabinetSpec& cab) {
  Vec3 center = cab.position + Vec3(0, 0, cab.panel_center_z) +
                cab.outward() * (cab.panel_thickness / 2.0 + cab.handle_depth);
  if (!cab.prismatic)
    center += cab.lateral() * (-cab.hinge_side) * (cab.panel_width / 2.0 - 0.06);
  return center;
}

Vec3 handle_axis(const CabinetSpec& cab) {
  return cab.handle_vertical ? Vec3(Vec3::UnitZ()) : Vec3(cab.lateral());
}

Vec3 hinge_position(const CabinetSpec& cab) {
  return cab.position + Vec3(0, 0, cab.panel_center_z) +
         cab.lateral() * cab.hinge_side * (cab.panel_width / 2.0);
}

double hinge_sign(const CabinetSpec& cab) { return static_cast<double>(cab.hinge_side); }

Scenario make_scenario(TaskKind task, std::uint64_t seed) {
  Rng rng(seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(task) + 1);
  Scenario sc;
  sc.task = task;
  sc.seed = seed;

  double robot_yaw = 0.0;

  switch (task) {
    case TaskKind::OpenDrawer:
    case TaskKind::OpenDoor: {
      sc.robot_model = "single_arm";
      sc.cabinet = random_cabinet(rng, task == TaskKind::OpenDrawer);
      const Vec3 to_cab = sc.cabinet->position;
      robot_yaw = std::atan2(to_cab.y(), to_cab.x()) + rng.uniform(-0.08, 0.08);
      break;
    }
    case TaskKind::MoveBucket: {
      sc.robot_model = "dual_arm";
      BucketSpec bucket;
      const double bearing = rng.uniform(-0.25, 0.25);
      const double dist = rng.uniform(0.85, 1.15);
      bucket.center = Vec3(dist * std::cos(bearing), dist * std::sin(bearing), 0.0);
      bucket.radius = rng.uniform(0.12, 0.22);
      bucket.height = rng.uniform(0.26, 0.38);
      bucket.rim_thickness = rng.uniform(0.01, 0.12);
      bucket.handle_over_rim = rng.bernoulli(0.5);
      sc.bucket = bucket;

      TargetRegionSpec target;
      target.radius = 0.15;
      target.platform_height = 0.06;
      do {
        const double b2 = bearing + rng.uniform(-0.45, 0.45);
        const double d2 = rng.uniform(0.9, 1.4);
        target.center = Vec3(d2 * std::cos(b2), d2 * std::sin(b2), 0.0);
      } while ((target.center - bucket.center).head<2>().norm() < 0.55);
      sc.target = target;
      robot_yaw = bearing + rng.uniform(-0.08, 0.08);
      break;
    }
    case TaskKind::PushChair: {
      sc.robot_model = "dual_arm";
      ChairSpec chair;
      const double bearing = rng.uniform(-0.25, 0.25);
      const double dist = rng.uniform(0.9, 1.25);
      chair.center = Vec3(dist * std::cos(bearing), dist * std::sin(bearing), 0.0);
      chair.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
      chair.seat_height = rng.uniform(0.42, 0.50);
      chair.seat_width = rng.uniform(0.38, 0.46);
      chair.seat_depth = rng.uniform(0.40, 0.48);
      chair.back_height = rng.uniform(0.85, 1.00);
      sc.chair = chair;

      TargetRegionSpec target;
      target.radius = 0.25;
      target.platform_height = 0.0;
      const double push_bearing = bearing + rng.uniform(-0.45, 0.45);
      const double push_dist = rng.uniform(0.6, 1.1);
      target.center = chair.center + Vec3(push_dist * std::cos(push_bearing),
                                          push_dist * std::sin(push_bearing), 0.0);
      sc.target = target;
      robot_yaw = bearing + rng.uniform(-0.08, 0.08);
      break;
    }
  }

  const KinematicModel model = stock_model(sc.robot_model);
  sc.robot_start = neutral_start(model, robot_yaw);
  return sc;
}

TaskStatics statics_from(const Scenario& sc) {
  TaskStatics st;
  st.max_jaw_width = 0.08;
  if (sc.cabinet) {
    st.outward_axis = sc.cabinet->outward();
    st.joint_range = sc.cabinet->joint_range;
    st.door_panel_width = sc.cabinet->panel_width;
    if (!sc.cabinet->prismatic) {
      st.hinge_position = hinge_position(*sc.cabinet);
      st.hinge_sign = hinge_sign(*sc.cabinet);
    }
  }
  if (sc.target) {
    st.target_center = sc.target->center;
    st.target_radius = sc.target->radius;
    st.platform_height = sc.target->platform_height;
  }
  st.cushion_height = sc.behavior.cushion_height;
  return st;
}

// --- JSON serialization ------------------------------------------------------

namespace {

json vec3_to_json(const Vec3& v) { return json{v.x(), v.y(), v.z()}; }
Vec3 vec3_from_json(const json& node) { return Vec3(node.at(0), node.at(1), node.at(2)); }

json gains_to_json(const PidGains& g) { return json{{"kp", g.kp}, {"ki", g.ki}, {"kd", g.kd}}; }
PidGains gains_from_json(const json& node) {
  return PidGains{node.at("kp"), node.at("ki"), node.at("kd")};
}

}  // namespace

void save_scenario_file(const Scenario& sc, const std::string& path) {
  json doc;
  doc["task"] = to_string(sc.task);
  doc["seed"] = sc.seed;
  doc["episode_limit"] = sc.episode_limit;
  doc["dt"] = sc.dt;
  doc["robot_model"] = sc.robot_model;
  doc["robot_start"] = std::vector<double>(sc.robot_start.data(),
                                           sc.robot_start.data() + sc.robot_start.size());
  if (sc.cabinet) {
    const CabinetSpec& c = *sc.cabinet;
    doc["cabinet"] = {
        {"position", vec3_to_json(c.position)},
        {"yaw", c.yaw},
        {"prismatic", c.prismatic},
        {"joint_range", c.joint_range},
        {"panel_width", c.panel_width},
        {"panel_height", c.panel_height},
        {"panel_thickness", c.panel_thickness},
        {"panel_center_z", c.panel_center_z},
        {"hinge_side", c.hinge_side},
        {"handle_length", c.handle_length},
        {"handle_thickness", c.handle_thickness},
        {"handle_depth", c.handle_depth},
        {"handle_vertical", c.handle_vertical},
    };
  }
  if (sc.bucket) {
    const BucketSpec& b = *sc.bucket;
    doc["bucket"] = {
        {"center", vec3_to_json(b.center)},   {"radius", b.radius},
        {"height", b.height},                 {"rim_thickness", b.rim_thickness},
        {"handle_over_rim", b.handle_over_rim}, {"handle_rise", b.handle_rise},
    };
  }
  if (sc.chair) {
    const ChairSpec& c = *sc.chair;
    doc["chair"] = {
        {"center", vec3_to_json(c.center)},  {"yaw", c.yaw},
        {"seat_height", c.seat_height},      {"seat_width", c.seat_width},
        {"seat_depth", c.seat_depth},        {"seat_thickness", c.seat_thickness},
        {"back_height", c.back_height},      {"back_thickness", c.back_thickness},
    };
  }
  if (sc.target) {
    doc["target"] = {{"center", vec3_to_json(sc.target->center)},
                     {"radius", sc.target->radius},
                     {"platform_height", sc.target->platform_height}};
  }
  doc["sensor"] = {{"points_per_object", sc.sensor.points_per_object}};
  doc["control"] = {
      {"base_translation", gains_to_json(sc.control.base_translation)},
      {"base_rotation", gains_to_json(sc.control.base_rotation)},
      {"base_height", gains_to_json(sc.control.base_height)},
      {"arm", gains_to_json(sc.control.arm)},
      {"gripper", gains_to_json(sc.control.gripper)},
      {"dt", sc.control.dt},
      {"cutoff_hz", sc.control.cutoff_hz},
      {"integral_cap", sc.control.integral_cap},
  };

  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::BadScenario, "cannot write scenario file " + path);
  out << doc.dump(2) << "\n";
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::BadScenario, "cannot open scenario file " + path);
  json doc = json::parse(in);

  Scenario sc;
  sc.task = task_from_string(doc.at("task").get<std::string>());
  sc.seed = doc.value("seed", 0ull);
  sc.episode_limit = doc.value("episode_limit", 200);
  sc.dt = doc.value("dt", 0.01);
  sc.robot_model = doc.value("robot_model", std::string("single_arm"));
  const auto start = doc.at("robot_start").get<std::vector<double>>();
  sc.robot_start = Eigen::Map<const Eigen::VectorXd>(start.data(),
                                                     static_cast<Eigen::Index>(start.size()));

  if (doc.contains("cabinet")) {
    const json& node = doc.at("cabinet");
    CabinetSpec c;
    c.position = vec3_from_json(node.at("position"));
    c.yaw = node.at("yaw");
    c.prismatic = node.at("prismatic");
    c.joint_range = node.at("joint_range");
    c.panel_width = node.at("panel_width");
    c.panel_height = node.at("panel_height");
    c.panel_thickness = node.at("panel_thickness");
    c.panel_center_z = node.at("panel_center_z");
    c.hinge_side = node.at("hinge_side");
    c.handle_length = node.at("handle_length");
    c.handle_thickness = node.at("handle_thickness");
    c.handle_depth = node.at("handle_depth");
    c.handle_vertical = node.at("handle_vertical");
    sc.cabinet = c;
  }
  if (doc.contains("bucket")) {
    const json& node = doc.at("bucket");
    BucketSpec b;
    b.center = vec3_from_json(node.at("center"));
    b.radius = node.at("radius");
    b.height = node.at("height");
    b.rim_thickness = node.at("rim_thickness");
    b.handle_over_rim = node.at("handle_over_rim");
    b.handle_rise = node.value("handle_rise", 0.10);
    sc.bucket = b;
  }
  if (doc.contains("chair")) {
    const json& node = doc.at("chair");
    ChairSpec c;
    c.center = vec3_from_json(node.at("center"));
    c.yaw = node.at("yaw");
    c.seat_height = node.at("seat_height");
    c.seat_width = node.at("seat_width");
    c.seat_depth = node.at("seat_depth");
    c.seat_thickness = node.value("seat_thickness", 0.06);
    c.back_height = node.at("back_height");
    c.back_thickness = node.value("back_thickness", 0.07);
    sc.chair = c;
  }
  if (doc.contains("target")) {
    const json& node = doc.at("target");
    TargetRegionSpec t;
    t.center = vec3_from_json(node.at("center"));
    t.radius = node.at("radius");
    t.platform_height = node.value("platform_height", 0.0);
    sc.target = t;
  }
  if (doc.contains("sensor"))
    sc.sensor.points_per_object = doc.at("sensor").value("points_per_object", 700);
  if (doc.contains("control")) {
    const json& node = doc.at("control");
    if (node.contains("base_translation"))
      sc.control.base_translation = gains_from_json(node.at("base_translation"));
    if (node.contains("base_rotation"))
      sc.control.base_rotation = gains_from_json(node.at("base_rotation"));
    if (node.contains("base_height"))
      sc.control.base_height = gains_from_json(node.at("base_height"));
    if (node.contains("arm")) sc.control.arm = gains_from_json(node.at("arm"));
    if (node.contains("gripper")) sc.control.gripper = gains_from_json(node.at("gripper"));
    sc.control.dt = node.value("dt", sc.control.dt);
    sc.control.cutoff_hz = node.value("cutoff_hz", sc.control.cutoff_hz);
    sc.control.integral_cap = node.value("integral_cap", sc.control.integral_cap);
  }
  return sc;
}

}  // namespace mobman
