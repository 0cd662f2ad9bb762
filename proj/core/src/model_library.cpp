#include "mobman/model_library.hpp"

#include <fstream>

#include <json.hpp>

namespace mobman {

namespace {

using nlohmann::json;

JointSpec prismatic(const std::string& name, JointKind kind, const std::string& parent,
                    const Vec3& xyz, double lower, double upper, double vel) {
  JointSpec j;
  j.name = name;
  j.kind = kind;
  j.parent = parent;
  j.origin = Pose::from_translation(xyz);
  j.lower = lower;
  j.upper = upper;
  j.velocity_limit = vel;
  return j;
}

JointSpec revolute(const std::string& name, const Vec3& axis, const std::string& parent,
                   const Vec3& xyz, double lower, double upper, double vel) {
  JointSpec j;
  j.name = name;
  j.kind = axis.isApprox(Vec3::UnitZ()) ? JointKind::RevoluteZ : JointKind::RevoluteArbitrary;
  j.axis = axis;
  j.parent = parent;
  j.origin = Pose::from_translation(xyz);
  j.lower = lower;
  j.upper = upper;
  j.velocity_limit = vel;
  return j;
}

void append_base(std::vector<JointSpec>& joints) {
  joints.push_back(prismatic("base_x", JointKind::PrismaticX, "world", {0, 0, 0}, -10, 10, 2.0));
  joints.push_back(prismatic("base_y", JointKind::PrismaticY, "base_x", {0, 0, 0}, -10, 10, 2.0));
  joints.push_back(revolute("base_rot", Vec3::UnitZ(), "base_y", {0, 0, 0}, -3.0, 3.0, 2.0));
  joints.push_back(
      prismatic("torso_lift", JointKind::PrismaticZ, "base_rot", {0, 0, 0.30}, 0.0, 0.6, 0.5));
}

// side_y = -0.16 mounts the right arm, +0.16 the left.
void append_arm(std::vector<JointSpec>& joints, std::vector<FixedFrame>& frames,
                const std::string& prefix, double side_y) {
  const Vec3 x = Vec3::UnitX();
  const Vec3 y = Vec3::UnitY();
  joints.push_back(revolute(prefix + "_arm_j1", Vec3::UnitZ(), "torso_lift",
                            {0.10, side_y, 0.35}, -2.9, 2.9, 3.0));
  joints.push_back(revolute(prefix + "_arm_j2", y, prefix + "_arm_j1", {0.06, 0, 0.06},
                            -1.9, 1.9, 3.0));
  joints.push_back(revolute(prefix + "_arm_j3", x, prefix + "_arm_j2", {0.20, 0, 0},
                            -2.9, 2.9, 3.0));
  joints.push_back(revolute(prefix + "_arm_j4", y, prefix + "_arm_j3", {0.20, 0, 0},
                            -2.4, 2.4, 3.0));
  joints.push_back(revolute(prefix + "_arm_j5", x, prefix + "_arm_j4", {0.18, 0, 0},
                            -2.9, 2.9, 3.0));
  joints.push_back(revolute(prefix + "_arm_j6", y, prefix + "_arm_j5", {0.18, 0, 0},
                            -2.2, 2.2, 3.0));
  joints.push_back(revolute(prefix + "_arm_j7", x, prefix + "_arm_j6", {0.10, 0, 0},
                            -2.9, 2.9, 3.0));
  joints.push_back(prismatic(prefix + "_finger_l", JointKind::PrismaticY,
                             prefix + "_arm_j7", {0.14, 0, 0}, 0.0, 0.04, 0.5));
  joints.push_back(prismatic(prefix + "_finger_r", JointKind::PrismaticY,
                             prefix + "_arm_j7", {0.14, 0, 0}, -0.04, 0.0, 0.5));
  frames.push_back({prefix + "_gripper", prefix + "_arm_j7", Pose::from_translation({0.19, 0, 0})});
  frames.push_back(
      {prefix + "_fingertip_l", prefix + "_finger_l", Pose::from_translation({0.05, 0, 0})});
  frames.push_back(
      {prefix + "_fingertip_r", prefix + "_finger_r", Pose::from_translation({0.05, 0, 0})});
}

std::vector<FixedFrame> common_frames() {
  return {{"head", "torso_lift", Pose::from_translation({0.05, 0, 1.00})}};
}

json pose_to_json(const Pose& pose) {
  // All stock origins are pure translations; rpy kept for generality.
  Vec3 rpy = pose.rotation.eulerAngles(2, 1, 0).reverse();
  if (pose.rotation.isApprox(Mat3::Identity(), 1e-12)) rpy = Vec3::Zero();
  return json{{"xyz", {pose.translation.x(), pose.translation.y(), pose.translation.z()}},
              {"rpy", {rpy.x(), rpy.y(), rpy.z()}}};
}

Pose pose_from_json(const json& node) {
  Pose pose;
  if (node.contains("xyz")) {
    auto v = node.at("xyz");
    pose.translation = Vec3(v.at(0), v.at(1), v.at(2));
  }
  if (node.contains("rpy")) {
    auto v = node.at("rpy");
    pose.rotation = (Eigen::AngleAxisd(v.at(2).get<double>(), Vec3::UnitZ()) *
                     Eigen::AngleAxisd(v.at(1).get<double>(), Vec3::UnitY()) *
                     Eigen::AngleAxisd(v.at(0).get<double>(), Vec3::UnitX()))
                        .toRotationMatrix();
  }
  return pose;
}

}  // namespace

KinematicModel make_single_arm_model() {
  std::vector<JointSpec> joints;
  std::vector<FixedFrame> frames = common_frames();
  append_base(joints);
  append_arm(joints, frames, "r", -0.16);
  return KinematicModel("single_arm", std::move(joints), std::move(frames), {"r_gripper"},
                        "base_rot");
}

KinematicModel make_dual_arm_model() {
  std::vector<JointSpec> joints;
  std::vector<FixedFrame> frames = common_frames();
  append_base(joints);
  append_arm(joints, frames, "l", 0.16);
  append_arm(joints, frames, "r", -0.16);
  return KinematicModel("dual_arm", std::move(joints), std::move(frames),
                        {"l_gripper", "r_gripper"}, "base_rot");
}

KinematicModel stock_model(const std::string& name) {
  if (name == "single_arm") return make_single_arm_model();
  if (name == "dual_arm") return make_dual_arm_model();
  throw Error(ErrorKind::BadModel, "no stock model named '" + name + "'");
}

KinematicModel load_model_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::BadModel, "cannot open model file " + path);
  json doc = json::parse(f);

  std::vector<JointSpec> joints;
  for (const auto& node : doc.at("joints")) {
    JointSpec j;
    j.name = node.at("name").get<std::string>();
    j.kind = joint_kind_from_string(node.at("kind").get<std::string>());
    if (node.contains("axis")) {
      auto a = node.at("axis");
      j.axis = Vec3(a.at(0), a.at(1), a.at(2));
    }
    j.parent = node.at("parent").get<std::string>();
    j.origin = pose_from_json(node.at("origin"));
    j.lower = node.at("limits").at(0).get<double>();
    j.upper = node.at("limits").at(1).get<double>();
    j.velocity_limit = node.at("velocity_limit").get<double>();
    joints.push_back(std::move(j));
  }

  std::vector<FixedFrame> frames;
  if (doc.contains("frames")) {
    for (const auto& node : doc.at("frames")) {
      FixedFrame f2;
      f2.name = node.at("name").get<std::string>();
      f2.parent = node.at("parent").get<std::string>();
      f2.origin = pose_from_json(node.at("origin"));
      frames.push_back(std::move(f2));
    }
  }

  return KinematicModel(doc.at("name").get<std::string>(), std::move(joints), std::move(frames),
                        doc.at("gripper_frames").get<std::vector<std::string>>(),
                        doc.at("base_frame").get<std::string>());
}

void save_model_file(const KinematicModel& model, const std::string& path) {
  json doc;
  doc["name"] = model.name();
  doc["base_frame"] = model.base_frame();
  doc["gripper_frames"] = model.gripper_frames();
  doc["joints"] = json::array();
  for (const JointSpec& j : model.joints()) {
    json node;
    node["name"] = j.name;
    node["kind"] = to_string(j.kind);
    if (j.kind == JointKind::RevoluteArbitrary)
      node["axis"] = {j.axis.x(), j.axis.y(), j.axis.z()};
    node["parent"] = j.parent;
    node["origin"] = pose_to_json(j.origin);
    node["limits"] = {j.lower, j.upper};
    node["velocity_limit"] = j.velocity_limit;
    doc["joints"].push_back(node);
  }
  doc["frames"] = json::array();
  // Reconstruct fixed frames from the lookup table is not possible via the
  // public surface; models keep their frame list, so serialize from it.
  for (const auto& f : model.frame_list()) {
    json node;
    node["name"] = f.name;
    node["parent"] = f.parent;
    node["origin"] = pose_to_json(f.origin);
    doc["frames"].push_back(node);
  }

  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::BadModel, "cannot write model file " + path);
  out << doc.dump(2) << "\n";
}

std::string stock_model_dir() {
#ifdef MOBMAN_SOURCE_MODEL_DIR
  return MOBMAN_SOURCE_MODEL_DIR;
#else
  return "core/models";
#endif
}

}  // namespace mobman
