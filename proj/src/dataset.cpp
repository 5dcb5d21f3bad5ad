#include "graspgen/dataset.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace graspgen {

using nlohmann::json;

namespace {

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw std::runtime_error("dataset: expected 3-vector");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json grasp_json(const Grasp& g) {
  Quat quat(g.object_pose.rotation);
  if (quat.w() < 0.0) quat.coeffs() = -quat.coeffs();
  json pose = json::array({quat.w(), quat.x(), quat.y(), quat.z(),
                           g.object_pose.translation.x(),
                           g.object_pose.translation.y(),
                           g.object_pose.translation.z()});
  json q = json::array();
  for (int i = 0; i < g.q.size(); ++i) q.push_back(g.q[i]);
  json contacts = json::array();
  for (const auto& c : g.contacts) {
    contacts.push_back({{"p", vec3_json(c.position)},
                        {"n", vec3_json(c.normal)},
                        {"link", c.link}});
  }
  return {{"pose", pose},
          {"q", q},
          {"contacts", contacts},
          {"objective", g.objective},
          {"flags",
           {{"penetration_free", g.flags.penetration_free},
            {"stable", g.flags.stable},
            {"ik_converged", g.flags.ik_converged}}}};
}

}  // namespace

void write_dataset(const std::string& path, const GraspDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  for (const auto& g : dataset.grasps) {
    out << grasp_json(g).dump() << "\n";
  }
}

GraspDataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read dataset: " + path);
  GraspDataset ds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": " + e.what());
    }
    Grasp g;
    const json& pose = j.at("pose");
    if (!pose.is_array() || pose.size() != 7) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": pose must have 7 numbers");
    }
    Quat quat(pose[0].get<double>(), pose[1].get<double>(),
              pose[2].get<double>(), pose[3].get<double>());
    if (quat.norm() < 1e-9) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": zero quaternion");
    }
    quat.normalize();
    g.object_pose.rotation = quat.toRotationMatrix();
    g.object_pose.translation = Vec3(pose[4].get<double>(),
                                     pose[5].get<double>(),
                                     pose[6].get<double>());
    const json& q = j.at("q");
    g.q.resize(static_cast<long>(q.size()));
    for (std::size_t i = 0; i < q.size(); ++i) {
      g.q[static_cast<long>(i)] = q[i].get<double>();
    }
    for (const json& c : j.at("contacts")) {
      GraspContact gc;
      gc.position = vec3_from(c.at("p"));
      gc.normal = vec3_from(c.at("n"));
      gc.link = c.at("link").get<int>();
      g.contacts.push_back(gc);
    }
    g.objective = j.at("objective").get<double>();
    const json& f = j.at("flags");
    g.flags.penetration_free = f.at("penetration_free").get<bool>();
    g.flags.stable = f.at("stable").get<bool>();
    g.flags.ik_converged = f.at("ik_converged").get<bool>();
    ds.grasps.push_back(std::move(g));
  }
  return ds;
}

void write_profile(const std::string& path, const StageProfile& profile) {
  json j = {{"placement_domains", profile.placement_domains},
            {"contact_optimization", profile.contact_optimization},
            {"kinematics_optimization", profile.kinematics_optimization},
            {"postprocessing", profile.postprocessing},
            {"total", profile.total},
            {"candidates", profile.candidates},
            {"placements_accepted", profile.placements_accepted},
            {"contact_sets_balanced", profile.contact_sets_balanced},
            {"ik_finite", profile.ik_finite},
            {"penetration_free", profile.penetration_free},
            {"ik_converged", profile.ik_converged},
            {"stable", profile.stable},
            {"valid", profile.valid},
            {"grasps_per_second", profile.grasps_per_second}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write profile: " + path);
  out << j.dump(2) << "\n";
}

void write_load_report(const std::string& path, const LoadSummary& loads) {
  json j = {{"object",
             {{"triangles_read", loads.object.triangles_read},
              {"triangles_kept", loads.object.triangles_kept},
              {"degenerate_dropped", loads.object.degenerate_dropped}}},
            {"hand",
             {{"links", loads.hand_links},
              {"joints", loads.hand_joints},
              {"convex_parts", loads.hand_parts}}}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write load report: " + path);
  out << j.dump(2) << "\n";
}

void export_grasp_obj(const std::string& path, const HandModel& model,
                      const Grasp& grasp, const TriMesh& object) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write obj: " + path);
  auto frames = forward_kinematics(model, grasp.q);
  long base = 1;
  auto emit = [&](const std::string& name, const TriMesh& mesh,
                  const RigidTransform& pose) {
    if (mesh.vertices.empty()) return;
    out << "o " << name << "\n";
    for (const auto& v : mesh.vertices) {
      Vec3 w = pose.apply(v);
      out << "v " << w.x() << " " << w.y() << " " << w.z() << "\n";
    }
    for (const auto& t : mesh.triangles) {
      out << "f " << base + t[0] << " " << base + t[1] << " " << base + t[2]
          << "\n";
    }
    base += static_cast<long>(mesh.vertices.size());
  };
  for (std::size_t l = 0; l < model.links.size(); ++l) {
    emit(model.links[l].name, model.links[l].visual, frames[l]);
  }
  emit("object", object, grasp.object_pose);
}

}  // namespace graspgen
