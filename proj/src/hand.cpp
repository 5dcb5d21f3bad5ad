#include "graspgen/hand.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

namespace graspgen {

namespace pt = boost::property_tree;

int HandModel::link_index(const std::string& name) const {
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (links[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

Eigen::VectorXd HandModel::mid_config() const {
  Eigen::VectorXd q(actuated_count);
  for (const auto& link : links) {
    if (link.joint_index >= 0) {
      q[link.joint_index] = 0.5 * (link.limit_lo + link.limit_hi);
    }
  }
  return q;
}

Eigen::VectorXd HandModel::clamp_to_limits(const Eigen::VectorXd& q) const {
  Eigen::VectorXd out = q;
  for (const auto& link : links) {
    if (link.joint_index >= 0) {
      out[link.joint_index] =
          std::clamp(out[link.joint_index], link.limit_lo, link.limit_hi);
    }
  }
  return out;
}

std::vector<std::string> HandModel::joint_names() const {
  std::vector<std::string> names(actuated_count);
  for (const auto& link : links) {
    if (link.joint_index >= 0) names[link.joint_index] = link.joint_name;
  }
  return names;
}

namespace {

Vec3 parse_vec3(const std::string& text, const char* what) {
  std::istringstream ss(text);
  Vec3 v;
  ss >> v.x() >> v.y() >> v.z();
  if (ss.fail()) {
    throw std::runtime_error(std::string("bad ") + what + ": " + text);
  }
  return v;
}

// URDF rpy: extrinsic x-y-z, composed as Rz(yaw) Ry(pitch) Rx(roll).
RigidTransform parse_origin(const pt::ptree& node) {
  RigidTransform t;
  if (auto origin = node.get_child_optional("origin")) {
    std::string xyz = origin->get<std::string>("<xmlattr>.xyz", "0 0 0");
    std::string rpy = origin->get<std::string>("<xmlattr>.rpy", "0 0 0");
    t.translation = parse_vec3(xyz, "origin xyz");
    Vec3 r = parse_vec3(rpy, "origin rpy");
    t.rotation = (Eigen::AngleAxisd(r.z(), Vec3::UnitZ()) *
                  Eigen::AngleAxisd(r.y(), Vec3::UnitY()) *
                  Eigen::AngleAxisd(r.x(), Vec3::UnitX()))
                     .toRotationMatrix();
  }
  return t;
}

std::string dirname_of(const std::string& path) {
  auto slash = path.find_last_of('/');
  return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

TriMesh parse_geometry(const pt::ptree& geom, const std::string& base_dir) {
  if (auto mesh = geom.get_child_optional("mesh")) {
    std::string file = mesh->get<std::string>("<xmlattr>.filename");
    TriMesh m = load_mesh(base_dir + "/" + file);
    std::string scale = mesh->get<std::string>("<xmlattr>.scale", "1 1 1");
    Vec3 s = parse_vec3(scale, "mesh scale");
    if (s != Vec3::Ones()) {
      for (auto& v : m.vertices) v = v.cwiseProduct(s);
    }
    return m;
  }
  if (auto box = geom.get_child_optional("box")) {
    Vec3 size = parse_vec3(box->get<std::string>("<xmlattr>.size"), "box size");
    return make_box(size);
  }
  if (auto sphere = geom.get_child_optional("sphere")) {
    double r = sphere->get<double>("<xmlattr>.radius");
    return make_icosphere(r, 2);
  }
  if (auto cyl = geom.get_child_optional("cylinder")) {
    double r = cyl->get<double>("<xmlattr>.radius");
    double l = cyl->get<double>("<xmlattr>.length");
    return make_cylinder(r, l);
  }
  throw std::runtime_error("unsupported geometry element in hand file");
}

void append_mesh(TriMesh& dst, const TriMesh& src) {
  int base = static_cast<int>(dst.vertices.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(),
                      src.vertices.end());
  for (const auto& t : src.triangles) {
    dst.triangles.push_back(t + Eigen::Vector3i::Constant(base));
  }
}

}  // namespace

HandModel load_hand(const std::string& path, double scale) {
  pt::ptree tree;
  try {
    pt::read_xml(path, tree);
  } catch (const std::exception& e) {
    throw std::runtime_error("cannot parse hand file " + path + ": " +
                             e.what());
  }
  auto robot = tree.get_child_optional("robot");
  if (!robot) throw std::runtime_error("hand file has no <robot> element");

  HandModel model;
  model.source_dir = dirname_of(path);

  for (const auto& [key, node] : *robot) {
    if (key != "link") continue;
    Link link;
    link.name = node.get<std::string>("<xmlattr>.name");
    if (model.link_index(link.name) >= 0) {
      throw std::runtime_error("duplicate link name: " + link.name);
    }
    for (const auto& [child_key, child] : node) {
      if (child_key != "visual") continue;
      RigidTransform visual_origin = parse_origin(child);
      TriMesh m = parse_geometry(child.get_child("geometry"), model.source_dir);
      append_mesh(link.visual, transform_mesh(m, visual_origin));
    }
    model.links.push_back(std::move(link));
  }
  if (model.links.empty()) throw std::runtime_error("hand file has no links");

  int joint_count = 0;
  for (const auto& [key, node] : *robot) {
    if (key != "joint") continue;
    std::string type = node.get<std::string>("<xmlattr>.type");
    std::string name = node.get<std::string>("<xmlattr>.name");
    int parent = model.link_index(node.get<std::string>("parent.<xmlattr>.link"));
    int child = model.link_index(node.get<std::string>("child.<xmlattr>.link"));
    if (parent < 0 || child < 0) {
      throw std::runtime_error("joint " + name + " references unknown link");
    }
    Link& cl = model.links[child];
    if (cl.parent >= 0) {
      throw std::runtime_error("link " + cl.name + " has two parent joints");
    }
    cl.parent = parent;
    cl.joint_name = name;
    cl.origin = parse_origin(node);
    if (type == "fixed") {
      cl.joint = JointType::kFixed;
    } else if (type == "revolute" || type == "prismatic") {
      cl.joint =
          type == "revolute" ? JointType::kRevolute : JointType::kPrismatic;
      std::string axis = node.get<std::string>("axis.<xmlattr>.xyz", "1 0 0");
      cl.axis = parse_vec3(axis, "joint axis");
      double len = cl.axis.norm();
      if (len < 1e-9) throw std::runtime_error("joint " + name + ": zero axis");
      cl.axis /= len;
      auto limit = node.get_child_optional("limit");
      if (!limit) {
        throw std::runtime_error("joint " + name + " has no limit element");
      }
      cl.limit_lo = limit->get<double>("<xmlattr>.lower");
      cl.limit_hi = limit->get<double>("<xmlattr>.upper");
      if (cl.limit_lo > cl.limit_hi) {
        throw std::runtime_error("joint " + name + ": lower limit above upper");
      }
      cl.joint_index = joint_count++;
    } else {
      throw std::runtime_error("unsupported joint type '" + type + "' on " +
                               name);
    }
  }
  model.actuated_count = joint_count;

  // Tree validation: exactly one root, no cycles, everything reachable.
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    if (model.links[i].parent < 0) {
      if (model.root >= 0) {
        throw std::runtime_error("hand file has multiple root links");
      }
      model.root = static_cast<int>(i);
    }
  }
  if (model.root < 0) {
    throw std::runtime_error("hand file has no root link (cycle)");
  }
  std::vector<std::vector<int>> children(model.links.size());
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    if (model.links[i].parent >= 0) {
      children[model.links[i].parent].push_back(static_cast<int>(i));
    }
  }
  model.topo_order.reserve(model.links.size());
  std::vector<int> stack = {model.root};
  while (!stack.empty()) {
    int l = stack.back();
    stack.pop_back();
    model.topo_order.push_back(l);
    for (auto it = children[l].rbegin(); it != children[l].rend(); ++it) {
      stack.push_back(*it);
    }
  }
  if (model.topo_order.size() != model.links.size()) {
    throw std::runtime_error("hand kinematic graph is not a tree");
  }

  // Collision parts: sidecar manifest wins, else hull the visual.
  std::string stem = path;
  if (auto dot = stem.rfind('.'); dot != std::string::npos) {
    stem = stem.substr(0, dot);
  }
  std::ifstream manifest(stem + ".parts.json");
  if (manifest) {
    nlohmann::json doc;
    manifest >> doc;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      int l = model.link_index(it.key());
      if (l < 0) {
        throw std::runtime_error("parts manifest references unknown link " +
                                 it.key());
      }
      for (const auto& file : it.value()) {
        TriMesh m = load_mesh(model.source_dir + "/" +
                              file.get<std::string>());
        model.links[l].parts.push_back(convex_hull(m));
      }
    }
  } else {
    for (auto& link : model.links) {
      if (link.visual.vertices.size() >= 4) {
        link.parts.push_back(convex_hull(link.visual));
      }
    }
  }

  if (scale != 1.0) {
    if (scale <= 0.0) throw std::runtime_error("hand scale must be positive");
    for (auto& link : model.links) {
      link.origin.translation *= scale;
      link.visual = scale_mesh(link.visual, scale);
      for (auto& part : link.parts) part = scale_part(part, scale);
      if (link.joint == JointType::kPrismatic) {
        link.limit_lo *= scale;
        link.limit_hi *= scale;
      }
    }
  }
  return model;
}

std::vector<RigidTransform> forward_kinematics(const HandModel& model,
                                               const Eigen::VectorXd& q) {
  if (q.size() != model.actuated_count) {
    throw std::invalid_argument("forward_kinematics: config dimension mismatch");
  }
  std::vector<RigidTransform> frames(model.links.size());
  for (int l : model.topo_order) {
    const Link& link = model.links[l];
    RigidTransform local = link.origin;
    if (link.joint == JointType::kRevolute) {
      local = local * RigidTransform{
                          Eigen::AngleAxisd(q[link.joint_index], link.axis)
                              .toRotationMatrix(),
                          Vec3::Zero()};
    } else if (link.joint == JointType::kPrismatic) {
      local.translation += local.rotation * (q[link.joint_index] * link.axis);
    }
    frames[l] = link.parent < 0 ? local : frames[link.parent] * local;
  }
  return frames;
}

namespace {

// Fills one Jacobian column pair (linear at `point`, angular) for each
// actuated joint on the root -> link path.
template <typename LinearFn, typename AngularFn>
void walk_chain(const HandModel& model,
                const std::vector<RigidTransform>& frames, int link,
                LinearFn&& linear, AngularFn&& angular) {
  for (int l = link; l >= 0; l = model.links[l].parent) {
    const Link& lk = model.links[l];
    if (lk.joint_index < 0) continue;
    // The joint axis is invariant under its own motion, so the link frame
    // rotation maps it to the base frame.
    Vec3 axis = frames[l].rotation * lk.axis;
    Vec3 joint_origin = frames[l].translation;
    if (lk.joint == JointType::kRevolute) {
      linear(lk.joint_index, axis, joint_origin, true);
      angular(lk.joint_index, axis, true);
    } else {
      linear(lk.joint_index, axis, joint_origin, false);
      angular(lk.joint_index, axis, false);
    }
  }
}

}  // namespace

Eigen::MatrixXd geometric_jacobian(const HandModel& model,
                                   const std::vector<RigidTransform>& frames,
                                   int link) {
  if (link < 0 || link >= static_cast<int>(model.links.size())) {
    throw std::invalid_argument("geometric_jacobian: invalid link");
  }
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(6, model.actuated_count);
  Vec3 origin = frames[link].translation;
  walk_chain(
      model, frames, link,
      [&](int col, const Vec3& axis, const Vec3& o, bool revolute) {
        J.block<3, 1>(0, col) = revolute ? Vec3(axis.cross(origin - o)) : axis;
      },
      [&](int col, const Vec3& axis, bool revolute) {
        if (revolute) J.block<3, 1>(3, col) = axis;
      });
  return J;
}

Eigen::MatrixXd point_jacobian(const HandModel& model,
                               const std::vector<RigidTransform>& frames,
                               int link, const Vec3& local_point) {
  if (link < 0 || link >= static_cast<int>(model.links.size())) {
    throw std::invalid_argument("point_jacobian: invalid link");
  }
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, model.actuated_count);
  Vec3 point = frames[link].apply(local_point);
  walk_chain(
      model, frames, link,
      [&](int col, const Vec3& axis, const Vec3& o, bool revolute) {
        J.col(col) = revolute ? Vec3(axis.cross(point - o)) : axis;
      },
      [](int, const Vec3&, bool) {});
  return J;
}

Eigen::MatrixXd point_jacobian(const HandModel& model, const Eigen::VectorXd& q,
                               int link, const Vec3& local_point) {
  return point_jacobian(model, forward_kinematics(model, q), link, local_point);
}

int DependencyGroups::group_of(int link) const {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (std::binary_search(groups[g].begin(), groups[g].end(), link)) {
      return static_cast<int>(g);
    }
  }
  return -1;
}

DependencyGroups dependency_groups(const HandModel& model) {
  int n = static_cast<int>(model.links.size());
  // Static = reachable from root through fixed joints only.
  std::vector<bool> is_static(n, false);
  for (int l : model.topo_order) {
    const Link& link = model.links[l];
    if (link.parent < 0) {
      is_static[l] = true;
    } else if (is_static[link.parent] && link.joint == JointType::kFixed) {
      is_static[l] = true;
    }
  }

  DependencyGroups out;
  std::vector<int> group_of(n, -1);
  std::map<int, std::vector<int>> by_seed;  // keyed by smallest member
  for (int l : model.topo_order) {
    if (is_static[l]) {
      out.static_links.push_back(l);
      continue;
    }
    int parent = model.links[l].parent;
    if (parent >= 0 && !is_static[parent]) {
      group_of[l] = group_of[parent];
    } else {
      group_of[l] = l;  // new component seeded here
    }
    by_seed[group_of[l]].push_back(l);
  }
  for (auto& [seed, members] : by_seed) {
    std::sort(members.begin(), members.end());
    out.groups.push_back(std::move(members));
  }
  std::sort(out.groups.begin(), out.groups.end(),
            [](const auto& a, const auto& b) { return a[0] < b[0]; });
  std::sort(out.static_links.begin(), out.static_links.end());
  return out;
}

}  // namespace graspgen
