// Articulated hand model: URDF-subset loading, forward kinematics, geometric
// and point Jacobians, and dependency-group extraction.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "graspgen/convex.hpp"
#include "graspgen/geometry.hpp"
#include "graspgen/mesh.hpp"

namespace graspgen {

enum class JointType { kFixed, kRevolute, kPrismatic };

struct Link {
  std::string name;
  int parent = -1;  // -1 for the root link
  // Transform from the parent link frame to this link's pre-motion frame.
  RigidTransform origin;
  JointType joint = JointType::kFixed;
  std::string joint_name;
  Vec3 axis = Vec3::UnitX();  // in this link's frame
  double limit_lo = 0.0;
  double limit_hi = 0.0;
  int joint_index = -1;  // position in q for actuated joints, else -1
  TriMesh visual;        // link-local, visual origins already applied
  std::vector<ConvexPart> parts;  // link-local collision geometry
};

struct HandModel {
  std::vector<Link> links;
  int root = -1;
  int actuated_count = 0;
  std::vector<int> topo_order;  // parents before children
  std::string source_dir;

  int link_index(const std::string& name) const;  // -1 when absent
  Eigen::VectorXd mid_config() const;
  Eigen::VectorXd clamp_to_limits(const Eigen::VectorXd& q) const;
  std::vector<std::string> joint_names() const;
};

// Parses the supported URDF subset: revolute/prismatic/fixed joints with
// origins, axes, and limits; link visuals as mesh/box/sphere/cylinder.
// Convex collision parts come from a sidecar manifest "<stem>.parts.json"
// (link name -> list of OBJ files) when present, otherwise each link gets the
// hull of its visual mesh. `scale` uniformly scales all geometry and origins.
HandModel load_hand(const std::string& path, double scale = 1.0);

// Base-frame transform per link. q holds one value per actuated joint.
std::vector<RigidTransform> forward_kinematics(const HandModel& model,
                                               const Eigen::VectorXd& q);

// 6 x dof matrix; rows 0..2 map joint velocities to the link-origin linear
// velocity, rows 3..5 to the angular velocity, both in the base frame.
Eigen::MatrixXd geometric_jacobian(const HandModel& model,
                                   const std::vector<RigidTransform>& frames,
                                   int link);

// 3 x dof matrix for a point given in the link's local frame.
Eigen::MatrixXd point_jacobian(const HandModel& model,
                               const std::vector<RigidTransform>& frames,
                               int link, const Vec3& local_point);

Eigen::MatrixXd point_jacobian(const HandModel& model, const Eigen::VectorXd& q,
                               int link, const Vec3& local_point);

struct DependencyGroups {
  // Connected components of the kinematic tree once static links are
  // removed; each sorted ascending, groups ordered by smallest link id.
  std::vector<std::vector<int>> groups;
  std::vector<int> static_links;  // reachable from root via fixed joints only

  int group_of(int link) const;  // -1 for static links
};

DependencyGroups dependency_groups(const HandModel& model);

}  // namespace graspgen
