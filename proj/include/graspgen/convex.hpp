// Convex hull construction and convex part queries (containment, closest
// surface point, support). Parts are the collision geometry for hand links
// and objects.
#pragma once

#include <vector>

#include "graspgen/geometry.hpp"
#include "graspgen/mesh.hpp"

namespace graspgen {

struct FacePlane {
  Vec3 normal;   // unit outward
  double offset; // plane is {p : normal . p == offset}
};

// Convex polytope stored as hull vertices, hull triangles, and the distinct
// outward face planes. All queries are in the part's local frame.
struct ConvexPart {
  std::vector<Vec3> vertices;
  std::vector<Eigen::Vector3i> triangles;
  std::vector<FacePlane> planes;
  Aabb bounds;

  bool contains(const Vec3& p, double tol = 0.0) const;

  // Signed distance sense used for penetration: for an interior point returns
  // the (positive) depth to the nearest face, for an exterior point this is
  // not meaningful; call closest_surface_point instead.
  double interior_depth(const Vec3& p) const;

  // Closest point on the hull surface to p (interior points map to the
  // nearest face), plus the outward normal of the supporting feature.
  Vec3 closest_surface_point(const Vec3& p, Vec3* normal = nullptr) const;

  Vec3 support(const Vec3& dir) const;
};

// Incremental 3D quickhull over the input points. Throws if the points are
// degenerate (fewer than 4 affinely independent points).
ConvexPart convex_hull(const std::vector<Vec3>& points);

inline ConvexPart convex_hull(const TriMesh& mesh) {
  return convex_hull(mesh.vertices);
}

ConvexPart transform_part(const ConvexPart& part, const RigidTransform& t);
ConvexPart scale_part(const ConvexPart& part, double scale);

TriMesh part_to_mesh(const ConvexPart& part);

// Closest point on triangle abc to p (Ericson).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c);

}  // namespace graspgen
