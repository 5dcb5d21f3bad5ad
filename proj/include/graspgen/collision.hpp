// Two-phase collision checking: AABB broad phase over posed convex parts,
// GJK distance for link-link tests, and half-plane penetration depth for the
// point-sampled object.
#pragma once

#include <optional>
#include <vector>

#include "graspgen/convex.hpp"
#include "graspgen/hand.hpp"
#include "graspgen/mesh.hpp"

namespace graspgen {

struct PosedPart {
  const ConvexPart* part = nullptr;
  RigidTransform pose;
  int link = -1;
};

struct CandidatePair {
  int a = -1;
  int b = -1;  // index into the part list; -1 stands for the object
};

Aabb world_bounds(const ConvexPart& part, const RigidTransform& pose);

// All pairs (part-part and part-object) whose margin-inflated world AABBs
// overlap. Superset of truly colliding pairs.
std::vector<CandidatePair> broad_phase(const std::vector<PosedPart>& parts,
                                       const std::optional<Aabb>& object_bounds,
                                       double margin);

// Euclidean distance between two posed hulls; 0 when they intersect. Failure
// to converge within 128 iterations reports 0 (conservative).
double gjk_distance(const ConvexPart& a, const RigidTransform& pose_a,
                    const ConvexPart& b, const RigidTransform& pose_b);

struct PenetrationResult {
  double max_depth = 0.0;      // over offending samples; 0 when none
  std::vector<int> offending;  // sample ids with depth > margin
};

// Half-plane depth of each sample against the hull: a sample inside every
// face plane penetrates by the smallest face slack. Samples at depth <= margin
// are ignored.
PenetrationResult object_penetration(const std::vector<SurfaceSample>& samples,
                                     const ConvexPart& part,
                                     const RigidTransform& pose, double margin);

struct CollisionViolation {
  int link_a = -1;
  int link_b = -1;    // -1 stands for the object
  double depth = 0.0; // 0 for hand-hand intersections
};

struct CollisionReport {
  std::vector<CollisionViolation> violations;
  double max_penetration = 0.0;  // deepest hand-object depth seen
  std::size_t broad_pairs = 0;
  std::size_t narrow_gjk = 0;
  std::size_t narrow_halfplane = 0;

  bool clean() const { return violations.empty(); }
};

// Full grasp check: broad phase over all link parts plus the object samples,
// GJK on link-link candidates (parent-child links exempt), half-plane depth
// on link-object candidates. Hand-hand intersections always violate;
// hand-object violates above the margin (default 2 mm).
CollisionReport validate_grasp_collisions(
    const HandModel& model, const Eigen::VectorXd& q,
    const std::vector<SurfaceSample>& object_samples,
    const RigidTransform& object_pose, double margin = 0.002);

}  // namespace graspgen
