#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graspgen/collision.hpp"
#include "graspgen/config.hpp"
#include "graspgen/contact_field.hpp"
#include "graspgen/contact_opt.hpp"
#include "graspgen/geometry.hpp"
#include "graspgen/hand.hpp"
#include "graspgen/ik.hpp"
#include "graspgen/mesh.hpp"

namespace graspgen {

struct GraspContact {
  Vec3 position = Vec3::Zero();  // world frame, on the hand surface
  Vec3 normal = Vec3::Zero();    // force direction into the object
  int link = -1;
};

struct GraspFlags {
  bool penetration_free = false;
  bool stable = false;
  bool ik_converged = false;
  bool all() const { return penetration_free && stable && ik_converged; }
};

struct Grasp {
  RigidTransform object_pose;  // object frame -> hand base frame
  Eigen::VectorXd q;
  std::vector<GraspContact> contacts;
  double objective = 0.0;
  GraspFlags flags;
};

struct GraspDataset {
  std::vector<Grasp> grasps;
};

struct StageProfile {
  double placement_domains = 0.0;
  double contact_optimization = 0.0;
  double kinematics_optimization = 0.0;
  double postprocessing = 0.0;
  double total = 0.0;
  long candidates = 0;
  // Funnel counts, in pipeline order. Deterministic for a fixed seed.
  long placements_accepted = 0;
  long contact_sets_balanced = 0;
  long ik_finite = 0;
  long penetration_free = 0;
  long ik_converged = 0;
  long stable = 0;
  long valid = 0;
  double grasps_per_second = 0.0;
};

struct LoadSummary {
  LoadReport object;
  long hand_links = 0;
  long hand_joints = 0;
  long hand_parts = 0;
};

// Strips samples whose local neighborhood looks like a thin slot the fingers
// cannot enter: the probe cube of half width h centered d*n inside the
// surface must not contain opposing surface (normal dot < 0) samples.
std::vector<SurfaceSample> preprocess_object(
    const std::vector<SurfaceSample>& samples, double probe_half_width,
    double depth_threshold);

struct PlacementSpec {
  PlacementMode mode = PlacementMode::kCanonical;
  Vec3 canonical_center = Vec3(0.0, 0.0, 0.06);
  Vec3 canonical_half_extents = Vec3(0.04, 0.04, 0.04);
  double static_contact_prob = 0.3;
  double penetration_margin = 0.002;
};

// Precomputed geometry of links that never move relative to the base.
struct StaticSurface {
  std::vector<SurfaceSample> samples;  // base frame
  std::vector<int> sample_links;
  std::vector<PosedPart> parts;
};

struct PlacementRecord {
  RigidTransform pose;  // object frame -> hand base frame
  std::vector<StaticContact> static_contacts;
  std::vector<int> static_links;  // parallel to static_contacts
  bool accepted = false;
  double penetration = 0.0;  // depth that caused rejection
};

StaticSurface collect_static_surface(const HandModel& model,
                                     const std::vector<ContactPatch>& patches,
                                     const DependencyGroups& groups);

PlacementRecord place_object(const PlacementSpec& spec, const HandModel& model,
                             const std::vector<ContactPatch>& patches,
                             const std::vector<SurfaceSample>& object_samples,
                             const StaticSurface& statics, std::uint64_t seed);

struct RealizeResult {
  Eigen::VectorXd q;
  std::vector<bool> used_joints;
  std::vector<GraspContact> realized;  // reprojected onto the hand surface
  std::vector<double> position_residuals;
  double max_position_residual = 0.0;
  bool finite = true;
};

// Phase one solves the assembled contact targets from q0; phase two
// alternately reprojects targets onto the current link surfaces and
// re-solves, reverting any round that increases the worst residual.
RealizeResult realize_grasp(const HandModel& model, const Eigen::VectorXd& q0,
                            const std::vector<ContactTarget>& targets,
                            const IkParams& params, int finetune_rounds,
                            int finetune_iterations);

struct IndexStats {
  std::size_t patches = 0;
  std::size_t boxes = 0;
  std::size_t memory_bytes = 0;
  bool from_cache = false;
};

// Hand model, surface patches, and the swept-field index, built (or loaded
// from the on-disk cache when config.cache is set) from the run config.
struct FieldBuild {
  HandModel model;
  std::vector<ContactPatch> patches;
  ContactFieldIndex index;
  bool from_cache = false;
};

FieldBuild build_field(const RunConfig& config);

struct RunResult {
  GraspDataset dataset;
  StageProfile profile;
  LoadSummary loads;
  IndexStats index;
};

RunResult run_batch(const RunConfig& config);

// Closest point on any of the link's convex parts, in link-local frame.
// Returns the distance; fills surface point and outward normal.
double closest_on_parts(const std::vector<ConvexPart>& parts, const Vec3& p,
                        Vec3* surface_point, Vec3* surface_normal);

}  // namespace graspgen
