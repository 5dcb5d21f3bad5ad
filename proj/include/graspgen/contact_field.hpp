// Contact field: hand surface patches, sampled contact vectors over random
// joint configurations, and the per-patch BVH index used to intersect the
// field with an object's surface samples. Queries return contact domains
// grouped by kinematic dependency group; reverse lookup maps a domain element
// back to a link-local hand point.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graspgen/hand.hpp"
#include "graspgen/mesh.hpp"

namespace graspgen {

struct ContactPatch {
  int id = -1;
  int link = -1;
  // Link-local member samples; patches partition a link's sample set.
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  Vec3 representative;         // the seed sample
  Vec3 representative_normal;
  // Capped subset of member indices actually swept into the field.
  std::vector<int> field_points;
};

// Random greedy cover of each link's surface samples: repeatedly seed a patch
// at a random uncovered sample and absorb every uncovered sample within
// patch_radius / 2 of it, so patch diameter stays below patch_radius.
// field_cap bounds how many members per patch feed the sampled field (the
// seed is always included). Deterministic per seed.
std::vector<ContactPatch> decompose_patches(
    const HandModel& model,
    const std::vector<std::vector<SurfaceSample>>& samples_per_link,
    double patch_radius, std::uint64_t seed, int field_cap = 8);

struct ContactVector {
  Vec3 position;  // hand base frame
  Vec3 normal;    // unit outward, hand base frame
  int patch = -1;
  int config = -1;
  // Source reference for reverse lookup.
  int link = -1;
  Vec3 local_point;
  Vec3 local_normal;
};

// Uniform joint config for stream `c` of the field sweep; q_j drawn in
// ascending joint order. Shared by the materialized and streaming builds.
Eigen::VectorXd field_config(const HandModel& model, std::uint64_t seed,
                             int c);

// Materializes the swept field: for each of N uniform configs, transforms
// every patch's field points into the base frame. Vector order is config-
// major, then patch, then field point.
std::vector<ContactVector> sample_contact_field(
    const HandModel& model, const std::vector<ContactPatch>& patches, int N,
    std::uint64_t seed);

// Unit direction table used to compress leaf normals to 16-bit codes.
std::vector<Vec3> make_codebook(int size = 256);
std::uint16_t quantize_normal(const std::vector<Vec3>& codebook,
                              const Vec3& n);

struct IndexRep {
  int link = -1;
  Vec3 point;   // link-local
  Vec3 normal;  // link-local outward
};

struct IndexBox {
  std::array<std::int64_t, 3> cell;  // floor(position / width) per axis
  std::vector<std::uint16_t> codes;  // sorted, unique
  std::vector<IndexRep> reps;        // parallel to codes; first seen wins
};

struct BvhNode {
  Aabb bounds;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t leaf = -1;  // box index for leaves, else -1
};

struct PatchIndex {
  int patch_id = -1;
  int link = -1;
  std::vector<IndexBox> boxes;  // sorted by cell
  std::vector<BvhNode> nodes;
  std::int32_t root = -1;

  Aabb bounds() const { return root < 0 ? Aabb{} : nodes[root].bounds; }
  std::size_t memory_bytes() const;
};

struct DomainElement {
  Vec3 position;  // object sample, hand base frame
  Vec3 normal;    // object outward normal, hand base frame
  std::vector<int> hit_patches;  // parallel with hit_boxes
  std::vector<int> hit_boxes;
  double score = 0.0;  // best -x.n over all hit leaf codes
};

struct ContactDomain {
  int group = -1;
  std::vector<DomainElement> elements;
};

class ContactFieldIndex {
 public:
  double box_width = 0.0;
  std::vector<Vec3> codebook;
  std::vector<PatchIndex> patches;
  // Pruning tree over patch root bounds; leaf = patch array index.
  std::vector<BvhNode> top_nodes;
  std::int32_t top_root = -1;
  std::uint64_t cache_key = 0;

  // Streaming build: sweeps N configs without materializing the vector list.
  // Produces exactly the same index as build_index over
  // sample_contact_field(model, patches, N, seed).
  static ContactFieldIndex build(const HandModel& model,
                                 const std::vector<ContactPatch>& patches,
                                 int N, double box_width, std::uint64_t seed,
                                 int codebook_size = 256);

  std::size_t total_memory_bytes() const;

  void save(const std::string& path) const;
  // Returns nullopt when the file is missing, malformed, from another format
  // version, or keyed differently.
  static std::optional<ContactFieldIndex> load(const std::string& path,
                                               std::uint64_t expected_key);
};

// Grid-binning build over materialized vectors.
ContactFieldIndex build_index(const std::vector<ContactVector>& vectors,
                              double box_width, int codebook_size = 256);

// Intersects transformed object samples with the field. Returns one domain
// per dependency group (possibly empty). A sample hitting patches from
// several groups contributes a separate element to each group's domain,
// carrying only that group's hits.
std::vector<ContactDomain> query_domains(
    const ContactFieldIndex& index, const std::vector<SurfaceSample>& samples,
    const RigidTransform& object_pose, double theta_hit,
    const HandModel& model, const DependencyGroups& groups);

// Picks one of the element's hit leaves uniformly and returns the
// representative behind that leaf's best-aligned code.
IndexRep reverse_lookup(const ContactFieldIndex& index,
                        const DomainElement& element,
                        std::uint64_t choice_seed);

std::uint64_t fnv1a(const void* data, std::size_t size,
                    std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t hash_file(const std::string& path);

}  // namespace graspgen
