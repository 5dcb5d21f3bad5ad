#include "graspgen/contact_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "graspgen/rng.hpp"

namespace graspgen {

namespace {

constexpr std::uint64_t kTagPatch = 0x70617463;   // patch seeding
constexpr std::uint64_t kTagSubset = 0x73756273;  // field point subsets
constexpr std::uint64_t kTagConfig = 0x636f6e66;  // joint config streams

// Guard band on BVH node bounds so closed-interval containment never prunes
// a cell whose floor owns the query point; the leaf cell test stays exact.
constexpr double kBoundsEps = 1e-9;

}  // namespace

std::vector<ContactPatch> decompose_patches(
    const HandModel& model,
    const std::vector<std::vector<SurfaceSample>>& samples_per_link,
    double patch_radius, std::uint64_t seed, int field_cap) {
  if (samples_per_link.size() != model.links.size()) {
    throw std::invalid_argument("decompose_patches: per-link sample mismatch");
  }
  if (patch_radius <= 0.0 || field_cap < 1) {
    throw std::invalid_argument("decompose_patches: bad radius or cap");
  }
  std::size_t total = 0;
  for (const auto& s : samples_per_link) total += s.size();
  if (total == 0) {
    throw std::invalid_argument("decompose_patches: no surface samples");
  }

  const double gather_radius = 0.5 * patch_radius;  // diameter bound
  std::vector<ContactPatch> patches;
  for (std::size_t link = 0; link < samples_per_link.size(); ++link) {
    const auto& samples = samples_per_link[link];
    if (samples.empty()) continue;
    Rng rng(mix_seed(seed, kTagPatch, link));
    std::vector<int> uncovered(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      uncovered[i] = static_cast<int>(i);
    }
    while (!uncovered.empty()) {
      std::size_t pick = rng.uniform_index(uncovered.size());
      int seed_id = uncovered[pick];
      const Vec3 center = samples[seed_id].position;

      ContactPatch patch;
      patch.id = static_cast<int>(patches.size());
      patch.link = static_cast<int>(link);
      patch.representative = center;
      patch.representative_normal = samples[seed_id].normal;

      std::vector<int> rest;
      rest.reserve(uncovered.size());
      patch.points.push_back(center);
      patch.normals.push_back(samples[seed_id].normal);
      for (int id : uncovered) {
        if (id == seed_id) continue;
        if ((samples[id].position - center).norm() <= gather_radius) {
          patch.points.push_back(samples[id].position);
          patch.normals.push_back(samples[id].normal);
        } else {
          rest.push_back(id);
        }
      }
      uncovered = std::move(rest);

      int m = static_cast<int>(patch.points.size());
      if (m <= field_cap) {
        patch.field_points.resize(m);
        for (int i = 0; i < m; ++i) patch.field_points[i] = i;
      } else {
        // Seed member always participates; the rest is a random subset.
        Rng sub(mix_seed(seed, kTagSubset, patch.id));
        std::vector<int> pool(m - 1);
        for (int i = 1; i < m; ++i) pool[i - 1] = i;
        patch.field_points.push_back(0);
        for (int i = 0; i < field_cap - 1; ++i) {
          std::size_t j = i + sub.uniform_index(pool.size() - i);
          std::swap(pool[i], pool[j]);
          patch.field_points.push_back(pool[i]);
        }
        std::sort(patch.field_points.begin(), patch.field_points.end());
      }
      patches.push_back(std::move(patch));
    }
  }
  return patches;
}

Eigen::VectorXd field_config(const HandModel& model, std::uint64_t seed,
                             int c) {
  Rng rng(mix_seed(seed, kTagConfig, static_cast<std::uint64_t>(c)));
  Eigen::VectorXd q(model.actuated_count);
  std::vector<std::pair<int, const Link*>> actuated;
  for (const auto& link : model.links) {
    if (link.joint_index >= 0) actuated.emplace_back(link.joint_index, &link);
  }
  std::sort(actuated.begin(), actuated.end());
  for (const auto& [j, link] : actuated) {
    q[j] = rng.uniform(link->limit_lo, link->limit_hi);
  }
  return q;
}

std::vector<ContactVector> sample_contact_field(
    const HandModel& model, const std::vector<ContactPatch>& patches, int N,
    std::uint64_t seed) {
  if (N < 1) throw std::invalid_argument("sample_contact_field: N must be >= 1");
  std::vector<ContactVector> out;
  std::size_t per_config = 0;
  for (const auto& p : patches) per_config += p.field_points.size();
  out.reserve(per_config * static_cast<std::size_t>(N));
  for (int c = 0; c < N; ++c) {
    auto frames = forward_kinematics(model, field_config(model, seed, c));
    for (const auto& patch : patches) {
      const RigidTransform& f = frames[patch.link];
      for (int fp : patch.field_points) {
        ContactVector v;
        v.local_point = patch.points[fp];
        v.local_normal = patch.normals[fp];
        v.position = f.apply(v.local_point);
        v.normal = f.rotate(v.local_normal);
        v.patch = patch.id;
        v.config = c;
        v.link = patch.link;
        out.push_back(v);
      }
    }
  }
  return out;
}

std::vector<Vec3> make_codebook(int size) {
  if (size < 1 || size > 65536) {
    throw std::invalid_argument("make_codebook: size out of range");
  }
  // Fibonacci sphere: near-even spacing, ~7 degree cones at 256 entries.
  std::vector<Vec3> dirs(size);
  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < size; ++i) {
    double z = 1.0 - 2.0 * (i + 0.5) / size;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double a = golden_angle * i;
    dirs[i] = Vec3(r * std::cos(a), r * std::sin(a), z);
  }
  return dirs;
}

std::uint16_t quantize_normal(const std::vector<Vec3>& codebook,
                              const Vec3& n) {
  int best = 0;
  double best_dot = -2.0;
  for (int i = 0; i < static_cast<int>(codebook.size()); ++i) {
    double d = codebook[i].dot(n);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return static_cast<std::uint16_t>(best);
}

namespace {

std::array<std::int64_t, 3> cell_of(const Vec3& p, double w) {
  return {static_cast<std::int64_t>(std::floor(p.x() / w)),
          static_cast<std::int64_t>(std::floor(p.y() / w)),
          static_cast<std::int64_t>(std::floor(p.z() / w))};
}

Aabb cell_bounds(const std::array<std::int64_t, 3>& cell, double w) {
  Aabb box;
  box.min = Vec3(cell[0] * w, cell[1] * w, cell[2] * w);
  box.max = Vec3((cell[0] + 1) * w, (cell[1] + 1) * w, (cell[2] + 1) * w);
  return box;
}

// Top-down median-split BVH over (bounds, id) items; returns root index.
std::int32_t build_bvh(std::vector<BvhNode>& nodes,
                       std::vector<std::pair<Aabb, std::int32_t>>& items,
                       int lo, int hi) {
  if (hi - lo == 1) {
    BvhNode leaf;
    leaf.bounds = items[lo].first;
    leaf.leaf = items[lo].second;
    nodes.push_back(leaf);
    return static_cast<std::int32_t>(nodes.size() - 1);
  }
  Aabb centroid_bounds;
  for (int i = lo; i < hi; ++i) {
    centroid_bounds.expand(items[i].first.center());
  }
  Vec3 ext = centroid_bounds.extents();
  int axis = 0;
  if (ext.y() > ext.x()) axis = 1;
  if (ext.z() > ext[axis]) axis = 2;
  std::sort(items.begin() + lo, items.begin() + hi,
            [axis](const auto& a, const auto& b) {
              double ca = a.first.center()[axis];
              double cb = b.first.center()[axis];
              return ca != cb ? ca < cb : a.second < b.second;
            });
  int mid = lo + (hi - lo) / 2;
  std::int32_t left = build_bvh(nodes, items, lo, mid);
  std::int32_t right = build_bvh(nodes, items, mid, hi);
  BvhNode node;
  node.bounds = nodes[left].bounds;
  node.bounds.expand(nodes[right].bounds);
  node.left = left;
  node.right = right;
  nodes.push_back(node);
  return static_cast<std::int32_t>(nodes.size() - 1);
}

using BoxAcc = std::map<std::array<std::int64_t, 3>,
                        std::map<std::uint16_t, IndexRep>>;

struct PatchAcc {
  int link = -1;
  BoxAcc boxes;
};

ContactFieldIndex finalize_index(std::map<int, PatchAcc>&& acc, double w,
                                 const std::vector<Vec3>& codebook) {
  ContactFieldIndex index;
  index.box_width = w;
  index.codebook = codebook;
  index.patches.reserve(acc.size());
  for (auto& [patch_id, pa] : acc) {
    PatchIndex pi;
    pi.patch_id = patch_id;
    pi.link = pa.link;
    pi.boxes.reserve(pa.boxes.size());
    for (auto& [cell, codes] : pa.boxes) {
      IndexBox box;
      box.cell = cell;
      box.codes.reserve(codes.size());
      box.reps.reserve(codes.size());
      for (auto& [code, rep] : codes) {
        box.codes.push_back(code);
        box.reps.push_back(rep);
      }
      pi.boxes.push_back(std::move(box));
    }
    std::vector<std::pair<Aabb, std::int32_t>> items;
    items.reserve(pi.boxes.size());
    for (std::size_t b = 0; b < pi.boxes.size(); ++b) {
      items.emplace_back(cell_bounds(pi.boxes[b].cell, w).inflated(kBoundsEps),
                         static_cast<std::int32_t>(b));
    }
    pi.root = build_bvh(pi.nodes, items, 0, static_cast<int>(items.size()));
    index.patches.push_back(std::move(pi));
  }

  if (!index.patches.empty()) {
    std::vector<std::pair<Aabb, std::int32_t>> tops;
    tops.reserve(index.patches.size());
    for (std::size_t p = 0; p < index.patches.size(); ++p) {
      tops.emplace_back(index.patches[p].bounds(),
                        static_cast<std::int32_t>(p));
    }
    index.top_root =
        build_bvh(index.top_nodes, tops, 0, static_cast<int>(tops.size()));
  }
  return index;
}

void insert_vector(std::map<int, PatchAcc>& acc,
                   const std::vector<Vec3>& codebook, double w,
                   const ContactVector& v) {
  auto& pa = acc[v.patch];
  if (pa.link < 0) pa.link = v.link;
  std::uint16_t code = quantize_normal(codebook, v.normal);
  // First representative per (box, code) wins; later duplicates are dropped.
  pa.boxes[cell_of(v.position, w)].emplace(
      code, IndexRep{v.link, v.local_point, v.local_normal});
}

}  // namespace

ContactFieldIndex build_index(const std::vector<ContactVector>& vectors,
                              double box_width, int codebook_size) {
  if (vectors.empty()) {
    throw std::invalid_argument("build_index: no contact vectors");
  }
  if (box_width <= 0.0) {
    throw std::invalid_argument("build_index: box width must be > 0");
  }
  auto codebook = make_codebook(codebook_size);
  std::map<int, PatchAcc> acc;
  for (const auto& v : vectors) insert_vector(acc, codebook, box_width, v);
  return finalize_index(std::move(acc), box_width, codebook);
}

ContactFieldIndex ContactFieldIndex::build(
    const HandModel& model, const std::vector<ContactPatch>& patches, int N,
    double box_width, std::uint64_t seed, int codebook_size) {
  if (patches.empty()) {
    throw std::invalid_argument("index build: no patches");
  }
  if (box_width <= 0.0 || N < 1) {
    throw std::invalid_argument("index build: bad box width or N");
  }
  auto codebook = make_codebook(codebook_size);
  std::map<int, PatchAcc> acc;
  for (int c = 0; c < N; ++c) {
    auto frames = forward_kinematics(model, field_config(model, seed, c));
    for (const auto& patch : patches) {
      const RigidTransform& f = frames[patch.link];
      for (int fp : patch.field_points) {
        ContactVector v;
        v.local_point = patch.points[fp];
        v.local_normal = patch.normals[fp];
        v.position = f.apply(v.local_point);
        v.normal = f.rotate(v.local_normal);
        v.patch = patch.id;
        v.link = patch.link;
        insert_vector(acc, codebook, box_width, v);
      }
    }
  }
  return finalize_index(std::move(acc), box_width, codebook);
}

std::size_t PatchIndex::memory_bytes() const {
  std::size_t bytes = sizeof(PatchIndex);
  bytes += boxes.size() * sizeof(IndexBox);
  for (const auto& b : boxes) {
    bytes += b.codes.size() * sizeof(std::uint16_t);
    bytes += b.reps.size() * sizeof(IndexRep);
  }
  bytes += nodes.size() * sizeof(BvhNode);
  return bytes;
}

std::size_t ContactFieldIndex::total_memory_bytes() const {
  std::size_t bytes = sizeof(ContactFieldIndex);
  bytes += codebook.size() * sizeof(Vec3);
  bytes += top_nodes.size() * sizeof(BvhNode);
  for (const auto& p : patches) bytes += p.memory_bytes();
  return bytes;
}

namespace {

// Collects leaves of `nodes` whose (closed) bounds contain p and whose cell
// equals the query cell exactly.
template <typename Visit>
void traverse(const std::vector<BvhNode>& nodes, std::int32_t root,
              const Vec3& p, Visit&& visit) {
  if (root < 0) return;
  std::int32_t stack[64];
  int top = 0;
  stack[top++] = root;
  while (top > 0) {
    const BvhNode& node = nodes[stack[--top]];
    if (!node.bounds.contains(p)) continue;
    if (node.leaf >= 0) {
      visit(node.leaf);
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
}

}  // namespace

std::vector<ContactDomain> query_domains(
    const ContactFieldIndex& index, const std::vector<SurfaceSample>& samples,
    const RigidTransform& object_pose, double theta_hit,
    const HandModel& model, const DependencyGroups& groups) {
  std::vector<ContactDomain> domains(groups.groups.size());
  for (std::size_t g = 0; g < domains.size(); ++g) {
    domains[g].group = static_cast<int>(g);
  }
  if (index.patches.empty()) return domains;

  // Patch link -> group, resolved once.
  std::vector<int> patch_group(index.patches.size(), -1);
  for (std::size_t p = 0; p < index.patches.size(); ++p) {
    int link = index.patches[p].link;
    if (link < 0 || link >= static_cast<int>(model.links.size())) {
      throw std::invalid_argument("query_domains: index link out of range");
    }
    patch_group[p] = groups.group_of(link);
  }

  struct Hit {
    int patch_index;
    int box;
    double score;
  };
  std::vector<Hit> hits;
  for (const auto& sample : samples) {
    Vec3 p = object_pose.apply(sample.position);
    Vec3 n = object_pose.rotate(sample.normal);
    auto cell = cell_of(p, index.box_width);

    hits.clear();
    traverse(index.top_nodes, index.top_root, p, [&](std::int32_t pi) {
      const PatchIndex& patch = index.patches[pi];
      traverse(patch.nodes, patch.root, p, [&](std::int32_t bi) {
        const IndexBox& box = patch.boxes[bi];
        if (box.cell != cell) return;
        double best = -2.0;
        for (std::uint16_t code : box.codes) {
          best = std::max(best, -index.codebook[code].dot(n));
        }
        if (best >= theta_hit) {
          hits.push_back({static_cast<int>(pi), bi, best});
        }
      });
    });
    if (hits.empty()) continue;

    // Route hits into their groups' domains; hit order follows patch order.
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
      return a.patch_index != b.patch_index ? a.patch_index < b.patch_index
                                            : a.box < b.box;
    });
    for (std::size_t g = 0; g < domains.size(); ++g) {
      DomainElement el;
      for (const Hit& h : hits) {
        if (patch_group[h.patch_index] != static_cast<int>(g)) continue;
        el.hit_patches.push_back(index.patches[h.patch_index].patch_id);
        el.hit_boxes.push_back(h.box);
        el.score = std::max(el.score, h.score);
      }
      if (el.hit_patches.empty()) continue;
      el.position = p;
      el.normal = n;
      domains[g].elements.push_back(std::move(el));
    }
  }
  return domains;
}

IndexRep reverse_lookup(const ContactFieldIndex& index,
                        const DomainElement& element,
                        std::uint64_t choice_seed) {
  if (element.hit_patches.empty() ||
      element.hit_patches.size() != element.hit_boxes.size()) {
    throw std::out_of_range("reverse_lookup: element has no hits");
  }
  Rng rng(choice_seed);
  std::size_t pick = rng.uniform_index(element.hit_patches.size());
  int patch_id = element.hit_patches[pick];
  int box_id = element.hit_boxes[pick];

  const PatchIndex* patch = nullptr;
  for (const auto& p : index.patches) {
    if (p.patch_id == patch_id) {
      patch = &p;
      break;
    }
  }
  if (!patch || box_id < 0 ||
      box_id >= static_cast<int>(patch->boxes.size())) {
    throw std::out_of_range("reverse_lookup: stale element");
  }
  const IndexBox& box = patch->boxes[box_id];
  int best = -1;
  double best_dot = -2.0;
  for (std::size_t i = 0; i < box.codes.size(); ++i) {
    double d = -index.codebook[box.codes[i]].dot(element.normal);
    if (d > best_dot) {
      best_dot = d;
      best = static_cast<int>(i);
    }
  }
  return box.reps[best];
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("hash_file: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buffer[4096];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    h = fnv1a(buffer, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

namespace {

constexpr std::uint32_t kMagic = 0x47474346;  // "GGCF"
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool get(std::ifstream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return static_cast<bool>(in);
}

void put_vec3(std::ofstream& out, const Vec3& v) {
  put(out, v.x());
  put(out, v.y());
  put(out, v.z());
}

bool get_vec3(std::ifstream& in, Vec3& v) {
  return get(in, v.x()) && get(in, v.y()) && get(in, v.z());
}

void put_aabb(std::ofstream& out, const Aabb& b) {
  put_vec3(out, b.min);
  put_vec3(out, b.max);
}

bool get_aabb(std::ifstream& in, Aabb& b) {
  return get_vec3(in, b.min) && get_vec3(in, b.max);
}

void put_nodes(std::ofstream& out, const std::vector<BvhNode>& nodes,
               std::int32_t root) {
  put(out, static_cast<std::uint64_t>(nodes.size()));
  for (const auto& n : nodes) {
    put_aabb(out, n.bounds);
    put(out, n.left);
    put(out, n.right);
    put(out, n.leaf);
  }
  put(out, root);
}

bool get_nodes(std::ifstream& in, std::vector<BvhNode>& nodes,
               std::int32_t& root) {
  std::uint64_t count = 0;
  if (!get(in, count)) return false;
  nodes.resize(count);
  for (auto& n : nodes) {
    if (!get_aabb(in, n.bounds) || !get(in, n.left) || !get(in, n.right) ||
        !get(in, n.leaf)) {
      return false;
    }
  }
  return get(in, root);
}

}  // namespace

void ContactFieldIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write index file: " + path);
  put(out, kMagic);
  put(out, kVersion);
  put(out, cache_key);
  put(out, box_width);
  put(out, static_cast<std::uint32_t>(codebook.size()));
  for (const auto& d : codebook) put_vec3(out, d);
  put(out, static_cast<std::uint64_t>(patches.size()));
  for (const auto& p : patches) {
    put(out, static_cast<std::int32_t>(p.patch_id));
    put(out, static_cast<std::int32_t>(p.link));
    put(out, static_cast<std::uint64_t>(p.boxes.size()));
    for (const auto& b : p.boxes) {
      put(out, b.cell[0]);
      put(out, b.cell[1]);
      put(out, b.cell[2]);
      put(out, static_cast<std::uint32_t>(b.codes.size()));
      for (std::size_t i = 0; i < b.codes.size(); ++i) {
        put(out, b.codes[i]);
        put(out, static_cast<std::int32_t>(b.reps[i].link));
        put_vec3(out, b.reps[i].point);
        put_vec3(out, b.reps[i].normal);
      }
    }
    put_nodes(out, p.nodes, p.root);
  }
  put_nodes(out, top_nodes, top_root);
  if (!out) throw std::runtime_error("short write on index file: " + path);
}

std::optional<ContactFieldIndex> ContactFieldIndex::load(
    const std::string& path, std::uint64_t expected_key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::uint32_t magic = 0, version = 0;
  ContactFieldIndex index;
  if (!get(in, magic) || magic != kMagic) return std::nullopt;
  if (!get(in, version) || version != kVersion) return std::nullopt;
  if (!get(in, index.cache_key) || index.cache_key != expected_key) {
    return std::nullopt;
  }
  std::uint32_t cb = 0;
  if (!get(in, index.box_width) || !get(in, cb) || cb == 0 || cb > 65536) {
    return std::nullopt;
  }
  index.codebook.resize(cb);
  for (auto& d : index.codebook) {
    if (!get_vec3(in, d)) return std::nullopt;
  }
  std::uint64_t patch_count = 0;
  if (!get(in, patch_count)) return std::nullopt;
  index.patches.resize(patch_count);
  for (auto& p : index.patches) {
    std::int32_t patch_id = 0, link = 0;
    std::uint64_t box_count = 0;
    if (!get(in, patch_id) || !get(in, link) || !get(in, box_count)) {
      return std::nullopt;
    }
    p.patch_id = patch_id;
    p.link = link;
    p.boxes.resize(box_count);
    for (auto& b : p.boxes) {
      std::uint32_t code_count = 0;
      if (!get(in, b.cell[0]) || !get(in, b.cell[1]) || !get(in, b.cell[2]) ||
          !get(in, code_count)) {
        return std::nullopt;
      }
      b.codes.resize(code_count);
      b.reps.resize(code_count);
      for (std::size_t i = 0; i < code_count; ++i) {
        std::int32_t rep_link = 0;
        if (!get(in, b.codes[i]) || !get(in, rep_link) ||
            !get_vec3(in, b.reps[i].point) || !get_vec3(in, b.reps[i].normal)) {
          return std::nullopt;
        }
        if (b.codes[i] >= cb) return std::nullopt;
        b.reps[i].link = rep_link;
      }
    }
    if (!get_nodes(in, p.nodes, p.root)) return std::nullopt;
  }
  if (!get_nodes(in, index.top_nodes, index.top_root)) return std::nullopt;
  return index;
}

}  // namespace graspgen
