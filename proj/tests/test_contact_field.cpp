#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "graspgen/contact_field.hpp"
#include "graspgen/rng.hpp"

using namespace graspgen;

namespace {

std::string asset(const std::string& rel) {
  return std::string(GRASPGEN_SOURCE_DIR) + "/assets/" + rel;
}

struct Fixture {
  HandModel model;
  std::vector<ContactPatch> patches;
  DependencyGroups groups;

  explicit Fixture(double patch_radius = 0.01, double density = 20.0) {
    model = load_hand(asset("hands/two_finger.urdf"));
    std::vector<std::vector<SurfaceSample>> per_link;
    for (const Link& l : model.links) {
      per_link.push_back(sample_surface(l.visual, density, 101 + per_link.size()));
    }
    patches = decompose_patches(model, per_link, patch_radius, 42);
    groups = dependency_groups(model);
  }
};

// Mirrors the index hit rule directly over the materialized vectors.
struct LinearHit {
  int patch;
  std::array<std::int64_t, 3> cell;
};

std::array<std::int64_t, 3> cell_of(const Vec3& p, double w) {
  return {static_cast<std::int64_t>(std::floor(p.x() / w)),
          static_cast<std::int64_t>(std::floor(p.y() / w)),
          static_cast<std::int64_t>(std::floor(p.z() / w))};
}

}  // namespace

TEST_CASE("patches cover every sample within the radius") {
  Fixture fx;
  std::set<int> links_seen;
  for (const ContactPatch& p : fx.patches) {
    REQUIRE(p.link >= 0);
    links_seen.insert(p.link);
    REQUIRE(p.points.size() == p.normals.size());
    REQUIRE_FALSE(p.points.empty());
    REQUIRE_FALSE(p.field_points.empty());
    REQUIRE(p.field_points.size() <= 8u);
    for (const Vec3& q : p.points) {
      // Radius/2 absorption keeps the diameter under the radius.
      REQUIRE((q - p.representative).norm() <= 0.01 * 0.5 + 1e-12);
    }
    for (int idx : p.field_points) {
      REQUIRE(idx >= 0);
      REQUIRE(idx < static_cast<int>(p.points.size()));
    }
  }
  REQUIRE(links_seen.size() == fx.model.links.size());

  // Patch ids are dense and match positions.
  for (std::size_t i = 0; i < fx.patches.size(); ++i) {
    REQUIRE(fx.patches[i].id == static_cast<int>(i));
  }
}

TEST_CASE("patch decomposition partitions the samples") {
  Fixture fx;
  // Count per link: total patch members equals total samples.
  std::vector<std::vector<SurfaceSample>> per_link;
  for (const Link& l : fx.model.links) {
    per_link.push_back(sample_surface(l.visual, 20.0, 101 + per_link.size()));
  }
  std::vector<std::size_t> counted(fx.model.links.size(), 0);
  for (const ContactPatch& p : fx.patches) {
    counted[p.link] += p.points.size();
  }
  for (std::size_t i = 0; i < per_link.size(); ++i) {
    REQUIRE(counted[i] == per_link[i].size());
  }
}

TEST_CASE("field sweep is deterministic and respects limits") {
  Fixture fx;
  Eigen::VectorXd qa = field_config(fx.model, 7, 3);
  Eigen::VectorXd qb = field_config(fx.model, 7, 3);
  REQUIRE(qa == qb);
  REQUIRE(qa.size() == fx.model.actuated_count);
  for (const Link& l : fx.model.links) {
    if (l.joint_index < 0) continue;
    REQUIRE(qa[l.joint_index] >= l.limit_lo);
    REQUIRE(qa[l.joint_index] <= l.limit_hi);
  }
  REQUIRE(field_config(fx.model, 7, 4) != qa);
  REQUIRE(field_config(fx.model, 8, 3) != qa);

  std::vector<ContactVector> va =
      sample_contact_field(fx.model, fx.patches, 5, 7);
  std::vector<ContactVector> vb =
      sample_contact_field(fx.model, fx.patches, 5, 7);
  REQUIRE(va.size() == vb.size());
  std::size_t per_config = 0;
  for (const ContactPatch& p : fx.patches) per_config += p.field_points.size();
  REQUIRE(va.size() == 5 * per_config);
  for (std::size_t i = 0; i < va.size(); ++i) {
    REQUIRE(va[i].position == vb[i].position);
    REQUIRE(va[i].normal == vb[i].normal);
    REQUIRE(va[i].patch == vb[i].patch);
    REQUIRE(va[i].normal.norm() == Approx(1.0).margin(1e-9));
  }

  // Vectors match FK applied to their recorded local source.
  for (int c = 0; c < 5; ++c) {
    auto frames = forward_kinematics(fx.model, field_config(fx.model, 7, c));
    for (const ContactVector& v : va) {
      if (v.config != c) continue;
      REQUIRE((frames[v.link].apply(v.local_point) - v.position).norm() <
              1e-12);
      REQUIRE((frames[v.link].rotate(v.local_normal) - v.normal).norm() <
              1e-12);
    }
  }
}

TEST_CASE("codebook directions are unit and well spread") {
  std::vector<Vec3> cb = make_codebook(256);
  REQUIRE(cb.size() == 256);
  for (const Vec3& d : cb) {
    REQUIRE(d.norm() == Approx(1.0).margin(1e-12));
  }
  // Worst-case quantization error for 256 points stays under 10 degrees.
  Rng rng(5);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    Vec3 n = rng.uniform_unit_vector();
    std::uint16_t code = quantize_normal(cb, n);
    REQUIRE(code < cb.size());
    worst = std::max(worst, std::acos(std::clamp(cb[code].dot(n), -1.0, 1.0)));
  }
  REQUIRE(worst < 10.0 * kPi / 180.0);

  // quantize picks the argmax alignment.
  for (int i = 0; i < 50; ++i) {
    Vec3 n = rng.uniform_unit_vector();
    std::uint16_t code = quantize_normal(cb, n);
    for (const Vec3& d : cb) {
      REQUIRE(d.dot(n) <= cb[code].dot(n) + 1e-12);
    }
  }
}

TEST_CASE("streaming build equals the materialized build") {
  Fixture fx;
  const int N = 16;
  const double w = 0.01;
  ContactFieldIndex streamed =
      ContactFieldIndex::build(fx.model, fx.patches, N, w, 7, 64);
  ContactFieldIndex materialized =
      build_index(sample_contact_field(fx.model, fx.patches, N, 7), w, 64);

  REQUIRE(streamed.patches.size() == materialized.patches.size());
  for (std::size_t i = 0; i < streamed.patches.size(); ++i) {
    const PatchIndex& a = streamed.patches[i];
    const PatchIndex& b = materialized.patches[i];
    REQUIRE(a.patch_id == b.patch_id);
    REQUIRE(a.link == b.link);
    REQUIRE(a.boxes.size() == b.boxes.size());
    for (std::size_t j = 0; j < a.boxes.size(); ++j) {
      REQUIRE(a.boxes[j].cell == b.boxes[j].cell);
      REQUIRE(a.boxes[j].codes == b.boxes[j].codes);
      REQUIRE(a.boxes[j].reps.size() == b.boxes[j].reps.size());
      for (std::size_t r = 0; r < a.boxes[j].reps.size(); ++r) {
        REQUIRE(a.boxes[j].reps[r].link == b.boxes[j].reps[r].link);
        REQUIRE(a.boxes[j].reps[r].point == b.boxes[j].reps[r].point);
        REQUIRE(a.boxes[j].reps[r].normal == b.boxes[j].reps[r].normal);
      }
    }
  }
}

TEST_CASE("index boxes are sorted with unique sorted codes") {
  Fixture fx;
  ContactFieldIndex index =
      ContactFieldIndex::build(fx.model, fx.patches, 24, 0.01, 7, 64);
  for (const PatchIndex& p : index.patches) {
    for (std::size_t j = 0; j + 1 < p.boxes.size(); ++j) {
      REQUIRE(p.boxes[j].cell < p.boxes[j + 1].cell);
    }
    for (const IndexBox& b : p.boxes) {
      REQUIRE_FALSE(b.codes.empty());
      REQUIRE(b.codes.size() == b.reps.size());
      REQUIRE(std::is_sorted(b.codes.begin(), b.codes.end()));
      REQUIRE(std::adjacent_find(b.codes.begin(), b.codes.end()) ==
              b.codes.end());
    }
    // Leaf bounds enclose their cells.
    for (const BvhNode& n : p.nodes) {
      if (n.leaf < 0) continue;
      const IndexBox& b = p.boxes[n.leaf];
      Vec3 lo(b.cell[0] * 0.01, b.cell[1] * 0.01, b.cell[2] * 0.01);
      REQUIRE(n.bounds.contains(lo));
      REQUIRE(n.bounds.contains(lo + Vec3(0.01, 0.01, 0.01)));
    }
  }
}

TEST_CASE("query agrees with a linear scan over the vectors") {
  Fixture fx;
  const double w = 0.01;
  const double theta = 0.9397;
  const int N = 24;
  std::vector<ContactVector> vectors =
      sample_contact_field(fx.model, fx.patches, N, 7);
  ContactFieldIndex index = build_index(vectors, w, 64);

  // Object samples scattered through the workspace.
  TriMesh ball = make_icosphere(0.03, 2);
  std::vector<SurfaceSample> samples = sample_surface(ball, 30.0, 11);
  RigidTransform pose;
  pose.translation = Vec3(0.0, 0.0, 0.09);

  std::vector<ContactDomain> domains =
      query_domains(index, samples, pose, theta, fx.model, fx.groups);
  REQUIRE(domains.size() == fx.groups.groups.size());

  // Element set per group from the linear scan. The index stores quantized
  // leaf normals, so the oracle scores each vector through its code too.
  std::vector<std::uint16_t> code_of(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    code_of[i] = quantize_normal(index.codebook, vectors[i].normal);
  }
  std::vector<std::set<std::pair<int, std::array<std::int64_t, 3>>>> expect(
      fx.groups.groups.size());
  for (const SurfaceSample& s : samples) {
    Vec3 p = pose.apply(s.position);
    Vec3 n = pose.rotate(s.normal);
    auto cell = cell_of(p, w);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      const ContactVector& v = vectors[i];
      if (cell_of(v.position, w) != cell) continue;
      if (-n.dot(index.codebook[code_of[i]]) < theta) continue;
      int g = fx.groups.group_of(fx.patches[v.patch].link);
      if (g < 0) continue;
      expect[g].insert({v.patch, cell});
    }
  }

  for (std::size_t g = 0; g < domains.size(); ++g) {
    std::set<std::pair<int, std::array<std::int64_t, 3>>> got;
    for (const DomainElement& el : domains[g].elements) {
      REQUIRE(el.hit_patches.size() == el.hit_boxes.size());
      REQUIRE_FALSE(el.hit_patches.empty());
      REQUIRE(el.score >= theta);
      for (std::size_t h = 0; h < el.hit_patches.size(); ++h) {
        const PatchIndex& pi = index.patches[el.hit_patches[h]];
        got.insert({pi.patch_id, pi.boxes[el.hit_boxes[h]].cell});
      }
    }
    CAPTURE(g);
    REQUIRE(got == expect[g]);
  }
}

TEST_CASE("static link patches never reach a domain") {
  Fixture fx;
  ContactFieldIndex index =
      ContactFieldIndex::build(fx.model, fx.patches, 24, 0.01, 7, 64);
  // Press an object straight onto the palm so its patches light up.
  TriMesh ball = make_icosphere(0.02, 2);
  std::vector<SurfaceSample> samples = sample_surface(ball, 40.0, 3);
  RigidTransform pose;
  pose.translation = Vec3(0.0, 0.0, 0.03);
  std::vector<ContactDomain> domains =
      query_domains(index, samples, pose, 0.9397, fx.model, fx.groups);
  for (const ContactDomain& d : domains) {
    for (const DomainElement& el : d.elements) {
      for (int pidx : el.hit_patches) {
        int link = index.patches[pidx].link;
        REQUIRE(fx.groups.group_of(link) >= 0);
        REQUIRE(fx.groups.group_of(link) == d.group);
      }
    }
  }
}

TEST_CASE("reverse lookup returns an aligned representative from a hit leaf") {
  Fixture fx;
  ContactFieldIndex index =
      ContactFieldIndex::build(fx.model, fx.patches, 24, 0.01, 7, 256);
  TriMesh ball = make_icosphere(0.03, 2);
  std::vector<SurfaceSample> samples = sample_surface(ball, 30.0, 11);
  RigidTransform pose;
  pose.translation = Vec3(0.0, 0.0, 0.09);
  std::vector<ContactDomain> domains =
      query_domains(index, samples, pose, 0.9397, fx.model, fx.groups);

  int tested = 0;
  for (const ContactDomain& d : domains) {
    for (const DomainElement& el : d.elements) {
      for (std::uint64_t seed = 0; seed < 4; ++seed) {
        IndexRep rep = reverse_lookup(index, el, seed);
        REQUIRE(rep.link >= 0);
        REQUIRE(rep.normal.norm() == Approx(1.0).margin(1e-9));
        // The rep must come from one of the element's hit leaves.
        bool found = false;
        for (std::size_t h = 0; h < el.hit_patches.size(); ++h) {
          const IndexBox& box =
              index.patches[el.hit_patches[h]].boxes[el.hit_boxes[h]];
          for (const IndexRep& r : box.reps) {
            if (r.link == rep.link && r.point == rep.point &&
                r.normal == rep.normal) {
              found = true;
            }
          }
        }
        REQUIRE(found);
        ++tested;
      }
      if (tested > 200) break;
    }
  }
  REQUIRE(tested > 0);

  // Same seed, same answer.
  const DomainElement& el = [&]() -> const DomainElement& {
    for (const ContactDomain& d : domains) {
      if (!d.elements.empty()) return d.elements.front();
    }
    throw std::runtime_error("no element");
  }();
  IndexRep a = reverse_lookup(index, el, 99);
  IndexRep b = reverse_lookup(index, el, 99);
  REQUIRE(a.link == b.link);
  REQUIRE(a.point == b.point);
}

TEST_CASE("save and load round trip the index") {
  Fixture fx;
  ContactFieldIndex index =
      ContactFieldIndex::build(fx.model, fx.patches, 16, 0.01, 7, 64);
  index.cache_key = 0xabcdef12345678ull;

  std::string path =
      (std::filesystem::temp_directory_path() / "graspgen_field_cache.bin")
          .string();
  index.save(path);

  auto loaded = ContactFieldIndex::load(path, 0xabcdef12345678ull);
  REQUIRE(loaded.has_value());
  REQUIRE(loaded->box_width == index.box_width);
  REQUIRE(loaded->codebook.size() == index.codebook.size());
  REQUIRE(loaded->patches.size() == index.patches.size());
  REQUIRE(loaded->total_memory_bytes() == index.total_memory_bytes());
  for (std::size_t i = 0; i < index.patches.size(); ++i) {
    REQUIRE(loaded->patches[i].boxes.size() == index.patches[i].boxes.size());
    REQUIRE(loaded->patches[i].nodes.size() == index.patches[i].nodes.size());
  }

  // Key mismatch and truncation both fail the load.
  REQUIRE_FALSE(ContactFieldIndex::load(path, 1).has_value());
  REQUIRE_FALSE(ContactFieldIndex::load(path + ".missing", 1).has_value());

  std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
  REQUIRE_FALSE(
      ContactFieldIndex::load(path, 0xabcdef12345678ull).has_value());
}

TEST_CASE("queries identical between streamed and loaded index") {
  Fixture fx;
  ContactFieldIndex index =
      ContactFieldIndex::build(fx.model, fx.patches, 16, 0.01, 7, 64);
  std::string path =
      (std::filesystem::temp_directory_path() / "graspgen_field_cache2.bin")
          .string();
  index.save(path);
  auto loaded = ContactFieldIndex::load(path, index.cache_key);
  REQUIRE(loaded.has_value());

  TriMesh ball = make_icosphere(0.03, 1);
  std::vector<SurfaceSample> samples = sample_surface(ball, 20.0, 13);
  RigidTransform pose;
  pose.translation = Vec3(0.01, 0.0, 0.08);
  auto da = query_domains(index, samples, pose, 0.9397, fx.model, fx.groups);
  auto db = query_domains(*loaded, samples, pose, 0.9397, fx.model, fx.groups);
  REQUIRE(da.size() == db.size());
  for (std::size_t g = 0; g < da.size(); ++g) {
    REQUIRE(da[g].elements.size() == db[g].elements.size());
    for (std::size_t e = 0; e < da[g].elements.size(); ++e) {
      REQUIRE(da[g].elements[e].position == db[g].elements[e].position);
      REQUIRE(da[g].elements[e].hit_patches == db[g].elements[e].hit_patches);
      REQUIRE(da[g].elements[e].score == db[g].elements[e].score);
    }
  }
}

TEST_CASE("per patch memory stays modest on the small hand") {
  Fixture fx;
  ContactFieldIndex index =
      ContactFieldIndex::build(fx.model, fx.patches, 64, 0.01, 7, 256);
  for (const PatchIndex& p : index.patches) {
    REQUIRE(p.memory_bytes() <= 12ull * 1024 * 1024);
  }
  std::size_t sum = 0;
  for (const PatchIndex& p : index.patches) sum += p.memory_bytes();
  REQUIRE(index.total_memory_bytes() >= sum);
}
