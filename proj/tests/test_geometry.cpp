#include <catch2/catch.hpp>

#include <cmath>
#include <set>

#include "graspgen/geometry.hpp"
#include "graspgen/rng.hpp"

using namespace graspgen;

TEST_CASE("skew matrix reproduces the cross product") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    Vec3 a = rng.normal_vec3();
    Vec3 b = rng.normal_vec3();
    REQUIRE((skew(a) * b - a.cross(b)).norm() == Approx(0.0).margin(1e-14));
  }
}

TEST_CASE("rigid transform inverse and composition") {
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    RigidTransform t = RigidTransform::from_quat(rng.uniform_quaternion(),
                                                 rng.normal_vec3());
    RigidTransform u = RigidTransform::from_quat(rng.uniform_quaternion(),
                                                 rng.normal_vec3());
    Vec3 p = rng.normal_vec3();
    REQUIRE((t.inverse().apply(t.apply(p)) - p).norm() < 1e-12);
    REQUIRE(((t * u).apply(p) - t.apply(u.apply(p))).norm() < 1e-12);
    REQUIRE(t.orthonormal_error() < 1e-12);
  }
}

TEST_CASE("require_rigid rejects a sheared matrix") {
  RigidTransform t = RigidTransform::identity();
  REQUIRE_NOTHROW(require_rigid(t));
  t.rotation(0, 1) = 0.01;
  REQUIRE_THROWS(require_rigid(t));
}

TEST_CASE("tangent basis is a right-handed orthonormal frame") {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    Vec3 n = rng.uniform_unit_vector();
    Vec3 x, y;
    tangent_basis(n, x, y);
    REQUIRE(x.norm() == Approx(1.0).epsilon(1e-12));
    REQUIRE(y.norm() == Approx(1.0).epsilon(1e-12));
    REQUIRE(std::abs(x.dot(n)) < 1e-12);
    REQUIRE(std::abs(y.dot(n)) < 1e-12);
    REQUIRE(std::abs(x.dot(y)) < 1e-12);
    REQUIRE((x.cross(y) - n).norm() < 1e-12);
  }
  Vec3 x, y;
  REQUIRE_THROWS(tangent_basis(Vec3::Zero(), x, y));
}

TEST_CASE("rotation_between maps from onto to, antiparallel included") {
  Rng rng(14);
  for (int i = 0; i < 200; ++i) {
    Vec3 a = rng.uniform_unit_vector();
    Vec3 b = rng.uniform_unit_vector();
    Mat3 r = rotation_between(a, b);
    REQUIRE((r * a - b).norm() < 1e-9);
    REQUIRE((r * r.transpose() - Mat3::Identity()).norm() < 1e-9);
    REQUIRE(r.determinant() == Approx(1.0).epsilon(1e-9));
  }
  Vec3 a(0.0, 0.0, 1.0);
  Mat3 r = rotation_between(a, Vec3(0.0, 0.0, -1.0));
  REQUIRE((r * a + a).norm() < 1e-12);
  REQUIRE(r.determinant() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("aabb expand, contains, overlaps use closed intervals") {
  Aabb box;
  REQUIRE(box.empty());
  box.expand(Vec3(0, 0, 0));
  box.expand(Vec3(1, 2, 3));
  REQUIRE_FALSE(box.empty());
  REQUIRE(box.contains(Vec3(1, 2, 3)));  // boundary inclusive
  REQUIRE(box.contains(Vec3(0.5, 1.0, 1.5)));
  REQUIRE_FALSE(box.contains(Vec3(1.0 + 1e-12, 2, 3)));

  Aabb other;
  other.expand(Vec3(1, 2, 3));
  other.expand(Vec3(2, 3, 4));
  REQUIRE(box.overlaps(other));  // shared corner counts
  Aabb far_box;
  far_box.expand(Vec3(5, 5, 5));
  REQUIRE_FALSE(box.overlaps(far_box));

  Aabb grown = box.inflated(0.5);
  REQUIRE(grown.contains(Vec3(-0.5, -0.5, -0.5)));
  REQUIRE((grown.extents() - (box.extents() + Vec3(1, 1, 1))).norm() < 1e-12);
}

TEST_CASE("uniform doubles stay in range and fill all deciles") {
  Rng rng(15);
  std::set<int> deciles;
  for (int i = 0; i < 20000; ++i) {
    double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    deciles.insert(static_cast<int>(u * 10.0));
  }
  REQUIRE(deciles.size() == 10);
}

TEST_CASE("normal samples have the right first two moments") {
  Rng rng(16);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    sum += x;
    sum_sq += x * x;
  }
  double mean = sum / n;
  double var = sum_sq / n - mean * mean;
  REQUIRE(std::abs(mean) < 0.01);
  REQUIRE(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("unit vectors are unbiased across octants") {
  Rng rng(17);
  int counts[8] = {0};
  const int n = 80000;
  for (int i = 0; i < n; ++i) {
    Vec3 v = rng.uniform_unit_vector();
    REQUIRE(v.norm() == Approx(1.0).epsilon(1e-12));
    int idx = (v.x() > 0 ? 1 : 0) | (v.y() > 0 ? 2 : 0) | (v.z() > 0 ? 4 : 0);
    counts[idx]++;
  }
  for (int c : counts) {
    REQUIRE(std::abs(c - n / 8.0) < 5.0 * std::sqrt(n / 8.0));
  }
}

TEST_CASE("mix_seed decorrelates nearby stream ids") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s) {
    for (std::uint64_t a = 0; a < 8; ++a) {
      for (std::uint64_t b = 0; b < 8; ++b) {
        seen.insert(mix_seed(s, a, b));
      }
    }
  }
  REQUIRE(seen.size() == 4 * 8 * 8);  // no collisions across the grid
  REQUIRE(mix_seed(1, 2, 3) == mix_seed(1, 2, 3));
}

TEST_CASE("quaternion samples cover rotation space evenly") {
  Rng rng(18);
  // Rotate a fixed vector; the image should fill octants evenly.
  int counts[8] = {0};
  const int n = 80000;
  for (int i = 0; i < n; ++i) {
    Quat q = rng.uniform_quaternion();
    REQUIRE(q.norm() == Approx(1.0).epsilon(1e-9));
    Vec3 v = q * Vec3(1.0, 0.0, 0.0);
    int idx = (v.x() > 0 ? 1 : 0) | (v.y() > 0 ? 2 : 0) | (v.z() > 0 ? 4 : 0);
    counts[idx]++;
  }
  for (int c : counts) {
    REQUIRE(std::abs(c - n / 8.0) < 5.0 * std::sqrt(n / 8.0));
  }
}
