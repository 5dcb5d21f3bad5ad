#include "graspgen/collision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace graspgen {

Aabb world_bounds(const ConvexPart& part, const RigidTransform& pose) {
  Aabb out;
  const Aabb& b = part.bounds;
  for (int i = 0; i < 8; ++i) {
    Vec3 corner((i & 1) ? b.max.x() : b.min.x(),
                (i & 2) ? b.max.y() : b.min.y(),
                (i & 4) ? b.max.z() : b.min.z());
    out.expand(pose.apply(corner));
  }
  return out;
}

std::vector<CandidatePair> broad_phase(const std::vector<PosedPart>& parts,
                                       const std::optional<Aabb>& object_bounds,
                                       double margin) {
  if (margin < 0.0) {
    throw std::invalid_argument("broad_phase: negative margin");
  }
  std::vector<Aabb> boxes;
  boxes.reserve(parts.size());
  for (const auto& p : parts) {
    boxes.push_back(world_bounds(*p.part, p.pose).inflated(margin));
  }
  std::vector<CandidatePair> out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (std::size_t j = i + 1; j < parts.size(); ++j) {
      if (boxes[i].overlaps(boxes[j])) {
        out.push_back({static_cast<int>(i), static_cast<int>(j)});
      }
    }
    if (object_bounds && boxes[i].overlaps(object_bounds->inflated(margin))) {
      out.push_back({static_cast<int>(i), -1});
    }
  }
  return out;
}

namespace {

// Closest point to the origin on a simplex of up to 4 points, reducing the
// simplex to the supporting feature. Returns true when a tetrahedron
// contains the origin.
bool simplex_closest(Vec3* s, int& n, Vec3& closest) {
  auto keep = [&](std::initializer_list<int> ids) {
    Vec3 tmp[4];
    int m = 0;
    for (int id : ids) tmp[m++] = s[id];
    for (int i = 0; i < m; ++i) s[i] = tmp[i];
    n = m;
  };

  if (n == 1) {
    closest = s[0];
    return false;
  }

  if (n == 2) {
    Vec3 ab = s[1] - s[0];
    double t = -s[0].dot(ab);
    double len2 = ab.squaredNorm();
    if (t <= 0.0 || len2 < 1e-30) {
      keep({0});
      closest = s[0];
    } else if (t >= len2) {
      keep({1});
      closest = s[1];
    } else {
      closest = s[0] + (t / len2) * ab;
    }
    return false;
  }

  if (n == 3) {
    // Ericson's triangle regions with p = origin.
    Vec3 a = s[0], b = s[1], c = s[2];
    Vec3 ab = b - a, ac = c - a;
    double d1 = -ab.dot(a), d2 = -ac.dot(a);
    if (d1 <= 0.0 && d2 <= 0.0) {
      keep({0});
      closest = a;
      return false;
    }
    double d3 = -ab.dot(b), d4 = -ac.dot(b);
    if (d3 >= 0.0 && d4 <= d3) {
      keep({1});
      closest = b;
      return false;
    }
    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
      double v = d1 / (d1 - d3);
      keep({0, 1});
      closest = a + v * ab;
      return false;
    }
    double d5 = -ab.dot(c), d6 = -ac.dot(c);
    if (d6 >= 0.0 && d5 <= d6) {
      keep({2});
      closest = c;
      return false;
    }
    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
      double w = d2 / (d2 - d6);
      keep({0, 2});
      closest = a + w * ac;
      return false;
    }
    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
      double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
      keep({1, 2});
      closest = b + w * (c - b);
      return false;
    }
    double denom = va + vb + vc;
    if (std::abs(denom) < 1e-30) {
      // Degenerate triangle; fall back to the best edge.
      keep({0, 1});
      return simplex_closest(s, n, closest);
    }
    double v = vb / denom, w = vc / denom;
    closest = a + v * ab + w * ac;
    return false;
  }

  // Tetrahedron: test the origin against each face plane (oriented away from
  // the opposite vertex); outside faces compete for the closest feature.
  const int faces[4][3] = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  const int opposite[4] = {3, 2, 1, 0};
  bool inside = true;
  double best = std::numeric_limits<double>::infinity();
  Vec3 best_closest = Vec3::Zero();
  int best_n = 0;
  Vec3 best_simplex[4];
  for (int f = 0; f < 4; ++f) {
    Vec3 a = s[faces[f][0]], b = s[faces[f][1]], c = s[faces[f][2]];
    Vec3 nrm = (b - a).cross(c - a);
    double side = nrm.dot(s[opposite[f]] - a);
    if (side > 0.0) nrm = -nrm;  // now points away from the opposite vertex
    if (nrm.dot(-a) <= 0.0) continue;  // origin on the interior side
    inside = false;
    Vec3 sub[4] = {a, b, c};
    int sub_n = 3;
    Vec3 cp;
    simplex_closest(sub, sub_n, cp);
    double d2 = cp.squaredNorm();
    if (d2 < best) {
      best = d2;
      best_closest = cp;
      best_n = sub_n;
      for (int i = 0; i < sub_n; ++i) best_simplex[i] = sub[i];
    }
  }
  if (inside) return true;
  n = best_n;
  for (int i = 0; i < best_n; ++i) s[i] = best_simplex[i];
  closest = best_closest;
  return false;
}

}  // namespace

double gjk_distance(const ConvexPart& a, const RigidTransform& pose_a,
                    const ConvexPart& b, const RigidTransform& pose_b) {
  Mat3 rat = pose_a.rotation.transpose();
  Mat3 rbt = pose_b.rotation.transpose();
  auto support = [&](const Vec3& d) {
    Vec3 sa = pose_a.apply(a.support(rat * d));
    Vec3 sb = pose_b.apply(b.support(rbt * -d));
    return Vec3(sa - sb);
  };

  Vec3 d0 = pose_a.translation - pose_b.translation;
  if (d0.squaredNorm() < 1e-30) d0 = Vec3::UnitX();

  Vec3 simplex[4];
  int n = 1;
  simplex[0] = support(d0);

  for (int iter = 0; iter < 128; ++iter) {
    Vec3 v;
    if (simplex_closest(simplex, n, v)) return 0.0;  // origin enclosed
    double v2 = v.squaredNorm();
    if (v2 < 1e-24) return 0.0;  // touching

    Vec3 w = support(-v);
    double progress = v2 - v.dot(w);
    if (progress <= 1e-12 + 1e-10 * v2) return std::sqrt(v2);

    if (n < 4) {
      simplex[n++] = w;
    } else {
      return std::sqrt(v2);  // full simplex without enclosure: converged
    }
  }
  return 0.0;  // no convergence: conservative
}

PenetrationResult object_penetration(const std::vector<SurfaceSample>& samples,
                                     const ConvexPart& part,
                                     const RigidTransform& pose,
                                     double margin) {
  if (part.planes.empty()) {
    throw std::invalid_argument("object_penetration: part has no face planes");
  }
  RigidTransform inv = pose.inverse();
  PenetrationResult result;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Vec3 local = inv.apply(samples[i].position);
    if (!part.bounds.inflated(1e-9).contains(local)) continue;
    double depth = part.interior_depth(local);
    if (depth > margin) {
      result.offending.push_back(static_cast<int>(i));
      result.max_depth = std::max(result.max_depth, depth);
    }
  }
  return result;
}

CollisionReport validate_grasp_collisions(
    const HandModel& model, const Eigen::VectorXd& q,
    const std::vector<SurfaceSample>& object_samples,
    const RigidTransform& object_pose, double margin) {
  auto frames = forward_kinematics(model, q);

  std::vector<PosedPart> parts;
  for (std::size_t l = 0; l < model.links.size(); ++l) {
    for (const auto& part : model.links[l].parts) {
      parts.push_back({&part, frames[l], static_cast<int>(l)});
    }
  }

  auto world_samples = transform_samples(object_samples, object_pose);
  std::optional<Aabb> object_box;
  if (!world_samples.empty()) object_box = aabb_of(world_samples);

  auto adjacent = [&](int la, int lb) {
    return model.links[la].parent == lb || model.links[lb].parent == la;
  };

  CollisionReport report;
  auto candidates = broad_phase(parts, object_box, margin);
  report.broad_pairs = candidates.size();

  // Violations deduplicated per link pair / per link.
  std::vector<CollisionViolation> violations;
  auto record = [&](int la, int lb, double depth) {
    for (auto& v : violations) {
      if (v.link_a == la && v.link_b == lb) {
        v.depth = std::max(v.depth, depth);
        return;
      }
    }
    violations.push_back({la, lb, depth});
  };

  for (const auto& pair : candidates) {
    const PosedPart& pa = parts[pair.a];
    if (pair.b >= 0) {
      const PosedPart& pb = parts[pair.b];
      if (pa.link == pb.link || adjacent(pa.link, pb.link)) continue;
      ++report.narrow_gjk;
      if (gjk_distance(*pa.part, pa.pose, *pb.part, pb.pose) == 0.0) {
        record(std::min(pa.link, pb.link), std::max(pa.link, pb.link), 0.0);
      }
    } else {
      ++report.narrow_halfplane;
      auto pen = object_penetration(world_samples, *pa.part, pa.pose, margin);
      if (!pen.offending.empty()) {
        record(pa.link, -1, pen.max_depth);
        report.max_penetration = std::max(report.max_penetration,
                                          pen.max_depth);
      }
    }
  }
  report.violations = std::move(violations);
  return report;
}

}  // namespace graspgen
