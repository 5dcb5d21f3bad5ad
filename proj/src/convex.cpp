#include "graspgen/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace graspgen {

bool ConvexPart::contains(const Vec3& p, double tol) const {
  for (const auto& pl : planes) {
    if (pl.normal.dot(p) > pl.offset + tol) return false;
  }
  return true;
}

double ConvexPart::interior_depth(const Vec3& p) const {
  double depth = std::numeric_limits<double>::infinity();
  for (const auto& pl : planes) {
    depth = std::min(depth, pl.offset - pl.normal.dot(p));
  }
  return depth;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c) {
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    double v = d1 / (d1 - d3);
    return a + v * ab;
  }

  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    double w = d2 / (d2 - d6);
    return a + w * ac;
  }

  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }

  double denom = 1.0 / (va + vb + vc);
  double v = vb * denom;
  double w = vc * denom;
  return a + ab * v + ac * w;
}

Vec3 ConvexPart::closest_surface_point(const Vec3& p, Vec3* normal) const {
  if (contains(p)) {
    // Interior: project onto the face with the smallest slack.
    double best = std::numeric_limits<double>::infinity();
    const FacePlane* plane = nullptr;
    for (const auto& pl : planes) {
      double slack = pl.offset - pl.normal.dot(p);
      if (slack < best) {
        best = slack;
        plane = &pl;
      }
    }
    if (normal) *normal = plane->normal;
    return p + best * plane->normal;
  }
  double best = std::numeric_limits<double>::infinity();
  Vec3 cp = Vec3::Zero();
  int face = 0;
  for (int t = 0; t < static_cast<int>(triangles.size()); ++t) {
    const auto& tri = triangles[t];
    Vec3 q = closest_point_on_triangle(p, vertices[tri[0]], vertices[tri[1]],
                                       vertices[tri[2]]);
    double d2 = (p - q).squaredNorm();
    if (d2 < best) {
      best = d2;
      cp = q;
      face = t;
    }
  }
  if (normal) {
    double d = std::sqrt(best);
    if (d > 1e-12) {
      *normal = (p - cp) / d;
    } else {
      const auto& tri = triangles[face];
      Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
      Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
      *normal = e1.cross(e2).normalized();
    }
  }
  return cp;
}

Vec3 ConvexPart::support(const Vec3& dir) const {
  double best = -std::numeric_limits<double>::infinity();
  Vec3 out = Vec3::Zero();
  for (const auto& v : vertices) {
    double d = dir.dot(v);
    if (d > best) {
      best = d;
      out = v;
    }
  }
  return out;
}

namespace {

struct HullFace {
  int a, b, c;
  Vec3 normal;
  double offset;
  bool alive = true;
  std::vector<int> outside;  // candidate point indices strictly above
  int far_point = -1;
  double far_dist = 0.0;
};

double signed_dist(const HullFace& f, const Vec3& p) {
  return f.normal.dot(p) - f.offset;
}

}  // namespace

ConvexPart convex_hull(const std::vector<Vec3>& points) {
  if (points.size() < 4) {
    throw std::invalid_argument("convex_hull: need at least 4 points");
  }

  Aabb box;
  for (const auto& p : points) {
    if (!p.allFinite()) {
      throw std::invalid_argument("convex_hull: non-finite input point");
    }
    box.expand(p);
  }
  double scale = std::max(box.extents().maxCoeff(), 1e-9);
  const double eps = 1e-10 * scale;

  const int n = static_cast<int>(points.size());

  // Initial simplex: extreme pair along the widest axis, then the farthest
  // point from that segment, then the farthest from the plane.
  int i0 = 0, i1 = 0;
  {
    double best = -1.0;
    for (int axis = 0; axis < 3; ++axis) {
      int lo = 0, hi = 0;
      for (int i = 1; i < n; ++i) {
        if (points[i][axis] < points[lo][axis]) lo = i;
        if (points[i][axis] > points[hi][axis]) hi = i;
      }
      double d = points[hi][axis] - points[lo][axis];
      if (d > best) {
        best = d;
        i0 = lo;
        i1 = hi;
      }
    }
    if (best <= eps) {
      throw std::invalid_argument("convex_hull: degenerate point set");
    }
  }
  Vec3 dir = (points[i1] - points[i0]).normalized();
  int i2 = -1;
  {
    double best = eps;
    for (int i = 0; i < n; ++i) {
      Vec3 d = points[i] - points[i0];
      double dist = (d - d.dot(dir) * dir).norm();
      if (dist > best) {
        best = dist;
        i2 = i;
      }
    }
    if (i2 < 0) {
      throw std::invalid_argument("convex_hull: collinear point set");
    }
  }
  Vec3 plane_n =
      (points[i1] - points[i0]).cross(points[i2] - points[i0]).normalized();
  double plane_d = plane_n.dot(points[i0]);
  int i3 = -1;
  {
    double best = eps;
    for (int i = 0; i < n; ++i) {
      double dist = std::abs(plane_n.dot(points[i]) - plane_d);
      if (dist > best) {
        best = dist;
        i3 = i;
      }
    }
    if (i3 < 0) {
      throw std::invalid_argument("convex_hull: coplanar point set");
    }
  }
  if (plane_n.dot(points[i3]) - plane_d > 0.0) std::swap(i1, i2);

  std::vector<HullFace> faces;
  auto add_face = [&](int a, int b, int c) {
    HullFace f;
    f.a = a;
    f.b = b;
    f.c = c;
    Vec3 nrm = (points[b] - points[a]).cross(points[c] - points[a]);
    double len = nrm.norm();
    f.normal = len > 0.0 ? Vec3(nrm / len) : Vec3::UnitZ();
    f.offset = f.normal.dot(points[a]);
    faces.push_back(std::move(f));
    return static_cast<int>(faces.size() - 1);
  };
  add_face(i0, i1, i2);
  add_face(i0, i2, i3);
  add_face(i0, i3, i1);
  add_face(i1, i3, i2);

  // Assign every point to the first face that sees it.
  for (int i = 0; i < n; ++i) {
    if (i == i0 || i == i1 || i == i2 || i == i3) continue;
    for (auto& f : faces) {
      double d = signed_dist(f, points[i]);
      if (d > eps) {
        f.outside.push_back(i);
        if (d > f.far_dist) {
          f.far_dist = d;
          f.far_point = i;
        }
        break;
      }
    }
  }

  auto directed_edges = [&]() {
    std::map<std::pair<int, int>, int> edges;
    for (int fi = 0; fi < static_cast<int>(faces.size()); ++fi) {
      if (!faces[fi].alive) continue;
      const auto& f = faces[fi];
      edges[{f.a, f.b}] = fi;
      edges[{f.b, f.c}] = fi;
      edges[{f.c, f.a}] = fi;
    }
    return edges;
  };

  for (;;) {
    int grow = -1;
    for (int fi = 0; fi < static_cast<int>(faces.size()); ++fi) {
      if (faces[fi].alive && !faces[fi].outside.empty()) {
        grow = fi;
        break;
      }
    }
    if (grow < 0) break;

    int apex = faces[grow].far_point;
    const Vec3& p = points[apex];

    std::vector<int> visible;
    for (int fi = 0; fi < static_cast<int>(faces.size()); ++fi) {
      if (faces[fi].alive && signed_dist(faces[fi], p) > eps) {
        visible.push_back(fi);
      }
    }

    auto edges = directed_edges();
    std::vector<bool> is_visible(faces.size(), false);
    for (int fi : visible) is_visible[fi] = true;

    // Horizon: directed edges of visible faces whose twin face is hidden.
    std::vector<std::pair<int, int>> horizon;
    for (int fi : visible) {
      const auto& f = faces[fi];
      const std::pair<int, int> es[3] = {{f.a, f.b}, {f.b, f.c}, {f.c, f.a}};
      for (const auto& e : es) {
        auto twin = edges.find({e.second, e.first});
        if (twin == edges.end() || !is_visible[twin->second]) {
          horizon.push_back(e);
        }
      }
    }

    std::vector<int> orphaned;
    for (int fi : visible) {
      faces[fi].alive = false;
      for (int i : faces[fi].outside) {
        if (i != apex) orphaned.push_back(i);
      }
      faces[fi].outside.clear();
    }

    std::vector<int> created;
    for (const auto& e : horizon) {
      created.push_back(add_face(e.first, e.second, apex));
    }

    for (int i : orphaned) {
      for (int fi : created) {
        double d = signed_dist(faces[fi], points[i]);
        if (d > eps) {
          faces[fi].outside.push_back(i);
          if (d > faces[fi].far_dist) {
            faces[fi].far_dist = d;
            faces[fi].far_point = i;
          }
          break;
        }
      }
    }
  }

  // Compact: keep referenced vertices only, remap indices.
  ConvexPart part;
  std::unordered_map<int, int> remap;
  for (const auto& f : faces) {
    if (!f.alive) continue;
    int idx[3] = {f.a, f.b, f.c};
    Eigen::Vector3i tri;
    for (int k = 0; k < 3; ++k) {
      auto it = remap.find(idx[k]);
      if (it == remap.end()) {
        int id = static_cast<int>(part.vertices.size());
        part.vertices.push_back(points[idx[k]]);
        remap.emplace(idx[k], id);
        tri[k] = id;
      } else {
        tri[k] = it->second;
      }
    }
    part.triangles.push_back(tri);

    // Collect distinct planes (coplanar triangles share one entry).
    bool merged = false;
    for (const auto& pl : part.planes) {
      if (pl.normal.dot(f.normal) > 1.0 - 1e-9 &&
          std::abs(pl.offset - f.offset) < 1e-7 * scale + 1e-12) {
        merged = true;
        break;
      }
    }
    if (!merged) part.planes.push_back({f.normal, f.offset});
  }

  for (const auto& v : part.vertices) part.bounds.expand(v);
  return part;
}

ConvexPart transform_part(const ConvexPart& part, const RigidTransform& t) {
  ConvexPart out;
  out.vertices.reserve(part.vertices.size());
  for (const auto& v : part.vertices) out.vertices.push_back(t.apply(v));
  out.triangles = part.triangles;
  out.planes.reserve(part.planes.size());
  for (const auto& pl : part.planes) {
    Vec3 n = t.rotate(pl.normal);
    out.planes.push_back({n, pl.offset + n.dot(t.translation)});
  }
  for (const auto& v : out.vertices) out.bounds.expand(v);
  return out;
}

ConvexPart scale_part(const ConvexPart& part, double scale) {
  ConvexPart out;
  out.vertices.reserve(part.vertices.size());
  for (const auto& v : part.vertices) out.vertices.push_back(scale * v);
  out.triangles = part.triangles;
  out.planes.reserve(part.planes.size());
  for (const auto& pl : part.planes) {
    out.planes.push_back({pl.normal, scale * pl.offset});
  }
  for (const auto& v : out.vertices) out.bounds.expand(v);
  return out;
}

TriMesh part_to_mesh(const ConvexPart& part) {
  TriMesh m;
  m.vertices = part.vertices;
  m.triangles = part.triangles;
  return m;
}

}  // namespace graspgen
