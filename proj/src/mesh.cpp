#include "graspgen/mesh.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "graspgen/rng.hpp"

namespace graspgen {

Vec3 TriMesh::face_normal(int t) const {
  const auto& tri = triangles[t];
  Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
  Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
  Vec3 n = e1.cross(e2);
  double len = n.norm();
  if (len < 1e-300) return Vec3::UnitZ();
  return n / len;
}

double TriMesh::face_area(int t) const {
  const auto& tri = triangles[t];
  Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
  Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * e1.cross(e2).norm();
}

double TriMesh::surface_area() const {
  double a = 0.0;
  for (int t = 0; t < static_cast<int>(triangles.size()); ++t) {
    a += face_area(t);
  }
  return a;
}

namespace {

bool triangle_ok(const Vec3& a, const Vec3& b, const Vec3& c,
                 double area_eps) {
  if (!a.allFinite() || !b.allFinite() || !c.allFinite()) return false;
  double area = 0.5 * (b - a).cross(c - a).norm();
  return std::isfinite(area) && area > area_eps;
}

// Keeps only well-formed triangles, filling the report.
TriMesh filter_triangles(std::vector<Vec3> vertices,
                         const std::vector<Eigen::Vector3i>& raw,
                         double area_eps, LoadReport* report) {
  TriMesh mesh;
  mesh.vertices = std::move(vertices);
  std::size_t dropped = 0;
  for (const auto& tri : raw) {
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= static_cast<int>(mesh.vertices.size())) {
        throw std::runtime_error("mesh face references missing vertex");
      }
    }
    if (triangle_ok(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                    mesh.vertices[tri[2]], area_eps)) {
      mesh.triangles.push_back(tri);
    } else {
      ++dropped;
    }
  }
  if (report) {
    report->triangles_read = raw.size();
    report->triangles_kept = mesh.triangles.size();
    report->degenerate_dropped = dropped;
  }
  return mesh;
}

TriMesh load_obj(const std::string& path, LoadReport* report,
                 double area_eps) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path);
  std::vector<Vec3> vertices;
  std::vector<Eigen::Vector3i> faces;
  std::string line;
  while (std::getline(in, line)) {
    if (line.size() >= 2 && line[0] == 'v' && std::isspace(line[1])) {
      std::istringstream ss(line.substr(1));
      Vec3 v;
      ss >> v.x() >> v.y() >> v.z();
      if (ss.fail()) throw std::runtime_error("bad vertex line in " + path);
      vertices.push_back(v);
    } else if (line.size() >= 2 && line[0] == 'f' && std::isspace(line[1])) {
      std::istringstream ss(line.substr(1));
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        // "f v", "f v/vt", "f v/vt/vn", "f v//vn" all start with the vertex
        // index; negative indices count from the end.
        int v = std::stoi(tok.substr(0, tok.find('/')));
        if (v < 0) v = static_cast<int>(vertices.size()) + v + 1;
        idx.push_back(v - 1);
      }
      if (idx.size() < 3) throw std::runtime_error("bad face line in " + path);
      for (std::size_t k = 2; k < idx.size(); ++k) {
        faces.push_back(Eigen::Vector3i(idx[0], idx[k - 1], idx[k]));
      }
    }
  }
  return filter_triangles(std::move(vertices), faces, area_eps, report);
}

TriMesh load_stl(const std::string& path, LoadReport* report,
                 double area_eps) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path);
  char header[80];
  in.read(header, 80);
  std::uint32_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 4);
  if (!in) throw std::runtime_error("truncated STL: " + path);

  std::vector<Vec3> vertices;
  std::vector<Eigen::Vector3i> faces;
  // Weld shared vertices so downstream hulls and samplers see one point per
  // location.
  std::map<std::array<float, 3>, int> index;
  auto intern = [&](const std::array<float, 3>& p) {
    auto it = index.find(p);
    if (it != index.end()) return it->second;
    int id = static_cast<int>(vertices.size());
    vertices.push_back(Vec3(p[0], p[1], p[2]));
    index.emplace(p, id);
    return id;
  };

  for (std::uint32_t t = 0; t < count; ++t) {
    float data[12];
    in.read(reinterpret_cast<char*>(data), sizeof(data));
    std::uint16_t attr = 0;
    in.read(reinterpret_cast<char*>(&attr), 2);
    if (!in) throw std::runtime_error("truncated STL: " + path);
    Eigen::Vector3i tri;
    for (int k = 0; k < 3; ++k) {
      tri[k] = intern({data[3 + 3 * k], data[4 + 3 * k], data[5 + 3 * k]});
    }
    faces.push_back(tri);
  }
  return filter_triangles(std::move(vertices), faces, area_eps, report);
}

std::string lower_ext(const std::string& path) {
  auto dot = path.rfind('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(c));
  return ext;
}

}  // namespace

TriMesh load_mesh(const std::string& path, LoadReport* report,
                  double area_eps) {
  std::string ext = lower_ext(path);
  if (ext == "obj") return load_obj(path, report, area_eps);
  if (ext == "stl") return load_stl(path, report, area_eps);
  throw std::runtime_error("unsupported mesh format: " + path);
}

void save_obj(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write mesh file: " + path);
  out.precision(9);
  for (const auto& v : mesh.vertices) {
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const auto& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

TriMesh make_box(const Vec3& size, const Vec3& center) {
  Vec3 h = 0.5 * size;
  TriMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back(center + Vec3((i & 1) ? h.x() : -h.x(),
                                       (i & 2) ? h.y() : -h.y(),
                                       (i & 4) ? h.z() : -h.z()));
  }
  // Each face CCW viewed from outside.
  const int f[6][4] = {
      {0, 4, 6, 2},  // -x
      {1, 3, 7, 5},  // +x
      {0, 1, 5, 4},  // -y
      {2, 6, 7, 3},  // +y
      {0, 2, 3, 1},  // -z
      {4, 5, 7, 6},  // +z
  };
  for (const auto& q : f) {
    m.triangles.push_back(Eigen::Vector3i(q[0], q[1], q[2]));
    m.triangles.push_back(Eigen::Vector3i(q[0], q[2], q[3]));
  }
  return m;
}

TriMesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1},
  };
  for (auto& v : verts) v.normalize();
  std::vector<Eigen::Vector3i> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      int id = static_cast<int>(verts.size());
      verts.push_back((verts[a] + verts[b]).normalized());
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<Eigen::Vector3i> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      int a = mid(f[0], f[1]);
      int b = mid(f[1], f[2]);
      int c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }
  TriMesh m;
  m.vertices.reserve(verts.size());
  for (const auto& v : verts) m.vertices.push_back(center + radius * v);
  m.triangles = std::move(faces);
  return m;
}

TriMesh make_cylinder(double radius, double length, int segments) {
  TriMesh m;
  double hz = 0.5 * length;
  for (int i = 0; i < segments; ++i) {
    double a = 2.0 * kPi * i / segments;
    double x = radius * std::cos(a);
    double y = radius * std::sin(a);
    m.vertices.push_back(Vec3(x, y, -hz));
    m.vertices.push_back(Vec3(x, y, hz));
  }
  int bottom = static_cast<int>(m.vertices.size());
  m.vertices.push_back(Vec3(0, 0, -hz));
  int top = bottom + 1;
  m.vertices.push_back(Vec3(0, 0, hz));
  for (int i = 0; i < segments; ++i) {
    int j = (i + 1) % segments;
    int b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
    m.triangles.push_back({b0, b1, t1});
    m.triangles.push_back({b0, t1, t0});
    m.triangles.push_back({bottom, b1, b0});
    m.triangles.push_back({top, t0, t1});
  }
  return m;
}

TriMesh transform_mesh(const TriMesh& mesh, const RigidTransform& t) {
  TriMesh out;
  out.vertices.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) out.vertices.push_back(t.apply(v));
  out.triangles = mesh.triangles;
  return out;
}

TriMesh scale_mesh(const TriMesh& mesh, double scale) {
  TriMesh out;
  out.vertices.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) out.vertices.push_back(scale * v);
  out.triangles = mesh.triangles;
  return out;
}

Aabb aabb_of(const TriMesh& mesh) {
  Aabb box;
  for (const auto& v : mesh.vertices) box.expand(v);
  return box;
}

std::vector<SurfaceSample> sample_surface(const TriMesh& mesh,
                                          double samples_per_cm2,
                                          std::uint64_t seed) {
  if (mesh.triangles.empty()) return {};
  double area_m2 = mesh.surface_area();
  double area_cm2 = area_m2 * 1e4;
  std::size_t count = static_cast<std::size_t>(
      std::llround(area_cm2 * samples_per_cm2));
  if (count == 0) count = 1;

  // Cumulative area table for O(log n) face selection.
  std::vector<double> cum(mesh.triangles.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    acc += mesh.face_area(static_cast<int>(t));
    cum[t] = acc;
  }

  Rng rng(seed);
  std::vector<SurfaceSample> samples;
  samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double pick = rng.uniform() * acc;
    auto it = std::lower_bound(cum.begin(), cum.end(), pick);
    int t = static_cast<int>(std::min<std::size_t>(
        it - cum.begin(), mesh.triangles.size() - 1));
    const auto& tri = mesh.triangles[t];
    double u = rng.uniform();
    double v = rng.uniform();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    SurfaceSample s;
    s.position = a + u * (b - a) + v * (c - a);
    s.normal = mesh.face_normal(t);
    samples.push_back(s);
  }
  return samples;
}

std::vector<SurfaceSample> transform_samples(
    const std::vector<SurfaceSample>& samples, const RigidTransform& t) {
  std::vector<SurfaceSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    out.push_back({t.apply(s.position), t.rotate(s.normal)});
  }
  return out;
}

Aabb aabb_of(const std::vector<SurfaceSample>& samples) {
  Aabb box;
  for (const auto& s : samples) box.expand(s.position);
  return box;
}

}  // namespace graspgen
