// Triangle mesh loading and surface sampling.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graspgen/geometry.hpp"

namespace graspgen {

struct TriMesh {
  std::vector<Vec3> vertices;
  // Indices into `vertices`, CCW winding defines the outward normal.
  std::vector<Eigen::Vector3i> triangles;

  Vec3 face_normal(int t) const;
  double face_area(int t) const;
  double surface_area() const;
};

struct LoadReport {
  std::size_t triangles_read = 0;
  std::size_t triangles_kept = 0;
  std::size_t degenerate_dropped = 0;
};

// Loads an ASCII OBJ (v/f records, polygonal faces fan-triangulated) or a
// binary STL, chosen by file extension. Triangles with non-finite vertices or
// area below `area_eps` are dropped and counted in the report.
TriMesh load_mesh(const std::string& path, LoadReport* report = nullptr,
                  double area_eps = 1e-12);

void save_obj(const TriMesh& mesh, const std::string& path);

// Axis-aligned box centered at `center` with full side lengths `size`.
TriMesh make_box(const Vec3& size, const Vec3& center = Vec3::Zero());

// Icosphere with `subdivisions` refinement levels.
TriMesh make_icosphere(double radius, int subdivisions,
                       const Vec3& center = Vec3::Zero());

// Cylinder along +z, centered at origin.
TriMesh make_cylinder(double radius, double length, int segments = 24);

TriMesh transform_mesh(const TriMesh& mesh, const RigidTransform& t);
TriMesh scale_mesh(const TriMesh& mesh, double scale);

Aabb aabb_of(const TriMesh& mesh);

struct SurfaceSample {
  Vec3 position;
  Vec3 normal;  // unit outward (from face winding)
};

// Area-weighted random surface sampling at `samples_per_cm2` expected density.
// Sample count is round(area_cm2 * samples_per_cm2), at least one per mesh.
// Deterministic for a fixed mesh and seed.
std::vector<SurfaceSample> sample_surface(const TriMesh& mesh,
                                          double samples_per_cm2,
                                          std::uint64_t seed);

std::vector<SurfaceSample> transform_samples(
    const std::vector<SurfaceSample>& samples, const RigidTransform& t);

Aabb aabb_of(const std::vector<SurfaceSample>& samples);

}  // namespace graspgen
