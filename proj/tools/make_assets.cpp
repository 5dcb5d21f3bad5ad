// Regenerates the bundled object meshes and the four-finger collision part
// meshes. Hand description files are maintained by hand.
#include <filesystem>
#include <iostream>
#include <string>

#include "graspgen/mesh.hpp"
#include "graspgen/rng.hpp"

using namespace graspgen;

int main(int argc, char** argv) {
  std::string root = argc > 1 ? argv[1] : "assets";
  std::filesystem::create_directories(root + "/objects");
  std::filesystem::create_directories(root + "/hands/parts");

  save_obj(make_icosphere(0.03, 3), root + "/objects/sphere_r030.obj");
  save_obj(make_box(Vec3(0.04, 0.04, 0.04)), root + "/objects/box_040.obj");

  // Noisy sphere with two degenerate faces, the kind of junk a raw surface
  // scan contains. Loaders must drop exactly the two degenerates.
  TriMesh scan = make_icosphere(0.025, 2);
  Rng rng(77);
  for (auto& v : scan.vertices) v += 0.0006 * rng.normal_vec3();
  int dup = static_cast<int>(scan.vertices.size());
  scan.vertices.push_back(scan.vertices[0]);
  scan.triangles.push_back(Eigen::Vector3i(0, 0, 1));
  scan.triangles.push_back(Eigen::Vector3i(0, dup, 1));
  save_obj(scan, root + "/objects/scan_test.obj");

  save_obj(make_box(Vec3(0.11, 0.11, 0.02)),
           root + "/hands/parts/palm_four.obj");
  save_obj(make_box(Vec3(0.018, 0.018, 0.04), Vec3(0.0, 0.0, 0.02)),
           root + "/hands/parts/prox_four.obj");
  save_obj(make_box(Vec3(0.017, 0.017, 0.032), Vec3(0.0, 0.0, 0.016)),
           root + "/hands/parts/mid_four.obj");
  save_obj(make_box(Vec3(0.016, 0.016, 0.026), Vec3(0.0, 0.0, 0.013)),
           root + "/hands/parts/distal_four.obj");

  std::cout << "assets written under " << root << "\n";
  return 0;
}
