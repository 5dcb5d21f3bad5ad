// Run configuration: flat key=value file with [section] headers and a fixed,
// range-checked schema, plus command-line overrides.
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "graspgen/geometry.hpp"

namespace graspgen {

enum class PlacementMode { kExhaustive, kCanonical };

struct RunConfig {
  // assets
  std::string hand;
  std::string object;
  std::string out = "out";

  // run
  std::uint64_t seed = 0;
  int batch = 1024;
  int workers = 1;
  int passes = 1;
  bool cache = false;
  bool export_obj = false;
  int k_contacts = 3;

  // object
  double samples_per_cm2 = 40.0;
  double object_scale = 1.0;
  double probe_half_width = 0.01;
  double probe_depth_threshold = 0.005;

  // field
  double hand_scale = 1.0;
  int field_configs = 4096;
  double box_width = 0.01;
  double patch_radius = 0.008;
  int field_points_per_patch = 8;
  int codebook_size = 256;
  double theta_hit = 0.9397;

  // placement
  PlacementMode placement_mode = PlacementMode::kCanonical;
  double static_contact_prob = 0.3;
  Vec3 canonical_center = Vec3(0.0, 0.0, 0.06);
  Vec3 canonical_half_extents = Vec3(0.04, 0.04, 0.04);
  double penetration_margin = 0.002;

  // wrench
  double lambda_torque = 10.0;
  double mu = 0.3;
  double eps_stable = 0.05;
  int pgd_iterations = 64;
  int pgd_warm_iterations = 8;
  double pgd_step = 0.1;

  // contact_opt
  int n_outer = 8;
  int n_inner = 32;
  int restarts = 4;
  double sigma = 0.01;

  // ik
  double beta = 0.01;
  int ik_iterations = 30;
  double step_clamp = 0.2;
  double residual_tol = 1e-4;
  double damping_scale = 1e-4;
  int finetune_rounds = 4;
  int finetune_iterations = 10;
  int lookup_attempts = 3;
  int unused_attempts = 8;
  double contact_tol = 0.003;
};

struct ConfigOverrides {
  std::optional<std::string> hand;
  std::optional<std::string> object;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> batch;
  std::optional<int> workers;
  std::optional<bool> export_obj;
};

// Loads defaults, applies the file (when given), then the overrides, then
// validates ranges. Unknown keys, malformed values, out-of-range values, and
// dangling asset paths all throw std::runtime_error.
RunConfig parse_config(const std::optional<std::string>& file_path,
                       const ConfigOverrides& overrides = {});

// Key for the on-disk contact-field index cache: hashes every parameter that
// shapes the index plus the hand file content.
std::uint64_t index_cache_key(const RunConfig& config);

}  // namespace graspgen
