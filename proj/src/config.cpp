#include "graspgen/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "graspgen/contact_field.hpp"

namespace graspgen {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw std::runtime_error("config: " + key + ": " + why);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double d = std::stod(value, &pos);
    if (pos != value.size()) bad(key, "trailing characters in '" + value + "'");
    return d;
  } catch (const std::logic_error&) {
    bad(key, "not a number: '" + value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(value, &pos);
    if (pos != value.size()) bad(key, "trailing characters in '" + value + "'");
    return v;
  } catch (const std::logic_error&) {
    bad(key, "not an integer: '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad(key, "not a boolean: '" + value + "'");
}

Vec3 parse_vec3(const std::string& key, const std::string& value) {
  std::istringstream ss(value);
  Vec3 v;
  ss >> v.x() >> v.y() >> v.z();
  if (ss.fail()) bad(key, "expected three numbers, got '" + value + "'");
  std::string rest;
  if (ss >> rest) bad(key, "trailing characters in '" + value + "'");
  return v;
}

using Setter = std::function<void(RunConfig&, const std::string& key,
                                  const std::string& value)>;

const std::map<std::string, Setter>& schema() {
  static const std::map<std::string, Setter> table = {
      {"hand", [](RunConfig& c, const std::string&, const std::string& v) {
         c.hand = v;
       }},
      {"object", [](RunConfig& c, const std::string&, const std::string& v) {
         c.object = v;
       }},
      {"out", [](RunConfig& c, const std::string&, const std::string& v) {
         c.out = v;
       }},
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) {
         long long s = parse_int(k, v);
         if (s < 0) bad(k, "must be >= 0");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"batch", [](RunConfig& c, const std::string& k, const std::string& v) {
         long long b = parse_int(k, v);
         if (b < 1 || b > 1000000) bad(k, "must be in [1, 1000000]");
         c.batch = static_cast<int>(b);
       }},
      {"workers", [](RunConfig& c, const std::string& k, const std::string& v) {
         long long w = parse_int(k, v);
         if (w < 0 || w > 1024) bad(k, "must be in [0, 1024]");
         c.workers = static_cast<int>(w);
       }},
      {"passes", [](RunConfig& c, const std::string& k, const std::string& v) {
         long long p = parse_int(k, v);
         if (p < 1 || p > 64) bad(k, "must be in [1, 64]");
         c.passes = static_cast<int>(p);
       }},
      {"cache", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.cache = parse_bool(k, v);
       }},
      {"export_obj", [](RunConfig& c, const std::string& k,
                        const std::string& v) {
         c.export_obj = parse_bool(k, v);
       }},
      {"k_contacts", [](RunConfig& c, const std::string& k,
                        const std::string& v) {
         long long kk = parse_int(k, v);
         if (kk < 2 || kk > 5) bad(k, "must be in [2, 5]");
         c.k_contacts = static_cast<int>(kk);
       }},
      {"samples_per_cm2", [](RunConfig& c, const std::string& k,
                             const std::string& v) {
         double d = parse_double(k, v);
         if (d <= 0.0 || d > 10000.0) bad(k, "must be in (0, 10000]");
         c.samples_per_cm2 = d;
       }},
      {"object_scale", [](RunConfig& c, const std::string& k,
                          const std::string& v) {
         double d = parse_double(k, v);
         if (d <= 0.0) bad(k, "must be > 0");
         c.object_scale = d;
       }},
      {"probe_half_width", [](RunConfig& c, const std::string& k,
                              const std::string& v) {
         double d = parse_double(k, v);
         if (d < 0.0) bad(k, "must be >= 0");
         c.probe_half_width = d;
       }},
      {"probe_depth_threshold", [](RunConfig& c, const std::string& k,
                                   const std::string& v) {
         double d = parse_double(k, v);
         if (d < 0.0) bad(k, "must be >= 0");
         c.probe_depth_threshold = d;
       }},
      {"hand_scale", [](RunConfig& c, const std::string& k,
                        const std::string& v) {
         double d = parse_double(k, v);
         if (d <= 0.0) bad(k, "must be > 0");
         c.hand_scale = d;
       }},
      {"field_configs", [](RunConfig& c, const std::string& k,
                           const std::string& v) {
         long long n = parse_int(k, v);
         if (n < 1 || n > 10000000) bad(k, "must be in [1, 1e7]");
         c.field_configs = static_cast<int>(n);
       }},
      {"box_width", [](RunConfig& c, const std::string& k,
                       const std::string& v) {
         double d = parse_double(k, v);
         if (d <= 0.0 || d > 1.0) bad(k, "must be in (0, 1]");
         c.box_width = d;
       }},
      {"patch_radius", [](RunConfig& c, const std::string& k,
                          const std::string& v) {
         double d = parse_double(k, v);
         if (d <= 0.0 || d > 1.0) bad(k, "must be in (0, 1]");
         c.patch_radius = d;
       }},
      {"field_points_per_patch", [](RunConfig& c, const std::string& k,
                                    const std::string& v) {
         long long n = parse_int(k, v);
         if (n < 1 || n > 1024) bad(k, "must be in [1, 1024]");
         c.field_points_per_patch = static_cast<int>(n);
       }},
      {"codebook_size", [](RunConfig& c, const std::string& k,
                           const std::string& v) {
         long long n = parse_int(k, v);
         if (n < 8 || n > 65536) bad(k, "must be in [8, 65536]");
         c.codebook_size = static_cast<int>(n);
       }},
      {"theta_hit", [](RunConfig& c, const std::string& k,
                       const std::string& v) {
         double d = parse_double(k, v);
         if (d <= -1.0 || d > 1.0) bad(k, "cosine must be in (-1, 1]");
         c.theta_hit = d;
       }},
      {"placement_mode", [](RunConfig& c, const std::string& k,
                            const std::string& v) {
         if (v == "exhaustive") {
           c.placement_mode = PlacementMode::kExhaustive;
         } else if (v == "canonical") {
           c.placement_mode = PlacementMode::kCanonical;
         } else {
           bad(k, "must be 'exhaustive' or 'canonical'");
         }
       }},
      {"static_contact_prob", [](RunConfig& c, const std::string& k,
                                 const std::string& v) {
         double d = parse_double(k, v);
         if (d < 0.0 || d > 1.0) bad(k, "must be in [0, 1]");
         c.static_contact_prob = d;
       }},
      {"canonical_center", [](RunConfig& c, const std::string& k,
                              const std::string& v) {
         c.canonical_center = parse_vec3(k, v);
       }},
      {"canonical_half_extents", [](RunConfig& c, const std::string& k,
                                    const std::string& v) {
         Vec3 h = parse_vec3(k, v);
         if ((h.array() < 0.0).any()) bad(k, "extents must be >= 0");
         c.canonical_half_extents = h;
       }},
      {"penetration_margin", [](RunConfig& c, const std::string& k,
                                const std::string& v) {
         double d = parse_double(k, v);
         if (d < 0.0 || d > 0.1) bad(k, "must be in [0, 0.1]");
         c.penetration_margin = d;
       }},
      {"lambda_torque", [](RunConfig& c, const std::string& k,
                           const std::string& v) {
         double d = parse_double(k, v);
         if (d < 0.0) bad(k, "must be >= 0");
         c.lambda_torque = d;
       }},
      {"mu", [](RunConfig& c, const std::string& k, const std::string& v) {
         double d = parse_double(k, v);
         if (d < 0.0 || d > 10.0) bad(k, "must be in [0, 10]");
         c.mu = d;
       }},
      {"eps_stable", [](RunConfig& c, const std::string& k,
                        const std::string& v) {
         double d = parse_double(k, v);
         if (d <= 0.0) bad(k, "must be > 0");
         c.eps_stable = d;
       }},
      {"pgd_iterations", [](RunConfig& c, const std::string& k,
                            const std::string& v) {
         long long n = parse_int(k, v);
         if (n < 1 || n > 100000) bad(k, "must be in [1, 100000]");
         c.pgd_iterations = static_cast<int>(n);
       }},
      {"pgd_warm_iterations", [](RunConfig& c, const std::string& k,
                                 const std::string& v) {
         long long n = parse_int(k, v);
         if (n < 1 || n > 100000) bad(k, "must be in [1, 100000]");
         c.pgd_warm_iterations = static_cast<int>(n);
       }},
      {"pgd_step", [](RunConfig& c, const std::string& k,
                      const std::string& v) {
         double d = parse_double(k, v);
         if (d <= 0.0) bad(k, "must be > 0");
         c.pgd_step = d;
       }},
      {"n_outer", [](RunConfig& c, const std::string& k,
                     const std::string& v) {
         long long n = parse_int(k, v);
         if (n < 0 || n > 10000) bad(k, "must be in [0, 10000]");
         c.n_outer = static_cast<int>(n);
       }},
      {"n_inner", [](RunConfig& c, const std::string& k,
                     const std::string& v) {
         long long n = parse_int(k, v);
         if (n < 1 || n > 10000) bad(k, "must be in [1, 10000]");
         c.n_inner = static_cast<int>(n);
       }},
      {"sigma", [](RunConfig& c, const std::string& k, const std::string& v) {
         double d = parse_double(k, v);
         if (d <= 0.0 || d > 1.0) bad(k, "must be in (0, 1]");
         c.sigma = d;
       }},
      {"restarts", [](RunConfig& c, const std::string& k,
                      const std::string& v) {
         long long n = parse_int(k, v);
         if (n < 1 || n > 64) bad(k, "must be in [1, 64]");
         c.restarts = static_cast<int>(n);
       }},
      {"beta", [](RunConfig& c, const std::string& k, const std::string& v) {
         double d = parse_double(k, v);
         if (d <= 0.0 || d > 1.0) bad(k, "must be in (0, 1]");
         c.beta = d;
       }},
      {"ik_iterations", [](RunConfig& c, const std::string& k,
                           const std::string& v) {
         long long n = parse_int(k, v);
         if (n < 1 || n > 10000) bad(k, "must be in [1, 10000]");
         c.ik_iterations = static_cast<int>(n);
       }},
      {"step_clamp", [](RunConfig& c, const std::string& k,
                        const std::string& v) {
         double d = parse_double(k, v);
         if (d <= 0.0) bad(k, "must be > 0");
         c.step_clamp = d;
       }},
      {"residual_tol", [](RunConfig& c, const std::string& k,
                          const std::string& v) {
         double d = parse_double(k, v);
         if (d <= 0.0) bad(k, "must be > 0");
         c.residual_tol = d;
       }},
      {"damping_scale", [](RunConfig& c, const std::string& k,
                           const std::string& v) {
         double d = parse_double(k, v);
         if (d < 0.0) bad(k, "must be >= 0");
         c.damping_scale = d;
       }},
      {"finetune_rounds", [](RunConfig& c, const std::string& k,
                             const std::string& v) {
         long long n = parse_int(k, v);
         if (n < 0 || n > 1000) bad(k, "must be in [0, 1000]");
         c.finetune_rounds = static_cast<int>(n);
       }},
      {"finetune_iterations", [](RunConfig& c, const std::string& k,
                                 const std::string& v) {
         long long n = parse_int(k, v);
         if (n < 1 || n > 10000) bad(k, "must be in [1, 10000]");
         c.finetune_iterations = static_cast<int>(n);
       }},
      {"lookup_attempts", [](RunConfig& c, const std::string& k,
                             const std::string& v) {
         long long n = parse_int(k, v);
         if (n < 1 || n > 8) bad(k, "must be in [1, 8]");
         c.lookup_attempts = static_cast<int>(n);
       }},
      {"unused_attempts", [](RunConfig& c, const std::string& k,
                             const std::string& v) {
         long long n = parse_int(k, v);
         if (n < 1 || n > 64) bad(k, "must be in [1, 64]");
         c.unused_attempts = static_cast<int>(n);
       }},
      {"contact_tol", [](RunConfig& c, const std::string& k,
                         const std::string& v) {
         double d = parse_double(k, v);
         if (d <= 0.0 || d > 0.1) bad(k, "must be in (0, 0.1]");
         c.contact_tol = d;
       }},
  };
  return table;
}

bool file_exists(const std::string& path) {
  std::ifstream f(path);
  return static_cast<bool>(f);
}

}  // namespace

RunConfig parse_config(const std::optional<std::string>& file_path,
                       const ConfigOverrides& overrides) {
  RunConfig config;

  if (file_path) {
    std::ifstream in(*file_path);
    if (!in) throw std::runtime_error("config: cannot open " + *file_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) {
        line = line.substr(0, hash);
      }
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') {
          throw std::runtime_error("config: bad section header at line " +
                                   std::to_string(line_no));
        }
        continue;  // sections organize the file; keys are global
      }
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::runtime_error("config: expected key=value at line " +
                                 std::to_string(line_no));
      }
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      auto it = schema().find(key);
      if (it == schema().end()) {
        throw std::runtime_error("config: unknown key '" + key + "' at line " +
                                 std::to_string(line_no));
      }
      it->second(config, key, value);
    }
  }

  if (overrides.hand) config.hand = *overrides.hand;
  if (overrides.object) config.object = *overrides.object;
  if (overrides.out) config.out = *overrides.out;
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.batch) {
    if (*overrides.batch < 1) throw std::runtime_error("config: batch must be >= 1");
    config.batch = *overrides.batch;
  }
  if (overrides.workers) {
    if (*overrides.workers < 0) {
      throw std::runtime_error("config: workers must be >= 0");
    }
    config.workers = *overrides.workers;
  }
  if (overrides.export_obj) config.export_obj = *overrides.export_obj;

  if (!config.hand.empty() && !file_exists(config.hand)) {
    throw std::runtime_error("config: hand file not found: " + config.hand);
  }
  if (!config.object.empty() && !file_exists(config.object)) {
    throw std::runtime_error("config: object file not found: " + config.object);
  }
  return config;
}

std::uint64_t index_cache_key(const RunConfig& config) {
  std::uint64_t h = hash_file(config.hand);
  auto mix = [&h](const void* data, std::size_t size) {
    h = fnv1a(data, size, h);
  };
  mix(&config.seed, sizeof(config.seed));
  mix(&config.field_configs, sizeof(config.field_configs));
  mix(&config.box_width, sizeof(config.box_width));
  mix(&config.patch_radius, sizeof(config.patch_radius));
  mix(&config.field_points_per_patch, sizeof(config.field_points_per_patch));
  mix(&config.codebook_size, sizeof(config.codebook_size));
  mix(&config.samples_per_cm2, sizeof(config.samples_per_cm2));
  mix(&config.hand_scale, sizeof(config.hand_scale));
  return h;
}

}  // namespace graspgen
