#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "graspgen/dataset.hpp"
#include "graspgen/pipeline.hpp"
#include "graspgen/validate.hpp"

namespace {

using namespace graspgen;

void print_usage() {
  std::cout <<
      "usage: graspgen <command> [options]\n"
      "\n"
      "commands:\n"
      "  synthesize   run a batch and write grasps.jsonl, profile.json,\n"
      "               load_report.json into the output directory\n"
      "  build-index  build the swept-field index and report its footprint\n"
      "  validate     re-check a dataset against the hand and object\n"
      "\n"
      "options:\n"
      "  --hand FILE       hand description (URDF)\n"
      "  --object FILE     object mesh (OBJ or STL)\n"
      "  --config FILE     key = value run configuration\n"
      "  --dataset FILE    dataset to validate (validate only)\n"
      "  --seed N          master seed\n"
      "  --batch N         candidates per pass\n"
      "  --out DIR         output directory (default: out)\n"
      "  --workers N       worker threads, 0 = hardware count\n"
      "  --export-obj      also write one OBJ per grasp\n";
}

struct CliArgs {
  std::optional<std::string> config_path;
  std::optional<std::string> dataset_path;
  ConfigOverrides overrides;
};

int parse_cli(int argc, char** argv, CliArgs* out) {
  for (int i = 2; i < argc; ++i) {
    std::string a = argv[i];
    auto value = [&](const char* flag) {
      if (i + 1 >= argc) {
        throw std::runtime_error(std::string("missing value for ") + flag);
      }
      return std::string(argv[++i]);
    };
    if (a == "--hand") {
      out->overrides.hand = value("--hand");
    } else if (a == "--object") {
      out->overrides.object = value("--object");
    } else if (a == "--config") {
      out->config_path = value("--config");
    } else if (a == "--dataset") {
      out->dataset_path = value("--dataset");
    } else if (a == "--seed") {
      out->overrides.seed = std::stoull(value("--seed"));
    } else if (a == "--batch") {
      out->overrides.batch = std::stoi(value("--batch"));
    } else if (a == "--out") {
      out->overrides.out = value("--out");
    } else if (a == "--workers") {
      out->overrides.workers = std::stoi(value("--workers"));
    } else if (a == "--export-obj") {
      out->overrides.export_obj = true;
    } else if (a == "--help" || a == "-h") {
      print_usage();
      return 0;
    } else {
      throw std::runtime_error("unknown option: " + a);
    }
  }
  return -1;  // keep going
}

int cmd_synthesize(const CliArgs& args) {
  RunConfig cfg = parse_config(args.config_path, args.overrides);
  if (cfg.hand.empty() || cfg.object.empty()) {
    throw std::runtime_error("synthesize needs --hand and --object");
  }
  RunResult res = run_batch(cfg);

  std::filesystem::create_directories(cfg.out);
  std::string dataset_path = cfg.out + "/grasps.jsonl";
  write_dataset(dataset_path, res.dataset);
  write_profile(cfg.out + "/profile.json", res.profile);
  write_load_report(cfg.out + "/load_report.json", res.loads);

  std::printf("[stage] load object_triangles=%ld hand_links=%ld "
              "hand_joints=%ld\n",
              res.loads.object.triangles_kept, res.loads.hand_links,
              res.loads.hand_joints);
  std::printf("[stage] field patches=%zu boxes=%zu memory_mb=%.2f cache=%s\n",
              res.index.patches, res.index.boxes,
              res.index.memory_bytes / (1024.0 * 1024.0),
              res.index.from_cache ? "hit" : "miss");
  const StageProfile& p = res.profile;
  std::printf("[stage] batch candidates=%ld accepted=%ld balanced=%ld "
              "realized=%ld penetration_free=%ld ik_converged=%ld stable=%ld "
              "valid=%ld\n",
              p.candidates, p.placements_accepted, p.contact_sets_balanced,
              p.ik_finite, p.penetration_free, p.ik_converged, p.stable,
              p.valid);
  std::printf("[stage] profile placement_domains=%.3f "
              "contact_optimization=%.3f kinematics_optimization=%.3f "
              "postprocessing=%.3f total=%.3f grasps_per_second=%.3f\n",
              p.placement_domains, p.contact_optimization,
              p.kinematics_optimization, p.postprocessing, p.total,
              p.grasps_per_second);

  if (cfg.export_obj && !res.dataset.grasps.empty()) {
    std::filesystem::create_directories(cfg.out + "/grasps");
    HandModel model = load_hand(cfg.hand, cfg.hand_scale);
    TriMesh object = load_mesh(cfg.object);
    if (cfg.object_scale != 1.0) object = scale_mesh(object, cfg.object_scale);
    for (std::size_t i = 0; i < res.dataset.grasps.size(); ++i) {
      export_grasp_obj(cfg.out + "/grasps/grasp_" + std::to_string(i) + ".obj",
                       model, res.dataset.grasps[i], object);
    }
  }

  std::printf("[result] dataset=%s grasps=%zu\n", dataset_path.c_str(),
              res.dataset.grasps.size());
  return res.dataset.grasps.empty() ? 1 : 0;
}

int cmd_build_index(const CliArgs& args) {
  RunConfig cfg = parse_config(args.config_path, args.overrides);
  if (cfg.hand.empty()) {
    throw std::runtime_error("build-index needs --hand");
  }
  cfg.cache = true;  // the whole point of the command is the on-disk index
  FieldBuild fb = build_field(cfg);

  std::size_t total = fb.index.total_memory_bytes();
  for (const auto& patch : fb.index.patches) {
    std::printf("[stage] patch id=%d link=%s boxes=%zu memory_kb=%.1f\n",
                patch.patch_id,
                fb.model.links[patch.link].name.c_str(), patch.boxes.size(),
                patch.memory_bytes() / 1024.0);
  }
  std::printf("[result] index patches=%zu memory_mb=%.2f cache=%s path=%s\n",
              fb.index.patches.size(), total / (1024.0 * 1024.0),
              fb.from_cache ? "hit" : "miss",
              (cfg.out + "/index_cache.bin").c_str());
  return 0;
}

int cmd_validate(const CliArgs& args) {
  RunConfig cfg = parse_config(args.config_path, args.overrides);
  if (!args.dataset_path) {
    throw std::runtime_error("validate needs --dataset");
  }
  if (cfg.hand.empty() || cfg.object.empty()) {
    throw std::runtime_error("validate needs --hand and --object");
  }
  GraspDataset ds = read_dataset(*args.dataset_path);
  HandModel model = load_hand(cfg.hand, cfg.hand_scale);
  TriMesh object = load_mesh(cfg.object);
  if (cfg.object_scale != 1.0) object = scale_mesh(object, cfg.object_scale);

  ValidationReport report = validate_dataset(ds, model, object, cfg);
  for (const auto& issue : report.issues) {
    std::printf("[issue] grasp=%ld %s\n", issue.grasp, issue.what.c_str());
  }
  std::printf("[result] checked=%ld issues=%zu ok=%s\n", report.checked,
              report.issues.size(), report.ok() ? "yes" : "no");
  return report.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    print_usage();
    return 2;
  }
  std::string cmd = argv[1];
  if (cmd == "--help" || cmd == "-h" || cmd == "help") {
    print_usage();
    return 0;
  }
  try {
    CliArgs args;
    int early = parse_cli(argc, argv, &args);
    if (early >= 0) return early;
    if (cmd == "synthesize") return cmd_synthesize(args);
    if (cmd == "build-index") return cmd_build_index(args);
    if (cmd == "validate") return cmd_validate(args);
    std::cerr << "unknown command: " << cmd << "\n";
    print_usage();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
