#include "graspgen/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <utility>

#include "graspgen/parallel.hpp"
#include "graspgen/rng.hpp"
#include "graspgen/wrench.hpp"

namespace graspgen {

namespace {

constexpr std::uint64_t kTagObjectSamples = 0x6f626a73;
constexpr std::uint64_t kTagHandSamples = 0x686e6473;
constexpr std::uint64_t kTagPlacement = 0x706c6163;
constexpr std::uint64_t kTagGroups = 0x67727073;
constexpr std::uint64_t kTagContactOpt = 0x636f7074;
constexpr std::uint64_t kTagReverse = 0x72657673;
constexpr std::uint64_t kTagUnused = 0x756e7573;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::VectorXd random_config(const HandModel& model,
                              const std::vector<std::pair<double, double>>& lims,
                              Rng& rng) {
  Eigen::VectorXd q(model.actuated_count);
  for (int j = 0; j < model.actuated_count; ++j) {
    q[j] = rng.uniform(lims[j].first, lims[j].second);
  }
  return q;
}

std::vector<std::pair<double, double>> joint_limits(const HandModel& model) {
  std::vector<std::pair<double, double>> lims(model.actuated_count, {0.0, 0.0});
  for (const auto& link : model.links) {
    if (link.joint_index >= 0) {
      lims[link.joint_index] = {link.limit_lo, link.limit_hi};
    }
  }
  return lims;
}

}  // namespace

double closest_on_parts(const std::vector<ConvexPart>& parts, const Vec3& p,
                        Vec3* surface_point, Vec3* surface_normal) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& part : parts) {
    Vec3 n;
    Vec3 cp = part.closest_surface_point(p, &n);
    double d = (p - cp).norm();
    if (d < best) {
      best = d;
      if (surface_point) *surface_point = cp;
      if (surface_normal) *surface_normal = n;
    }
  }
  return best;
}

std::vector<SurfaceSample> preprocess_object(
    const std::vector<SurfaceSample>& samples, double probe_half_width,
    double depth_threshold) {
  if (probe_half_width <= 0.0 || depth_threshold < 0.0) {
    throw std::invalid_argument("preprocess_object: bad probe dimensions");
  }
  std::vector<SurfaceSample> kept;
  kept.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    // A finger touching sample i occupies the region just outside the
    // surface; opposing surface inside that probe means a slot too narrow
    // to enter.
    Vec3 c = samples[i].position + depth_threshold * samples[i].normal;
    bool blocked = false;
    for (std::size_t j = 0; j < samples.size() && !blocked; ++j) {
      if (j == i) continue;
      Vec3 d = samples[j].position - c;
      if (std::abs(d.x()) > probe_half_width ||
          std::abs(d.y()) > probe_half_width ||
          std::abs(d.z()) > probe_half_width) {
        continue;
      }
      if (samples[j].normal.dot(samples[i].normal) < 0.0) blocked = true;
    }
    if (!blocked) kept.push_back(samples[i]);
  }
  return kept;
}

StaticSurface collect_static_surface(const HandModel& model,
                                     const std::vector<ContactPatch>& patches,
                                     const DependencyGroups& groups) {
  StaticSurface out;
  auto frames = forward_kinematics(model, model.mid_config());
  for (int link : groups.static_links) {
    for (const auto& part : model.links[link].parts) {
      out.parts.push_back({&part, frames[link], link});
    }
  }
  for (const auto& patch : patches) {
    if (groups.group_of(patch.link) != -1) continue;
    const RigidTransform& f = frames[patch.link];
    for (std::size_t i = 0; i < patch.points.size(); ++i) {
      out.samples.push_back({f.apply(patch.points[i]),
                             f.rotate(patch.normals[i])});
      out.sample_links.push_back(patch.link);
    }
  }
  return out;
}

PlacementRecord place_object(const PlacementSpec& spec, const HandModel& model,
                             const std::vector<ContactPatch>& patches,
                             const std::vector<SurfaceSample>& object_samples,
                             const StaticSurface& statics, std::uint64_t seed) {
  if (object_samples.empty()) {
    throw std::invalid_argument("place_object: no object samples");
  }
  Rng rng(seed);
  PlacementRecord rec;

  bool want_static = rng.uniform() < spec.static_contact_prob;
  const SurfaceSample& os =
      object_samples[rng.uniform_index(object_samples.size())];

  if (want_static && !statics.samples.empty()) {
    // Pin the chosen object sample against a static surface sample,
    // anti-aligned normals, free roll about the contact normal.
    std::size_t si = rng.uniform_index(statics.samples.size());
    const SurfaceSample& ss = statics.samples[si];
    double roll = rng.uniform(0.0, 2.0 * kPi);
    Mat3 r = Eigen::AngleAxisd(roll, ss.normal).toRotationMatrix() *
             rotation_between(os.normal, -ss.normal);
    rec.pose.rotation = r;
    rec.pose.translation = ss.position - r * os.position;
    rec.static_contacts.push_back({ss.position, ss.normal});
    rec.static_links.push_back(statics.sample_links[si]);
  } else if (spec.mode == PlacementMode::kExhaustive) {
    // Same pinning, but against a contact vector drawn from the swept field.
    if (patches.empty()) {
      throw std::invalid_argument("place_object: no patches");
    }
    const ContactPatch& patch = patches[rng.uniform_index(patches.size())];
    int fp = patch.field_points[rng.uniform_index(patch.field_points.size())];
    auto lims = joint_limits(model);
    auto frames = forward_kinematics(model, random_config(model, lims, rng));
    Vec3 x = frames[patch.link].apply(patch.points[fp]);
    Vec3 m = frames[patch.link].rotate(patch.normals[fp]);
    double roll = rng.uniform(0.0, 2.0 * kPi);
    Mat3 r = Eigen::AngleAxisd(roll, m).toRotationMatrix() *
             rotation_between(os.normal, -m);
    rec.pose.rotation = r;
    rec.pose.translation = x - r * os.position;
  } else {
    Vec3 t = spec.canonical_center;
    for (int a = 0; a < 3; ++a) {
      t[a] += rng.uniform(-spec.canonical_half_extents[a],
                          spec.canonical_half_extents[a]);
    }
    rec.pose.rotation = rng.uniform_quaternion().toRotationMatrix();
    rec.pose.translation = t;
  }

  // Verdict: the pose must not push the object into any static link.
  auto world = transform_samples(object_samples, rec.pose);
  for (const auto& pp : statics.parts) {
    auto pen = object_penetration(world, *pp.part, pp.pose,
                                  spec.penetration_margin);
    rec.penetration = std::max(rec.penetration, pen.max_depth);
  }
  rec.accepted = rec.penetration <= spec.penetration_margin;
  return rec;
}

RealizeResult realize_grasp(const HandModel& model, const Eigen::VectorXd& q0,
                            const std::vector<ContactTarget>& targets,
                            const IkParams& params, int finetune_rounds,
                            int finetune_iterations) {
  RealizeResult rr;
  rr.q = q0;
  rr.used_joints.assign(model.actuated_count, false);
  if (targets.empty()) {
    throw std::invalid_argument("realize_grasp: no targets");
  }

  auto project = [&](const Eigen::VectorXd& q,
                     std::vector<ContactTarget>* refreshed,
                     std::vector<GraspContact>* realized,
                     std::vector<double>* residuals) {
    auto frames = forward_kinematics(model, q);
    double worst = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const ContactTarget& t = targets[i];
      RigidTransform inv = frames[t.link].inverse();
      Vec3 sp, sn;
      double d = closest_on_parts(model.links[t.link].parts,
                                  inv.apply(t.object_point), &sp, &sn);
      worst = std::max(worst, d);
      if (refreshed) {
        (*refreshed)[i].hand_point_local = sp;
        (*refreshed)[i].hand_normal_local = sn;
      }
      if (realized) {
        realized->push_back({frames[t.link].apply(sp),
                             frames[t.link].rotate(sn), t.link});
      }
      if (residuals) residuals->push_back(d);
    }
    return worst;
  };

  IkResult ik = solve_contact_ik(model, q0, targets, params);
  if (!ik.finite) {
    rr.finite = false;
    rr.max_position_residual = std::numeric_limits<double>::infinity();
    return rr;
  }
  Eigen::VectorXd q = ik.q;
  rr.used_joints = ik.used_joints;
  double worst = project(q, nullptr, nullptr, nullptr);

  IkParams fine = params;
  fine.iterations = finetune_iterations;
  for (int round = 0; round < finetune_rounds; ++round) {
    std::vector<ContactTarget> refreshed = targets;
    project(q, &refreshed, nullptr, nullptr);
    IkResult step = solve_contact_ik(model, q, refreshed, fine);
    if (!step.finite) break;
    double w2 = project(step.q, nullptr, nullptr, nullptr);
    if (w2 > worst + 1e-6) break;  // keep the previous configuration
    q = step.q;
    worst = w2;
    for (std::size_t j = 0; j < rr.used_joints.size(); ++j) {
      if (step.used_joints[j]) rr.used_joints[j] = true;
    }
  }

  rr.q = q;
  rr.max_position_residual =
      project(q, nullptr, &rr.realized, &rr.position_residuals);
  rr.finite = q.allFinite();
  return rr;
}

namespace {

struct Slot {
  PlacementRecord place_store;
  std::vector<ContactDomain> domain_store;
  const PlacementRecord* place = nullptr;
  const std::vector<ContactDomain>* domains = nullptr;
  std::vector<int> chosen;
  ContactOptResult opt;
  std::vector<ContactTarget> targets;
  RealizeResult real;
  Grasp grasp;
  bool alive = false;
  bool valid = false;
};

}  // namespace

FieldBuild build_field(const RunConfig& cfg) {
  FieldBuild fb;
  fb.model = load_hand(cfg.hand, cfg.hand_scale);

  std::vector<std::vector<SurfaceSample>> link_samples(fb.model.links.size());
  for (std::size_t l = 0; l < fb.model.links.size(); ++l) {
    if (fb.model.links[l].visual.vertices.empty()) continue;
    link_samples[l] =
        sample_surface(fb.model.links[l].visual, cfg.samples_per_cm2,
                       mix_seed(cfg.seed, kTagHandSamples, l));
  }
  fb.patches = decompose_patches(fb.model, link_samples, cfg.patch_radius,
                                 cfg.seed, cfg.field_points_per_patch);

  std::uint64_t key = index_cache_key(cfg);
  std::string cache_path = cfg.out + "/index_cache.bin";
  if (cfg.cache) {
    if (auto got = ContactFieldIndex::load(cache_path, key)) {
      fb.index = std::move(*got);
      fb.from_cache = true;
    }
  }
  if (!fb.from_cache) {
    fb.index = ContactFieldIndex::build(fb.model, fb.patches,
                                        cfg.field_configs, cfg.box_width,
                                        cfg.seed, cfg.codebook_size);
    fb.index.cache_key = key;
    if (cfg.cache) {
      std::filesystem::create_directories(cfg.out);
      fb.index.save(cache_path);
    }
  }
  return fb;
}

RunResult run_batch(const RunConfig& cfg) {
  auto wall0 = Clock::now();
  RunResult out;

  FieldBuild fb = build_field(cfg);
  const HandModel& model = fb.model;
  const std::vector<ContactPatch>& patches = fb.patches;
  const ContactFieldIndex& index = fb.index;

  LoadReport object_report;
  TriMesh object = load_mesh(cfg.object, &object_report);
  if (cfg.object_scale != 1.0) object = scale_mesh(object, cfg.object_scale);
  out.loads.object = object_report;
  out.loads.hand_links = static_cast<long>(model.links.size());
  out.loads.hand_joints = model.actuated_count;
  for (const auto& link : model.links) {
    out.loads.hand_parts += static_cast<long>(link.parts.size());
  }

  auto raw_samples = sample_surface(object, cfg.samples_per_cm2,
                                    mix_seed(cfg.seed, kTagObjectSamples));
  auto field_samples = preprocess_object(raw_samples, cfg.probe_half_width,
                                         cfg.probe_depth_threshold);
  if (field_samples.empty()) {
    throw std::runtime_error(
        "run_batch: preprocessing stripped every object sample");
  }

  out.index.patches = index.patches.size();
  for (const auto& p : index.patches) out.index.boxes += p.boxes.size();
  out.index.memory_bytes = index.total_memory_bytes();
  out.index.from_cache = fb.from_cache;

  auto groups = dependency_groups(model);
  StaticSurface statics = collect_static_surface(model, patches, groups);
  auto lims = joint_limits(model);

  PlacementSpec spec;
  spec.mode = cfg.placement_mode;
  spec.canonical_center = cfg.canonical_center;
  spec.canonical_half_extents = cfg.canonical_half_extents;
  spec.static_contact_prob = cfg.static_contact_prob;
  spec.penetration_margin = cfg.penetration_margin;

  ContactOptParams copt;
  copt.n_outer = cfg.n_outer;
  copt.n_inner = cfg.n_inner;
  copt.restarts = cfg.restarts;
  copt.sigma = cfg.sigma;
  copt.lambda_torque = cfg.lambda_torque;
  copt.mu = cfg.mu;
  copt.solve.iterations = cfg.pgd_iterations;
  copt.solve.warm_iterations = cfg.pgd_warm_iterations;
  copt.solve.step = cfg.pgd_step;

  IkParams ikp;
  ikp.beta = cfg.beta;
  ikp.iterations = cfg.ik_iterations;
  ikp.step_clamp = cfg.step_clamp;
  ikp.residual_tol = cfg.residual_tol;
  ikp.damping_scale = cfg.damping_scale;

  const Eigen::VectorXd q_start = model.mid_config();
  int workers = resolve_workers(cfg.workers);
  bool keep_search = cfg.passes > 1;
  std::vector<PlacementRecord> cached_places;
  std::vector<std::vector<ContactDomain>> cached_domains;
  if (keep_search) {
    cached_places.resize(cfg.batch);
    cached_domains.resize(cfg.batch);
  }

  StageProfile prof;
  std::vector<Grasp> kept;
  const int chunk_size = 64;

  for (int pass = 0; pass < cfg.passes; ++pass) {
    for (int chunk_start = 0; chunk_start < cfg.batch;
         chunk_start += chunk_size) {
      int nc = std::min(chunk_size, cfg.batch - chunk_start);
      std::vector<Slot> slots(nc);

      auto t = Clock::now();
      parallel_for(0, nc, workers, [&](int i) {
        Slot& s = slots[i];
        int c = chunk_start + i;
        std::uint64_t g =
            static_cast<std::uint64_t>(pass) * cfg.batch + c;
        if (pass == 0) {
          PlacementRecord pr = place_object(
              spec, model, patches, field_samples, statics,
              mix_seed(cfg.seed, kTagPlacement, c));
          std::vector<ContactDomain> doms;
          if (pr.accepted) {
            doms = query_domains(index, field_samples, pr.pose, cfg.theta_hit,
                                 model, groups);
          }
          if (keep_search) {
            cached_places[c] = std::move(pr);
            cached_domains[c] = std::move(doms);
            s.place = &cached_places[c];
            s.domains = &cached_domains[c];
          } else {
            s.place_store = std::move(pr);
            s.domain_store = std::move(doms);
            s.place = &s.place_store;
            s.domains = &s.domain_store;
          }
        } else {
          s.place = &cached_places[c];
          s.domains = &cached_domains[c];
        }

        s.alive = s.place->accepted;
        if (!s.alive) return;
        std::vector<int> nonempty;
        for (std::size_t di = 0; di < s.domains->size(); ++di) {
          if (!(*s.domains)[di].elements.empty()) {
            nonempty.push_back(static_cast<int>(di));
          }
        }
        if (static_cast<int>(nonempty.size()) < cfg.k_contacts) {
          s.alive = false;
          return;
        }
        Rng gr(mix_seed(cfg.seed, kTagGroups, g));
        for (int pick = 0; pick < cfg.k_contacts; ++pick) {
          std::size_t j = pick + gr.uniform_index(nonempty.size() - pick);
          std::swap(nonempty[pick], nonempty[j]);
        }
        s.chosen.assign(nonempty.begin(), nonempty.begin() + cfg.k_contacts);
      });
      prof.placement_domains += seconds_since(t);
      for (const auto& s : slots) prof.placements_accepted += s.alive ? 1 : 0;

      t = Clock::now();
      parallel_for(0, nc, workers, [&](int i) {
        Slot& s = slots[i];
        if (!s.alive) return;
        std::uint64_t g = static_cast<std::uint64_t>(pass) * cfg.batch +
                          chunk_start + i;
        std::vector<const ContactDomain*> picked;
        picked.reserve(s.chosen.size());
        for (int di : s.chosen) picked.push_back(&(*s.domains)[di]);
        s.opt = optimize_contacts(picked, copt, s.place->static_contacts,
                                  mix_seed(cfg.seed, kTagContactOpt, g));
        // A contact set is only worth realizing if it already balances.
        if (!s.opt.solution.valid() || s.opt.objective >= cfg.eps_stable) {
          s.alive = false;
        }
      });
      prof.contact_optimization += seconds_since(t);
      for (const auto& s : slots) {
        prof.contact_sets_balanced += s.alive ? 1 : 0;
      }

      t = Clock::now();
      parallel_for(0, nc, workers, [&](int i) {
        Slot& s = slots[i];
        if (!s.alive) return;
        std::uint64_t g = static_cast<std::uint64_t>(pass) * cfg.batch +
                          chunk_start + i;
        // A failed realization usually means the lookup picked a hand face
        // the fingers cannot turn toward the surface from the rest pose.
        // Re-drawing the lookup explores sibling branches of that choice.
        // An attempt that converges and clears collisions wins outright.
        bool have = false;
        bool best_clear = false;
        for (int attempt = 0; attempt < cfg.lookup_attempts; ++attempt) {
          std::vector<ContactTarget> targets;
          for (std::size_t slot = 0; slot < s.opt.elements.size(); ++slot) {
            const DomainElement& el = s.opt.elements[slot];
            IndexRep rep = reverse_lookup(
                index, el,
                mix_seed(cfg.seed, kTagReverse,
                         (g << 6) + (static_cast<std::uint64_t>(attempt) << 3) +
                             slot));
            ContactTarget tgt;
            tgt.object_point = el.position;
            tgt.object_normal = -el.normal;
            tgt.link = rep.link;
            tgt.hand_point_local = rep.point;
            tgt.hand_normal_local = rep.normal;
            targets.push_back(tgt);
          }
          RealizeResult real = realize_grasp(model, q_start, targets, ikp,
                                             cfg.finetune_rounds,
                                             cfg.finetune_iterations);
          if (!real.finite) continue;
          bool conv = real.max_position_residual <= cfg.contact_tol;
          bool clear = false;
          if (conv) {
            clear = validate_grasp_collisions(model, real.q, raw_samples,
                                              s.place->pose,
                                              cfg.penetration_margin)
                        .clean();
          }
          bool better;
          if (!have) {
            better = true;
          } else if (clear != best_clear) {
            better = clear;
          } else {
            better =
                real.max_position_residual < s.real.max_position_residual;
          }
          if (better) {
            s.real = std::move(real);
            s.targets = std::move(targets);
            best_clear = clear;
            have = true;
          }
          if (best_clear) break;
        }
        if (!have) s.alive = false;
      });
      prof.kinematics_optimization += seconds_since(t);
      for (const auto& s : slots) prof.ik_finite += s.alive ? 1 : 0;

      t = Clock::now();
      parallel_for(0, nc, workers, [&](int i) {
        Slot& s = slots[i];
        if (!s.alive) return;
        std::uint64_t g = static_cast<std::uint64_t>(pass) * cfg.batch +
                          chunk_start + i;
        // Unused joints draw uniformly; a draw that curls a free segment
        // into the object is discarded and redrawn from the same stream.
        Rng ur(mix_seed(cfg.seed, kTagUnused, g));
        Eigen::VectorXd q;
        CollisionReport report;
        for (int attempt = 0; attempt < cfg.unused_attempts; ++attempt) {
          q = s.real.q;
          for (int j = 0; j < model.actuated_count; ++j) {
            if (j < static_cast<int>(s.real.used_joints.size()) &&
                s.real.used_joints[j]) {
              continue;
            }
            q[j] = ur.uniform(lims[j].first, lims[j].second);
          }
          report = validate_grasp_collisions(model, q, raw_samples,
                                             s.place->pose,
                                             cfg.penetration_margin);
          if (report.clean()) break;
        }

        auto frames = forward_kinematics(model, q);
        GraspFlags flags;
        std::vector<GraspContact> contacts;
        auto world_field = transform_samples(field_samples, s.place->pose);
        double worst = 0.0;
        for (const auto& tgt : s.targets) {
          RigidTransform inv = frames[tgt.link].inverse();
          Vec3 sp, sn;
          double d = closest_on_parts(model.links[tgt.link].parts,
                                      inv.apply(tgt.object_point), &sp, &sn);
          if (!std::isfinite(d)) return;  // link without parts, drop
          worst = std::max(worst, d);
          Vec3 p_world = frames[tgt.link].apply(sp);
          // Force direction from the object side: a flat finger face meeting
          // the curved surface edge-on leaves the face normal meaningless.
          std::size_t nearest = 0;
          double best_d2 = std::numeric_limits<double>::infinity();
          for (std::size_t fi = 0; fi < world_field.size(); ++fi) {
            double d2 = (world_field[fi].position - p_world).squaredNorm();
            if (d2 < best_d2) {
              best_d2 = d2;
              nearest = fi;
            }
          }
          contacts.push_back({p_world, -world_field[nearest].normal,
                              tgt.link});
        }
        for (std::size_t si = 0; si < s.place->static_contacts.size(); ++si) {
          const StaticContact& sc = s.place->static_contacts[si];
          contacts.push_back({sc.position, sc.normal,
                              s.place->static_links[si]});
        }
        flags.ik_converged = worst <= cfg.contact_tol;
        flags.penetration_free = report.clean();

        std::vector<Vec3> pts, nrms;
        for (const auto& cgc : contacts) {
          pts.push_back(cgc.position);
          nrms.push_back(cgc.normal);
        }
        WrenchProblem wp =
            make_wrench_problem(pts, nrms, cfg.lambda_torque, cfg.mu);
        WrenchSolution sol;
        flags.stable = is_stable(wp, cfg.eps_stable, &sol, copt.solve);

        s.grasp.object_pose = s.place->pose;
        s.grasp.q = std::move(q);
        s.grasp.contacts = std::move(contacts);
        s.grasp.objective = sol.objective;
        s.grasp.flags = flags;
        s.valid = flags.all();
      });
      prof.postprocessing += seconds_since(t);

      for (auto& s : slots) {
        if (s.alive) {
          prof.penetration_free += s.grasp.flags.penetration_free ? 1 : 0;
          prof.ik_converged += s.grasp.flags.ik_converged ? 1 : 0;
          prof.stable += s.grasp.flags.stable ? 1 : 0;
        }
        if (s.valid) kept.push_back(std::move(s.grasp));
      }
    }
  }

  out.dataset.grasps = std::move(kept);
  prof.candidates = static_cast<long>(cfg.passes) * cfg.batch;
  prof.valid = static_cast<long>(out.dataset.grasps.size());
  prof.total = seconds_since(wall0);
  prof.grasps_per_second = prof.total > 0.0 ? prof.valid / prof.total : 0.0;
  out.profile = prof;
  return out;
}

}  // namespace graspgen
