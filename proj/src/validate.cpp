#include "graspgen/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "graspgen/rng.hpp"
#include "graspgen/wrench.hpp"

namespace graspgen {

namespace {

// Matches the tag the synthesis pipeline mixes into the object sampling
// stream, so the validator sees the same sample set.
constexpr std::uint64_t kTagObjectSamples = 0x6f626a73;

double distance_to_mesh(const TriMesh& mesh, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : mesh.triangles) {
    Vec3 cp = closest_point_on_triangle(p, mesh.vertices[t[0]],
                                        mesh.vertices[t[1]],
                                        mesh.vertices[t[2]]);
    best = std::min(best, (p - cp).norm());
  }
  return best;
}

double distance_to_link_surface(const Link& link, const Vec3& p_local) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& part : link.parts) {
    for (const auto& t : part.triangles) {
      Vec3 cp = closest_point_on_triangle(p_local, part.vertices[t[0]],
                                          part.vertices[t[1]],
                                          part.vertices[t[2]]);
      best = std::min(best, (p_local - cp).norm());
    }
  }
  return best;
}

// Depth of p inside the convex part by raw plane evaluation.
double plane_depth(const ConvexPart& part, const Vec3& p_local) {
  double depth = std::numeric_limits<double>::infinity();
  for (const auto& plane : part.planes) {
    double slack = plane.offset - plane.normal.dot(p_local);
    if (slack < 0.0) return 0.0;  // outside this face, outside the part
    depth = std::min(depth, slack);
  }
  return part.planes.empty() ? 0.0 : depth;
}

}  // namespace

ValidationReport validate_dataset(const GraspDataset& dataset,
                                  const HandModel& model,
                                  const TriMesh& object,
                                  const RunConfig& config) {
  ValidationReport report;
  report.checked = static_cast<long>(dataset.grasps.size());

  auto object_samples = sample_surface(
      object, config.samples_per_cm2,
      mix_seed(config.seed, kTagObjectSamples));

  auto complain = [&](long gi, const std::string& what) {
    report.issues.push_back({gi, what});
  };

  for (long gi = 0; gi < report.checked; ++gi) {
    const Grasp& g = dataset.grasps[gi];

    if (g.q.size() != model.actuated_count) {
      complain(gi, "joint vector size mismatch");
      continue;
    }
    try {
      require_rigid(g.object_pose);
    } catch (const std::exception& e) {
      complain(gi, std::string("pose not rigid: ") + e.what());
      continue;
    }
    bool limits_ok = true;
    for (const auto& link : model.links) {
      if (link.joint_index < 0) continue;
      double v = g.q[link.joint_index];
      if (v < link.limit_lo - 1e-9 || v > link.limit_hi + 1e-9) {
        std::ostringstream msg;
        msg << "joint " << link.joint_name << " out of limits: " << v;
        complain(gi, msg.str());
        limits_ok = false;
      }
    }
    if (!limits_ok) continue;

    if (g.contacts.empty()) {
      complain(gi, "no contacts");
      continue;
    }

    auto frames = forward_kinematics(model, g.q);
    RigidTransform object_inv = g.object_pose.inverse();
    for (std::size_t ci = 0; ci < g.contacts.size(); ++ci) {
      const GraspContact& c = g.contacts[ci];
      if (c.link < 0 || c.link >= static_cast<int>(model.links.size())) {
        complain(gi, "contact with invalid link id");
        continue;
      }
      if (std::abs(c.normal.norm() - 1.0) > 1e-6) {
        complain(gi, "contact normal not unit length");
        continue;
      }
      Vec3 local = frames[c.link].inverse().apply(c.position);
      double dh = distance_to_link_surface(model.links[c.link], local);
      if (dh > config.contact_tol) {
        std::ostringstream msg;
        msg << "contact " << ci << " is " << dh
            << " m off the hand surface (limit " << config.contact_tol << ")";
        complain(gi, msg.str());
      }
      double dobj = distance_to_mesh(object, object_inv.apply(c.position));
      if (dobj > config.contact_tol) {
        std::ostringstream msg;
        msg << "contact " << ci << " is " << dobj
            << " m off the object surface (limit " << config.contact_tol
            << ")";
        complain(gi, msg.str());
      }
    }

    // Object samples against every link part, raw plane loop.
    double worst_depth = 0.0;
    for (const auto& s : object_samples) {
      Vec3 world = g.object_pose.apply(s.position);
      for (std::size_t l = 0; l < model.links.size(); ++l) {
        Vec3 local = frames[l].inverse().apply(world);
        for (const auto& part : model.links[l].parts) {
          if (!part.bounds.inflated(1e-9).contains(local)) continue;
          worst_depth = std::max(worst_depth, plane_depth(part, local));
        }
      }
    }
    if (worst_depth > config.penetration_margin) {
      std::ostringstream msg;
      msg << "object penetrates the hand by " << worst_depth << " m (limit "
          << config.penetration_margin << ")";
      complain(gi, msg.str());
    }

    std::vector<Vec3> pts, nrms;
    for (const auto& c : g.contacts) {
      pts.push_back(c.position);
      nrms.push_back(c.normal);
    }
    try {
      WrenchProblem wp = make_wrench_problem(pts, nrms, config.lambda_torque,
                                             config.mu);
      WrenchSolveOptions opts;
      opts.iterations = config.pgd_iterations;
      opts.warm_iterations = config.pgd_warm_iterations;
      opts.step = config.pgd_step;
      WrenchSolution sol = solve_gswo(wp, opts);
      if (!(sol.objective < config.eps_stable)) {
        std::ostringstream msg;
        msg << "wrench objective " << sol.objective
            << " not under stability threshold " << config.eps_stable;
        complain(gi, msg.str());
      }
    } catch (const std::exception& e) {
      complain(gi, std::string("wrench recheck failed: ") + e.what());
    }
  }
  return report;
}

}  // namespace graspgen
