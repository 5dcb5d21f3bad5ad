#include "graspgen/contact_opt.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "graspgen/rng.hpp"

namespace graspgen {

int project_to_domain(const Vec3& candidate, const ContactDomain& domain) {
  if (domain.elements.empty()) {
    throw std::invalid_argument("project_to_domain: empty domain");
  }
  int best = 0;
  double best_d2 = (domain.elements[0].position - candidate).squaredNorm();
  for (int i = 1; i < static_cast<int>(domain.elements.size()); ++i) {
    double d2 = (domain.elements[i].position - candidate).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

namespace {

// Writes slot i of the shared problem from a domain element. The wrench
// force direction is the negated object outward normal.
void write_slot(WrenchProblem& prob, int i, const DomainElement& el) {
  prob.points[i] = el.position;
  prob.normals[i] = -el.normal;
  tangent_basis(prob.normals[i], prob.tangent_x[i], prob.tangent_y[i]);
}

WrenchSolution solve(const WrenchProblem& prob, const WrenchSolveOptions& opts,
                     const WrenchSolution* warm) {
  return prob.mu > 0.0 ? solve_gswo(prob, opts, warm)
                       : solve_fswo(prob, opts, warm);
}

}  // namespace

ContactOptResult optimize_contacts(
    const std::vector<const ContactDomain*>& domains,
    const ContactOptParams& params,
    const std::vector<StaticContact>& static_contacts, std::uint64_t seed) {
  const int k = static_cast<int>(domains.size());
  if (k < 1) throw std::invalid_argument("optimize_contacts: no domains");
  for (const auto* d : domains) {
    if (!d || d->elements.empty()) {
      throw std::invalid_argument("optimize_contacts: empty domain");
    }
  }
  if (params.sigma <= 0.0 || params.n_inner < 1 || params.n_outer < 0 ||
      params.restarts < 1) {
    throw std::invalid_argument("optimize_contacts: bad parameters");
  }

  Rng rng(seed);
  const int s = static_cast<int>(static_contacts.size());

  WrenchProblem prob;
  prob.lambda_torque = params.lambda_torque;
  prob.mu = params.mu;
  prob.points.resize(k + s);
  prob.normals.resize(k + s);
  prob.tangent_x.resize(k + s);
  prob.tangent_y.resize(k + s);
  for (int j = 0; j < s; ++j) {
    prob.points[k + j] = static_contacts[j].position;
    prob.normals[k + j] = static_contacts[j].normal;
    tangent_basis(prob.normals[k + j], prob.tangent_x[k + j],
                  prob.tangent_y[k + j]);
  }

  ContactOptResult result;
  int evaluations = 0;

  for (int restart = 0; restart < params.restarts; ++restart) {
    ContactOptResult run;
    run.element_ids.resize(k);
    for (int i = 0; i < k; ++i) {
      run.element_ids[i] = static_cast<int>(
          rng.uniform_index(domains[i]->elements.size()));
      write_slot(prob, i, domains[i]->elements[run.element_ids[i]]);
    }
    run.solution = solve(prob, params.solve, nullptr);
    run.objective = run.solution.objective;
    ++evaluations;

    WrenchProblem trial = prob;
    for (int outer = 0; outer < params.n_outer; ++outer) {
      // The stored objective must stay in lockstep with the stored solution.
      assert(std::abs(wrench_objective(prob, run.solution) -
                      run.objective) <= 1e-9);
      for (int i = 0; i < k; ++i) {
        const ContactDomain& domain = *domains[i];
        const DomainElement& cur = domains[i]->elements[run.element_ids[i]];
        Vec3 tx, ty;
        tangent_basis(-cur.normal, tx, ty);

        int best_id = -1;  // -1 keeps the incumbent
        double best_obj = run.objective;
        WrenchSolution best_sol;
        for (int m = 0; m < params.n_inner; ++m) {
          double u = params.sigma * rng.normal();
          double v = params.sigma * rng.normal();
          int cand = project_to_domain(cur.position + u * tx + v * ty, domain);
          write_slot(trial, i, domain.elements[cand]);
          WrenchSolution sol = solve(trial, params.solve, &run.solution);
          ++evaluations;
          if (sol.objective < best_obj) {
            best_obj = sol.objective;
            best_id = cand;
            best_sol = std::move(sol);
          }
        }
        if (best_id >= 0) {
          run.element_ids[i] = best_id;
          write_slot(prob, i, domain.elements[best_id]);
          run.solution = std::move(best_sol);
          run.objective = best_obj;
        }
        trial.points[i] = prob.points[i];
        trial.normals[i] = prob.normals[i];
        trial.tangent_x[i] = prob.tangent_x[i];
        trial.tangent_y[i] = prob.tangent_y[i];
      }
    }

    if (run.objective < result.objective) result = std::move(run);
  }

  result.evaluations = evaluations;
  result.elements.reserve(k);
  for (int i = 0; i < k; ++i) {
    result.elements.push_back(domains[i]->elements[result.element_ids[i]]);
  }
  return result;
}

}  // namespace graspgen
