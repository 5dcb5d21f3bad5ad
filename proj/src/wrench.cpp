#include "graspgen/wrench.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace graspgen {

void WrenchProblem::validate() const {
  std::size_t n = points.size();
  if (normals.size() != n || tangent_x.size() != n || tangent_y.size() != n) {
    throw std::invalid_argument("wrench problem: size mismatch");
  }
  if (lambda_torque < 0.0 || mu < 0.0) {
    throw std::invalid_argument("wrench problem: negative lambda or mu");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(normals[i].norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("wrench problem: normal not unit");
    }
    if (std::abs(tangent_x[i].norm() - 1.0) > 1e-9 ||
        std::abs(tangent_y[i].norm() - 1.0) > 1e-9 ||
        std::abs(tangent_x[i].dot(tangent_y[i])) > 1e-9 ||
        std::abs(tangent_x[i].dot(normals[i])) > 1e-9 ||
        std::abs(tangent_y[i].dot(normals[i])) > 1e-9) {
      throw std::invalid_argument("wrench problem: tangent frame not orthonormal");
    }
  }
}

WrenchProblem make_wrench_problem(const std::vector<Vec3>& points,
                                  const std::vector<Vec3>& inward_normals,
                                  double lambda_torque, double mu) {
  WrenchProblem p;
  p.points = points;
  p.normals = inward_normals;
  p.lambda_torque = lambda_torque;
  p.mu = mu;
  p.tangent_x.resize(points.size());
  p.tangent_y.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    tangent_basis(p.normals[i], p.tangent_x[i], p.tangent_y[i]);
  }
  return p;
}

namespace {

// Per-contact torque arms, fixed for a given problem.
struct Precomp {
  std::vector<Vec3> cn, cx, cy;  // p_i x n_i, p_i x x_i, p_i x y_i

  explicit Precomp(const WrenchProblem& p) {
    std::size_t n = p.size();
    cn.resize(n);
    cx.resize(n);
    cy.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      cn[i] = p.points[i].cross(p.normals[i]);
      cx[i] = p.points[i].cross(p.tangent_x[i]);
      cy[i] = p.points[i].cross(p.tangent_y[i]);
    }
  }
};

struct State {
  std::vector<double> alpha, bx, by;
};

double eval(const WrenchProblem& p, const Precomp& pre, const State& s) {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
  for (std::size_t i = 0; i < p.size(); ++i) {
    force += s.alpha[i] * p.normals[i] + s.bx[i] * p.tangent_x[i] +
             s.by[i] * p.tangent_y[i];
    torque += s.alpha[i] * pre.cn[i] + s.bx[i] * pre.cx[i] +
              s.by[i] * pre.cy[i];
  }
  return force.squaredNorm() + p.lambda_torque * torque.squaredNorm();
}

void project(const WrenchProblem& p, int anchor, bool with_friction,
             State& s) {
  for (std::size_t i = 0; i < s.alpha.size(); ++i) {
    if (static_cast<int>(i) == anchor) {
      s.alpha[i] = 1.0;
    } else if (s.alpha[i] < 0.0) {
      s.alpha[i] = 0.0;
    }
    if (!with_friction) {
      s.bx[i] = 0.0;
      s.by[i] = 0.0;
      continue;
    }
    double cap = p.mu * s.alpha[i];
    double r = std::hypot(s.bx[i], s.by[i]);
    if (r > cap) {
      if (cap <= 0.0 || r <= 0.0) {
        s.bx[i] = 0.0;
        s.by[i] = 0.0;
      } else {
        double k = cap / r;
        s.bx[i] *= k;
        s.by[i] *= k;
      }
    }
  }
}

#ifndef NDEBUG
bool feasible(const WrenchProblem& p, int anchor, const State& s) {
  for (std::size_t i = 0; i < s.alpha.size(); ++i) {
    if (s.alpha[i] < 0.0) return false;
    double cap2 = p.mu * p.mu * s.alpha[i] * s.alpha[i];
    if (s.bx[i] * s.bx[i] + s.by[i] * s.by[i] > cap2 + 1e-9) return false;
  }
  return s.alpha[anchor] == 1.0;
}
#endif

// Projected gradient descent with backtracking for one anchor subproblem.
// Monotone: an iteration that cannot decrease the objective leaves the state
// unchanged. Returns the final objective.
double descend(const WrenchProblem& p, const Precomp& pre, int anchor,
               bool with_friction, int iterations,
               const WrenchSolveOptions& opts, State& s) {
  project(p, anchor, with_friction, s);
  double current = eval(p, pre, s);
  std::size_t n = p.size();
  std::vector<double> ga(n), gx(n), gy(n);
  State trial = s;
  for (int it = 0; it < iterations; ++it) {
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      force += s.alpha[i] * p.normals[i] + s.bx[i] * p.tangent_x[i] +
               s.by[i] * p.tangent_y[i];
      torque += s.alpha[i] * pre.cn[i] + s.bx[i] * pre.cx[i] +
                s.by[i] * pre.cy[i];
    }
    torque *= p.lambda_torque;
    for (std::size_t i = 0; i < n; ++i) {
      ga[i] = 2.0 * (force.dot(p.normals[i]) + torque.dot(pre.cn[i]));
      if (with_friction) {
        gx[i] = 2.0 * (force.dot(p.tangent_x[i]) + torque.dot(pre.cx[i]));
        gy[i] = 2.0 * (force.dot(p.tangent_y[i]) + torque.dot(pre.cy[i]));
      }
    }

    double step = opts.step;
    bool moved = false;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) {
        trial.alpha[i] = s.alpha[i] - step * ga[i];
        if (with_friction) {
          trial.bx[i] = s.bx[i] - step * gx[i];
          trial.by[i] = s.by[i] - step * gy[i];
        } else {
          trial.bx[i] = 0.0;
          trial.by[i] = 0.0;
        }
      }
      project(p, anchor, with_friction, trial);
      double next = eval(p, pre, trial);
      if (next <= current) {
        s = trial;
        current = next;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    assert(feasible(p, anchor, s));
    if (!moved) break;
  }
  return current;
}

WrenchSolution run_solver(const WrenchProblem& problem, bool with_friction,
                          const WrenchSolveOptions& opts,
                          const WrenchSolution* warm) {
  if (problem.size() == 0) {
    throw std::invalid_argument("wrench solve: no contacts");
  }
  std::size_t n = problem.size();
  Precomp pre(problem);

  bool use_warm = warm && warm->valid() && warm->alpha.size() == n;
  int iterations = use_warm ? opts.warm_iterations : opts.iterations;

  WrenchSolution best;
  for (int anchor = 0; anchor < static_cast<int>(n); ++anchor) {
    State s;
    if (use_warm) {
      s.alpha = warm->alpha;
      s.bx = warm->beta_x.size() == n ? warm->beta_x
                                      : std::vector<double>(n, 0.0);
      s.by = warm->beta_y.size() == n ? warm->beta_y
                                      : std::vector<double>(n, 0.0);
    } else {
      s.alpha.assign(n, 1.0);
      s.bx.assign(n, 0.0);
      s.by.assign(n, 0.0);
    }

    double value;
    if (with_friction) {
      // Friction-free pass first, then the joint pass from its optimum: the
      // joint descent is monotone, so the result never exceeds the
      // frictionless one.
      descend(problem, pre, anchor, false, iterations, opts, s);
      value = descend(problem, pre, anchor, true, iterations, opts, s);
    } else {
      value = descend(problem, pre, anchor, false, iterations, opts, s);
    }

    if (value < best.objective) {
      best.objective = value;
      best.anchor = anchor;
      best.alpha = s.alpha;
      best.beta_x = s.bx;
      best.beta_y = s.by;
    }
  }
  return best;
}

}  // namespace

double wrench_objective(const WrenchProblem& problem,
                        const WrenchSolution& solution) {
  if (solution.alpha.size() != problem.size()) {
    throw std::invalid_argument("wrench_objective: size mismatch");
  }
  Precomp pre(problem);
  State s;
  s.alpha = solution.alpha;
  s.bx = solution.beta_x.size() == problem.size()
             ? solution.beta_x
             : std::vector<double>(problem.size(), 0.0);
  s.by = solution.beta_y.size() == problem.size()
             ? solution.beta_y
             : std::vector<double>(problem.size(), 0.0);
  return eval(problem, pre, s);
}

WrenchSolution solve_fswo(const WrenchProblem& problem,
                          const WrenchSolveOptions& opts,
                          const WrenchSolution* warm) {
  return run_solver(problem, false, opts, warm);
}

WrenchSolution solve_gswo(const WrenchProblem& problem,
                          const WrenchSolveOptions& opts,
                          const WrenchSolution* warm) {
  if (problem.mu == 0.0) return solve_fswo(problem, opts, warm);
  return run_solver(problem, true, opts, warm);
}

bool is_stable(const WrenchProblem& problem, double eps,
               WrenchSolution* solution, const WrenchSolveOptions& opts) {
  if (eps <= 0.0) throw std::invalid_argument("is_stable: eps must be > 0");
  WrenchSolution s = solve_gswo(problem, opts);
  bool stable = s.objective < eps;
  if (solution) *solution = std::move(s);
  return stable;
}

}  // namespace graspgen
