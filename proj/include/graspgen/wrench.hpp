// Self-balancing wrench optimization. A contact set is graded by how close
// the best nonnegative combination of contact forces (optionally with
// friction-disc tangential terms) comes to zero net force and torque; a grasp
// counts as stable when that optimum falls below a threshold.
#pragma once

#include <limits>
#include <vector>

#include "graspgen/geometry.hpp"

namespace graspgen {

struct WrenchProblem {
  std::vector<Vec3> points;    // contact positions, m
  std::vector<Vec3> normals;   // unit inward force directions
  std::vector<Vec3> tangent_x; // orthonormal tangent pair per contact
  std::vector<Vec3> tangent_y;
  double lambda_torque = 10.0;
  double mu = 0.0;

  std::size_t size() const { return points.size(); }

  // Throws std::invalid_argument if sizes mismatch, normals are not unit, or
  // tangent frames are not orthonormal (1e-9 tolerance).
  void validate() const;
};

// Builds the problem with deterministic tangent bases derived from each
// normal.
WrenchProblem make_wrench_problem(const std::vector<Vec3>& points,
                                  const std::vector<Vec3>& inward_normals,
                                  double lambda_torque, double mu);

struct WrenchSolution {
  double objective = std::numeric_limits<double>::infinity();
  int anchor = -1;
  std::vector<double> alpha;
  std::vector<double> beta_x;
  std::vector<double> beta_y;

  bool valid() const { return anchor >= 0; }
};

struct WrenchSolveOptions {
  int iterations = 64;
  int warm_iterations = 8;
  double step = 0.1;
  int max_backtracks = 20;
};

// Force f_i = alpha_i n_i + beta_x_i x_i + beta_y_i y_i; returns
// ||sum f_i||^2 + lambda ||sum p_i x f_i||^2.
double wrench_objective(const WrenchProblem& problem,
                        const WrenchSolution& solution);

// Frictionless solve (beta forced to zero): for each anchor j with alpha_j
// pinned at 1, projected gradient descent over the remaining alphas (clamped
// at 0); best anchor wins. A warm start with matching contact count seeds
// every anchor from the previous alphas and runs warm_iterations instead.
WrenchSolution solve_fswo(const WrenchProblem& problem,
                          const WrenchSolveOptions& opts = {},
                          const WrenchSolution* warm = nullptr);

// Friction solve over (alpha, beta); projection clamps alpha at 0 then
// radially scales each (beta_x_i, beta_y_i) onto the disc of radius
// mu * alpha_i. mu == 0 delegates to solve_fswo. Each anchor first runs the
// alpha-only descent and then the joint one, so the result never exceeds the
// frictionless optimum.
WrenchSolution solve_gswo(const WrenchProblem& problem,
                          const WrenchSolveOptions& opts = {},
                          const WrenchSolution* warm = nullptr);

// True iff the (GSWO when mu > 0, else FSWO) optimum is strictly below eps.
bool is_stable(const WrenchProblem& problem, double eps,
               WrenchSolution* solution = nullptr,
               const WrenchSolveOptions& opts = {});

}  // namespace graspgen
