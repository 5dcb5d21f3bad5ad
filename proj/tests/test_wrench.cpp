#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "graspgen/rng.hpp"
#include "graspgen/wrench.hpp"

using namespace graspgen;

namespace {

WrenchProblem random_problem(std::uint64_t seed, int n, double mu) {
  Rng rng(seed);
  std::vector<Vec3> points, normals;
  for (int i = 0; i < n; ++i) {
    Vec3 p = 0.05 * rng.uniform_unit_vector();
    points.push_back(p);
    // Roughly inward with some slack so problems are not all trivially
    // balanced.
    Vec3 n_in = (-p + 0.3 * rng.normal_vec3()).normalized();
    normals.push_back(n_in);
  }
  return make_wrench_problem(points, normals, 10.0, mu);
}

// Exhaustive frictionless minimum over the alpha grid [0, hi] with the given
// step, one contact pinned at 1 per anchor. Only for n <= 3.
double grid_oracle(const WrenchProblem& prob, double hi, double step) {
  int n = static_cast<int>(prob.size());
  int m = static_cast<int>(hi / step) + 1;
  double lambda = prob.lambda_torque;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Vec3> force(n), torque(n);
  for (int i = 0; i < n; ++i) {
    force[i] = prob.normals[i];
    torque[i] = prob.points[i].cross(prob.normals[i]);
  }
  auto value = [&](const Vec3& f, const Vec3& t) {
    return f.squaredNorm() + lambda * t.squaredNorm();
  };
  for (int anchor = 0; anchor < n; ++anchor) {
    Vec3 f0 = force[anchor];
    Vec3 t0 = torque[anchor];
    std::vector<int> free;
    for (int i = 0; i < n; ++i) {
      if (i != anchor) free.push_back(i);
    }
    if (free.empty()) {
      best = std::min(best, value(f0, t0));
    } else if (free.size() == 1) {
      for (int a = 0; a < m; ++a) {
        double alpha = a * step;
        best = std::min(best, value(f0 + alpha * force[free[0]],
                                    t0 + alpha * torque[free[0]]));
      }
    } else {
      for (int a = 0; a < m; ++a) {
        double alpha = a * step;
        Vec3 f1 = f0 + alpha * force[free[0]];
        Vec3 t1 = t0 + alpha * torque[free[0]];
        for (int b = 0; b < m; ++b) {
          double beta = b * step;
          best = std::min(best, value(f1 + beta * force[free[1]],
                                      t1 + beta * torque[free[1]]));
        }
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("objective matches a hand computation") {
  std::vector<Vec3> pts = {Vec3(0.1, 0, 0), Vec3(-0.1, 0, 0)};
  std::vector<Vec3> nrm = {Vec3(-1, 0, 0), Vec3(1, 0, 0)};
  WrenchProblem prob = make_wrench_problem(pts, nrm, 10.0, 0.0);
  prob.validate();

  WrenchSolution sol;
  sol.anchor = 0;
  sol.alpha = {1.0, 0.5};
  sol.beta_x = {0.0, 0.0};
  sol.beta_y = {0.0, 0.0};
  // Net force (-1 + 0.5, 0, 0); both torques vanish (p parallel to n).
  REQUIRE(wrench_objective(prob, sol) == Approx(0.25).margin(1e-12));

  sol.alpha = {1.0, 1.0};
  REQUIRE(wrench_objective(prob, sol) == Approx(0.0).margin(1e-12));
}

TEST_CASE("validate rejects malformed problems") {
  std::vector<Vec3> pts = {Vec3(0.1, 0, 0), Vec3(-0.1, 0, 0)};
  std::vector<Vec3> nrm = {Vec3(-1, 0, 0), Vec3(1, 0, 0)};
  WrenchProblem prob = make_wrench_problem(pts, nrm, 10.0, 0.3);
  REQUIRE_NOTHROW(prob.validate());

  WrenchProblem bad = prob;
  bad.normals[0] = Vec3(-2, 0, 0);
  REQUIRE_THROWS(bad.validate());

  bad = prob;
  bad.points.pop_back();
  REQUIRE_THROWS(bad.validate());

  bad = prob;
  bad.tangent_x[1] = bad.tangent_y[1];
  REQUIRE_THROWS(bad.validate());
}

TEST_CASE("antipodal pair balances to zero") {
  std::vector<Vec3> pts = {Vec3(0.03, 0, 0), Vec3(-0.03, 0, 0)};
  std::vector<Vec3> nrm = {Vec3(-1, 0, 0), Vec3(1, 0, 0)};
  WrenchProblem prob = make_wrench_problem(pts, nrm, 10.0, 0.0);
  WrenchSolution sol = solve_fswo(prob);
  REQUIRE(sol.valid());
  REQUIRE(sol.objective <= 1e-6);
  REQUIRE(wrench_objective(prob, sol) ==
          Approx(sol.objective).margin(1e-12));
}

TEST_CASE("three symmetric sphere contacts balance to zero") {
  std::vector<Vec3> pts, nrm;
  for (int i = 0; i < 3; ++i) {
    double a = 2.0 * kPi * i / 3.0;
    Vec3 p(0.04 * std::cos(a), 0.04 * std::sin(a), 0.0);
    pts.push_back(p);
    nrm.push_back(-p.normalized());
  }
  WrenchProblem prob = make_wrench_problem(pts, nrm, 10.0, 0.0);
  WrenchSolution sol = solve_fswo(prob);
  REQUIRE(sol.objective <= 1e-6);
  // All three forces end up equal by symmetry.
  REQUIRE(sol.alpha[0] == Approx(sol.alpha[1]).margin(1e-3));
  REQUIRE(sol.alpha[1] == Approx(sol.alpha[2]).margin(1e-3));
}

TEST_CASE("a single contact can never balance") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    WrenchProblem prob = random_problem(seed, 1, 0.0);
    WrenchSolution sol = solve_fswo(prob);
    // The anchored force has unit magnitude, so the objective is at least 1.
    REQUIRE(sol.objective >= 1.0 - 1e-12);
    REQUIRE_FALSE(is_stable(prob, 1e-3));
  }
}

TEST_CASE("frictionless solve matches the grid oracle") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    int n = 2 + static_cast<int>(seed % 2);
    WrenchProblem prob = random_problem(seed * 31, n, 0.0);
    WrenchSolution sol = solve_fswo(prob);
    double oracle = grid_oracle(prob, 4.0, 5e-3);
    CAPTURE(seed, n);
    REQUIRE(sol.objective <= oracle + 1e-3);
    // The solver may only beat the grid by sub-resolution amounts.
    REQUIRE(sol.objective >= oracle - 1e-2);
  }
}

TEST_CASE("anchor constraint holds in every solution") {
  for (std::uint64_t seed = 40; seed < 52; ++seed) {
    WrenchProblem prob = random_problem(seed, 2 + static_cast<int>(seed % 4),
                                        (seed % 2) ? 0.4 : 0.0);
    WrenchSolution sol =
        (prob.mu > 0.0) ? solve_gswo(prob) : solve_fswo(prob);
    REQUIRE(sol.valid());
    REQUIRE(sol.anchor < static_cast<int>(prob.size()));
    REQUIRE(sol.alpha[sol.anchor] == Approx(1.0).margin(1e-12));
    for (double a : sol.alpha) REQUIRE(a >= 0.0);
    REQUIRE(wrench_objective(prob, sol) ==
            Approx(sol.objective).margin(1e-9));
  }
}

TEST_CASE("friction cone constraint holds in every solution") {
  for (std::uint64_t seed = 70; seed < 82; ++seed) {
    double mu = 0.1 + 0.1 * (seed % 5);
    WrenchProblem prob = random_problem(seed, 3, mu);
    WrenchSolution sol = solve_gswo(prob);
    for (std::size_t i = 0; i < prob.size(); ++i) {
      double tangential = std::hypot(sol.beta_x[i], sol.beta_y[i]);
      REQUIRE(tangential <= mu * sol.alpha[i] + 1e-9);
    }
  }
}

TEST_CASE("friction never hurts and zero friction changes nothing") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    WrenchProblem prob = random_problem(seed, 2 + static_cast<int>(seed % 3),
                                        0.0);
    WrenchSolution fric_free = solve_fswo(prob);

    WrenchProblem same = prob;
    WrenchSolution zero_mu = solve_gswo(same);
    REQUIRE(zero_mu.objective == Approx(fric_free.objective).margin(1e-9));
    REQUIRE(zero_mu.anchor == fric_free.anchor);

    same.mu = 0.5;
    WrenchSolution with_mu = solve_gswo(same);
    REQUIRE(with_mu.objective <= fric_free.objective + 1e-9);
  }
}

TEST_CASE("warm starts reach the cold quality in fewer iterations") {
  for (std::uint64_t seed = 200; seed < 210; ++seed) {
    WrenchProblem prob = random_problem(seed, 4, 0.0);
    WrenchSolveOptions opts;
    WrenchSolution cold = solve_fswo(prob, opts);

    // Nudge the contact points the way a finetune step would.
    Rng rng(seed * 7);
    WrenchProblem moved = prob;
    for (Vec3& p : moved.points) p += 0.001 * rng.uniform_unit_vector();

    WrenchSolution cold_moved = solve_fswo(moved, opts);
    WrenchSolution warm = solve_fswo(moved, opts, &cold);
    CAPTURE(seed);
    REQUIRE(warm.objective <= cold_moved.objective + 1e-6);
  }
}

TEST_CASE("warm start with a mismatched size falls back to cold") {
  WrenchProblem prob = random_problem(1, 3, 0.0);
  WrenchSolution cold = solve_fswo(prob);
  WrenchSolution stale;
  stale.anchor = 0;
  stale.alpha = {1.0, 0.2};  // two contacts, problem has three
  stale.beta_x = {0.0, 0.0};
  stale.beta_y = {0.0, 0.0};
  WrenchSolution sol = solve_fswo(prob, {}, &stale);
  REQUIRE(sol.objective == Approx(cold.objective).margin(1e-12));
}

TEST_CASE("is_stable applies a strict threshold") {
  std::vector<Vec3> pts = {Vec3(0.03, 0, 0), Vec3(-0.03, 0, 0)};
  std::vector<Vec3> nrm = {Vec3(-1, 0, 0), Vec3(1, 0, 0)};
  WrenchProblem good = make_wrench_problem(pts, nrm, 10.0, 0.0);
  WrenchSolution sol;
  REQUIRE(is_stable(good, 1e-4, &sol));
  REQUIRE(sol.objective < 1e-4);

  // Two contacts pushing the same way cannot cancel.
  nrm[1] = Vec3(-1, 0, 0);
  WrenchProblem bad = make_wrench_problem(pts, nrm, 10.0, 0.0);
  REQUIRE_FALSE(is_stable(bad, 1e-4));
}

TEST_CASE("solver is deterministic") {
  WrenchProblem prob = random_problem(5, 4, 0.3);
  WrenchSolution a = solve_gswo(prob);
  WrenchSolution b = solve_gswo(prob);
  REQUIRE(a.objective == b.objective);
  REQUIRE(a.anchor == b.anchor);
  for (std::size_t i = 0; i < a.alpha.size(); ++i) {
    REQUIRE(a.alpha[i] == b.alpha[i]);
  }
}
