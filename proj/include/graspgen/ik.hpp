// Damped least-squares IK driving assigned hand surface points (with their
// outward normals) onto object contact points. Each target contributes two
// stacked position blocks: the surface point itself and the point offset by
// beta along the normal, which aligns the normal as a side effect.
#pragma once

#include <vector>

#include "graspgen/hand.hpp"

namespace graspgen {

struct ContactTarget {
  Vec3 object_point;       // p, base frame
  Vec3 object_normal;      // n, unit inward force direction, base frame
  int link = -1;           // hand link carrying the assigned surface point
  Vec3 hand_point_local;   // assigned point in link frame
  Vec3 hand_normal_local;  // hand outward normal in link frame, unit
};

struct IkParams {
  double beta = 0.01;           // normal lever arm, m
  int iterations = 30;
  double step_clamp = 0.2;      // per-joint |dq| cap per iteration
  double residual_tol = 1e-4;   // early exit on max position residual, m
  double damping_scale = 1e-4;  // lambda = max(min, scale * mean diag(J^T J))
  double damping_min = 1e-6;
  int max_backtracks = 10;
};

struct IkResidual {
  double position = 0.0;      // |p - hand point|, m
  double normal_angle = 0.0;  // angle(hand normal, n), rad
};

struct IkResult {
  Eigen::VectorXd q;
  std::vector<IkResidual> residuals;
  std::vector<bool> used_joints;  // column seen nonzero for any target
  bool finite = true;
  int iterations = 0;
  double objective = 0.0;  // final stacked squared residual
};

// Iterates dq = (J^T J + lambda I)^-1 J^T r with per-joint step clamping,
// joint-limit clamping, and a monotone safeguard (step halved while the
// stacked objective increases). Targets on static links contribute zero
// Jacobian columns and simply keep their residuals.
IkResult solve_contact_ik(const HandModel& model, const Eigen::VectorXd& q0,
                          const std::vector<ContactTarget>& targets,
                          const IkParams& params = {});

}  // namespace graspgen
