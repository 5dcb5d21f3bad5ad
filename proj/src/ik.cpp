#include "graspgen/ik.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace graspgen {

namespace {

// Stacked residual vector (two 3-blocks per target) at the given frames.
Eigen::VectorXd stacked_residual(const std::vector<RigidTransform>& frames,
                                 const std::vector<ContactTarget>& targets,
                                 double beta) {
  Eigen::VectorXd r(6 * targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const ContactTarget& t = targets[i];
    const RigidTransform& f = frames[t.link];
    Vec3 hp = f.apply(t.hand_point_local);
    Vec3 hn = f.rotate(t.hand_normal_local);
    r.segment<3>(6 * i) = t.object_point - hp;
    r.segment<3>(6 * i + 3) =
        (t.object_point + beta * t.object_normal) - (hp + beta * hn);
  }
  return r;
}

}  // namespace

IkResult solve_contact_ik(const HandModel& model, const Eigen::VectorXd& q0,
                          const std::vector<ContactTarget>& targets,
                          const IkParams& params) {
  if (q0.size() != model.actuated_count) {
    throw std::invalid_argument("solve_contact_ik: config dimension mismatch");
  }
  if (params.beta <= 0.0) {
    throw std::invalid_argument("solve_contact_ik: beta must be > 0");
  }
  for (const auto& t : targets) {
    if (t.link < 0 || t.link >= static_cast<int>(model.links.size())) {
      throw std::invalid_argument("solve_contact_ik: invalid target link");
    }
    if (!t.object_point.allFinite() || !t.object_normal.allFinite() ||
        !t.hand_point_local.allFinite() || !t.hand_normal_local.allFinite()) {
      throw std::invalid_argument("solve_contact_ik: non-finite target");
    }
  }

  const int dof = model.actuated_count;
  const std::size_t k = targets.size();

  IkResult result;
  result.q = model.clamp_to_limits(q0);
  result.used_joints.assign(dof, false);
  result.residuals.resize(k);
  if (k == 0) return result;

  auto frames = forward_kinematics(model, result.q);
  Eigen::VectorXd r = stacked_residual(frames, targets, params.beta);
  double objective = r.squaredNorm();

  Eigen::MatrixXd J(6 * k, dof);
  for (int it = 0; it < params.iterations; ++it) {
    result.iterations = it + 1;

    J.setZero();
    for (std::size_t i = 0; i < k; ++i) {
      const ContactTarget& t = targets[i];
      J.middleRows<3>(6 * i) =
          point_jacobian(model, frames, t.link, t.hand_point_local);
      // The offset point rides rigidly on the link, so its Jacobian is the
      // point Jacobian of the shifted local point.
      J.middleRows<3>(6 * i + 3) = point_jacobian(
          model, frames, t.link,
          t.hand_point_local + params.beta * t.hand_normal_local);
    }
    for (int c = 0; c < dof; ++c) {
      if (!result.used_joints[c] && J.col(c).cwiseAbs().maxCoeff() > 1e-12) {
        result.used_joints[c] = true;
      }
    }

    Eigen::MatrixXd JtJ = J.transpose() * J;
    double lambda = std::max(params.damping_min,
                             params.damping_scale * JtJ.trace() /
                                 std::max(1, dof));
    JtJ.diagonal().array() += lambda;
    Eigen::VectorXd dq = JtJ.ldlt().solve(J.transpose() * r);

    if (!dq.allFinite()) {
      result.finite = false;
      break;
    }

    // Monotone safeguard: shrink the step while the stacked objective grows.
    // The cap is reapplied to each shrunken candidate rather than shrinking
    // the capped step: capping clips components independently, which can
    // turn a large near-singular step into an ascent direction, while the
    // raw direction is always descent once it fits under the cap.
    bool moved = false;
    for (int bt = 0; bt <= params.max_backtracks; ++bt) {
      Eigen::VectorXd step =
          dq.cwiseMax(-params.step_clamp).cwiseMin(params.step_clamp);
      Eigen::VectorXd q_try = model.clamp_to_limits(result.q + step);
      auto frames_try = forward_kinematics(model, q_try);
      Eigen::VectorXd r_try = stacked_residual(frames_try, targets, params.beta);
      double obj_try = r_try.squaredNorm();
      if (obj_try <= objective) {
        result.q = std::move(q_try);
        frames = std::move(frames_try);
        r = std::move(r_try);
        objective = obj_try;
        moved = true;
        break;
      }
      dq *= 0.5;
    }
    if (!moved) break;  // stalled at a (possibly clamped) stationary point

    double max_pos = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      max_pos = std::max(max_pos, r.segment<3>(6 * i).norm());
    }
    if (max_pos < params.residual_tol) break;
  }

  if (!result.q.allFinite()) result.finite = false;
  result.objective = objective;
  for (std::size_t i = 0; i < k; ++i) {
    const ContactTarget& t = targets[i];
    const RigidTransform& f = frames[t.link];
    result.residuals[i].position = r.segment<3>(6 * i).norm();
    Vec3 hn = f.rotate(t.hand_normal_local);
    double c = std::clamp(hn.dot(t.object_normal), -1.0, 1.0);
    result.residuals[i].normal_angle = std::acos(c);
  }
  return result;
}

}  // namespace graspgen
