// Core geometric types shared by every module: rigid transforms, axis-aligned
// boxes, and a few small vector utilities. Everything is double precision and
// in meters.
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <limits>
#include <stdexcept>

namespace graspgen {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

constexpr double kPi = 3.14159265358979323846;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

// Rigid body transform (rotation + translation). Composition order matches
// homogeneous matrices: (a * b).apply(p) == a.apply(b.apply(p)).
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  static RigidTransform from_quat(const Quat& q, const Vec3& t) {
    return {q.normalized().toRotationMatrix(), t};
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }

  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation * other.rotation,
            rotation * other.translation + translation};
  }

  RigidTransform inverse() const {
    Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  // Deviation of the rotation block from a proper rotation. Used by input
  // validation; 0 for exact rotations.
  double orthonormal_error() const {
    double e = (rotation * rotation.transpose() - Mat3::Identity())
                   .cwiseAbs()
                   .maxCoeff();
    double d = std::abs(rotation.determinant() - 1.0);
    return std::max(e, d);
  }
};

inline void require_rigid(const RigidTransform& t, double tol = 1e-6) {
  if (t.orthonormal_error() > tol) {
    throw std::invalid_argument("transform rotation is not orthonormal");
  }
}

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return (min.array() > max.array()).any(); }

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }

  void expand(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }

  Aabb inflated(double margin) const {
    return {min.array() - margin, max.array() + margin};
  }

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }

  bool overlaps(const Aabb& b) const {
    return (min.array() <= b.max.array()).all() &&
           (max.array() >= b.min.array()).all();
  }

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extents() const { return max - min; }
};

// Deterministic orthonormal tangent frame for a unit normal. x and y are unit,
// mutually orthogonal, orthogonal to n, and cross(x, y) == n. The seed axis is
// the coordinate axis with the smallest |n| component, so the construction is
// well conditioned for every n.
inline void tangent_basis(const Vec3& n, Vec3& x, Vec3& y) {
  double len = n.norm();
  if (len < 1e-9) {
    throw std::invalid_argument("tangent_basis: zero normal");
  }
  if (std::abs(len - 1.0) > 1e-6) {
    throw std::invalid_argument("tangent_basis: normal is not unit length");
  }
  int axis = 0;
  double best = std::abs(n.x());
  if (std::abs(n.y()) < best) {
    axis = 1;
    best = std::abs(n.y());
  }
  if (std::abs(n.z()) < best) {
    axis = 2;
  }
  Vec3 e = Vec3::Zero();
  e[axis] = 1.0;
  x = e.cross(n).normalized();
  y = n.cross(x);
}

// Rotation taking unit vector `from` onto unit vector `to` (minimal twist).
inline Mat3 rotation_between(const Vec3& from, const Vec3& to) {
  double c = from.dot(to);
  Vec3 axis = from.cross(to);
  double s = axis.norm();
  if (s < 1e-12) {
    if (c > 0.0) return Mat3::Identity();
    // Antiparallel: rotate pi about any axis orthogonal to `from`.
    Vec3 x, y;
    tangent_basis(from.normalized(), x, y);
    return Eigen::AngleAxisd(kPi, x).toRotationMatrix();
  }
  axis /= s;
  double angle = std::atan2(s, c);
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

}  // namespace graspgen
