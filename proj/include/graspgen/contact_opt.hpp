// Blockwise zeroth-order search over contact domains: one contact slot per
// chosen dependency group, mutated in the local tangent plane, projected back
// onto the domain, and scored by warm-started wrench solves.
#pragma once

#include <cstdint>
#include <vector>

#include "graspgen/contact_field.hpp"
#include "graspgen/wrench.hpp"

namespace graspgen {

struct ContactOptParams {
  int n_outer = 8;
  int n_inner = 32;
  int restarts = 4;     // independent searches, best result wins
  double sigma = 0.01;  // tangent-plane mutation scale, m
  double lambda_torque = 10.0;
  double mu = 0.3;
  WrenchSolveOptions solve;
};

struct StaticContact {
  Vec3 position;  // hand base frame
  Vec3 normal;    // unit inward force direction
};

// Nearest domain element to the candidate by Euclidean position; ties go to
// the lowest element id. Throws on an empty domain.
int project_to_domain(const Vec3& candidate, const ContactDomain& domain);

struct ContactOptResult {
  std::vector<int> element_ids;          // per slot
  std::vector<DomainElement> elements;   // per slot, copies of the winners
  double objective = std::numeric_limits<double>::infinity();
  WrenchSolution solution;  // over [slot contacts..., static contacts...]
  int evaluations = 0;      // wrench solves performed
};

// Starts each slot at a uniformly random element, then runs n_outer rounds
// of per-slot tangent-plane Gaussian mutation + projection, accepting a
// candidate only when its warm-started objective beats the incumbent, so the
// recorded objective never increases within a search. The search repeats
// `restarts` times from fresh random slots (the local moves cannot cross the
// plateau where a contact's force weight is pinned at zero) and the best
// search wins. Static contacts join every wrench problem but are never
// mutated.
ContactOptResult optimize_contacts(
    const std::vector<const ContactDomain*>& domains,
    const ContactOptParams& params,
    const std::vector<StaticContact>& static_contacts, std::uint64_t seed);

}  // namespace graspgen
