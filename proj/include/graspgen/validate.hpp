#pragma once

#include <string>
#include <vector>

#include "graspgen/dataset.hpp"

namespace graspgen {

struct ValidationIssue {
  long grasp = -1;
  std::string what;
};

struct ValidationReport {
  long checked = 0;
  std::vector<ValidationIssue> issues;
  bool ok() const { return checked > 0 && issues.empty(); }
};

// Re-derives every acceptance property from the dataset alone: joint limits,
// pose rigidity, contacts on the hand surface and near the object surface,
// object penetration within margin, and wrench objective under the stability
// threshold. Surface distances go through raw triangle tests rather than the
// synthesis-side projections.
ValidationReport validate_dataset(const GraspDataset& dataset,
                                  const HandModel& model,
                                  const TriMesh& object,
                                  const RunConfig& config);

}  // namespace graspgen
