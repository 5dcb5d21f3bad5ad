#pragma once

#include <string>

#include "graspgen/pipeline.hpp"

namespace graspgen {

// One grasp per line: {"pose":[qw,qx,qy,qz,tx,ty,tz],"q":[...],
// "contacts":[{"p":[...],"n":[...],"link":i}...],"objective":...,
// "flags":{...}}. Line order follows candidate order, so identical runs
// produce byte-identical files.
void write_dataset(const std::string& path, const GraspDataset& dataset);
GraspDataset read_dataset(const std::string& path);

void write_profile(const std::string& path, const StageProfile& profile);
void write_load_report(const std::string& path, const LoadSummary& loads);

// Posed hand plus object, one OBJ object block per link.
void export_grasp_obj(const std::string& path, const HandModel& model,
                      const Grasp& grasp, const TriMesh& object);

}  // namespace graspgen
