#pragma once

#include <filesystem>
#include <string>

#include "screwgen/pipeline.hpp"
#include "screwgen/scaffold.hpp"

namespace screwgen {

/// Everything one CLI run needs. Lengths are metres and angles radians; the
/// JSON keys carry the unit as a suffix.
struct PipelineConfig {
  ScrewParams params;
  /// Profile point file; empty selects the Booy construction.
  std::string profile_file;
  int profile_points = 720;
  PipelineOptions pipeline;
  int n_angles = 101;
  ScaffoldResolution scaffold{10, 300, 160};
  MeshResolution mesh{10, 300, 160, 0};
  /// Axial length of a 3D mesh; 0 selects one pitch.
  double mesh_length = 0.0;
  ExtensionSpec extension;
  std::string database = "screwgen.sgdb";
  std::string mesh_file = "mesh.vtk";
  std::string quality_file = "quality.json";
  std::string profile_out = "profile.txt";

  /// Throws kConfig when a resolution rule or a parameter range is violated.
  void validate() const;
  GeometrySource geometry() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string dump_config(const PipelineConfig& c);

}  // namespace screwgen
