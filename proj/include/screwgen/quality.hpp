#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "screwgen/scaffold.hpp"

namespace screwgen {

/// Minimum over the corners of det(e1, e2) / (|e1| |e2|) for a counterclockwise
/// quad; 0 when an edge has zero length.
double scaled_jacobian_quad(const std::array<Vec2, 4>& q);
/// Same for a hexahedron in VTK corner order, with the three edges at each corner.
double scaled_jacobian_hex(const std::array<Vec3, 8>& h);

struct QualityReport {
  std::vector<double> scaled_jacobian;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  /// Elements whose minimum corner value is <= 0.
  int fold_count = 0;
  long elements = 0;
  /// |cos| of the angle between the cell's parametric directions.
  double orthogonality_mean = 0.0;
  double orthogonality_max = 0.0;
};

QualityReport report(const BackgroundMesh& mesh);

struct GateResult {
  bool pass = true;
  double worst_theta = 0.0;
  QualityReport worst;
  int samples = 0;
  std::vector<double> min_per_theta;
};

/// Quality report of the 2D mesh at every angle; passes iff no element folds.
GateResult sweep_gate(const ScaffoldDatabase& db, const MeshResolution& res, std::span<const double> thetas);

/// Stored angles, optionally followed by the midpoints between them.
std::vector<double> gate_angles(const ScaffoldDatabase& db, bool midway);

/// JSON summary; `per_element` adds the scaled Jacobian field.
std::string to_json(const QualityReport& r, bool per_element = false);

}  // namespace screwgen
