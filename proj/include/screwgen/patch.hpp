#pragma once

#include <array>
#include <optional>
#include <vector>

#include "screwgen/fitting.hpp"
#include "screwgen/spline.hpp"

namespace screwgen {

enum class PatchKind { kOGrid, kCGridLeft, kCGridRight, kSeparator, kGeneric };

struct PatchParameterization {
  SplineMap map;
  PatchKind kind = PatchKind::kGeneric;
  double theta = 0.0;
};

/// Boundary curves of a patch: west (xi = 0), east (xi = 1), south (eta = 0),
/// north (eta = 1), all running in the direction of increasing parameter.
/// A missing pair selects unidirectional interpolation.
struct BoundarySet {
  std::optional<SplineCurve> west;
  std::optional<SplineCurve> east;
  std::optional<SplineCurve> south;
  std::optional<SplineCurve> north;
};

/// Transfinite interpolation evaluated on the control net (exact when the
/// boundary curves live on the boundary restrictions of `basis`).
SplineMap transfinite(const BoundarySet& bounds, const TensorBasis& basis);

struct OGridValidity {
  bool valid = true;
  /// Parameter pairs (a, b) whose connecting segments intersect.
  std::vector<std::pair<double, double>> crossings;
};

/// Checks that the straight segments rotor(t) -> casing(t) do not cross,
/// sampling at `samples` points (default: 4x the larger control-point count).
OGridValidity o_grid_validity(const SplineCurve& rotor, const SplineCurve& casing, int samples = 0);

/// Restriction of an O-grid to xi in [a, b], renormalized to [0, 1].
PatchParameterization cut_c_grid(const PatchParameterization& o_grid, double a, double b, PatchKind kind);

/// Joins curves of equal degree end to end; curve k covers [breaks[k], breaks[k+1]].
SplineCurve join_curves(const std::vector<SplineCurve>& curves, const std::vector<double>& breaks);

/// Boundary of the separator between the two C-grids.
///
/// The left C-grid runs from the lower cusp (xi = 0) to the upper one, the right
/// C-grid from the upper cusp to the lower one; eta = 0 is the rotor in both.
/// `rotor_arcs[0]` is the left rotor arc and `rotor_arcs[1]` the right one, both
/// running from the lower cut to the upper cut. `reparams` map arc parameters
/// to the separator eta. The separator xi runs from the left rotor (0) to the
/// right rotor (1) with the cusp at xi = 0.5.
BoundarySet assemble_separator_boundary(const PatchParameterization& left_c, const PatchParameterization& right_c,
                                        const std::array<SplineCurve, 2>& rotor_arcs,
                                        const std::array<Vec2, 2>& cusps,
                                        const std::array<ReparamFunction, 2>& reparams, const TensorBasis& basis,
                                        int arc_samples = 400);

struct AuxiliarySpace {
  TensorBasis basis;
};

/// Auxiliary space for u = x_xi: xi-degree raised by one with the 0.5 macro
/// split kept C0, eta part unchanged.
AuxiliarySpace build_aux_space(const TensorBasis& basis);

/// Area of the image of a map by Gauss quadrature.
double map_area(const SplineMap& map);

}  // namespace screwgen
