#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "screwgen/control_map.hpp"
#include "screwgen/egg.hpp"
#include "screwgen/patch.hpp"
#include "screwgen/profile.hpp"

namespace screwgen {

/// Cross-section at theta = 0 plus the screw parameters; other angles are
/// rigid co-rotations of it.
struct GeometrySource {
  ScrewParams params;
  CrossSection base;

  static GeometrySource booy(const ScrewParams& params, int n_points = 720);
  static GeometrySource from_file(const std::filesystem::path& path, const ScrewParams& params);
  CrossSection at(double theta) const { return rotate_section(base, params, theta); }
};

struct PipelineOptions {
  /// Fitting threshold relative to the barrel radius.
  double fit_threshold = 1e-4;
  int degree = 3;
  int rotor_elements = 32;
  /// Separator elements across the gap, split evenly at xi = 0.5.
  int separator_xi_elements = 12;
  /// Initial separator elements along the rotors, refined adaptively.
  int separator_eta_elements = 16;
  int arc_samples = 400;
  /// Both-float matching runs on every k-th angle; the rest are blended.
  int match_stride = 5;
  /// Stride of the first hierarchical level (0 disables seeding).
  int seed_stride = 8;
  EggOptions egg;
  bool control = true;
  ControlOptions control_opts;
  /// Angles per warm-started control chain.
  int control_chain = 10;
  int fold_samples = 64;
  int threads = 0;
};

/// Per-point casing parameters of the rotor clouds at theta = 0, both sides,
/// in the index order of the base cross-section.
struct ReferenceMatching {
  std::array<std::vector<double>, 2> xi;
};

ReferenceMatching reference_matching(const GeometrySource& geo, const PipelineOptions& opts = {});

/// Parametric value of a casing point: clockwise from angle 0 (left) or pi
/// (right) about the casing center.
double casing_param(const ScrewParams& params, Side side, const Vec2& p);

struct CGridPair {
  /// Full rotor O-grids and their C-grid cuts, [0] left, [1] right.
  std::array<PatchParameterization, 2> o_grid;
  std::array<PatchParameterization, 2> c_grid;
  /// Rotor arcs facing the separator, from the lower to the upper cut.
  std::array<SplineCurve, 2> arcs;
  std::array<Vec2, 2> cusps;
};

/// O-grids from the reference matching shifted to theta, validity check and
/// cut at the cusp parameters. Throws kTopology when rotor-to-casing
/// segments cross.
CGridPair build_c_grids(const GeometrySource& geo, const ReferenceMatching& ref, double theta,
                        const PipelineOptions& opts = {});

/// Both-float matching of the two rotor arcs; maps arc parameters to eta.
std::array<ReparamFunction, 2> match_arcs(const CGridPair& c, const PipelineOptions& opts = {});

/// Bicubic (by default) separator basis with the p-fold split at 0.5 and
/// `eta_elements` uniform spans along the rotors.
TensorBasis separator_basis(const PipelineOptions& opts, int eta_elements);

struct AngleSlice {
  double theta = 0.0;
  PatchParameterization left;
  PatchParameterization separator;
  PatchParameterization right;
  ControlMap control;
  int newton_iterations = 0;
  int control_iterations = 0;
  bool repaired = false;
};

struct SweepStats {
  std::vector<int> newton_iterations;
  std::vector<int> control_iterations;
  int total_newton = 0;
  double seconds = 0.0;
};

/// Three-patch parameterizations for every angle. EGG solves of the first
/// hierarchical level start from transfinite maps, later levels from the
/// interpolated control nets of their solved neighbours. Throws kDatabase
/// listing the angles whose folding could not be repaired. An angle exactly
/// one period after the first reuses the first slice.
std::vector<AngleSlice> parameterize_angles(const GeometrySource& geo, std::span<const double> thetas,
                                            const PipelineOptions& opts = {}, SweepStats* stats = nullptr);

/// `n` uniform angles covering one profile period, both ends included.
std::vector<double> sweep_angles(const ScrewParams& params, int n);

}  // namespace screwgen
