#pragma once

#include <array>
#include <vector>

#include "screwgen/control_map.hpp"
#include "screwgen/pipeline.hpp"
#include "screwgen/vec2.hpp"

namespace screwgen {

/// (n_mu + 1) x (n_nu + 1) points; point (i, j) at j * (n_mu + 1) + i with i
/// along mu (radial) and j along nu (screw direction).
struct PatchGrid {
  int n_mu = 0;
  int n_nu = 0;
  std::vector<Vec2> points;

  PatchGrid() = default;
  PatchGrid(int n_mu_, int n_nu_)
      : n_mu(n_mu_), n_nu(n_nu_), points(static_cast<size_t>((n_mu_ + 1) * (n_nu_ + 1))) {}
  size_t index(int i, int j) const { return static_cast<size_t>(j * (n_mu + 1) + i); }
  const Vec2& at(int i, int j) const { return points[index(i, j)]; }
  Vec2& at(int i, int j) { return points[index(i, j)]; }
};

/// Patch order inside a scaffold.
enum PatchSlot { kLeftCGrid = 0, kSeparatorPatch = 1, kRightCGrid = 2 };

struct Scaffold {
  double theta = 0.0;
  std::array<PatchGrid, 3> patches;
};

/// Scaffold sizes: C-grids always have n_mu = 1.
struct ScaffoldResolution {
  int n_mu_separator = 12;
  int n_nu_c = 300;
  int n_nu_separator = 160;
};

/// Background resolution. n_r counts the radial elements of a C-grid; the
/// separator spans both gaps and gets 2 n_r. n_a counts axial elements over
/// the screw length (3D only).
struct MeshResolution {
  int n_r = 10;
  int n_s_c = 300;
  int n_s_separator = 160;
  int n_a = 0;

  int separator_radial() const { return 2 * n_r; }
  long elements_2d() const { return 2L * n_r * n_s_c + 2L * n_r * n_s_separator; }
};

/// Scaffold of one patch: x o s at uniform abscissae. C-grids (no control map)
/// take mu along eta and nu along xi; the separator takes mu = xi, nu = eta.
/// Throws kScaffold naming the cells when the composite folds.
PatchGrid build_scaffold(const PatchParameterization& param, const ControlMap* ctrl, int n_mu, int n_nu);
Scaffold build_scaffold(const AngleSlice& slice, const ScaffoldResolution& res);

struct ScaffoldDatabase {
  ScrewParams params;
  ScaffoldResolution resolution;
  /// Uniform over one period, both ends included.
  std::vector<double> angles;
  std::vector<Scaffold> scaffolds;

  double period() const { return params.period(); }
  /// Throws kDatabase when sizes, spacing or patch shapes are inconsistent.
  void validate() const;
};

ScaffoldDatabase build_database(const ScrewParams& params, const std::vector<AngleSlice>& slices,
                                const ScaffoldResolution& res, int threads = 0);
ScaffoldDatabase fill_database(const GeometrySource& geo, const ScaffoldResolution& res, int n_angles,
                               const PipelineOptions& opts = {}, SweepStats* stats = nullptr);

/// Angle reduced modulo the period, then pointwise linear interpolation
/// between the bracketing stored scaffolds.
Scaffold interpolate_scaffold(const ScaffoldDatabase& db, double theta);

/// Bilinear refinement to (n_r + 1) x (n_s + 1) points. Throws kResolution
/// unless n_r, n_s are integer multiples of n_mu, n_nu.
PatchGrid refine_to_background(const PatchGrid& scaffold, int n_r, int n_s);
std::array<PatchGrid, 3> refine_scaffold(const Scaffold& scaffold, const MeshResolution& res);

enum class BoundaryTag : int { kInterior = 0, kLeftScrew = 1, kRightScrew = 2, kBarrel = 3, kInflow = 4, kOutflow = 5 };
const char* tag_name(BoundaryTag tag);

struct BackgroundMesh {
  /// 2 (quads) or 3 (hexahedra).
  int dim = 2;
  std::vector<Vec3> vertices;
  /// Quads use the first four entries, counterclockwise; hexahedra follow the
  /// VTK corner order.
  std::vector<std::array<int, 8>> cells;
  std::vector<BoundaryTag> tags;
  MeshResolution resolution;

  int corners() const { return dim == 2 ? 4 : 8; }
};

/// Conforming quad mesh from the refined left C-grid, separator and right
/// C-grid. Throws kConformity with the largest interface gap above 1e-9 times
/// the mesh size.
BackgroundMesh assemble_2d(const PatchGrid& left, const PatchGrid& separator, const PatchGrid& right);

/// interpolate_scaffold + refine_to_background + assemble_2d.
BackgroundMesh mesh_2d(const ScaffoldDatabase& db, double theta, const MeshResolution& res);

struct ExtensionSpec {
  double length = 0.0;
  double circle_radius = 0.0;
  int elements = 50;

  bool enabled() const { return length > 0.0 && elements > 0; }
};

/// Slices at z_k = k L / n_a with angle theta0 + 2 pi z / pitch, joined into
/// hexahedra; optional inflow and outflow blocks relax the screws to circles.
/// `length` <= 0 selects one pitch. Throws kExtrusion naming the first folded slice.
BackgroundMesh extrude_3d(const ScaffoldDatabase& db, double theta0, const MeshResolution& res,
                          const ExtensionSpec& ext = {}, double length = 0.0);

/// Same mesh with every screw boundary vertex moved radially onto a circle of
/// `radius` about its rotor center and the interior rebuilt by transfinite
/// blending on each patch.
std::array<PatchGrid, 3> circle_target(const std::array<PatchGrid, 3>& grids, const ScrewParams& params,
                                       double radius);

struct MemoryReport {
  double stored = 0.0;
  double full = 0.0;
  double savings = 0.0;
};

/// Scalars stored by the database against the scalars of the full background
/// meshes at every stored angle (two per point).
MemoryReport memory_report(const ScaffoldDatabase& db, const MeshResolution& res);

}  // namespace screwgen
