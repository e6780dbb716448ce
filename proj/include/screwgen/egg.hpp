#pragma once

#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "screwgen/patch.hpp"

namespace screwgen {

struct EggOptions {
  /// Negative selects 1e-4 * median(g11 + g22) of the initial map.
  double epsilon = -1.0;
  double newton_tol = 1e-8;
  int max_iter = 50;
  int max_halvings = 20;
  /// Gauss points per span and direction; 0 selects max degree + 1.
  int quad_per_span = 0;
};

/// Elliptic grid generation with the auxiliary variable u ~ x_xi. The inner
/// control points of `map` and the coefficients `d` of u are the unknowns.
struct EggProblem {
  SplineMap map;
  AuxiliarySpace aux;
  std::vector<Vec2> d;
  double epsilon = 0.0;
  double newton_tol = 1e-8;
  int max_iter = 50;
  int max_halvings = 20;
  int quad_per_span = 0;
};

/// Sets up the problem with `initial` as first iterate and d from the L2
/// projection of its xi-derivative.
EggProblem make_egg_problem(const SplineMap& initial, const EggOptions& opts = {});

/// Unknown vector: inner control points (2 per point, interleaved x/y, in
/// inner_indices() order) followed by d (2 per aux function).
Eigen::VectorXd egg_unknowns(const EggProblem& problem);
void set_egg_unknowns(EggProblem& problem, const Eigen::VectorXd& z);

/// Residual: the u-equation tested with every aux function (2 per function)
/// followed by the x-equation tested with the inner functions.
/// `quad_per_span` overrides the problem's quadrature when positive.
Eigen::VectorXd egg_residual(const EggProblem& problem, int quad_per_span = 0);
Eigen::SparseMatrix<double> egg_jacobian(const EggProblem& problem);

struct EggStats {
  int iterations = 0;
  std::vector<double> residual_history;
};

struct EggResult {
  SplineMap map;
  std::vector<Vec2> d;
  EggStats stats;
};

class EggNonconvergence : public Error {
 public:
  EggNonconvergence(const std::string& msg, EggResult last)
      : Error(ErrorCode::kNonconvergence, msg), last_(std::move(last)) {}
  const EggResult& last() const { return last_; }

 private:
  EggResult last_;
};

/// Damped Newton iteration until |R| <= newton_tol * (|R_0| + 1).
EggResult egg_solve(const EggProblem& problem);

struct FoldReport {
  int n_samples = 0;
  /// Sample cells (i, j) of the n_samples x n_samples grid with a corner where det J <= 0.
  std::vector<std::pair<int, int>> cells;
  /// Sample points (xi, eta) where det J <= 0.
  std::vector<std::pair<double, double>> points;
  bool empty() const { return points.empty(); }
};

FoldReport check_folding(const SplineMap& map, int n_samples = 64);

/// Inserts knots at the midpoints of spans holding defects (both directions)
/// and solves again; at most three rounds.
EggResult repair_folding(const EggProblem& problem, const FoldReport& defects);

}  // namespace screwgen
