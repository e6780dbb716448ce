#pragma once

#include <vector>

#include "screwgen/spline.hpp"

namespace screwgen {

/// Self-map of the unit square s(mu, nu) = (mu, sigma(mu, nu)) with sigma a
/// scalar tensor spline; only the second coordinate slides.
struct ControlMap {
  TensorBasis basis;
  /// Control value (i, j) at j * n + i, i along mu, j along nu.
  std::vector<double> sigma;

  int n() const { return basis.xi.dim(); }
  int m() const { return basis.eta.dim(); }
  double at(int i, int j) const { return sigma[static_cast<size_t>(j * n() + i)]; }

  double eval(double mu, double nu) const;
  Vec2 map(double mu, double nu) const { return {mu, eval(mu, nu)}; }
  /// Partial derivatives (d sigma / d mu, d sigma / d nu).
  Vec2 gradient(double mu, double nu) const;
  /// Pinned rows at nu = 0 and nu = 1 and column increments >= delta_mono.
  bool feasible(double delta_mono) const;
};

/// Biquadratic basis with 8 x 8 elements.
TensorBasis default_control_basis();

/// sigma(mu, nu) = nu exactly.
ControlMap identity_control(const TensorBasis& basis = default_control_basis());

/// 1/2 times the midpoint Riemann sum over samples x samples cells of
/// (d(x o s)/d mu . d(x o s)/d nu)^2.
double orthogonality_cost(const SplineMap& x, const ControlMap& s, int samples = 64);

/// Central finite-difference gradient of the cost with respect to the free
/// control values (rows 1 .. m-2), in control-value order; pinned entries are zero.
std::vector<double> control_cost_gradient(const SplineMap& x, const ControlMap& s, double h = 1e-6,
                                          int samples = 64);

struct ControlOptions {
  double delta_mono = 1e-3;
  int max_iter = 200;
  double rel_tol = 1e-8;
  double fd_step = 1e-6;
  int samples = 64;
};

struct ControlResult {
  ControlMap map;
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
};

/// Projected limited-memory quasi-Newton descent over the column increments,
/// which stay on {increment >= delta_mono, sum = 1} after every step.
ControlResult optimize_control(const SplineMap& x, const ControlMap& init, const ControlOptions& opts = {});

}  // namespace screwgen
