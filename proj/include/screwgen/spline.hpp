#pragma once

#include <array>
#include <span>
#include <vector>

#include "screwgen/error.hpp"
#include "screwgen/vec2.hpp"

namespace screwgen {

inline constexpr int kMaxDegree = 7;
/// Knots closer than this are treated as equal.
inline constexpr double kKnotTol = 1e-12;

/// Open knot vector on [0,1]: end knots repeated degree+1 times, interior
/// multiplicities at most `degree` (C0 allowed).
class KnotVector {
 public:
  KnotVector() = default;
  KnotVector(int degree, std::vector<double> knots);

  /// Open knot vector with the given interior knots (repeats allowed).
  static KnotVector with_interior(int degree, std::span<const double> interior);
  /// `elements` equal spans.
  static KnotVector uniform(int degree, int elements);

  int degree() const { return degree_; }
  const std::vector<double>& knots() const { return knots_; }
  /// Number of basis functions.
  int dim() const { return static_cast<int>(knots_.size()) - degree_ - 1; }

  /// Index s with knots[s] <= x < knots[s+1]; the last non-empty span for x == 1.
  int find_span(double x) const;
  int multiplicity(double x) const;
  /// Interior knots with repetition, in order.
  std::vector<double> interior() const;
  /// Distinct knot values including 0 and 1.
  std::vector<double> breakpoints() const;
  int num_elements() const { return static_cast<int>(breakpoints().size()) - 1; }

  friend bool operator==(const KnotVector&, const KnotVector&) = default;

 private:
  int degree_ = 0;
  std::vector<double> knots_;
};

/// Nonzero basis functions (and derivatives) at one parameter value.
/// values[k][j] is the k-th derivative of function `first + j`.
struct BasisEval {
  int first = 0;
  int count = 0;
  std::array<std::array<double, kMaxDegree + 1>, 3> values{};
};

/// Local evaluation up to derivative order `order` (0..2). Derivatives of
/// order above the degree come back as zeros.
BasisEval eval_local(const KnotVector& kv, double x, int order = 0);

/// Dense values of all basis functions at xi.
std::vector<double> eval_basis(const KnotVector& kv, double xi);
/// Dense derivative values of the given order (1 or 2).
std::vector<double> eval_basis_derivatives(const KnotVector& kv, double xi, int order);
std::vector<double> greville_abscissae(const KnotVector& kv);
/// Knot vector after inserting `new_knots`.
KnotVector refine_knots(const KnotVector& kv, std::span<const double> new_knots);

struct TensorBasis {
  KnotVector xi;
  KnotVector eta;

  int dim() const { return xi.dim() * eta.dim(); }
  friend bool operator==(const TensorBasis&, const TensorBasis&) = default;
};

class SplineCurve {
 public:
  SplineCurve() = default;
  SplineCurve(KnotVector basis, std::vector<Vec2> control_points);

  const KnotVector& basis() const { return basis_; }
  const std::vector<Vec2>& control_points() const { return cps_; }
  std::vector<Vec2>& control_points() { return cps_; }

  Vec2 eval(double t) const;
  Vec2 derivative(double t, int order = 1) const;
  Vec2 front() const { return cps_.front(); }
  Vec2 back() const { return cps_.back(); }

 private:
  KnotVector basis_;
  std::vector<Vec2> cps_;
};

SplineCurve refine(const SplineCurve& curve, std::span<const double> new_knots);
/// Same curve traversed backwards, t -> 1 - t.
SplineCurve reversed(const SplineCurve& curve);
/// Restriction to [a, b] re-normalized to [0, 1]; exact up to round-off.
SplineCurve subcurve(const SplineCurve& curve, double a, double b);

/// Position and partial derivatives of a spline map at one point.
struct MapDerivatives {
  Vec2 x;
  Vec2 x_xi;
  Vec2 x_eta;
  Vec2 x_xixi;
  Vec2 x_xieta;
  Vec2 x_etaeta;
};

struct Jacobian2 {
  Vec2 col_xi;
  Vec2 col_eta;
  double det = 0.0;
  double g11 = 0.0;
  double g12 = 0.0;
  double g22 = 0.0;
};

/// Tensor-product spline map x(xi, eta) = sum c_ij N_i(xi) M_j(eta).
/// Control point (i, j) is stored at j * n + i.
class SplineMap {
 public:
  SplineMap() = default;
  SplineMap(TensorBasis basis, std::vector<Vec2> control_points);

  const TensorBasis& basis() const { return basis_; }
  int n() const { return basis_.xi.dim(); }
  int m() const { return basis_.eta.dim(); }
  int index(int i, int j) const { return j * n() + i; }
  const Vec2& at(int i, int j) const { return cps_[index(i, j)]; }
  Vec2& at(int i, int j) { return cps_[index(i, j)]; }
  const std::vector<Vec2>& control_points() const { return cps_; }
  std::vector<Vec2>& control_points() { return cps_; }

  bool is_boundary(int i, int j) const {
    return i == 0 || j == 0 || i == n() - 1 || j == m() - 1;
  }
  std::vector<int> inner_indices() const;
  std::vector<int> boundary_indices() const;

  Vec2 eval(double xi, double eta) const;
  MapDerivatives derivatives(double xi, double eta, int order = 1) const;
  Jacobian2 jacobian(double xi, double eta) const;

  /// Boundary curves: eta = 0 (south), eta = 1 (north), xi = 0 (west), xi = 1 (east).
  SplineCurve south() const;
  SplineCurve north() const;
  SplineCurve west() const;
  SplineCurve east() const;

 private:
  TensorBasis basis_;
  std::vector<Vec2> cps_;
};

SplineMap refine_xi(const SplineMap& map, std::span<const double> new_knots);
SplineMap refine_eta(const SplineMap& map, std::span<const double> new_knots);
/// Restriction to [a, b] in xi, re-normalized to [0, 1].
SplineMap submap_xi(const SplineMap& map, double a, double b);

/// Single knot insertion on a row of control values (Boehm). `T` is any
/// vector-space element (double, Vec2).
template <class T>
std::vector<T> insert_knot(const KnotVector& kv, const std::vector<T>& cps, double u,
                           KnotVector* out_kv) {
  const int p = kv.degree();
  const auto& U = kv.knots();
  if (!(u > kKnotTol && u < 1.0 - kKnotTol))
    fail(ErrorCode::kInvalidRefinement, "knot insertion outside the open interval (0,1)");
  const int s = kv.multiplicity(u);
  if (s + 1 > std::max(p, 1))
    fail(ErrorCode::kInvalidRefinement, "knot insertion exceeds the multiplicity bound");
  int k = kv.find_span(u);
  // When u coincides with an existing knot find_span returns the span to the right of it.
  const int n = static_cast<int>(cps.size());
  std::vector<T> out(static_cast<size_t>(n + 1));
  for (int i = 0; i <= k - p; ++i) out[static_cast<size_t>(i)] = cps[static_cast<size_t>(i)];
  for (int i = k - p + 1; i <= k - s; ++i) {
    const double denom = U[static_cast<size_t>(i + p)] - U[static_cast<size_t>(i)];
    const double a = denom > 0.0 ? (u - U[static_cast<size_t>(i)]) / denom : 0.0;
    out[static_cast<size_t>(i)] =
        cps[static_cast<size_t>(i)] * a + cps[static_cast<size_t>(i - 1)] * (1.0 - a);
  }
  for (int i = k - s + 1; i <= n; ++i) out[static_cast<size_t>(i)] = cps[static_cast<size_t>(i - 1)];
  std::vector<double> knots = U;
  double snapped = u;
  for (double v : U)
    if (std::abs(v - u) <= kKnotTol) snapped = v;
  knots.insert(knots.begin() + k + 1, snapped);
  *out_kv = KnotVector(p, std::move(knots));
  return out;
}

}  // namespace screwgen
