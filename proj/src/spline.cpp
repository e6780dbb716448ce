#include "screwgen/spline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace screwgen {

std::string_view code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kInvalidRefinement: return "invalid_refinement";
    case ErrorCode::kInvalidKnots: return "invalid_knots";
    case ErrorCode::kInvalidGeometry: return "invalid_geometry";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kFit: return "fit";
    case ErrorCode::kConvergence: return "convergence";
    case ErrorCode::kMatching: return "matching";
    case ErrorCode::kBasisMismatch: return "basis_mismatch";
    case ErrorCode::kTopology: return "topology";
    case ErrorCode::kStructure: return "structure";
    case ErrorCode::kNonconvergence: return "nonconvergence";
    case ErrorCode::kFoldingUnrepaired: return "folding_unrepaired";
    case ErrorCode::kConstraint: return "constraint";
    case ErrorCode::kScaffold: return "scaffold";
    case ErrorCode::kDatabase: return "database";
    case ErrorCode::kResolution: return "resolution";
    case ErrorCode::kConformity: return "conformity";
    case ErrorCode::kExtrusion: return "extrusion";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// KnotVector

KnotVector::KnotVector(int degree, std::vector<double> knots)
    : degree_(degree), knots_(std::move(knots)) {
  const int p = degree_;
  if (p < 0 || p > kMaxDegree)
    fail(ErrorCode::kInvalidKnots, "unsupported spline degree " + std::to_string(p));
  const int n = dim();
  if (n < p + 1)
    fail(ErrorCode::kInvalidKnots, "knot vector too short for degree " + std::to_string(p));
  for (size_t i = 0; i < knots_.size(); ++i) {
    double& k = knots_[i];
    if (std::abs(k) <= kKnotTol) k = 0.0;
    if (std::abs(k - 1.0) <= kKnotTol) k = 1.0;
    if (k < 0.0 || k > 1.0) fail(ErrorCode::kInvalidKnots, "knot outside [0,1]");
    if (i > 0) {
      if (k < knots_[i - 1] - kKnotTol) fail(ErrorCode::kInvalidKnots, "knots must be nondecreasing");
      if (std::abs(k - knots_[i - 1]) <= kKnotTol) k = knots_[i - 1];
    }
  }
  for (int i = 0; i <= p; ++i) {
    if (knots_[static_cast<size_t>(i)] != 0.0 || knots_[knots_.size() - 1 - static_cast<size_t>(i)] != 1.0)
      fail(ErrorCode::kInvalidKnots, "knot vector is not open");
  }
  const int max_mult = std::max(p, 1);
  size_t i = static_cast<size_t>(p + 1);
  while (i < knots_.size() - static_cast<size_t>(p + 1)) {
    size_t j = i;
    while (j < knots_.size() && knots_[j] == knots_[i]) ++j;
    if (static_cast<int>(j - i) > max_mult)
      fail(ErrorCode::kInvalidKnots, "interior knot multiplicity exceeds the degree");
    i = j;
  }
}

KnotVector KnotVector::with_interior(int degree, std::span<const double> interior) {
  std::vector<double> k(static_cast<size_t>(degree + 1), 0.0);
  std::vector<double> in(interior.begin(), interior.end());
  std::sort(in.begin(), in.end());
  k.insert(k.end(), in.begin(), in.end());
  k.insert(k.end(), static_cast<size_t>(degree + 1), 1.0);
  return KnotVector(degree, std::move(k));
}

KnotVector KnotVector::uniform(int degree, int elements) {
  std::vector<double> in;
  for (int e = 1; e < elements; ++e) in.push_back(static_cast<double>(e) / elements);
  return with_interior(degree, in);
}

int KnotVector::find_span(double x) const {
  const int n = dim();
  const int p = degree_;
  if (x >= knots_[static_cast<size_t>(n)]) {
    int s = n - 1;
    while (s > p && knots_[static_cast<size_t>(s)] == knots_[static_cast<size_t>(s + 1)]) --s;
    return s;
  }
  if (x <= knots_[static_cast<size_t>(p)]) {
    int s = p;
    while (knots_[static_cast<size_t>(s + 1)] <= x) ++s;
    return s;
  }
  auto it = std::upper_bound(knots_.begin() + p, knots_.begin() + n + 1, x);
  return static_cast<int>(it - knots_.begin()) - 1;
}

int KnotVector::multiplicity(double x) const {
  int m = 0;
  for (double k : knots_)
    if (std::abs(k - x) <= kKnotTol) ++m;
  return m;
}

std::vector<double> KnotVector::interior() const {
  return {knots_.begin() + degree_ + 1, knots_.end() - degree_ - 1};
}

std::vector<double> KnotVector::breakpoints() const {
  std::vector<double> b;
  for (double k : knots_)
    if (b.empty() || k != b.back()) b.push_back(k);
  return b;
}

// ---------------------------------------------------------------------------
// Basis evaluation (triangular Cox-de Boor scheme with 0/0 = 0).

BasisEval eval_local(const KnotVector& kv, double x, int order) {
  const int p = kv.degree();
  const auto& U = kv.knots();
  const int span = kv.find_span(x);
  BasisEval out;
  out.first = span - p;
  out.count = p + 1;

  double ndu[kMaxDegree + 1][kMaxDegree + 1];
  double left[kMaxDegree + 1];
  double right[kMaxDegree + 1];
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - U[static_cast<size_t>(span + 1 - j)];
    right[j] = U[static_cast<size_t>(span + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[j][r] != 0.0 ? ndu[r][j - 1] / ndu[j][r] : 0.0;
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }
  for (int j = 0; j <= p; ++j) out.values[0][static_cast<size_t>(j)] = ndu[j][p];

  const int nd = std::min(order, p);
  double a[2][kMaxDegree + 1];
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= nd; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      out.values[static_cast<size_t>(k)][static_cast<size_t>(r)] = d;
      std::swap(s1, s2);
    }
  }
  double fac = p;
  for (int k = 1; k <= nd; ++k) {
    for (int j = 0; j <= p; ++j) out.values[static_cast<size_t>(k)][static_cast<size_t>(j)] *= fac;
    fac *= (p - k);
  }
  return out;
}

namespace {

void check_param(double xi) {
  if (!(xi >= 0.0 && xi <= 1.0)) {
    std::ostringstream os;
    os << "parameter " << xi << " outside [0,1]";
    fail(ErrorCode::kDomain, os.str());
  }
}

}  // namespace

std::vector<double> eval_basis(const KnotVector& kv, double xi) {
  check_param(xi);
  std::vector<double> out(static_cast<size_t>(kv.dim()), 0.0);
  const BasisEval b = eval_local(kv, xi, 0);
  for (int j = 0; j < b.count; ++j) out[static_cast<size_t>(b.first + j)] = b.values[0][static_cast<size_t>(j)];
  return out;
}

std::vector<double> eval_basis_derivatives(const KnotVector& kv, double xi, int order) {
  check_param(xi);
  if (order < 1 || order > 2) fail(ErrorCode::kDomain, "derivative order must be 1 or 2");
  std::vector<double> out(static_cast<size_t>(kv.dim()), 0.0);
  const BasisEval b = eval_local(kv, xi, order);
  for (int j = 0; j < b.count; ++j)
    out[static_cast<size_t>(b.first + j)] = b.values[static_cast<size_t>(order)][static_cast<size_t>(j)];
  return out;
}

std::vector<double> greville_abscissae(const KnotVector& kv) {
  const int p = kv.degree();
  const auto& U = kv.knots();
  std::vector<double> g(static_cast<size_t>(kv.dim()));
  for (int i = 0; i < kv.dim(); ++i) {
    if (p == 0) {
      g[static_cast<size_t>(i)] = 0.5 * (U[static_cast<size_t>(i)] + U[static_cast<size_t>(i + 1)]);
      continue;
    }
    double s = 0.0;
    for (int k = 1; k <= p; ++k) s += U[static_cast<size_t>(i + k)];
    g[static_cast<size_t>(i)] = s / p;
  }
  if (p > 0) {
    g.front() = 0.0;
    g.back() = 1.0;
  }
  return g;
}

KnotVector refine_knots(const KnotVector& kv, std::span<const double> new_knots) {
  KnotVector out = kv;
  std::vector<double> dummy(static_cast<size_t>(kv.dim()), 0.0);
  std::vector<double> sorted(new_knots.begin(), new_knots.end());
  std::sort(sorted.begin(), sorted.end());
  for (double u : sorted) {
    KnotVector next;
    dummy = insert_knot(out, dummy, u, &next);
    out = std::move(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Curves

SplineCurve::SplineCurve(KnotVector basis, std::vector<Vec2> control_points)
    : basis_(std::move(basis)), cps_(std::move(control_points)) {
  if (static_cast<int>(cps_.size()) != basis_.dim())
    fail(ErrorCode::kBasisMismatch, "control point count does not match the basis dimension");
}

Vec2 SplineCurve::eval(double t) const {
  check_param(t);
  const BasisEval b = eval_local(basis_, t, 0);
  Vec2 p;
  for (int j = 0; j < b.count; ++j) p += cps_[static_cast<size_t>(b.first + j)] * b.values[0][static_cast<size_t>(j)];
  return p;
}

Vec2 SplineCurve::derivative(double t, int order) const {
  check_param(t);
  const BasisEval b = eval_local(basis_, t, order);
  Vec2 p;
  for (int j = 0; j < b.count; ++j)
    p += cps_[static_cast<size_t>(b.first + j)] * b.values[static_cast<size_t>(order)][static_cast<size_t>(j)];
  return p;
}

SplineCurve refine(const SplineCurve& curve, std::span<const double> new_knots) {
  KnotVector kv = curve.basis();
  std::vector<Vec2> cps = curve.control_points();
  std::vector<double> sorted(new_knots.begin(), new_knots.end());
  std::sort(sorted.begin(), sorted.end());
  for (double u : sorted) {
    KnotVector next;
    cps = insert_knot(kv, cps, u, &next);
    kv = std::move(next);
  }
  return SplineCurve(std::move(kv), std::move(cps));
}

SplineCurve reversed(const SplineCurve& curve) {
  const auto& U = curve.basis().knots();
  std::vector<double> knots(U.size());
  for (size_t i = 0; i < U.size(); ++i) knots[i] = 1.0 - U[U.size() - 1 - i];
  std::vector<Vec2> cps(curve.control_points().rbegin(), curve.control_points().rend());
  return SplineCurve(KnotVector(curve.basis().degree(), std::move(knots)), std::move(cps));
}

namespace {

/// Bring a and b to multiplicity p (when interior) by knot insertion on each row.
std::vector<double> knots_to_insert(const KnotVector& kv, double a, double b) {
  std::vector<double> ins;
  const int p = kv.degree();
  for (double v : {a, b}) {
    if (v <= kKnotTol || v >= 1.0 - kKnotTol) continue;
    for (int k = kv.multiplicity(v); k < p; ++k) ins.push_back(v);
  }
  return ins;
}

struct SubRange {
  int first_cp = 0;
  int last_cp = 0;
  std::vector<double> knots;
};

SubRange sub_range(const KnotVector& kv, double a, double b) {
  const int p = kv.degree();
  const auto& U = kv.knots();
  const int n = kv.dim();
  SubRange r;
  std::vector<double> k;
  size_t j0 = 0;
  if (a <= kKnotTol) {
    r.first_cp = 0;
  } else {
    while (std::abs(U[j0] - a) > kKnotTol) ++j0;
    r.first_cp = static_cast<int>(j0) - 1;
    k.push_back(U[j0]);
  }
  size_t j_end;  // one past the last copied knot
  if (b >= 1.0 - kKnotTol) {
    r.last_cp = n - 1;
    j_end = U.size();
  } else {
    size_t j1 = 0;
    while (std::abs(U[j1] - b) > kKnotTol) ++j1;
    r.last_cp = static_cast<int>(j1) - 1;
    j_end = j1 + static_cast<size_t>(p);
  }
  for (size_t j = j0; j < j_end; ++j) k.push_back(U[j]);
  if (b < 1.0 - kKnotTol) k.push_back(k.back());
  const double lo = a <= kKnotTol ? 0.0 : a;
  const double hi = b >= 1.0 - kKnotTol ? 1.0 : b;
  for (double& v : k) v = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  r.knots = std::move(k);
  return r;
}

void check_cut(double a, double b) {
  if (!(a >= 0.0 && b <= 1.0 && a < b - kKnotTol))
    fail(ErrorCode::kDomain, "sub-range must satisfy 0 <= a < b <= 1");
}

}  // namespace

SplineCurve subcurve(const SplineCurve& curve, double a, double b) {
  check_cut(a, b);
  const auto ins = knots_to_insert(curve.basis(), a, b);
  const SplineCurve c = refine(curve, ins);
  const SubRange r = sub_range(c.basis(), a, b);
  std::vector<Vec2> cps(c.control_points().begin() + r.first_cp, c.control_points().begin() + r.last_cp + 1);
  return SplineCurve(KnotVector(c.basis().degree(), r.knots), std::move(cps));
}

// ---------------------------------------------------------------------------
// Maps

SplineMap::SplineMap(TensorBasis basis, std::vector<Vec2> control_points)
    : basis_(std::move(basis)), cps_(std::move(control_points)) {
  if (static_cast<int>(cps_.size()) != basis_.dim())
    fail(ErrorCode::kBasisMismatch, "control grid size does not match the tensor basis");
}

std::vector<int> SplineMap::inner_indices() const {
  std::vector<int> out;
  for (int j = 1; j + 1 < m(); ++j)
    for (int i = 1; i + 1 < n(); ++i) out.push_back(index(i, j));
  return out;
}

std::vector<int> SplineMap::boundary_indices() const {
  std::vector<int> out;
  for (int j = 0; j < m(); ++j)
    for (int i = 0; i < n(); ++i)
      if (is_boundary(i, j)) out.push_back(index(i, j));
  return out;
}

Vec2 SplineMap::eval(double xi, double eta) const {
  check_param(xi);
  check_param(eta);
  const BasisEval bx = eval_local(basis_.xi, xi, 0);
  const BasisEval by = eval_local(basis_.eta, eta, 0);
  Vec2 p;
  for (int b = 0; b < by.count; ++b) {
    Vec2 row;
    for (int a = 0; a < bx.count; ++a) row += at(bx.first + a, by.first + b) * bx.values[0][static_cast<size_t>(a)];
    p += row * by.values[0][static_cast<size_t>(b)];
  }
  return p;
}

MapDerivatives SplineMap::derivatives(double xi, double eta, int order) const {
  check_param(xi);
  check_param(eta);
  const BasisEval bx = eval_local(basis_.xi, xi, order);
  const BasisEval by = eval_local(basis_.eta, eta, order);
  MapDerivatives d;
  for (int b = 0; b < by.count; ++b) {
    const auto B = static_cast<size_t>(b);
    for (int a = 0; a < bx.count; ++a) {
      const auto A = static_cast<size_t>(a);
      const Vec2& c = at(bx.first + a, by.first + b);
      d.x += c * (bx.values[0][A] * by.values[0][B]);
      d.x_xi += c * (bx.values[1][A] * by.values[0][B]);
      d.x_eta += c * (bx.values[0][A] * by.values[1][B]);
      if (order >= 2) {
        d.x_xixi += c * (bx.values[2][A] * by.values[0][B]);
        d.x_xieta += c * (bx.values[1][A] * by.values[1][B]);
        d.x_etaeta += c * (bx.values[0][A] * by.values[2][B]);
      }
    }
  }
  return d;
}

Jacobian2 SplineMap::jacobian(double xi, double eta) const {
  const MapDerivatives d = derivatives(xi, eta, 1);
  Jacobian2 J;
  J.col_xi = d.x_xi;
  J.col_eta = d.x_eta;
  J.det = cross(d.x_xi, d.x_eta);
  J.g11 = dot(d.x_xi, d.x_xi);
  J.g12 = dot(d.x_xi, d.x_eta);
  J.g22 = dot(d.x_eta, d.x_eta);
  return J;
}

SplineCurve SplineMap::south() const {
  std::vector<Vec2> c;
  for (int i = 0; i < n(); ++i) c.push_back(at(i, 0));
  return SplineCurve(basis_.xi, std::move(c));
}

SplineCurve SplineMap::north() const {
  std::vector<Vec2> c;
  for (int i = 0; i < n(); ++i) c.push_back(at(i, m() - 1));
  return SplineCurve(basis_.xi, std::move(c));
}

SplineCurve SplineMap::west() const {
  std::vector<Vec2> c;
  for (int j = 0; j < m(); ++j) c.push_back(at(0, j));
  return SplineCurve(basis_.eta, std::move(c));
}

SplineCurve SplineMap::east() const {
  std::vector<Vec2> c;
  for (int j = 0; j < m(); ++j) c.push_back(at(n() - 1, j));
  return SplineCurve(basis_.eta, std::move(c));
}

namespace {

SplineMap transpose(const SplineMap& map) {
  TensorBasis tb{map.basis().eta, map.basis().xi};
  std::vector<Vec2> cps(map.control_points().size());
  const int n = map.n();
  const int m = map.m();
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) cps[static_cast<size_t>(i * m + j)] = map.at(i, j);
  return SplineMap(std::move(tb), std::move(cps));
}

}  // namespace

SplineMap refine_xi(const SplineMap& map, std::span<const double> new_knots) {
  if (new_knots.empty()) return map;
  std::vector<double> sorted(new_knots.begin(), new_knots.end());
  std::sort(sorted.begin(), sorted.end());
  const int m = map.m();
  std::vector<std::vector<Vec2>> rows(static_cast<size_t>(m));
  KnotVector kv_out;
  for (int j = 0; j < m; ++j) {
    KnotVector kv = map.basis().xi;
    std::vector<Vec2> row;
    for (int i = 0; i < map.n(); ++i) row.push_back(map.at(i, j));
    for (double u : sorted) {
      KnotVector next;
      row = insert_knot(kv, row, u, &next);
      kv = std::move(next);
    }
    rows[static_cast<size_t>(j)] = std::move(row);
    kv_out = kv;
  }
  std::vector<Vec2> cps;
  for (const auto& r : rows) cps.insert(cps.end(), r.begin(), r.end());
  return SplineMap(TensorBasis{kv_out, map.basis().eta}, std::move(cps));
}

SplineMap refine_eta(const SplineMap& map, std::span<const double> new_knots) {
  if (new_knots.empty()) return map;
  return transpose(refine_xi(transpose(map), new_knots));
}

SplineMap submap_xi(const SplineMap& map, double a, double b) {
  check_cut(a, b);
  const auto ins = knots_to_insert(map.basis().xi, a, b);
  const SplineMap r = refine_xi(map, ins);
  const SubRange sr = sub_range(r.basis().xi, a, b);
  const int n_new = sr.last_cp - sr.first_cp + 1;
  std::vector<Vec2> cps;
  cps.reserve(static_cast<size_t>(n_new * r.m()));
  for (int j = 0; j < r.m(); ++j)
    for (int i = sr.first_cp; i <= sr.last_cp; ++i) cps.push_back(r.at(i, j));
  return SplineMap(TensorBasis{KnotVector(r.basis().xi.degree(), sr.knots), r.basis().eta}, std::move(cps));
}

}  // namespace screwgen
