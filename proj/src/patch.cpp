#include "screwgen/patch.hpp"

#include <algorithm>
#include <cmath>

#include "screwgen/quadrature.hpp"

namespace screwgen {

namespace {

void require_basis(const SplineCurve& c, const KnotVector& kv, const char* which) {
  if (!(c.basis() == kv))
    fail(ErrorCode::kBasisMismatch, std::string(which) + " boundary curve does not use the patch basis");
}

void require_corner(const Vec2& a, const Vec2& b, const char* which) {
  const double scale = std::max({1.0, std::abs(a.x), std::abs(a.y)});
  if (distance(a, b) > 1e-10 * scale) fail(ErrorCode::kTopology, std::string("boundary curves disagree at ") + which);
}

}  // namespace

SplineMap transfinite(const BoundarySet& bounds, const TensorBasis& basis) {
  const int n = basis.xi.dim();
  const int m = basis.eta.dim();
  const bool sn = bounds.south && bounds.north;
  const bool we = bounds.west && bounds.east;
  if (!sn && !we) fail(ErrorCode::kTopology, "transfinite interpolation needs an opposite pair of boundaries");
  const auto g = greville_abscissae(basis.xi);
  const auto h = greville_abscissae(basis.eta);
  std::vector<Vec2> cps(static_cast<size_t>(n * m));
  auto at = [&](int i, int j) -> Vec2& { return cps[static_cast<size_t>(j * n + i)]; };

  if (sn) {
    require_basis(*bounds.south, basis.xi, "south");
    require_basis(*bounds.north, basis.xi, "north");
  }
  if (we) {
    require_basis(*bounds.west, basis.eta, "west");
    require_basis(*bounds.east, basis.eta, "east");
  }
  if (sn && we) {
    const auto& S = bounds.south->control_points();
    const auto& N = bounds.north->control_points();
    const auto& W = bounds.west->control_points();
    const auto& E = bounds.east->control_points();
    require_corner(S.front(), W.front(), "the south-west corner");
    require_corner(S.back(), E.front(), "the south-east corner");
    require_corner(N.front(), W.back(), "the north-west corner");
    require_corner(N.back(), E.back(), "the north-east corner");
    const Vec2 p00 = S.front(), p10 = S.back(), p01 = N.front(), p11 = N.back();
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) {
        const double u = g[static_cast<size_t>(i)], v = h[static_cast<size_t>(j)];
        at(i, j) = W[static_cast<size_t>(j)] * (1.0 - u) + E[static_cast<size_t>(j)] * u +
                   S[static_cast<size_t>(i)] * (1.0 - v) + N[static_cast<size_t>(i)] * v -
                   (p00 * ((1.0 - u) * (1.0 - v)) + p10 * (u * (1.0 - v)) + p01 * ((1.0 - u) * v) + p11 * (u * v));
      }
    for (int i = 0; i < n; ++i) {
      at(i, 0) = S[static_cast<size_t>(i)];
      at(i, m - 1) = N[static_cast<size_t>(i)];
    }
    for (int j = 0; j < m; ++j) {
      at(0, j) = W[static_cast<size_t>(j)];
      at(n - 1, j) = E[static_cast<size_t>(j)];
    }
  } else if (sn) {
    const auto& S = bounds.south->control_points();
    const auto& N = bounds.north->control_points();
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) {
        const double v = h[static_cast<size_t>(j)];
        at(i, j) = S[static_cast<size_t>(i)] * (1.0 - v) + N[static_cast<size_t>(i)] * v;
      }
    for (int i = 0; i < n; ++i) {
      at(i, 0) = S[static_cast<size_t>(i)];
      at(i, m - 1) = N[static_cast<size_t>(i)];
    }
  } else {
    const auto& W = bounds.west->control_points();
    const auto& E = bounds.east->control_points();
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) {
        const double u = g[static_cast<size_t>(i)];
        at(i, j) = W[static_cast<size_t>(j)] * (1.0 - u) + E[static_cast<size_t>(j)] * u;
      }
    for (int j = 0; j < m; ++j) {
      at(0, j) = W[static_cast<size_t>(j)];
      at(n - 1, j) = E[static_cast<size_t>(j)];
    }
  }
  return SplineMap(basis, std::move(cps));
}

namespace {

int orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = cross(b - a, c - a);
  return (v > 0.0) - (v < 0.0);
}

bool segments_cross(const Vec2& p1, const Vec2& q1, const Vec2& p2, const Vec2& q2) {
  return orient(p1, q1, p2) * orient(p1, q1, q2) < 0 && orient(p2, q2, p1) * orient(p2, q2, q1) < 0;
}

}  // namespace

OGridValidity o_grid_validity(const SplineCurve& rotor, const SplineCurve& casing, int samples) {
  if (samples <= 0)
    samples = 4 * static_cast<int>(std::max(rotor.control_points().size(), casing.control_points().size()));
  std::vector<Vec2> a, b;
  std::vector<double> t;
  for (int k = 0; k <= samples; ++k) {
    t.push_back(static_cast<double>(k) / samples);
    a.push_back(rotor.eval(t.back()));
    b.push_back(casing.eval(t.back()));
  }
  struct Box { double x0, x1, y0, y1; };
  std::vector<Box> box;
  for (size_t k = 0; k < a.size(); ++k)
    box.push_back({std::min(a[k].x, b[k].x), std::max(a[k].x, b[k].x), std::min(a[k].y, b[k].y),
                   std::max(a[k].y, b[k].y)});
  OGridValidity out;
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = i + 1; j < a.size(); ++j) {
      if (box[i].x1 < box[j].x0 || box[j].x1 < box[i].x0 || box[i].y1 < box[j].y0 || box[j].y1 < box[i].y0)
        continue;
      if (segments_cross(a[i], b[i], a[j], b[j])) out.crossings.emplace_back(t[i], t[j]);
    }
  out.valid = out.crossings.empty();
  return out;
}

PatchParameterization cut_c_grid(const PatchParameterization& o_grid, double a, double b, PatchKind kind) {
  if (!(a >= 0.0 && b <= 1.0 && a < b)) fail(ErrorCode::kDomain, "cut parameters must satisfy 0 <= a < b <= 1");
  PatchParameterization out{o_grid.map, kind, o_grid.theta};
  if (a == 0.0 && b == 1.0) return out;
  out.map = submap_xi(o_grid.map, a, b);
  return out;
}

SplineCurve join_curves(const std::vector<SplineCurve>& curves, const std::vector<double>& breaks) {
  if (curves.empty() || breaks.size() != curves.size() + 1 || breaks.front() != 0.0 || breaks.back() != 1.0)
    fail(ErrorCode::kDomain, "join needs breaks 0 = b_0 < ... < b_k = 1");
  const int p = curves.front().basis().degree();
  std::vector<double> knots;
  std::vector<Vec2> cps;
  for (size_t c = 0; c < curves.size(); ++c) {
    const auto& cur = curves[c];
    if (cur.basis().degree() != p) fail(ErrorCode::kBasisMismatch, "joined curves differ in degree");
    if (!(breaks[c + 1] > breaks[c])) fail(ErrorCode::kDomain, "join breaks must increase");
    const double lo = breaks[c], len = breaks[c + 1] - breaks[c];
    const auto& U = cur.basis().knots();
    const size_t first = c == 0 ? 0 : static_cast<size_t>(p + 1);
    const size_t last = c + 1 == curves.size() ? U.size() : U.size() - static_cast<size_t>(p + 1);
    if (c > 0) {
      for (int k = 0; k < p; ++k) knots.push_back(lo);
      const double scale = std::max({1.0, std::abs(cps.back().x), std::abs(cps.back().y)});
      if (distance(cps.back(), cur.front()) > 1e-9 * scale) fail(ErrorCode::kTopology, "joined curves do not meet");
    }
    for (size_t k = first; k < last; ++k) knots.push_back(lo + len * U[k]);
    const auto& P = cur.control_points();
    cps.insert(cps.end(), P.begin() + (c == 0 ? 0 : 1), P.end());
  }
  return SplineCurve(KnotVector(p, std::move(knots)), std::move(cps));
}

BoundarySet assemble_separator_boundary(const PatchParameterization& left_c, const PatchParameterization& right_c,
                                        const std::array<SplineCurve, 2>& rotor_arcs,
                                        const std::array<Vec2, 2>& cusps,
                                        const std::array<ReparamFunction, 2>& reparams, const TensorBasis& basis,
                                        int arc_samples) {
  const SplineMap& L = left_c.map;
  const SplineMap& R = right_c.map;
  if (basis.xi.multiplicity(0.5) != basis.xi.degree())
    fail(ErrorCode::kStructure, "separator xi basis needs a p-fold knot at 0.5");
  const Vec2 l_lo = L.at(0, 0), l_up = L.at(L.n() - 1, 0);
  const Vec2 r_up = R.at(0, 0), r_lo = R.at(R.n() - 1, 0);
  const Vec2 cusp_up = cusps[0], cusp_lo = cusps[1];
  const double scale = std::max(1.0, distance(l_lo, r_lo));
  auto check = [&](const Vec2& a, const Vec2& b, const char* what) {
    if (distance(a, b) > 1e-9 * scale) fail(ErrorCode::kTopology, std::string("separator endpoint mismatch at ") + what);
  };
  check(L.at(0, L.m() - 1), cusp_lo, "the lower cusp of the left C-grid");
  check(L.at(L.n() - 1, L.m() - 1), cusp_up, "the upper cusp of the left C-grid");
  check(R.at(0, R.m() - 1), cusp_up, "the upper cusp of the right C-grid");
  check(R.at(R.n() - 1, R.m() - 1), cusp_lo, "the lower cusp of the right C-grid");
  check(rotor_arcs[0].front(), l_lo, "the start of the left rotor arc");
  check(rotor_arcs[0].back(), l_up, "the end of the left rotor arc");
  check(rotor_arcs[1].front(), r_lo, "the start of the right rotor arc");
  check(rotor_arcs[1].back(), r_up, "the end of the right rotor arc");

  const auto g = greville_abscissae(basis.xi);
  auto broken_line = [&](const Vec2& a, const Vec2& cusp, const Vec2& b) {
    std::vector<Vec2> cps;
    for (double u : g) {
      if (u == 0.5)
        cps.push_back(cusp);
      else if (u < 0.5)
        cps.push_back(lerp(a, cusp, 2.0 * u));
      else
        cps.push_back(lerp(cusp, b, 2.0 * u - 1.0));
    }
    cps.front() = a;
    cps.back() = b;
    return SplineCurve(basis.xi, std::move(cps));
  };
  auto fit_arc = [&](const SplineCurve& arc, const ReparamFunction& f, const Vec2& a, const Vec2& b) {
    std::vector<Vec2> pts;
    std::vector<double> eta;
    for (int k = 0; k < arc_samples; ++k) {
      const double t = static_cast<double>(k) / (arc_samples - 1);
      pts.push_back(arc.eval(t));
      eta.push_back(f(t));
    }
    FitResult fit = fit_curve(pts, eta, basis.eta);
    auto cps = fit.curve.control_points();
    cps.front() = a;
    cps.back() = b;
    return SplineCurve(basis.eta, std::move(cps));
  };
  BoundarySet out;
  out.south = broken_line(l_lo, cusp_lo, r_lo);
  out.north = broken_line(l_up, cusp_up, r_up);
  out.west = fit_arc(rotor_arcs[0], reparams[0], l_lo, l_up);
  out.east = fit_arc(rotor_arcs[1], reparams[1], r_lo, r_up);
  return out;
}

AuxiliarySpace build_aux_space(const TensorBasis& basis) {
  const int p = basis.xi.degree();
  if (basis.xi.multiplicity(0.5) != p)
    fail(ErrorCode::kStructure, "auxiliary space needs the p-fold macro split at xi = 0.5");
  std::vector<double> knots(static_cast<size_t>(p + 2), 0.0);
  for (double k : basis.xi.interior()) {
    knots.push_back(k);
    if (k == 0.5 && std::count(knots.begin(), knots.end(), 0.5) == p) knots.push_back(0.5);
  }
  knots.insert(knots.end(), static_cast<size_t>(p + 2), 1.0);
  return {TensorBasis{KnotVector(p + 1, std::move(knots)), basis.eta}};
}

double map_area(const SplineMap& map) {
  const auto qx = span_quadrature(map.basis().xi, map.basis().xi.degree() + 2);
  const auto qy = span_quadrature(map.basis().eta, map.basis().eta.degree() + 2);
  double area = 0.0;
  for (size_t ex = 0; ex < qx.points.size(); ++ex)
    for (size_t ey = 0; ey < qy.points.size(); ++ey)
      for (size_t a = 0; a < qx.points[ex].size(); ++a)
        for (size_t b = 0; b < qy.points[ey].size(); ++b)
          area += map.jacobian(qx.points[ex][a], qy.points[ey][b]).det * qx.weights[ex][a] * qy.weights[ey][b];
  return area;
}

}  // namespace screwgen
