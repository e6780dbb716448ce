#include <cmath>

#include "doctest.h"
#include "screwgen/patch.hpp"
#include "screwgen/quadrature.hpp"

using namespace screwgen;

namespace {

// Clockwise arc of a circle from angle a0 to a1 (a1 < a0), fitted on kv.
SplineCurve arc(Vec2 c, double r, double a0, double a1, const KnotVector& kv, int samples = 600) {
  std::vector<Vec2> pts;
  std::vector<double> t;
  for (int k = 0; k < samples; ++k) {
    t.push_back(static_cast<double>(k) / (samples - 1));
    const double a = a0 + (a1 - a0) * t.back();
    pts.push_back(c + Vec2{r * std::cos(a), r * std::sin(a)});
  }
  return fit_curve(pts, t, kv, 0.0).curve;
}

SplineCurve line(Vec2 a, Vec2 b, const KnotVector& kv) {
  std::vector<Vec2> cps;
  for (double g : greville_abscissae(kv)) cps.push_back(lerp(a, b, g));
  return SplineCurve(kv, std::move(cps));
}

PatchParameterization annulus(double r0, double r1, int elems = 32) {
  const TensorBasis basis{KnotVector::uniform(3, elems), KnotVector::uniform(1, 6)};
  BoundarySet b;
  b.south = arc({0, 0}, r0, 0.0, -2.0 * kPi, basis.xi);
  b.north = arc({0, 0}, r1, 0.0, -2.0 * kPi, basis.xi);
  return {transfinite(b, basis), PatchKind::kOGrid, 0.0};
}

}  // namespace

TEST_CASE("transfinite reproduces the unit square identity") {
  const TensorBasis basis{KnotVector::uniform(3, 5), KnotVector::uniform(2, 4)};
  BoundarySet b;
  b.south = line({0, 0}, {1, 0}, basis.xi);
  b.north = line({0, 1}, {1, 1}, basis.xi);
  b.west = line({0, 0}, {0, 1}, basis.eta);
  b.east = line({1, 0}, {1, 1}, basis.eta);
  const SplineMap m = transfinite(b, basis);
  const auto g = greville_abscissae(basis.xi);
  const auto h = greville_abscissae(basis.eta);
  for (int j = 0; j < m.m(); ++j)
    for (int i = 0; i < m.n(); ++i) {
      CHECK(m.at(i, j).x == doctest::Approx(g[static_cast<size_t>(i)]).epsilon(1e-14));
      CHECK(m.at(i, j).y == doctest::Approx(h[static_cast<size_t>(j)]).epsilon(1e-14));
    }
  for (double u : {0.1, 0.37, 0.9})
    for (double v : {0.05, 0.5, 0.77}) {
      const Vec2 p = m.eval(u, v);
      CHECK(std::abs(p.x - u) < 1e-13);
      CHECK(std::abs(p.y - v) < 1e-13);
    }
}

TEST_CASE("transfinite reproduces affine maps") {
  const TensorBasis basis{KnotVector::uniform(3, 6), KnotVector::uniform(3, 3)};
  const Vec2 o{0.3, -1.0}, a{2.0, 0.5}, c{0.7, 1.5};
  auto f = [&](double u, double v) { return o + a * u + c * v; };
  BoundarySet b;
  b.south = line(f(0, 0), f(1, 0), basis.xi);
  b.north = line(f(0, 1), f(1, 1), basis.xi);
  b.west = line(f(0, 0), f(0, 1), basis.eta);
  b.east = line(f(1, 0), f(1, 1), basis.eta);
  const SplineMap m = transfinite(b, basis);
  const double det = cross(a, c);
  for (double u : {0.0, 0.2, 0.55, 1.0})
    for (double v : {0.0, 0.3, 0.8, 1.0}) {
      const auto J = m.jacobian(u, v);
      CHECK(std::abs(J.det - det) < 1e-12);
      CHECK(distance(J.col_xi, a) < 1e-12);
      CHECK(distance(J.col_eta, c) < 1e-12);
    }
  // boundary control points copied verbatim
  for (int i = 0; i < m.n(); ++i) CHECK(m.at(i, 0) == b.south->control_points()[static_cast<size_t>(i)]);
  for (int j = 0; j < m.m(); ++j) CHECK(m.at(m.n() - 1, j) == b.east->control_points()[static_cast<size_t>(j)]);
}

TEST_CASE("transfinite errors") {
  const TensorBasis basis{KnotVector::uniform(3, 4), KnotVector::uniform(3, 4)};
  BoundarySet b;
  b.south = line({0, 0}, {1, 0}, KnotVector::uniform(3, 5));
  b.north = line({0, 1}, {1, 1}, basis.xi);
  try {
    transfinite(b, basis);
    FAIL("expected a basis mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBasisMismatch);
  }
  b.south = line({0, 0}, {1, 0}, basis.xi);
  b.west = line({0, 0}, {0, 1}, basis.eta);
  b.east = line({1, 0.1}, {1, 1}, basis.eta);
  try {
    transfinite(b, basis);
    FAIL("expected a corner mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTopology);
  }
  CHECK_THROWS_AS(transfinite(BoundarySet{}, basis), Error);
}

TEST_CASE("unidirectional blend of concentric circles") {
  const auto o = annulus(1.0, 2.0);
  for (double u : {0.0, 0.13, 0.5, 0.81}) {
    const Vec2 a = o.map.eval(u, 0.0), b = o.map.eval(u, 1.0);
    CHECK(distance(o.map.eval(u, 0.5), lerp(a, b, 0.5)) < 1e-12);
    CHECK(std::abs(norm(o.map.eval(u, 0.5)) - 1.5) < 1e-5);
    CHECK(std::abs(norm(o.map.eval(u, 0.25)) - 1.25) < 1e-5);
  }
  CHECK(std::abs(map_area(o.map) - 3.0 * kPi) < 1e-5);
}

TEST_CASE("o-grid validity") {
  const KnotVector kv = KnotVector::uniform(3, 24);
  const SplineCurve rotor = arc({0, 0}, 1.0, 0.0, -2.0 * kPi, kv);
  const SplineCurve casing = arc({0, 0}, 2.0, 0.0, -2.0 * kPi, kv);
  CHECK(o_grid_validity(rotor, casing).valid);

  // casing angle lags the rotor by a parameter-dependent twist of up to 0.3 turns
  std::vector<Vec2> pts;
  std::vector<double> t;
  for (int k = 0; k < 600; ++k) {
    t.push_back(k / 599.0);
    const double s = t.back() + 0.3 * std::sin(kPi * t.back());
    pts.push_back({2.0 * std::cos(-2.0 * kPi * s), 2.0 * std::sin(-2.0 * kPi * s)});
  }
  const SplineCurve twisted = fit_curve(pts, t, kv, 0.0).curve;
  const auto bad = o_grid_validity(rotor, twisted);
  CHECK_FALSE(bad.valid);
  REQUIRE_FALSE(bad.crossings.empty());
  // brute-force confirmation of a reported crossing
  const auto [a, b] = bad.crossings.front();
  const Vec2 p1 = rotor.eval(a), q1 = twisted.eval(a), p2 = rotor.eval(b), q2 = twisted.eval(b);
  auto side = [](Vec2 p, Vec2 q, Vec2 r) { return cross(q - p, r - p); };
  CHECK(side(p1, q1, p2) * side(p1, q1, q2) < 0.0);
  CHECK(side(p2, q2, p1) * side(p2, q2, q1) < 0.0);

  auto moved = [](SplineCurve c) {
    for (auto& p : c.control_points()) p = rotate(p, 0.7) + Vec2{3.0, -1.0};
    return c;
  };
  CHECK(o_grid_validity(moved(rotor), moved(casing)).valid);
  CHECK(o_grid_validity(moved(rotor), moved(twisted)).crossings.size() == bad.crossings.size());
}

TEST_CASE("cutting an O-grid into a C-grid") {
  const auto o = annulus(1.0, 2.0);
  const auto c = cut_c_grid(o, 0.25, 0.75, PatchKind::kCGridLeft);
  CHECK(std::abs(map_area(c.map) - 0.5 * map_area(o.map)) < 1e-6);
  for (double v : {0.0, 0.4, 1.0}) {
    CHECK(distance(c.map.eval(0.0, v), o.map.eval(0.25, v)) < 1e-12);
    CHECK(distance(c.map.eval(1.0, v), o.map.eval(0.75, v)) < 1e-12);
    CHECK(distance(c.map.eval(0.5, v), o.map.eval(0.5, v)) < 1e-12);
  }
  const auto same = cut_c_grid(o, 0.0, 1.0, PatchKind::kOGrid);
  CHECK(same.map.control_points() == o.map.control_points());
  CHECK(same.map.basis() == o.map.basis());
  CHECK_THROWS_AS(cut_c_grid(o, 0.6, 0.4, PatchKind::kCGridLeft), Error);
  CHECK_THROWS_AS(cut_c_grid(o, -0.1, 0.4, PatchKind::kCGridLeft), Error);
}

TEST_CASE("joining curves") {
  const KnotVector kv = KnotVector::uniform(3, 4);
  const SplineCurve a = line({0, 0}, {1, 0}, kv);
  const SplineCurve b = line({1, 0}, {1, 2}, kv);
  const SplineCurve j = join_curves({a, b}, {0.0, 0.5, 1.0});
  CHECK(j.basis().multiplicity(0.5) == 3);
  CHECK(j.eval(0.5) == Vec2{1, 0});
  CHECK(distance(j.eval(0.25), a.eval(0.5)) < 1e-14);
  CHECK(distance(j.eval(0.875), b.eval(0.75)) < 1e-14);
  CHECK_THROWS_AS(join_curves({a, line({2, 0}, {3, 0}, kv)}, {0.0, 0.5, 1.0}), Error);
}

TEST_CASE("auxiliary space") {
  std::vector<double> interior{0.125, 0.25, 0.375, 0.5, 0.5, 0.5, 0.625, 0.75, 0.875};
  const TensorBasis basis{KnotVector::with_interior(3, interior), KnotVector::uniform(3, 6)};
  const auto aux = build_aux_space(basis);
  CHECK(aux.basis.xi.degree() == 4);
  CHECK(aux.basis.eta == basis.eta);
  const auto& U = aux.basis.xi.knots();
  CHECK(std::count(U.begin(), U.end(), 0.0) == 5);
  CHECK(std::count(U.begin(), U.end(), 1.0) == 5);
  CHECK(aux.basis.xi.multiplicity(0.5) == 4);
  for (double k : {0.125, 0.25, 0.375, 0.625, 0.75, 0.875}) CHECK(aux.basis.xi.multiplicity(k) == 1);
  // knot count minus degree minus one
  const int expected = static_cast<int>(5 + 6 + 4 + 5) - 4 - 1;
  CHECK(aux.basis.xi.dim() == expected);
  CHECK(aux.basis.xi.dim() == basis.xi.dim() + 2);

  const TensorBasis no_split{KnotVector::uniform(3, 8), KnotVector::uniform(3, 6)};
  try {
    build_aux_space(no_split);
    FAIL("expected a structure error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kStructure);
  }
}

namespace {

// Two disks of radius 0.8 at (-1, 0) and (1, 0) in casings of radius 1.2.
struct TwinDisks {
  double phi = std::atan2(std::sqrt(1.44 - 1.0), 1.0);
  Vec2 up{0.0, std::sqrt(1.44 - 1.0)}, lo{0.0, -std::sqrt(1.44 - 1.0)};
  PatchParameterization left, right;
  std::array<SplineCurve, 2> arcs;

  TwinDisks() {
    const TensorBasis b{KnotVector::uniform(3, 30), KnotVector::uniform(1, 4)};
    const Vec2 cl{-1, 0}, cr{1, 0};
    // left C-grid: lower cusp to upper cusp, clockwise around the far side
    BoundarySet sl;
    sl.south = arc(cl, 0.8, -phi, phi - 2.0 * kPi, b.xi);
    sl.north = arc(cl, 1.2, -phi, phi - 2.0 * kPi, b.xi);
    left = {transfinite(sl, b), PatchKind::kCGridLeft, 0.0};
    BoundarySet sr;
    sr.south = arc(cr, 0.8, kPi - phi, -kPi + phi, b.xi);
    sr.north = arc(cr, 1.2, kPi - phi, -kPi + phi, b.xi);
    right = {transfinite(sr, b), PatchKind::kCGridRight, 0.0};
    const KnotVector ak = KnotVector::uniform(3, 10);
    arcs[0] = arc(cl, 0.8, -phi, phi, ak);
    arcs[1] = arc(cr, 0.8, kPi + phi, kPi - phi, ak);
  }
};

TensorBasis separator_basis() {
  std::vector<double> interior{0.25, 0.5, 0.5, 0.5, 0.75};
  return {KnotVector::with_interior(3, interior), KnotVector::uniform(3, 8)};
}

}  // namespace

TEST_CASE("separator boundary") {
  const TwinDisks d;
  const TensorBasis basis = separator_basis();
  std::vector<double> xs, ys;
  for (int k = 0; k <= 200; ++k) {
    xs.push_back(k / 200.0);
    ys.push_back(xs.back() + 0.1 * std::sin(kPi * xs.back()));
  }
  ys.back() = 1.0;
  const std::array<ReparamFunction, 2> f{ReparamFunction(xs, ys), ReparamFunction(xs, ys)};
  const BoundarySet s = assemble_separator_boundary(d.left, d.right, d.arcs, {d.up, d.lo}, f, basis);
  CHECK(s.north->eval(0.5) == d.up);
  CHECK(s.south->eval(0.5) == d.lo);
  CHECK(s.south->basis().multiplicity(0.5) == 3);
  for (double u : {0.0, 0.1, 0.3, 0.45}) {
    const Vec2 a = s.south->eval(u), b = s.south->eval(1.0 - u);
    CHECK(std::abs(a.x + b.x) < 1e-9);
    CHECK(std::abs(a.y - b.y) < 1e-9);
  }
  for (double v : {0.0, 0.2, 0.5, 0.9, 1.0}) {
    const Vec2 a = s.west->eval(v), b = s.east->eval(v);
    CHECK(std::abs(a.x + b.x) < 1e-9);
    CHECK(std::abs(a.y - b.y) < 1e-9);
  }
  // matched arc parameter t lands at eta = f(t) on both sides
  for (double t : {0.25, 0.5, 0.8}) {
    CHECK(distance(s.west->eval(f[0](t)), d.arcs[0].eval(t)) < 1e-4);
    CHECK(distance(s.east->eval(f[1](t)), d.arcs[1].eval(t)) < 1e-4);
  }
  const SplineMap m = transfinite(s, basis);
  CHECK(m.eval(0.5, 0.0) == d.lo);
  CHECK(m.eval(0.5, 1.0) == d.up);

  const std::array<Vec2, 2> shifted{d.up + Vec2{0, 1e-3}, d.lo};
  try {
    assemble_separator_boundary(d.left, d.right, d.arcs, shifted, f, basis);
    FAIL("expected a topology error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTopology);
  }
  try {
    const TensorBasis plain{KnotVector::uniform(3, 8), KnotVector::uniform(3, 8)};
    assemble_separator_boundary(d.left, d.right, d.arcs, {d.up, d.lo}, f, plain);
    FAIL("expected a structure error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kStructure);
  }
}

TEST_CASE("gauss rules integrate polynomials exactly") {
  for (int n = 1; n <= 8; ++n) {
    const auto g = gauss_legendre(n);
    for (int k = 0; k < 2 * n; ++k) {
      double s = 0.0;
      for (size_t i = 0; i < g.nodes.size(); ++i) s += g.weights[i] * std::pow(g.nodes[i], k);
      CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
  }
}
