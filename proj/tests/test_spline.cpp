#include <random>

#include "doctest.h"
#include "screwgen/spline.hpp"

using namespace screwgen;

namespace {

KnotVector fig2_basis() {
  std::vector<double> in;
  for (int k = 1; k < 7; ++k) in.push_back(k / 7.0);
  return KnotVector::with_interior(3, in);
}

// Cox-de Boor recursion written out directly, used as an independent oracle.
double cox_de_boor(const std::vector<double>& U, int i, int p, double x) {
  if (p == 0) {
    const bool last = x == 1.0 && U[i + 1] == 1.0 && U[i] < 1.0;
    return (U[i] <= x && x < U[i + 1]) || last ? 1.0 : 0.0;
  }
  double v = 0.0;
  const double d1 = U[i + p] - U[i];
  const double d2 = U[i + p + 1] - U[i + 1];
  if (d1 > 0.0) v += (x - U[i]) / d1 * cox_de_boor(U, i, p - 1, x);
  if (d2 > 0.0) v += (U[i + p + 1] - x) / d2 * cox_de_boor(U, i + 1, p - 1, x);
  return v;
}

SplineCurve sample_curve() {
  const auto kv = fig2_basis();
  std::vector<Vec2> cps;
  for (int i = 0; i < kv.dim(); ++i) cps.push_back({std::cos(0.7 * i), std::sin(1.3 * i) + 0.1 * i});
  return SplineCurve(kv, cps);
}

SplineMap sample_map() {
  const auto kx = KnotVector::with_interior(3, std::vector<double>{0.25, 0.5, 0.5, 0.5, 0.8});
  const auto ky = KnotVector::uniform(2, 4);
  std::vector<Vec2> cps;
  for (int j = 0; j < ky.dim(); ++j)
    for (int i = 0; i < kx.dim(); ++i)
      cps.push_back({i + 0.2 * std::sin(1.0 * j), j + 0.3 * std::cos(0.5 * i * j)});
  return SplineMap({kx, ky}, cps);
}

}  // namespace

TEST_CASE("piecewise constant basis is an indicator") {
  const KnotVector kv(0, {0.0, 0.5, 1.0});
  const auto v = eval_basis(kv, 0.25);
  REQUIRE(v.size() == 2);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == 0.0);
}

TEST_CASE("open cubic basis interpolates at xi = 0") {
  const auto v = eval_basis(fig2_basis(), 0.0);
  CHECK(v.size() == 10);
  CHECK(v[0] == 1.0);
  for (size_t i = 1; i < v.size(); ++i) CHECK(v[i] == 0.0);
}

TEST_CASE("uniform cubic values at an interior knot") {
  const auto kv = KnotVector::uniform(3, 10);
  const auto v = eval_basis(kv, 0.5);
  // Functions 5, 6, 7 are nonzero at the knot 0.5.
  CHECK(v[5] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(v[6] == doctest::Approx(4.0 / 6.0).epsilon(1e-14));
  CHECK(v[7] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(v[8] == 0.0);
}

TEST_CASE("basis matches recursive oracle, partition of unity and support") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const KnotVector kvs[] = {fig2_basis(), KnotVector::with_interior(3, std::vector<double>{0.2, 0.5, 0.5, 0.5, 0.9}),
                            KnotVector::with_interior(2, std::vector<double>{0.3, 0.3, 0.6}), KnotVector::uniform(1, 3)};
  for (const auto& kv : kvs) {
    for (int s = 0; s < 200; ++s) {
      const double x = s == 0 ? 0.0 : (s == 1 ? 1.0 : u(rng));
      const auto v = eval_basis(kv, x);
      double sum = 0.0;
      for (int i = 0; i < kv.dim(); ++i) {
        CHECK(v[i] >= 0.0);
        CHECK(v[i] == doctest::Approx(cox_de_boor(kv.knots(), i, kv.degree(), x)).epsilon(1e-12));
        const auto& U = kv.knots();
        if (x < U[i] || x > U[i + kv.degree() + 1]) CHECK(v[i] == 0.0);
        sum += v[i];
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("derivatives: linear hats, zero sum, finite differences") {
  const KnotVector lin(1, {0.0, 0.0, 1.0, 1.0});
  for (double x : {0.0, 0.3, 1.0}) {
    const auto d = eval_basis_derivatives(lin, x, 1);
    CHECK(d[0] == doctest::Approx(-1.0));
    CHECK(d[1] == doctest::Approx(1.0));
  }
  const auto kv = fig2_basis();
  const auto d1 = eval_basis_derivatives(kv, 0.37, 1);
  double s = 0.0;
  for (double v : d1) s += v;
  CHECK(std::abs(s) <= 1e-12);

  const double h = 1e-5;
  for (double x : {0.05, 0.37, 0.61, 0.93}) {
    const auto d2 = eval_basis_derivatives(kv, x, 2);
    const auto vp = eval_basis(kv, x + h);
    const auto v0 = eval_basis(kv, x);
    const auto vm = eval_basis(kv, x - h);
    const auto dd = eval_basis_derivatives(kv, x, 1);
    for (int i = 0; i < kv.dim(); ++i) {
      const double fd2 = (vp[i] - 2.0 * v0[i] + vm[i]) / (h * h);
      const double fd1 = (vp[i] - vm[i]) / (2.0 * h);
      const double scale = std::max(1.0, std::abs(d2[i]));
      CHECK(std::abs(fd2 - d2[i]) / scale < 1e-5);
      CHECK(std::abs(fd1 - dd[i]) < 1e-6);
    }
  }
  // Order above the degree gives zeros.
  const auto z = eval_basis_derivatives(lin, 0.4, 2);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);
}

TEST_CASE("greville abscissae") {
  const KnotVector kv(1, {0.0, 0.0, 0.5, 1.0, 1.0});
  const auto g = greville_abscissae(kv);
  CHECK(g == std::vector<double>{0.0, 0.5, 1.0});
  const auto g2 = greville_abscissae(fig2_basis());
  CHECK(g2[0] == 0.0);
  CHECK(g2[1] == doctest::Approx(1.0 / 21.0).epsilon(1e-15));
  CHECK(g2[2] == doctest::Approx(3.0 / 21.0).epsilon(1e-15));
  CHECK(g2.back() == 1.0);
  for (size_t i = 1; i < g2.size(); ++i) CHECK(g2[i] >= g2[i - 1]);
}

TEST_CASE("knot vector validation") {
  CHECK_THROWS_AS(KnotVector(2, {0.0, 0.0, 0.5, 1.0, 1.0, 1.0}), Error);
  CHECK_THROWS_AS(KnotVector(1, {0.0, 0.0, 0.5, 0.5, 1.0, 1.0}), Error);
  CHECK_THROWS_AS(KnotVector(1, {0.0, 0.0, 0.7, 0.3, 1.0, 1.0}), Error);
  CHECK_NOTHROW(KnotVector(3, {0, 0, 0, 0, 0.5, 0.5, 0.5, 1, 1, 1, 1}));
  try {
    eval_basis(fig2_basis(), 1.5);
    FAIL("expected domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDomain);
  }
}

TEST_CASE("map evaluation: constants, linear precision, corners") {
  const TensorBasis tb{fig2_basis(), KnotVector::with_interior(2, std::vector<double>{0.4, 0.4, 0.7})};
  const Vec2 q{0.3, -1.7};
  const SplineMap constant(tb, std::vector<Vec2>(static_cast<size_t>(tb.dim()), q));
  CHECK(distance(constant.eval(0.31, 0.77), q) < 1e-15);

  const auto gx = greville_abscissae(tb.xi);
  const auto gy = greville_abscissae(tb.eta);
  std::vector<Vec2> cps;
  for (double y : gy)
    for (double x : gx) cps.push_back({x, y});
  const SplineMap id(tb, cps);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const double x = u(rng), y = u(rng);
    CHECK(distance(id.eval(x, y), Vec2{x, y}) < 1e-12);
    const auto J = id.jacobian(x, y);
    CHECK(J.det == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(J.g12 == doctest::Approx(0.0).epsilon(1e-12));
  }
  const SplineMap m = sample_map();
  CHECK(m.eval(0.0, 0.0) == m.at(0, 0));
  CHECK(m.eval(1.0, 1.0) == m.at(m.n() - 1, m.m() - 1));
  CHECK_THROWS_AS(m.eval(-0.1, 0.5), Error);

  std::vector<Vec2> scaled = cps;
  for (auto& c : scaled) c.x *= 2.0;
  const SplineMap sm(tb, scaled);
  CHECK(sm.jacobian(0.4, 0.6).det == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("map jacobian and second derivatives against finite differences") {
  const SplineMap m = sample_map();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  const double h = 1e-6;
  for (int k = 0; k < 20; ++k) {
    double x = u(rng), y = u(rng);
    if (std::abs(x - 0.5) < 2e-3) x += 0.01;  // stay off the C0 line
    const auto J = m.jacobian(x, y);
    const Vec2 fx = (m.eval(x + h, y) - m.eval(x - h, y)) / (2 * h);
    const Vec2 fy = (m.eval(x, y + h) - m.eval(x, y - h)) / (2 * h);
    CHECK(distance(fx, J.col_xi) / norm(J.col_xi) < 1e-5);
    CHECK(distance(fy, J.col_eta) / norm(J.col_eta) < 1e-5);
    CHECK(J.det == doctest::Approx(cross(J.col_xi, J.col_eta)));
    CHECK(J.g11 == doctest::Approx(dot(J.col_xi, J.col_xi)));
    const auto D = m.derivatives(x, y, 2);
    const double h2 = 1e-4;
    const Vec2 fxx = (m.eval(x + h2, y) - 2.0 * m.eval(x, y) + m.eval(x - h2, y)) / (h2 * h2);
    const Vec2 fyy = (m.eval(x, y + h2) - 2.0 * m.eval(x, y) + m.eval(x, y - h2)) / (h2 * h2);
    const Vec2 fxy = (m.eval(x + h2, y + h2) - m.eval(x + h2, y - h2) - m.eval(x - h2, y + h2) +
                      m.eval(x - h2, y - h2)) / (4 * h2 * h2);
    CHECK(distance(fxx, D.x_xixi) < 1e-3 * std::max(1.0, norm(D.x_xixi)));
    CHECK(distance(fyy, D.x_etaeta) < 1e-3 * std::max(1.0, norm(D.x_etaeta)));
    CHECK(distance(fxy, D.x_xieta) < 1e-3 * std::max(1.0, norm(D.x_xieta)));
  }
}

TEST_CASE("boundary partition of control indices") {
  const SplineMap m = sample_map();
  const auto in = m.inner_indices();
  const auto bd = m.boundary_indices();
  CHECK(in.size() + bd.size() == static_cast<size_t>(m.n() * m.m()));
  CHECK(in.size() == static_cast<size_t>((m.n() - 2) * (m.m() - 2)));
}

TEST_CASE("knot refinement preserves geometry") {
  const SplineCurve seg(KnotVector(1, {0.0, 0.0, 1.0, 1.0}), {{0.0, 0.0}, {2.0, 4.0}});
  const std::vector<double> half{0.5};
  const auto r = refine(seg, half);
  REQUIRE(r.control_points().size() == 3);
  CHECK(distance(r.control_points()[1], Vec2{1.0, 2.0}) < 1e-15);

  const SplineCurve c = sample_curve();
  const auto same = refine(c, std::vector<double>{});
  CHECK(same.basis() == c.basis());
  CHECK(same.control_points() == c.control_points());

  const auto r3 = refine(c, std::vector<double>{0.3});
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double t = u(rng);
    CHECK(distance(r3.eval(t), c.eval(t)) < 1e-12);
  }
  const auto r4 = refine(c, std::vector<double>{0.3, 0.3, 0.3});
  try {
    refine(r4, std::vector<double>{0.3});
    FAIL("expected refinement error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidRefinement);
  }

  const SplineMap m = sample_map();
  const auto mx = refine_xi(m, std::vector<double>{0.1, 0.65, 0.65});
  const auto my = refine_eta(m, std::vector<double>{0.33, 0.9});
  for (int k = 0; k < 100; ++k) {
    const double x = u(rng), y = u(rng);
    CHECK(distance(mx.eval(x, y), m.eval(x, y)) < 1e-12);
    CHECK(distance(my.eval(x, y), m.eval(x, y)) < 1e-12);
  }
}

TEST_CASE("continuity across a knot of multiplicity m") {
  // Cubic with a double knot at 0.5 is C1: the first derivative is continuous,
  // the second may jump.
  const auto kv = KnotVector::with_interior(3, std::vector<double>{0.25, 0.5, 0.5, 0.75});
  std::vector<Vec2> cps;
  for (int i = 0; i < kv.dim(); ++i) cps.push_back({1.0 * i, (i % 2) ? 1.0 : -0.5});
  const SplineCurve c(kv, cps);
  const double e = 1e-7;
  CHECK(distance(c.derivative(0.5 - e), c.derivative(0.5 + e)) < 1e-4);
  CHECK(distance(c.derivative(0.5 - e, 2), c.derivative(0.5 + e, 2)) > 1e-2);
}

TEST_CASE("sub-curves and sub-maps are exact restrictions") {
  const SplineCurve c = sample_curve();
  const auto s = subcurve(c, 0.2, 0.7);
  for (int k = 0; k <= 50; ++k) {
    const double t = k / 50.0;
    CHECK(distance(s.eval(t), c.eval(0.2 + 0.5 * t)) < 1e-12);
  }
  const auto rv = reversed(c);
  CHECK(distance(rv.eval(0.3), c.eval(0.7)) < 1e-13);
  const SplineMap m = sample_map();
  const auto sm = submap_xi(m, 0.25, 0.8);
  for (int k = 0; k <= 20; ++k) {
    const double t = k / 20.0;
    CHECK(distance(sm.eval(t, 0.4), m.eval(0.25 + 0.55 * t, 0.4)) < 1e-12);
  }
}
