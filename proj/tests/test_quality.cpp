#include <cmath>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "screwgen/quality.hpp"

using namespace screwgen;

namespace {

BackgroundMesh quad_mesh(const std::vector<std::array<Vec2, 4>>& quads) {
  BackgroundMesh m;
  for (const auto& q : quads) {
    std::array<int, 8> c{};
    for (int k = 0; k < 4; ++k) {
      c[static_cast<size_t>(k)] = static_cast<int>(m.vertices.size());
      m.vertices.push_back({q[static_cast<size_t>(k)].x, q[static_cast<size_t>(k)].y, 0.0});
      m.tags.push_back(BoundaryTag::kInterior);
    }
    m.cells.push_back(c);
  }
  return m;
}

std::array<Vec3, 8> box(double a, double b, double c) {
  return {Vec3{0, 0, 0}, Vec3{a, 0, 0}, Vec3{a, b, 0}, Vec3{0, b, 0},
          Vec3{0, 0, c}, Vec3{a, 0, c}, Vec3{a, b, c}, Vec3{0, b, c}};
}

}  // namespace

TEST_CASE("scaled Jacobian of reference quads") {
  CHECK(scaled_jacobian_quad({Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}}) == doctest::Approx(1.0).epsilon(1e-15));
  // 45 degree parallelogram: every corner angle is 45 or 135 degrees
  const double s = std::sqrt(0.5);
  CHECK(scaled_jacobian_quad({Vec2{0, 0}, Vec2{1, 0}, Vec2{1 + s, s}, Vec2{s, s}}) ==
        doctest::Approx(s).epsilon(1e-14));
  // a repeated corner has a zero edge
  CHECK(scaled_jacobian_quad({Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 0}, Vec2{0, 1}}) == 0.0);
  // clockwise ordering reads as inverted
  CHECK(scaled_jacobian_quad({Vec2{0, 0}, Vec2{0, 1}, Vec2{1, 1}, Vec2{1, 0}}) == doctest::Approx(-1.0));
  // arrowhead: one reflex corner
  CHECK(scaled_jacobian_quad({Vec2{0, 0}, Vec2{2, 0}, Vec2{0.5, 0.5}, Vec2{0, 2}}) < 0.0);
}

TEST_CASE("scaled Jacobian is invariant under rigid motion and scaling") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::array<Vec2, 4> q{Vec2{0, 0}, Vec2{1 + 0.3 * u(rng), 0.2 * u(rng)}, Vec2{1 + 0.3 * u(rng), 1 + 0.3 * u(rng)},
                          Vec2{0.2 * u(rng), 1 + 0.3 * u(rng)}};
    const double a = kPi * u(rng), scale = std::exp(3.0 * u(rng));
    const Vec2 shift{u(rng), u(rng)};
    std::array<Vec2, 4> r;
    for (size_t k = 0; k < 4; ++k)
      r[k] = Vec2{std::cos(a) * q[k].x - std::sin(a) * q[k].y, std::sin(a) * q[k].x + std::cos(a) * q[k].y} * scale +
             shift;
    CHECK(scaled_jacobian_quad(r) == doctest::Approx(scaled_jacobian_quad(q)).epsilon(1e-12));
  }
}

TEST_CASE("scaled Jacobian of hexahedra") {
  CHECK(scaled_jacobian_hex(box(1, 1, 1)) == doctest::Approx(1.0));
  CHECK(scaled_jacobian_hex(box(3, 0.5, 7)) == doctest::Approx(1.0));
  // extruded 45 degree parallelogram: the in-plane corners dominate
  const double s = std::sqrt(0.5);
  std::array<Vec3, 8> h{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{1 + s, s, 0}, Vec3{s, s, 0},
                        Vec3{0, 0, 1}, Vec3{1, 0, 1}, Vec3{1 + s, s, 1}, Vec3{s, s, 1}};
  CHECK(scaled_jacobian_hex(h) == doctest::Approx(s).epsilon(1e-14));
  // top and bottom swapped turns the element inside out
  auto flipped = box(1, 1, 1);
  for (size_t k = 0; k < 4; ++k) std::swap(flipped[k], flipped[k + 4]);
  CHECK(scaled_jacobian_hex(flipped) == doctest::Approx(-1.0));
  auto flat = box(1, 1, 1);
  for (size_t k = 4; k < 8; ++k) flat[k].z = 0.0;
  CHECK(scaled_jacobian_hex(flat) == 0.0);
}

TEST_CASE("quality report counts folds and summarizes") {
  const BackgroundMesh m = quad_mesh({{Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}},
                                      {Vec2{0, 0}, Vec2{0, 1}, Vec2{1, 1}, Vec2{1, 0}},
                                      {Vec2{0, 0}, Vec2{2, 0}, Vec2{2, 1}, Vec2{0, 1}}});
  const QualityReport r = report(m);
  CHECK(r.elements == 3);
  CHECK(r.fold_count == 1);
  CHECK(r.min == doctest::Approx(-1.0));
  CHECK(r.max == doctest::Approx(1.0));
  CHECK(r.mean == doctest::Approx(1.0 / 3.0));
  CHECK(r.orthogonality_max == doctest::Approx(0.0).epsilon(1e-15));

  // skewed cell: parametric directions at 45 degrees
  const BackgroundMesh skew = quad_mesh({{Vec2{0, 0}, Vec2{1, 0}, Vec2{2, 1}, Vec2{1, 1}}});
  CHECK(report(skew).orthogonality_mean == doctest::Approx(std::sqrt(0.5)));

  const auto j = nlohmann::json::parse(to_json(r, true));
  CHECK(j["fold_count"] == 1);
  CHECK(j["scaled_jacobian"]["values"].size() == 3);
  CHECK_FALSE(nlohmann::json::parse(to_json(r)).at("scaled_jacobian").contains("values"));
}

TEST_CASE("cartesian grid is perfect") {
  std::vector<std::array<Vec2, 4>> quads;
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 5; ++i)
      quads.push_back({Vec2{0.5 * i, 0.3 * j}, Vec2{0.5 * (i + 1), 0.3 * j}, Vec2{0.5 * (i + 1), 0.3 * (j + 1)},
                       Vec2{0.5 * i, 0.3 * (j + 1)}});
  const QualityReport r = report(quad_mesh(quads));
  CHECK(r.elements == 20);
  CHECK(r.min == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.max == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.fold_count == 0);
}
