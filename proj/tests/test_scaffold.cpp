#include <cmath>
#include <map>

#include "doctest.h"
#include "screwgen/quality.hpp"
#include "synthetic.hpp"

using namespace screwgen;
using namespace screwgen::test;

namespace {

double area(const BackgroundMesh& m) {
  double a = 0.0;
  for (const auto& c : m.cells)
    for (int k = 0; k < 4; ++k) {
      const Vec3 &p = m.vertices[static_cast<size_t>(c[static_cast<size_t>(k)])],
                 &q = m.vertices[static_cast<size_t>(c[static_cast<size_t>((k + 1) % 4)])];
      a += 0.5 * (p.x * q.y - q.x * p.y);
    }
  return a;
}

}  // namespace

TEST_CASE("scaffold of an identity patch is the uniform lattice") {
  const TensorBasis basis{KnotVector::uniform(2, 3), KnotVector::uniform(2, 3)};
  std::vector<Vec2> cps;
  for (double v : greville_abscissae(basis.eta))
    for (double u : greville_abscissae(basis.xi)) cps.push_back({u, v});
  const PatchParameterization sep{SplineMap(basis, cps), PatchKind::kSeparator, 0.0};
  const PatchGrid g = build_scaffold(sep, nullptr, 2, 2);
  REQUIRE(g.points.size() == 9);
  for (int j = 0; j <= 2; ++j)
    for (int i = 0; i <= 2; ++i) {
      CHECK(g.at(i, j).x == doctest::Approx(i / 2.0).epsilon(1e-14));
      CHECK(g.at(i, j).y == doctest::Approx(j / 2.0).epsilon(1e-14));
    }
  const ControlMap id = identity_control();
  const PatchGrid h = build_scaffold(sep, &id, 2, 2);
  for (size_t k = 0; k < 9; ++k) CHECK(distance(h.points[k], g.points[k]) < 1e-14);

  // C-grids sample mu along eta: two rows, one per boundary
  const PatchParameterization cg{SplineMap(basis, cps), PatchKind::kCGridLeft, 0.0};
  const PatchGrid c = build_scaffold(cg, nullptr, 1, 4);
  CHECK(c.n_mu == 1);
  CHECK(c.points.size() == 10);
  for (int j = 0; j <= 4; ++j) {
    CHECK(c.at(0, j).y == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(c.at(1, j).y == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c.at(0, j).x == doctest::Approx(j / 4.0).epsilon(1e-14));
  }
}

TEST_CASE("folded scaffold is rejected") {
  const TensorBasis basis{KnotVector::uniform(1, 1), KnotVector::uniform(1, 1)};
  const PatchParameterization sep{SplineMap(basis, {Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}, Vec2{1, 1}}),
                                  PatchKind::kSeparator, 0.3};
  CHECK_NOTHROW(build_scaffold(sep, nullptr, 3, 3));
  // bow tie: the top edge runs backwards
  const PatchParameterization bad{SplineMap(basis, {Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}}),
                                  PatchKind::kSeparator, 0.3};
  try {
    build_scaffold(bad, nullptr, 3, 3);
    FAIL("expected a scaffold error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kScaffold);
    CHECK(std::string(e.what()).find("0.3") != std::string::npos);
  }
}

TEST_CASE("scaffold grid sizes of the convergence meshes") {
  // separator column of n_mu = 12 over the full n_s of each mesh
  const int n_s[] = {80, 160, 300, 600};
  for (int ns : n_s) {
    const Scaffold s = synthetic(300, 12, ns);
    CHECK(s.patches[kSeparatorPatch].points.size() == static_cast<size_t>(13 * (ns + 1)));
  }
  CHECK(synthetic(300, 12, 300).patches[kSeparatorPatch].points.size() == 13u * 301u);
}

TEST_CASE("refinement reproduces scaffold points exactly") {
  const Scaffold s = synthetic(40, 4, 20);
  const PatchGrid& S = s.patches[kSeparatorPatch];
  const PatchGrid f = refine_to_background(S, 12, 60);
  CHECK(f.n_mu == 12);
  CHECK(f.n_nu == 60);
  for (int j = 0; j <= 20; ++j)
    for (int i = 0; i <= 4; ++i) {
      CHECK(f.at(3 * i, 3 * j).x == S.at(i, j).x);
      CHECK(f.at(3 * i, 3 * j).y == S.at(i, j).y);
    }
  // factor two: new points are edge midpoints and cell centroids
  const PatchGrid h = refine_to_background(S, 8, 40);
  CHECK(distance(h.at(1, 0), (S.at(0, 0) + S.at(1, 0)) * 0.5) < 1e-15);
  CHECK(distance(h.at(1, 1), (S.at(0, 0) + S.at(1, 0) + S.at(0, 1) + S.at(1, 1)) * 0.25) < 1e-15);
  // same resolution is the identity
  const PatchGrid same = refine_to_background(S, 4, 20);
  for (size_t k = 0; k < S.points.size(); ++k) CHECK(same.points[k] == S.points[k]);

  for (auto [nr, ns] : {std::pair{6, 20}, std::pair{4, 30}, std::pair{2, 20}}) {
    try {
      refine_to_background(S, nr, ns);
      FAIL("expected a resolution error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kResolution);
    }
  }
}

TEST_CASE("element counts of the convergence meshes") {
  struct Row {
    int n_s_c, n_s_sep, n_r;
    long elements;
  };
  const Row rows[] = {{200, 80, 6, 3360}, {300, 160, 10, 9200}, {300, 300, 12, 14400}, {300, 600, 18, 32400}};
  for (const Row& r : rows) {
    const MeshResolution res{r.n_r, r.n_s_c, r.n_s_sep, 0};
    CHECK(res.elements_2d() == r.elements);
    // assembled from a scaffold whose n_mu divides 2 n_r
    const int n_mu = 2 * r.n_r % 12 == 0 ? 12 : 2 * r.n_r;
    const auto grids = refine_scaffold(synthetic(r.n_s_c, n_mu, r.n_s_sep), res);
    const BackgroundMesh m = assemble_2d(grids[0], grids[1], grids[2]);
    CHECK(static_cast<long>(m.cells.size()) == r.elements);
    const size_t vertices = static_cast<size_t>((2 * r.n_r + 1) * (r.n_s_sep + 1) + 2 * (r.n_r + 1) * (r.n_s_c - 1));
    CHECK(m.vertices.size() == vertices);
  }
}

TEST_CASE("assembled mesh is conforming with two holes") {
  const MeshResolution res{4, 48, 24, 0};
  const auto grids = refine_scaffold(synthetic(24, 8, 12), res);
  const BackgroundMesh m = assemble_2d(grids[0], grids[1], grids[2]);
  CHECK(m.vertices.size() == m.tags.size());

  std::map<std::pair<int, int>, int> edges;
  for (const auto& c : m.cells)
    for (int k = 0; k < 4; ++k) {
      int a = c[static_cast<size_t>(k)], b = c[static_cast<size_t>((k + 1) % 4)];
      if (a > b) std::swap(a, b);
      ++edges[{a, b}];
    }
  int boundary = 0;
  bool at_most_two = true;
  for (const auto& [e, n] : edges) {
    if (n == 1) ++boundary;
    at_most_two = at_most_two && n <= 2;
  }
  CHECK(at_most_two);
  // disc with two holes
  const long euler = static_cast<long>(m.vertices.size()) - static_cast<long>(edges.size()) +
                     static_cast<long>(m.cells.size());
  CHECK(euler == -1);
  // screw loops plus barrel: 2 (n_s_c + n_s_sep) + 2 n_s_c
  CHECK(boundary == 2 * (48 + 24) + 2 * 48);

  const QualityReport q = report(m);
  CHECK(q.fold_count == 0);
  CHECK(q.min > 0.0);

  // barrel vertices of the C-grids lie on or just inside the barrel circles
  const double sag = kBarrel * (1.0 - std::cos(0.5 * (2.0 * kPi - 2.0 * kAlpha) / 24));
  int barrel = 0;
  for (size_t v = 0; v < m.vertices.size(); ++v) {
    if (m.tags[v] != BoundaryTag::kBarrel) continue;
    ++barrel;
    const Vec2 p{m.vertices[v].x, m.vertices[v].y};
    const double d = std::min(std::abs(distance(p, {-2, 0}) - kBarrel), std::abs(distance(p, {2, 0}) - kBarrel));
    CHECK(d <= sag + 1e-12);
  }
  CHECK(barrel == 2 * 47 + 2);

  // area depends on the boundary only: fans of scaffold chords about the
  // rotor centers plus the two triangles through the cusps
  const double dc = (2.0 * kPi - 2.0 * kAlpha) / 24, ds = 2.0 * kAlpha / 12;
  const double barrel_fan = 24 * 0.5 * kBarrel * kBarrel * std::sin(dc) + 0.5 * 2.0 * 3.0;
  const double screw_fan = 24 * 0.5 * kScrew * kScrew * std::sin(dc) + 12 * 0.5 * kScrew * kScrew * std::sin(ds);
  CHECK(area(m) == doctest::Approx(2.0 * (barrel_fan - screw_fan)).epsilon(1e-12));
}

TEST_CASE("mismatched interfaces are rejected") {
  auto grids = refine_scaffold(synthetic(24, 8, 12), MeshResolution{4, 24, 12, 0});
  grids[kRightCGrid].at(2, 0).x += 1e-3;
  CHECK_THROWS_AS(assemble_2d(grids[0], grids[1], grids[2]), Error);
  try {
    assemble_2d(grids[0], grids[1], grids[2]);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConformity);
  }
}

TEST_CASE("interpolation between stored scaffolds") {
  const ScaffoldDatabase db = synthetic_db(5, {8, 24, 12});
  const double h = db.angles[1] - db.angles[0];
  // the end of the period reduces to its start
  for (size_t k = 0; k < db.angles.size(); ++k) {
    const Scaffold s = interpolate_scaffold(db, db.angles[k]);
    if (k + 1 == db.angles.size()) {
      for (size_t p = 0; p < 3; ++p) CHECK(s.patches[p].points == db.scaffolds[0].patches[p].points);
      continue;
    }
    for (size_t p = 0; p < 3; ++p) CHECK(s.patches[p].points == db.scaffolds[k].patches[p].points);
  }
  const Scaffold mid = interpolate_scaffold(db, 1.5 * h);
  for (size_t p = 0; p < 3; ++p)
    for (size_t k = 0; k < mid.patches[p].points.size(); ++k) {
      const Vec2 avg = (db.scaffolds[1].patches[p].points[k] + db.scaffolds[2].patches[p].points[k]) * 0.5;
      CHECK(distance(mid.patches[p].points[k], avg) < 1e-14);
    }
  // one period later is the same slice
  const Scaffold later = interpolate_scaffold(db, 0.7 * h + db.period());
  const Scaffold now = interpolate_scaffold(db, 0.7 * h);
  for (size_t p = 0; p < 3; ++p)
    for (size_t k = 0; k < now.patches[p].points.size(); ++k)
      CHECK(distance(later.patches[p].points[k], now.patches[p].points[k]) < 1e-12);
  CHECK_NOTHROW(interpolate_scaffold(db, -0.3 * h));

  const BackgroundMesh m = mesh_2d(db, 2.5 * h, {4, 48, 24, 0});
  CHECK(m.cells.size() == 2u * 4u * 48u + 8u * 24u);
}

TEST_CASE("database validation") {
  ScaffoldDatabase db = synthetic_db(4, {8, 24, 12});
  db.angles[2] += 1e-3;
  CHECK_THROWS_AS(db.validate(), Error);
  db = synthetic_db(4, {8, 24, 12});
  db.scaffolds[1].patches[kSeparatorPatch] = PatchGrid(8, 10);
  CHECK_THROWS_AS(db.validate(), Error);
}

TEST_CASE("memory savings") {
  // scaffold equal to the mesh stores everything
  const ScaffoldDatabase same = synthetic_db(3, {8, 24, 12});
  const MemoryReport r0 = memory_report(same, {1, 24, 12, 0});
  // the C-grids match, the separator scaffold has 8 columns against 2 n_r = 2
  CHECK(r0.full == doctest::Approx(3 * 2.0 * (2 * 2 * 25 + 3 * 13)));
  const ScaffoldDatabase exact = synthetic_db(3, {2, 24, 12});
  CHECK(memory_report(exact, {1, 24, 12, 0}).savings == doctest::Approx(0.0).epsilon(1e-15));

  // the three mixing-element meshes: n_nu equal to n_s, n_mu = 12 in the separator
  struct Row {
    int n_s_c, n_s_sep, n_r;
  };
  const Row rows[] = {{150, 60, 4}, {300, 120, 8}, {600, 240, 16}};
  double prev = -1.0;
  for (const Row& r : rows) {
    ScaffoldDatabase db = synthetic_db(3, {12, r.n_s_c, r.n_s_sep});
    const MemoryReport m = memory_report(db, {r.n_r, r.n_s_c, r.n_s_sep, 0});
    const double stored = 3 * 2.0 * (2 * 2 * (r.n_s_c + 1) + 13 * (r.n_s_sep + 1));
    const double full = 3 * 2.0 * (2 * (r.n_r + 1) * (r.n_s_c + 1) + (2 * r.n_r + 1) * (r.n_s_sep + 1));
    CHECK(m.stored == stored);
    CHECK(m.full == full);
    CHECK(m.savings > prev);
    prev = m.savings;
  }
  CHECK(prev > 0.75);

  // doubling the background at a fixed scaffold saves more
  const ScaffoldDatabase db = synthetic_db(3, {12, 300, 120});
  CHECK(memory_report(db, {16, 600, 240, 0}).savings > memory_report(db, {8, 300, 120, 0}).savings);
}

TEST_CASE("extrusion stacks slices along one pitch") {
  const ScaffoldDatabase db = synthetic_db(5, {8, 24, 12});
  MeshResolution res{4, 48, 24, 6};
  const BackgroundMesh m = extrude_3d(db, 0.0, res);
  CHECK(m.dim == 3);
  const size_t per_layer = static_cast<size_t>((8 + 1) * (24 + 1) + 2 * (4 + 1) * (48 - 1));
  CHECK(m.vertices.size() == per_layer * 7);
  CHECK(m.cells.size() == static_cast<size_t>(res.elements_2d() * 6));
  const QualityReport q = report(m);
  CHECK(q.fold_count == 0);
  CHECK(m.vertices.front().z == 0.0);
  CHECK(m.vertices.back().z == doctest::Approx(db.params.pitch_length));
  size_t inflow = 0, outflow = 0;
  for (auto t : m.tags) {
    inflow += t == BoundaryTag::kInflow;
    outflow += t == BoundaryTag::kOutflow;
  }
  CHECK(inflow == per_layer);
  CHECK(outflow == per_layer);

  // one axial element over a short length: straight prisms over the planar quads
  res.n_a = 1;
  const BackgroundMesh one = extrude_3d(db, 0.0, res, {}, 1e-3);
  const BackgroundMesh base = mesh_2d(db, 0.0, res);
  REQUIRE(one.cells.size() == base.cells.size());
  const double drift = 2.0 * kPi * 1e-3 / db.params.pitch_length * 0.1;
  for (size_t c = 0; c < base.cells.size(); c += 37)
    for (size_t k = 0; k < 4; ++k) {
      const Vec3& b = base.vertices[static_cast<size_t>(base.cells[c][k])];
      const Vec3& lo = one.vertices[static_cast<size_t>(one.cells[c][k])];
      const Vec3& hi = one.vertices[static_cast<size_t>(one.cells[c][k + 4])];
      CHECK(lo == b);
      CHECK(hi.z == doctest::Approx(1e-3));
      CHECK(std::hypot(hi.x - b.x, hi.y - b.y) <= drift * 5.0 + 1e-12);
    }

  // inflow and outflow blocks
  const ExtensionSpec ext{2.0, 1.5, 3};
  res.n_a = 6;
  const BackgroundMesh e = extrude_3d(db, 0.0, res, ext);
  CHECK(e.cells.size() == static_cast<size_t>(res.elements_2d() * (6 + 2 * 3)));
  CHECK(e.vertices.front().z == doctest::Approx(-2.0));
  CHECK(e.vertices.back().z == doctest::Approx(db.params.pitch_length + 2.0));
  CHECK(report(e).fold_count == 0);
  // end caps: every screw vertex sits on the circle
  const BackgroundMesh flat = mesh_2d(db, 0.0, res);
  int on_circle = 0;
  for (size_t v = 0; v < per_layer; ++v) {
    const Vec2 p{e.vertices[v].x, e.vertices[v].y};
    if (flat.tags[v] == BoundaryTag::kLeftScrew) {
      CHECK(distance(p, db.params.left_center()) == doctest::Approx(1.5).epsilon(1e-12));
      ++on_circle;
    } else if (flat.tags[v] == BoundaryTag::kRightScrew) {
      CHECK(distance(p, db.params.right_center()) == doctest::Approx(1.5).epsilon(1e-12));
      ++on_circle;
    }
  }
  CHECK(on_circle == 2 * (48 + 24));
}
