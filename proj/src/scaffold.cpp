#include "screwgen/scaffold.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "screwgen/parallel.hpp"

namespace screwgen {

namespace {

bool is_c_grid(PatchKind k) { return k == PatchKind::kCGridLeft || k == PatchKind::kCGridRight; }

// Corner cells of a grid, counterclockwise in the physical plane. C-grids run
// mu along eta, so their (mu, nu) cells are reversed.
std::array<Vec2, 4> grid_cell(const PatchGrid& g, int i, int j, bool c_grid) {
  if (c_grid) return {g.at(i, j), g.at(i, j + 1), g.at(i + 1, j + 1), g.at(i + 1, j)};
  return {g.at(i, j), g.at(i + 1, j), g.at(i + 1, j + 1), g.at(i, j + 1)};
}

bool convex_ccw(const std::array<Vec2, 4>& q) {
  for (int k = 0; k < 4; ++k) {
    const Vec2& p = q[static_cast<size_t>(k)];
    if (!(cross(q[static_cast<size_t>((k + 1) % 4)] - p, q[static_cast<size_t>((k + 3) % 4)] - p) > 0.0)) return false;
  }
  return true;
}

std::vector<std::pair<int, int>> folded_cells(const PatchGrid& g, bool c_grid) {
  std::vector<std::pair<int, int>> bad;
  for (int j = 0; j < g.n_nu; ++j)
    for (int i = 0; i < g.n_mu; ++i)
      if (!convex_ccw(grid_cell(g, i, j, c_grid))) bad.emplace_back(i, j);
  return bad;
}

void check_patch(const PatchGrid& g, bool c_grid, const char* name, double theta) {
  const auto bad = folded_cells(g, c_grid);
  if (bad.empty()) return;
  std::ostringstream msg;
  msg << name << " scaffold at theta " << theta << " folds in " << bad.size() << " cell(s):";
  for (size_t k = 0; k < std::min<size_t>(bad.size(), 8); ++k) msg << " (" << bad[k].first << ',' << bad[k].second << ')';
  fail(ErrorCode::kScaffold, msg.str());
}

const char* slot_name(int p) { return p == kLeftCGrid ? "left C-grid" : p == kRightCGrid ? "right C-grid" : "separator"; }

// Interpolation returning the end points bit for bit.
Vec2 exact_lerp(const Vec2& a, const Vec2& b, double t) { return t == 0.0 ? a : t == 1.0 ? b : lerp(a, b, t); }

Vec2 polar_project(const Vec2& p, const Vec2& c, double r) {
  const Vec2 d = p - c;
  const double len = norm(d);
  if (len == 0.0) fail(ErrorCode::kInvalidGeometry, "screw vertex coincides with its rotor center");
  return c + d * (r / len);
}

}  // namespace

PatchGrid build_scaffold(const PatchParameterization& param, const ControlMap* ctrl, int n_mu, int n_nu) {
  if (n_mu < 1 || n_nu < 1) fail(ErrorCode::kResolution, "scaffold resolution must be positive");
  const bool c_grid = is_c_grid(param.kind);
  PatchGrid g(n_mu, n_nu);
  for (int j = 0; j <= n_nu; ++j)
    for (int i = 0; i <= n_mu; ++i) {
      const double mu = static_cast<double>(i) / n_mu, nu = static_cast<double>(j) / n_nu;
      if (c_grid)
        g.at(i, j) = param.map.eval(nu, mu);
      else
        g.at(i, j) = param.map.eval(mu, ctrl ? ctrl->eval(mu, nu) : nu);
    }
  check_patch(g, c_grid, c_grid ? "C-grid" : "separator", param.theta);
  return g;
}

Scaffold build_scaffold(const AngleSlice& slice, const ScaffoldResolution& res) {
  Scaffold s;
  s.theta = slice.theta;
  s.patches[kLeftCGrid] = build_scaffold(slice.left, nullptr, 1, res.n_nu_c);
  s.patches[kSeparatorPatch] = build_scaffold(slice.separator, &slice.control, res.n_mu_separator, res.n_nu_separator);
  s.patches[kRightCGrid] = build_scaffold(slice.right, nullptr, 1, res.n_nu_c);
  return s;
}

void ScaffoldDatabase::validate() const {
  if (angles.size() < 2 || scaffolds.size() != angles.size())
    fail(ErrorCode::kDatabase, "database needs at least two angles with one scaffold each");
  const double h = angles[1] - angles[0];
  for (size_t i = 1; i < angles.size(); ++i) {
    const double d = angles[i] - angles[i - 1];
    if (!(d > 0.0) || std::abs(d - h) > 1e-9 * std::max(1.0, h))
      fail(ErrorCode::kDatabase, "database angles must be strictly increasing and uniformly spaced");
  }
  const int mu[3] = {1, resolution.n_mu_separator, 1};
  const int nu[3] = {resolution.n_nu_c, resolution.n_nu_separator, resolution.n_nu_c};
  for (const auto& s : scaffolds)
    for (int p = 0; p < 3; ++p) {
      const PatchGrid& g = s.patches[static_cast<size_t>(p)];
      if (g.n_mu != mu[p] || g.n_nu != nu[p] || g.points.size() != static_cast<size_t>((mu[p] + 1) * (nu[p] + 1)))
        fail(ErrorCode::kDatabase, std::string("scaffold shape mismatch in the ") + slot_name(p));
    }
}

ScaffoldDatabase build_database(const ScrewParams& params, const std::vector<AngleSlice>& slices,
                                const ScaffoldResolution& res, int threads) {
  ScaffoldDatabase db;
  db.params = params;
  db.resolution = res;
  db.scaffolds.resize(slices.size());
  std::vector<std::string> errors(slices.size());
  parallel_for(slices.size(), resolve_threads(threads), [&](size_t i) {
    try {
      db.scaffolds[i] = build_scaffold(slices[i], res);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kScaffold) throw;
      errors[i] = e.what();
    }
  });
  std::ostringstream msg;
  bool bad = false;
  for (size_t i = 0; i < slices.size(); ++i) {
    db.angles.push_back(slices[i].theta);
    if (!errors[i].empty()) {
      msg << (bad ? "; " : "scaffold folding: ") << errors[i];
      bad = true;
    }
  }
  if (bad) fail(ErrorCode::kDatabase, msg.str());
  db.validate();
  return db;
}

ScaffoldDatabase fill_database(const GeometrySource& geo, const ScaffoldResolution& res, int n_angles,
                               const PipelineOptions& opts, SweepStats* stats) {
  const auto angles = sweep_angles(geo.params, n_angles);
  const auto slices = parameterize_angles(geo, angles, opts, stats);
  return build_database(geo.params, slices, res, opts.threads);
}

Scaffold interpolate_scaffold(const ScaffoldDatabase& db, double theta) {
  if (db.angles.empty()) fail(ErrorCode::kDatabase, "empty database");
  const double a0 = db.angles.front();
  const double span = db.angles.back() - a0;
  double t = std::fmod(theta - a0, db.period());
  if (t < 0.0) t += db.period();
  t = std::min(t, span);
  const double h = span / static_cast<double>(db.angles.size() - 1);
  size_t i = std::min(static_cast<size_t>(t / h), db.angles.size() - 2);
  if (t < db.angles[i] - a0) --i;
  const double lo = db.angles[i] - a0, hi = db.angles[i + 1] - a0;
  Scaffold out;
  if (t == lo || t == hi) {
    out = db.scaffolds[t == lo ? i : i + 1];
    out.theta = theta;
    return out;
  }
  const double w = (t - lo) / (hi - lo);
  out = db.scaffolds[i];
  out.theta = theta;
  for (size_t p = 0; p < 3; ++p) {
    auto& dst = out.patches[p].points;
    const auto& b = db.scaffolds[i + 1].patches[p].points;
    for (size_t k = 0; k < dst.size(); ++k) dst[k] = lerp(dst[k], b[k], w);
  }
  return out;
}

PatchGrid refine_to_background(const PatchGrid& s, int n_r, int n_s) {
  if (n_r < s.n_mu || n_s < s.n_nu || n_r % s.n_mu != 0 || n_s % s.n_nu != 0) {
    std::ostringstream msg;
    msg << "background resolution " << n_r << " x " << n_s << " is not an integer multiple of the scaffold "
        << s.n_mu << " x " << s.n_nu;
    fail(ErrorCode::kResolution, msg.str());
  }
  const int rr = n_r / s.n_mu, rs = n_s / s.n_nu;
  PatchGrid g(n_r, n_s);
  for (int j = 0; j <= n_s; ++j) {
    const int cj = std::min(j / rs, s.n_nu - 1);
    const double v = static_cast<double>(j - cj * rs) / rs;
    for (int i = 0; i <= n_r; ++i) {
      const int ci = std::min(i / rr, s.n_mu - 1);
      const double u = static_cast<double>(i - ci * rr) / rr;
      const Vec2 a = exact_lerp(s.at(ci, cj), s.at(ci + 1, cj), u);
      const Vec2 b = exact_lerp(s.at(ci, cj + 1), s.at(ci + 1, cj + 1), u);
      g.at(i, j) = exact_lerp(a, b, v);
    }
  }
  return g;
}

std::array<PatchGrid, 3> refine_scaffold(const Scaffold& s, const MeshResolution& res) {
  return {refine_to_background(s.patches[kLeftCGrid], res.n_r, res.n_s_c),
          refine_to_background(s.patches[kSeparatorPatch], res.separator_radial(), res.n_s_separator),
          refine_to_background(s.patches[kRightCGrid], res.n_r, res.n_s_c)};
}

const char* tag_name(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::kInterior: return "interior";
    case BoundaryTag::kLeftScrew: return "left_screw";
    case BoundaryTag::kRightScrew: return "right_screw";
    case BoundaryTag::kBarrel: return "barrel";
    case BoundaryTag::kInflow: return "inflow";
    case BoundaryTag::kOutflow: return "outflow";
  }
  return "unknown";
}

BackgroundMesh assemble_2d(const PatchGrid& L, const PatchGrid& S, const PatchGrid& R) {
  const int nr = L.n_mu, nc = L.n_nu, ns = S.n_nu;
  if (R.n_mu != nr || R.n_nu != nc || S.n_mu != 2 * nr)
    fail(ErrorCode::kConformity, "C-grids need equal sizes and half the separator's radial count");
  BackgroundMesh mesh;
  mesh.resolution = {nr, nc, ns, 0};
  double extent = 0.0;
  for (const Vec2& p : S.points) extent = std::max(extent, norm(p - S.points.front()));
  const double tol = 1e-9 * std::max(extent, 1e-300);
  double gap = 0.0;

  std::vector<int> sid(S.points.size()), lid(L.points.size(), -1), rid(R.points.size(), -1);
  auto add = [&](const Vec2& p, BoundaryTag t) {
    mesh.vertices.push_back({p.x, p.y, 0.0});
    mesh.tags.push_back(t);
    return static_cast<int>(mesh.vertices.size()) - 1;
  };
  for (int j = 0; j <= ns; ++j)
    for (int i = 0; i <= 2 * nr; ++i) {
      BoundaryTag t = BoundaryTag::kInterior;
      if (i == 0) t = BoundaryTag::kLeftScrew;
      else if (i == 2 * nr) t = BoundaryTag::kRightScrew;
      else if (i == nr && (j == 0 || j == ns)) t = BoundaryTag::kBarrel;
      sid[S.index(i, j)] = add(S.at(i, j), t);
    }
  auto share = [&](std::vector<int>& ids, const PatchGrid& g, int i, int j, int si, int sj) {
    ids[g.index(i, j)] = sid[S.index(si, sj)];
    gap = std::max(gap, distance(g.at(i, j), S.at(si, sj)));
  };
  for (int i = 0; i <= nr; ++i) {
    share(lid, L, i, 0, i, 0);
    share(lid, L, i, nc, i, ns);
    share(rid, R, i, 0, 2 * nr - i, ns);
    share(rid, R, i, nc, 2 * nr - i, 0);
  }
  if (gap > tol) {
    std::ostringstream msg;
    msg << "patch interfaces do not match: max gap " << gap;
    fail(ErrorCode::kConformity, msg.str());
  }
  for (int j = 1; j < nc; ++j)
    for (int i = 0; i <= nr; ++i) {
      const BoundaryTag edge = i == nr ? BoundaryTag::kBarrel : BoundaryTag::kInterior;
      lid[L.index(i, j)] = add(L.at(i, j), i == 0 ? BoundaryTag::kLeftScrew : edge);
      rid[R.index(i, j)] = add(R.at(i, j), i == 0 ? BoundaryTag::kRightScrew : edge);
    }
  auto quads = [&](const PatchGrid& g, const std::vector<int>& ids, bool c_grid) {
    for (int j = 0; j < g.n_nu; ++j)
      for (int i = 0; i < g.n_mu; ++i) {
        std::array<int, 8> c{};
        if (c_grid)
          c = {ids[g.index(i, j)], ids[g.index(i, j + 1)], ids[g.index(i + 1, j + 1)], ids[g.index(i + 1, j)]};
        else
          c = {ids[g.index(i, j)], ids[g.index(i + 1, j)], ids[g.index(i + 1, j + 1)], ids[g.index(i, j + 1)]};
        mesh.cells.push_back(c);
      }
  };
  quads(L, lid, true);
  quads(S, sid, false);
  quads(R, rid, true);
  return mesh;
}

BackgroundMesh mesh_2d(const ScaffoldDatabase& db, double theta, const MeshResolution& res) {
  const auto g = refine_scaffold(interpolate_scaffold(db, theta), res);
  BackgroundMesh m = assemble_2d(g[0], g[1], g[2]);
  m.resolution.n_a = res.n_a;
  return m;
}

std::array<PatchGrid, 3> circle_target(const std::array<PatchGrid, 3>& grids, const ScrewParams& params,
                                       double radius) {
  std::array<PatchGrid, 3> out = grids;
  const Vec2 lc = params.left_center(), rc = params.right_center();
  // C-grids: rotor row onto the circle, straight radial lines to the casing
  for (int p : {kLeftCGrid, kRightCGrid}) {
    PatchGrid& g = out[static_cast<size_t>(p)];
    const Vec2 c = p == kLeftCGrid ? lc : rc;
    for (int j = 0; j <= g.n_nu; ++j) {
      const Vec2 a = polar_project(g.at(0, j), c, radius), b = g.at(g.n_mu, j);
      for (int i = 0; i <= g.n_mu; ++i) g.at(i, j) = lerp(a, b, static_cast<double>(i) / g.n_mu);
    }
  }
  // separator: projected east/west columns, broken lines through the cusps,
  // interior by discrete transfinite blending
  PatchGrid& s = out[kSeparatorPatch];
  const int nm = s.n_mu, nn = s.n_nu, half = nm / 2;
  std::vector<Vec2> west, east, south, north;
  for (int j = 0; j <= nn; ++j) {
    west.push_back(polar_project(s.at(0, j), lc, radius));
    east.push_back(polar_project(s.at(nm, j), rc, radius));
  }
  const Vec2 cusp_lo = s.at(half, 0), cusp_up = s.at(half, nn);
  for (int i = 0; i <= nm; ++i) {
    if (i <= half) {
      const double t = static_cast<double>(i) / half;
      south.push_back(lerp(west.front(), cusp_lo, t));
      north.push_back(lerp(west.back(), cusp_up, t));
    } else {
      const double t = static_cast<double>(i - half) / (nm - half);
      south.push_back(lerp(cusp_lo, east.front(), t));
      north.push_back(lerp(cusp_up, east.back(), t));
    }
  }
  for (int j = 0; j <= nn; ++j)
    for (int i = 0; i <= nm; ++i) {
      const double u = static_cast<double>(i) / nm, v = static_cast<double>(j) / nn;
      const size_t iu = static_cast<size_t>(i), jv = static_cast<size_t>(j);
      s.at(i, j) = west[jv] * (1 - u) + east[jv] * u + south[iu] * (1 - v) + north[iu] * v -
                   (south.front() * ((1 - u) * (1 - v)) + south.back() * (u * (1 - v)) +
                    north.front() * ((1 - u) * v) + north.back() * (u * v));
    }
  return out;
}

BackgroundMesh extrude_3d(const ScaffoldDatabase& db, double theta0, const MeshResolution& res,
                          const ExtensionSpec& ext, double length) {
  const ScrewParams& P = db.params;
  if (!(P.pitch_length > 0.0)) fail(ErrorCode::kExtrusion, "extrusion needs a positive pitch length");
  if (res.n_a < 1) fail(ErrorCode::kExtrusion, "extrusion needs at least one axial element");
  const double L = length > 0.0 ? length : P.pitch_length;

  struct Layer {
    std::array<PatchGrid, 3> grids;
    double z;
  };
  std::vector<Layer> layers;
  auto slice = [&](double z) { return refine_scaffold(interpolate_scaffold(db, theta0 + 2.0 * kPi * z / P.pitch_length), res); };
  auto blend = [](const std::array<PatchGrid, 3>& a, const std::array<PatchGrid, 3>& b, double s) {
    std::array<PatchGrid, 3> out = a;
    for (size_t p = 0; p < 3; ++p)
      for (size_t k = 0; k < out[p].points.size(); ++k) out[p].points[k] = lerp(a[p].points[k], b[p].points[k], s);
    return out;
  };
  const auto first = slice(0.0), last = slice(L);
  if (ext.enabled()) {
    const auto target = circle_target(first, P, ext.circle_radius);
    for (int k = 0; k < ext.elements; ++k) {
      const double s = 1.0 - static_cast<double>(k) / ext.elements;
      layers.push_back({blend(first, target, s), -ext.length * s});
    }
  }
  for (int k = 0; k <= res.n_a; ++k) {
    const double z = L * k / res.n_a;
    layers.push_back({k == 0 ? first : k == res.n_a ? last : slice(z), z});
  }
  if (ext.enabled()) {
    const auto target = circle_target(last, P, ext.circle_radius);
    for (int k = 1; k <= ext.elements; ++k) {
      const double s = static_cast<double>(k) / ext.elements;
      layers.push_back({blend(last, target, s), L + ext.length * s});
    }
  }

  BackgroundMesh mesh;
  mesh.dim = 3;
  mesh.resolution = res;
  size_t per_layer = 0;
  std::vector<std::array<int, 8>> quads;
  for (size_t l = 0; l < layers.size(); ++l) {
    const auto& g = layers[l].grids;
    BackgroundMesh m2;
    try {
      m2 = assemble_2d(g[0], g[1], g[2]);
    } catch (const Error& e) {
      fail(ErrorCode::kExtrusion, "slice at z = " + std::to_string(layers[l].z) + ": " + e.what());
    }
    for (const auto& c : m2.cells) {
      const Vec3 &a = m2.vertices[static_cast<size_t>(c[0])], &b = m2.vertices[static_cast<size_t>(c[1])],
                 &cc = m2.vertices[static_cast<size_t>(c[2])], &d = m2.vertices[static_cast<size_t>(c[3])];
      const std::array<Vec2, 4> q{Vec2{a.x, a.y}, Vec2{b.x, b.y}, Vec2{cc.x, cc.y}, Vec2{d.x, d.y}};
      if (!convex_ccw(q)) fail(ErrorCode::kExtrusion, "slice at z = " + std::to_string(layers[l].z) + " folds");
    }
    if (l == 0) {
      per_layer = m2.vertices.size();
      quads = m2.cells;
    }
    const BoundaryTag cap = l == 0 ? BoundaryTag::kInflow : l + 1 == layers.size() ? BoundaryTag::kOutflow
                                                                                     : BoundaryTag::kInterior;
    for (size_t v = 0; v < m2.vertices.size(); ++v) {
      mesh.vertices.push_back({m2.vertices[v].x, m2.vertices[v].y, layers[l].z});
      mesh.tags.push_back(cap != BoundaryTag::kInterior ? cap : m2.tags[v]);
    }
  }
  for (size_t l = 0; l + 1 < layers.size(); ++l) {
    const int o0 = static_cast<int>(l * per_layer), o1 = static_cast<int>((l + 1) * per_layer);
    for (const auto& q : quads)
      mesh.cells.push_back({q[0] + o0, q[1] + o0, q[2] + o0, q[3] + o0, q[0] + o1, q[1] + o1, q[2] + o1, q[3] + o1});
  }
  return mesh;
}

MemoryReport memory_report(const ScaffoldDatabase& db, const MeshResolution& res) {
  MemoryReport r;
  for (const auto& s : db.scaffolds)
    for (const auto& g : s.patches) r.stored += 2.0 * static_cast<double>(g.points.size());
  const double per_angle = 2.0 * (2.0 * (res.n_r + 1) * (res.n_s_c + 1) +
                                  (res.separator_radial() + 1.0) * (res.n_s_separator + 1));
  r.full = per_angle * static_cast<double>(db.scaffolds.size());
  r.savings = r.full > 0.0 ? 1.0 - r.stored / r.full : 0.0;
  return r;
}

}  // namespace screwgen
