#include "screwgen/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "screwgen/parallel.hpp"

namespace screwgen {

namespace {

// Casing points per rotor point in the reference matching.
constexpr size_t kCasingDensity = 8;
constexpr int kMaxSeparatorSpans = 256;

double frac(double x) { return x - std::floor(x); }

double start_angle(Side side) { return side == Side::kLeft ? 0.0 : kPi; }

Vec2 casing_point(const ScrewParams& params, Side side, double xi) {
  const Vec2 c = side == Side::kLeft ? params.left_center() : params.right_center();
  const double phi = start_angle(side) - 2.0 * kPi * xi;
  return c + Vec2{std::cos(phi), std::sin(phi)} * params.barrel_radius();
}

// Index of the base rotor point whose polar angle is closest to the casing start.
size_t start_index(const std::vector<Vec2>& pts, const Vec2& center, double phi0) {
  size_t best = 0;
  double best_d = 1e300;
  for (size_t i = 0; i < pts.size(); ++i) {
    const Vec2 r = pts[i] - center;
    const double d = std::abs(std::remainder(std::atan2(r.y, r.x) - phi0, 2.0 * kPi));
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

// Moving average of positive increments, periodic or truncated at the ends.
// The result stays positive and keeps the total.
std::vector<double> smooth_increments(std::vector<double> inc, bool periodic, int half_width, int passes) {
  const long n = static_cast<long>(inc.size());
  const double total = std::accumulate(inc.begin(), inc.end(), 0.0);
  for (int pass = 0; pass < passes; ++pass) {
    std::vector<double> avg(inc.size(), 0.0);
    for (long k = 0; k < n; ++k) {
      int count = 0;
      for (long w = -half_width; w <= half_width; ++w) {
        long j = k + w;
        if (periodic)
          j = (j % n + n) % n;
        else if (j < 0 || j >= n)
          continue;
        avg[static_cast<size_t>(k)] += inc[static_cast<size_t>(j)];
        ++count;
      }
      avg[static_cast<size_t>(k)] /= count;
    }
    inc = std::move(avg);
  }
  const double sum = std::accumulate(inc.begin(), inc.end(), 0.0);
  for (double& v : inc) v *= total / sum;
  return inc;
}

std::vector<double> interior_union(const std::vector<KnotVector>& kvs) {
  std::vector<double> all;
  for (const auto& kv : kvs) {
    const auto bp = kv.breakpoints();
    all.insert(all.end(), bp.begin() + 1, bp.end() - 1);
  }
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  for (double k : all)
    if (out.empty() || k - out.back() > 1e-10) out.push_back(k);
  return out;
}

KnotVector bisect_all(const KnotVector& kv) {
  const auto bp = kv.breakpoints();
  std::vector<double> mids;
  for (size_t i = 0; i + 1 < bp.size(); ++i) mids.push_back(0.5 * (bp[i] + bp[i + 1]));
  return refine_knots(kv, mids);
}

// Eta knots on which both rotor arcs fit within `threshold`.
KnotVector adapt_separator_eta(const CGridPair& c, const std::array<ReparamFunction, 2>& f, const KnotVector& kv,
                               double threshold, int samples) {
  std::vector<KnotVector> kvs;
  for (int s = 0; s < 2; ++s) {
    std::vector<Vec2> pts;
    std::vector<double> eta;
    for (int k = 0; k < samples; ++k) {
      const double t = static_cast<double>(k) / (samples - 1);
      pts.push_back(c.arcs[static_cast<size_t>(s)].eval(t));
      eta.push_back(f[static_cast<size_t>(s)](t));
    }
    try {
      kvs.push_back(fit_adaptive(pts, eta, kv, threshold, kMaxSeparatorSpans).curve.basis());
    } catch (const FitNotConverged& e) {
      kvs.push_back(e.best().curve.basis());
    }
  }
  return KnotVector::with_interior(kv.degree(), interior_union(kvs));
}

// Initial guess from two solved neighbours: their control nets blended when
// all bases agree, otherwise the blended maps sampled at the Greville points.
SplineMap seeded_map(const SplineMap& init, const SplineMap& lo, const SplineMap& hi, double w) {
  SplineMap out = init;
  const bool same = lo.basis() == init.basis() && hi.basis() == init.basis();
  const auto g = greville_abscissae(init.basis().xi);
  const auto h = greville_abscissae(init.basis().eta);
  for (int idx : out.inner_indices()) {
    const size_t k = static_cast<size_t>(idx);
    if (same) {
      out.control_points()[k] = lerp(lo.control_points()[k], hi.control_points()[k], w);
    } else {
      const double u = g[static_cast<size_t>(idx % out.n())], v = h[static_cast<size_t>(idx / out.n())];
      out.control_points()[k] = lerp(lo.eval(u, v), hi.eval(u, v), w);
    }
  }
  return out;
}

}  // namespace

GeometrySource GeometrySource::booy(const ScrewParams& params, int n_points) {
  return {params, booy_profile(params, 0.0, n_points)};
}

GeometrySource GeometrySource::from_file(const std::filesystem::path& path, const ScrewParams& params) {
  const CrossSection cs = load_profile(path, params);
  return {params, rotate_section(cs, params, 0.0)};
}

std::vector<double> sweep_angles(const ScrewParams& params, int n) {
  if (n < 2) fail(ErrorCode::kDomain, "a sweep needs at least two angles");
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(params.period() * i / (n - 1));
  return out;
}

double casing_param(const ScrewParams& params, Side side, const Vec2& p) {
  const Vec2 c = side == Side::kLeft ? params.left_center() : params.right_center();
  const Vec2 r = p - c;
  return frac((start_angle(side) - std::atan2(r.y, r.x)) / (2.0 * kPi));
}

ReferenceMatching reference_matching(const GeometrySource& geo, const PipelineOptions&) {
  ReferenceMatching ref;
  for (Side side : {Side::kLeft, Side::kRight}) {
    const auto& pts = geo.base.rotor(side).points;
    const size_t n = pts.size();
    const Vec2 c = geo.base.casing(side).center;
    const size_t s = start_index(pts, c, start_angle(side));
    PointCloud rotor, casing;
    for (size_t k = 0; k <= n; ++k) rotor.points.push_back(pts[(s + n - k % n) % n]);
    const size_t nc = kCasingDensity * n;
    for (size_t k = 0; k <= nc; ++k) {
      const double xi = static_cast<double>(k) / nc;
      casing.points.push_back(casing_point(geo.params, side, xi));
      casing.params.push_back(xi);
    }
    const MatchResult m = match_points(casing, rotor, MatchMode::kOneSideFixed);
    const auto t = chord_length_params(rotor.points);
    auto& xi = ref.xi[side == Side::kLeft ? 0 : 1];
    xi.assign(n, 0.0);
    // periodic moving average of the parameter increments: keeps them positive
    // and summing to one while removing the staircase of the discrete matching
    std::vector<double> inc(n);
    for (size_t k = 0; k < n; ++k) inc[k] = m.first(t[k + 1]) - m.first(t[k]);
    inc = smooth_increments(std::move(inc), true, 4, 2);
    double acc = 0.0;
    for (size_t k = 0; k < n; ++k) {
      xi[(s + n - k) % n] = acc;
      acc += inc[k];
    }
  }
  return ref;
}

CGridPair build_c_grids(const GeometrySource& geo, const ReferenceMatching& ref, double theta,
                        const PipelineOptions& opts) {
  const ScrewParams& P = geo.params;
  const CrossSection sec = geo.at(theta);
  const double threshold = opts.fit_threshold * P.barrel_radius();
  CGridPair out;
  out.cusps = sec.cusp_points;
  const Vec2 cusp_up = sec.cusp_points[0], cusp_lo = sec.cusp_points[1];
  for (int si = 0; si < 2; ++si) {
    const Side side = si == 0 ? Side::kLeft : Side::kRight;
    const auto& pts = sec.rotor(side).points;
    const size_t n = pts.size();
    const auto& xi0 = ref.xi[static_cast<size_t>(si)];
    if (xi0.size() != n) fail(ErrorCode::kMatching, "reference matching does not fit the rotor cloud");

    // clockwise sequence ordered by the shifted casing parameter
    std::vector<std::pair<double, Vec2>> seq;
    const size_t s = start_index(geo.base.rotor(side).points, geo.base.casing(side).center, start_angle(side));
    for (size_t k = 0; k < n; ++k) {
      const size_t i = (s + n - k) % n;
      seq.emplace_back(frac(xi0[i] - theta / (2.0 * kPi)), pts[i]);
    }
    size_t wrap = 0;
    for (size_t k = 1; k < n; ++k)
      if (seq[k].first < seq[k - 1].first) wrap = k;
    std::rotate(seq.begin(), seq.begin() + static_cast<long>(wrap), seq.end());
    std::vector<Vec2> cloud;
    std::vector<double> params;
    const double xf = seq.front().first, xl = seq.back().first;
    Vec2 seam = seq.front().second;
    if (xf > 0.0) {
      seam = lerp(seq.back().second, seq.front().second, (1.0 - xl) / (1.0 - xl + xf));
      cloud.push_back(seam);
      params.push_back(0.0);
    }
    for (const auto& [x, p] : seq) {
      if (!params.empty() && x <= params.back() + 1e-12) continue;
      cloud.push_back(p);
      params.push_back(x);
    }
    if (params.back() >= 1.0 - 1e-12) {
      params.pop_back();
      cloud.pop_back();
    }
    cloud.push_back(seam);
    params.push_back(1.0);

    KnotVector kv = KnotVector::uniform(opts.degree, opts.rotor_elements);
    FitResult rotor = fit_adaptive(cloud, params, kv, threshold);
    kv = rotor.curve.basis();
    FitResult casing;
    for (;;) {
      const int m = std::max(200, 4 * kv.dim());
      std::vector<Vec2> cp;
      std::vector<double> cx;
      for (int k = 0; k < m; ++k) {
        cx.push_back(static_cast<double>(k) / (m - 1));
        cp.push_back(casing_point(P, side, cx.back()));
      }
      casing = fit_curve(cp, cx, kv);
      if (casing.max_residual <= threshold) break;
      kv = bisect_all(kv);
      rotor = fit_curve(cloud, params, kv);
    }
    BoundarySet bs;
    bs.south = rotor.curve;
    bs.north = casing.curve;
    PatchParameterization o{transfinite(bs, TensorBasis{kv, KnotVector::uniform(1, 1)}), PatchKind::kOGrid, theta};

    const Vec2 first = side == Side::kLeft ? cusp_lo : cusp_up;
    const Vec2 last = side == Side::kLeft ? cusp_up : cusp_lo;
    const double a = casing_param(P, side, first), b = casing_param(P, side, last);
    PatchParameterization c =
        cut_c_grid(o, a, b, side == Side::kLeft ? PatchKind::kCGridLeft : PatchKind::kCGridRight);
    c.map.at(0, c.map.m() - 1) = first;
    c.map.at(c.map.n() - 1, c.map.m() - 1) = last;
    const OGridValidity v = o_grid_validity(c.map.south(), c.map.north());
    if (!v.valid) {
      std::ostringstream msg;
      msg << (side == Side::kLeft ? "left" : "right") << " C-grid at theta " << theta
          << ": rotor-to-casing segments cross near xi " << v.crossings.front().first << " and "
          << v.crossings.front().second << "; the rotor reparameterization needs adjusting";
      fail(ErrorCode::kTopology, msg.str());
    }
    const SplineCurve joined = join_curves({subcurve(rotor.curve, b, 1.0), subcurve(rotor.curve, 0.0, a)},
                                           {0.0, (1.0 - b) / (1.0 - b + a), 1.0});
    out.arcs[static_cast<size_t>(si)] = side == Side::kLeft ? reversed(joined) : joined;
    out.o_grid[static_cast<size_t>(si)] = std::move(o);
    out.c_grid[static_cast<size_t>(si)] = std::move(c);
  }
  return out;
}

std::array<ReparamFunction, 2> match_arcs(const CGridPair& c, const PipelineOptions& opts) {
  PointCloud a, b;
  for (int k = 0; k < opts.arc_samples; ++k) {
    const double t = static_cast<double>(k) / (opts.arc_samples - 1);
    a.points.push_back(c.arcs[0].eval(t));
    b.points.push_back(c.arcs[1].eval(t));
    a.params.push_back(t);
    b.params.push_back(t);
  }
  const MatchResult m = match_points(a, b, MatchMode::kBothFloat);
  std::array<ReparamFunction, 2> out;
  for (size_t s = 0; s < 2; ++s) {
    const ReparamFunction& f = s == 0 ? m.first : m.second;
    const auto& t = a.params;
    std::vector<double> inc;
    for (size_t k = 0; k + 1 < t.size(); ++k) inc.push_back(f(t[k + 1]) - f(t[k]));
    inc = smooth_increments(std::move(inc), false, 8, 8);
    std::vector<double> ys{0.0};
    for (size_t k = 0; k + 2 < t.size(); ++k) ys.push_back(ys.back() + inc[k]);
    ys.push_back(1.0);
    out[s] = ReparamFunction(t, std::move(ys));
  }
  return out;
}

TensorBasis separator_basis(const PipelineOptions& opts, int eta_elements) {
  const int p = opts.degree;
  const int h = std::max(1, opts.separator_xi_elements / 2);
  std::vector<double> interior;
  for (int k = 1; k < h; ++k) interior.push_back(0.5 * k / h);
  for (int k = 0; k < p; ++k) interior.push_back(0.5);
  for (int k = 1; k < h; ++k) interior.push_back(0.5 + 0.5 * k / h);
  return {KnotVector::with_interior(p, interior), KnotVector::uniform(p, eta_elements)};
}

std::vector<AngleSlice> parameterize_angles(const GeometrySource& geo, std::span<const double> thetas,
                                            const PipelineOptions& opts, SweepStats* stats) {
  const auto t0 = std::chrono::steady_clock::now();
  const size_t n = thetas.size();
  if (n == 0) return {};
  for (size_t i = 1; i < n; ++i)
    if (!(thetas[i] > thetas[i - 1])) fail(ErrorCode::kDomain, "angles must be strictly increasing");
  // an angle one period after the first repeats its slice
  if (n > 1 && std::abs(thetas[n - 1] - thetas[0] - geo.params.period()) < 1e-9 * geo.params.period()) {
    auto out = parameterize_angles(geo, thetas.first(n - 1), opts, stats);
    out.push_back(out.front());
    out.back().theta = thetas[n - 1];
    for (auto* p : {&out.back().left, &out.back().separator, &out.back().right}) p->theta = thetas[n - 1];
    if (stats) {
      stats->newton_iterations.push_back(0);
      stats->control_iterations.push_back(0);
      stats->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return out;
  }
  const int threads = resolve_threads(opts.threads);
  const ReferenceMatching ref = reference_matching(geo, opts);

  std::vector<CGridPair> cg(n);
  parallel_for(n, threads, [&](size_t i) { cg[i] = build_c_grids(geo, ref, thetas[i], opts); });

  // both-float matching on every stride-th angle, blended in between
  std::vector<size_t> matched;
  const size_t stride = static_cast<size_t>(std::max(1, opts.match_stride));
  for (size_t i = 0; i < n; i += stride) matched.push_back(i);
  if (matched.back() != n - 1) matched.push_back(n - 1);
  std::vector<std::array<ReparamFunction, 2>> sampled(matched.size());
  parallel_for(matched.size(), threads, [&](size_t k) { sampled[k] = match_arcs(cg[matched[k]], opts); });
  std::array<std::vector<std::pair<double, ReparamFunction>>, 2> samples;
  for (size_t k = 0; k < matched.size(); ++k)
    for (size_t s = 0; s < 2; ++s) samples[s].emplace_back(thetas[matched[k]], sampled[k][s]);
  std::vector<std::array<ReparamFunction, 2>> reparams(n);
  for (size_t i = 0; i < n; ++i)
    for (size_t s = 0; s < 2; ++s) reparams[i][s] = blend_reparams(samples[s], thetas[i]);

  const double threshold = opts.fit_threshold * geo.params.barrel_radius();
  std::vector<SplineMap> init(n);
  std::vector<double> eps(n);
  parallel_for(n, threads, [&](size_t i) {
    TensorBasis basis = separator_basis(opts, opts.separator_eta_elements);
    basis.eta = adapt_separator_eta(cg[i], reparams[i], basis.eta, threshold, opts.arc_samples);
    const BoundarySet bs = assemble_separator_boundary(cg[i].c_grid[0], cg[i].c_grid[1], cg[i].arcs, cg[i].cusps,
                                                       reparams[i], basis, opts.arc_samples);
    init[i] = transfinite(bs, basis);
    eps[i] = opts.egg.epsilon > 0.0 ? opts.egg.epsilon : make_egg_problem(init[i], opts.egg).epsilon;
  });

  std::vector<AngleSlice> out(n);
  std::vector<char> solved(n, 0), failed(n, 0);
  auto solve = [&](size_t i, std::optional<std::pair<size_t, size_t>> nb) {
    EggOptions eo = opts.egg;
    eo.epsilon = eps[i];
    EggResult res;
    int iters = 0;
    bool done = false;
    if (nb) {
      const auto [lo, hi] = *nb;
      const SplineMap& a = out[lo].separator.map;
      const SplineMap& b = out[hi].separator.map;
      {
        const double w = (thetas[i] - thetas[lo]) / (thetas[hi] - thetas[lo]);
        try {
          res = egg_solve(make_egg_problem(seeded_map(init[i], a, b, w), eo));
          done = true;
        } catch (const EggNonconvergence& e) {
          iters += e.last().stats.iterations;
        }
      }
    }
    if (!done) res = egg_solve(make_egg_problem(init[i], eo));
    iters += res.stats.iterations;
    AngleSlice& sl = out[i];
    const FoldReport rep = check_folding(res.map, opts.fold_samples);
    if (!rep.empty()) {
      try {
        res = repair_folding(make_egg_problem(res.map, eo), rep);
        iters += res.stats.iterations;
        sl.repaired = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kFoldingUnrepaired && e.code() != ErrorCode::kNonconvergence) throw;
        failed[i] = 1;
      }
    }
    sl.theta = thetas[i];
    sl.left = cg[i].c_grid[0];
    sl.right = cg[i].c_grid[1];
    sl.separator = {res.map, PatchKind::kSeparator, thetas[i]};
    sl.newton_iterations = iters;
  };

  size_t level_stride = opts.seed_stride > 0 ? static_cast<size_t>(opts.seed_stride) : 1;
  {
    std::vector<size_t> level;
    for (size_t i = 0; i < n; i += level_stride) level.push_back(i);
    if (level.back() != n - 1) level.push_back(n - 1);
    parallel_for(level.size(), threads, [&](size_t k) { solve(level[k], std::nullopt); });
    for (size_t i : level) solved[i] = 1;
  }
  while (level_stride > 1) {
    level_stride = std::max<size_t>(1, level_stride / 2);
    std::vector<size_t> level;
    std::vector<std::pair<size_t, size_t>> nbs;
    for (size_t i = 0; i < n; i += level_stride) {
      if (solved[i]) continue;
      size_t lo = i, hi = i;
      while (!solved[lo]) --lo;
      while (!solved[hi]) ++hi;
      level.push_back(i);
      nbs.emplace_back(lo, hi);
    }
    parallel_for(level.size(), threads, [&](size_t k) { solve(level[k], nbs[k]); });
    for (size_t i : level) solved[i] = 1;
  }

  std::vector<size_t> bad;
  for (size_t i = 0; i < n; ++i)
    if (failed[i]) bad.push_back(i);
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "folding could not be repaired at angles (rad):";
    for (size_t i : bad) msg << ' ' << thetas[i];
    fail(ErrorCode::kDatabase, msg.str());
  }

  const size_t chain = static_cast<size_t>(std::max(1, opts.control_chain));
  const size_t chains = (n + chain - 1) / chain;
  parallel_for(chains, threads, [&](size_t c) {
    ControlMap prev = identity_control();
    for (size_t i = c * chain; i < std::min(n, (c + 1) * chain); ++i) {
      if (!opts.control) {
        out[i].control = prev;
        continue;
      }
      const ControlResult r = optimize_control(out[i].separator.map, prev, opts.control_opts);
      out[i].control = r.map;
      out[i].control_iterations = r.iterations;
      prev = r.map;
    }
  });

  if (stats) {
    stats->newton_iterations.clear();
    stats->control_iterations.clear();
    stats->total_newton = 0;
    for (const auto& s : out) {
      stats->newton_iterations.push_back(s.newton_iterations);
      stats->control_iterations.push_back(s.control_iterations);
      stats->total_newton += s.newton_iterations;
    }
    stats->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return out;
}

}  // namespace screwgen
