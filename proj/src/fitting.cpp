#include "screwgen/fitting.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <set>

namespace screwgen {

std::vector<double> chord_length_params(std::span<const Vec2> points) {
  if (points.size() < 2) fail(ErrorCode::kFit, "chord-length parameters need at least two points");
  std::vector<double> t(points.size(), 0.0);
  for (size_t i = 1; i < points.size(); ++i) t[i] = t[i - 1] + distance(points[i], points[i - 1]);
  const double total = t.back();
  if (!(total > 0.0)) fail(ErrorCode::kFit, "degenerate cloud with zero length");
  for (double& v : t) v /= total;
  t.back() = 1.0;
  return t;
}

namespace {

double bbox_diagonal(std::span<const Vec2> pts) {
  Vec2 lo = pts.front(), hi = pts.front();
  for (const Vec2& p : pts) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  return distance(lo, hi);
}

}  // namespace

FitResult fit_curve(std::span<const Vec2> points, std::span<const double> params, const KnotVector& kv,
                    double lambda) {
  if (points.size() != params.size()) fail(ErrorCode::kFit, "points and parameters differ in length");
  if (points.size() < 2) fail(ErrorCode::kFit, "fit needs at least two points");
  for (double t : params)
    if (!(t >= 0.0 && t <= 1.0)) fail(ErrorCode::kDomain, "fit parameter outside [0,1]");
  const int n = kv.dim();
  if (n < 2) fail(ErrorCode::kFit, "fit basis needs at least two functions");
  if (lambda < 0.0) {
    const double d = bbox_diagonal(points);
    lambda = 1e-7 * d * d;
  }
  std::vector<Vec2> cps(static_cast<size_t>(n));
  cps.front() = points.front();
  cps.back() = points.back();
  const int nf = n - 2;
  if (nf > 0) {
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nf, 2);
    for (size_t k = 0; k < points.size(); ++k) {
      const BasisEval b = eval_local(kv, params[k]);
      Vec2 target = points[k];
      for (int a = 0; a < b.count; ++a) {
        const int i = b.first + a;
        if (i == 0) target -= cps.front() * b.values[0][static_cast<size_t>(a)];
        if (i == n - 1) target -= cps.back() * b.values[0][static_cast<size_t>(a)];
      }
      for (int a = 0; a < b.count; ++a) {
        const int i = b.first + a - 1;
        if (i < 0 || i >= nf) continue;
        const double va = b.values[0][static_cast<size_t>(a)];
        rhs(i, 0) += va * target.x;
        rhs(i, 1) += va * target.y;
        for (int c = 0; c < b.count; ++c) {
          const int j = b.first + c - 1;
          if (j < 0 || j >= nf) continue;
          trips.emplace_back(i, j, va * b.values[0][static_cast<size_t>(c)]);
        }
      }
    }
    if (lambda > 0.0) {
      // Second divided differences on the Greville grid, scaled by the mean
      // spacing squared: plain second differences for uniform knots, and zero
      // for any linearly parameterized straight line.
      const auto g = greville_abscissae(kv);
      const double hbar2 = 1.0 / ((n - 1.0) * (n - 1.0));
      for (int i = 1; i < n - 1; ++i) {
        const double hl = g[static_cast<size_t>(i)] - g[static_cast<size_t>(i - 1)];
        const double hr = g[static_cast<size_t>(i + 1)] - g[static_cast<size_t>(i)];
        const double w = 0.5 * (hl + hr);
        const std::array<double, 3> coef{hbar2 / (w * hl), -hbar2 * (1.0 / hl + 1.0 / hr) / w, hbar2 / (w * hr)};
        const std::array<int, 3> idx{i - 1, i, i + 1};
        Vec2 fixed{};
        for (int a = 0; a < 3; ++a) {
          if (idx[a] == 0) fixed += cps.front() * coef[a];
          if (idx[a] == n - 1) fixed += cps.back() * coef[a];
        }
        for (int a = 0; a < 3; ++a) {
          const int r = idx[a] - 1;
          if (r < 0 || r >= nf) continue;
          rhs(r, 0) -= lambda * coef[a] * fixed.x;
          rhs(r, 1) -= lambda * coef[a] * fixed.y;
          for (int c = 0; c < 3; ++c) {
            const int col = idx[c] - 1;
            if (col < 0 || col >= nf) continue;
            trips.emplace_back(r, col, lambda * coef[a] * coef[c]);
          }
        }
      }
    }
    Eigen::SparseMatrix<double> A(nf, nf);
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success) fail(ErrorCode::kFit, "singular fitting system");
    const Eigen::MatrixXd sol = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !sol.allFinite()) fail(ErrorCode::kFit, "fitting solve failed");
    for (int i = 0; i < nf; ++i) cps[static_cast<size_t>(i + 1)] = {sol(i, 0), sol(i, 1)};
  }
  FitResult r{SplineCurve(kv, std::move(cps)), {}, 0.0};
  r.residuals.reserve(points.size());
  for (size_t k = 0; k < points.size(); ++k) {
    r.residuals.push_back(distance(r.curve.eval(params[k]), points[k]));
    r.max_residual = std::max(r.max_residual, r.residuals.back());
  }
  return r;
}

KnotVector adapt_knots(const FitResult& fit, std::span<const double> params, const KnotVector& kv,
                       double threshold) {
  if (params.size() != fit.residuals.size()) fail(ErrorCode::kFit, "parameter count does not match the fit");
  const auto& U = kv.knots();
  std::set<int> spans;
  for (size_t k = 0; k < params.size(); ++k)
    if (fit.residuals[k] > threshold) spans.insert(kv.find_span(params[k]));
  std::vector<double> mids;
  for (int s : spans) mids.push_back(0.5 * (U[static_cast<size_t>(s)] + U[static_cast<size_t>(s + 1)]));
  if (mids.empty()) return kv;
  return refine_knots(kv, mids);
}

FitResult fit_adaptive(std::span<const Vec2> points, std::span<const double> params, KnotVector kv,
                       double threshold, int max_spans, double lambda) {
  while (true) {
    FitResult fit = fit_curve(points, params, kv, lambda);
    if (fit.max_residual <= threshold) return fit;
    KnotVector next = adapt_knots(fit, params, kv, threshold);
    if (next.num_elements() > max_spans || next == kv)
      throw FitNotConverged("adaptive fit did not reach the residual threshold", std::move(fit));
    kv = std::move(next);
  }
}

// ---------------------------------------------------------------------------
// Reparameterization functions

ReparamFunction::ReparamFunction(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
  if (xs_.size() != ys_.size() || xs_.size() < 2)
    fail(ErrorCode::kMatching, "reparameterization needs matching breakpoint lists");
  if (xs_.front() != 0.0 || ys_.front() != 0.0 || xs_.back() != 1.0 || ys_.back() != 1.0)
    fail(ErrorCode::kMatching, "reparameterization must map 0 to 0 and 1 to 1");
  for (size_t i = 1; i < xs_.size(); ++i)
    if (!(xs_[i] > xs_[i - 1]) || !(ys_[i] > ys_[i - 1]))
      fail(ErrorCode::kMatching, "reparameterization is not strictly increasing");
}

double ReparamFunction::operator()(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), t);
  const size_t i = static_cast<size_t>(it - xs_.begin()) - 1;
  const double w = (t - xs_[i]) / (xs_[i + 1] - xs_[i]);
  return ys_[i] + w * (ys_[i + 1] - ys_[i]);
}

double ReparamFunction::inverse(double y) const {
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  const auto it = std::upper_bound(ys_.begin(), ys_.end(), y);
  const size_t i = static_cast<size_t>(it - ys_.begin()) - 1;
  const double w = (y - ys_[i]) / (ys_[i + 1] - ys_[i]);
  return xs_[i] + w * (xs_[i + 1] - xs_[i]);
}

namespace {

std::vector<double> params_of(const PointCloud& c) {
  if (c.params.empty()) return chord_length_params(c.points);
  if (c.params.size() != c.points.size()) fail(ErrorCode::kMatching, "cloud parameter count mismatch");
  if (c.params.front() != 0.0 || c.params.back() != 1.0)
    fail(ErrorCode::kMatching, "cloud parameters must run from 0 to 1");
  return c.params;
}

ReparamFunction from_pairs(const std::vector<double>& xs_all, const std::vector<double>& ys_all,
                           const std::vector<std::pair<int, int>>& pairs, bool a_is_x) {
  std::vector<double> xs, ys;
  for (const auto& [i, j] : pairs) {
    const double x = a_is_x ? xs_all[static_cast<size_t>(i)] : xs_all[static_cast<size_t>(j)];
    const double y = a_is_x ? ys_all[static_cast<size_t>(j)] : ys_all[static_cast<size_t>(i)];
    xs.push_back(x);
    ys.push_back(y);
  }
  return ReparamFunction(std::move(xs), std::move(ys));
}

}  // namespace

MatchResult match_points(const PointCloud& a, const PointCloud& b, MatchMode mode) {
  if (a.size() < 2 || b.size() < 2) fail(ErrorCode::kMatching, "matching needs at least two points per cloud");
  const auto ta = params_of(a);
  const auto tb = params_of(b);
  const auto& pa = a.points;
  const auto& pb = b.points;
  const double scale = std::max(bbox_diagonal(pa), bbox_diagonal(pb));
  const bool closed_a = distance(pa.front(), pa.back()) <= 1e-12 * scale;
  const bool closed_b = distance(pb.front(), pb.back()) <= 1e-12 * scale;
  if (closed_a && closed_b) {
    if ((signed_area(pa) > 0.0) != (signed_area(pb) > 0.0))
      fail(ErrorCode::kMatching, "clouds have opposite orientation");
  } else if (distance(pa.front(), pb.front()) + distance(pa.back(), pb.back()) >
             distance(pa.front(), pb.back()) + distance(pa.back(), pb.front()) + 1e-12 * scale) {
    fail(ErrorCode::kMatching, "clouds have opposite orientation");
  }

  const int na = static_cast<int>(pa.size());
  const int nb = static_cast<int>(pb.size());
  std::vector<std::pair<int, int>> pairs{{0, 0}, {na - 1, nb - 1}};
  struct Range { int a0, a1, b0, b1; };
  std::vector<Range> stack{{0, na - 1, 0, nb - 1}};
  while (!stack.empty()) {
    const Range r = stack.back();
    stack.pop_back();
    if (r.a1 - r.a0 < 2 || r.b1 - r.b0 < 2) continue;
    int bi = -1, bj = -1;
    double best = 0.0;
    for (int i = r.a0 + 1; i < r.a1; ++i)
      for (int j = r.b0 + 1; j < r.b1; ++j) {
        const Vec2 d = pa[static_cast<size_t>(i)] - pb[static_cast<size_t>(j)];
        const double d2 = dot(d, d);
        if (bi < 0 || d2 < best) {
          best = d2;
          bi = i;
          bj = j;
        }
      }
    pairs.emplace_back(bi, bj);
    stack.push_back({r.a0, bi, r.b0, bj});
    stack.push_back({bi, r.a1, bj, r.b1});
  }
  std::sort(pairs.begin(), pairs.end());

  MatchResult res;
  res.pairs = pairs;
  if (mode == MatchMode::kOneSideFixed) {
    res.first = from_pairs(tb, ta, pairs, false);
  } else {
    std::vector<double> xa, xb, z;
    for (const auto& [i, j] : pairs) {
      xa.push_back(ta[static_cast<size_t>(i)]);
      xb.push_back(tb[static_cast<size_t>(j)]);
      z.push_back(0.5 * (xa.back() + xb.back()));
    }
    z.front() = 0.0;
    z.back() = 1.0;
    res.first = ReparamFunction(xa, z);
    res.second = ReparamFunction(xb, z);
  }
  return res;
}

ReparamFunction shift_reparam(const ReparamFunction& f, double theta, double period) {
  if (!(period > 0.0)) fail(ErrorCode::kDomain, "shift period must be positive");
  double s = std::fmod(theta / period, 1.0);
  if (s < 0.0) s += 1.0;
  if (s == 0.0 || s == 1.0) return f;
  const double fs = f(s);
  const auto& xs = f.xs();
  const auto& ys = f.ys();
  constexpr double kMin = 1e-14;
  std::vector<double> nx{0.0}, ny{0.0};
  auto push = [&](double x, double y) {
    if (x - nx.back() > kMin && x < 1.0 - kMin && y > ny.back()) {
      nx.push_back(x);
      ny.push_back(y);
    }
  };
  for (size_t i = 0; i < xs.size(); ++i)
    if (xs[i] > s) push(xs[i] - s, ys[i] - fs);
  for (size_t i = 0; i < xs.size(); ++i)
    if (xs[i] < s) push(1.0 + xs[i] - s, 1.0 + ys[i] - fs);
  nx.push_back(1.0);
  ny.push_back(1.0);
  return ReparamFunction(std::move(nx), std::move(ny));
}

ReparamFunction blend_reparams(std::span<const std::pair<double, ReparamFunction>> samples, double theta,
                               double period) {
  if (samples.empty()) fail(ErrorCode::kDomain, "no reparameterization samples");
  for (size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].first > samples[i - 1].first))
      fail(ErrorCode::kDomain, "reparameterization samples must be sorted by angle");
  const double t0 = samples.front().first;
  double t = theta;
  if (period > 0.0) {
    t = t0 + std::fmod(theta - t0, period);
    if (t < t0) t += period;
  } else if (t < t0 || t > samples.back().first) {
    fail(ErrorCode::kDomain, "angle outside the sampled range");
  }
  size_t i = 0;
  while (i + 1 < samples.size() && samples[i + 1].first <= t) ++i;
  if (samples[i].first == t) return samples[i].second;
  double t1;
  const ReparamFunction* f1;
  if (i + 1 < samples.size()) {
    t1 = samples[i + 1].first;
    f1 = &samples[i + 1].second;
  } else {
    t1 = t0 + period;
    f1 = &samples.front().second;
  }
  const ReparamFunction& f0 = samples[i].second;
  const double w = (t - samples[i].first) / (t1 - samples[i].first);
  std::vector<double> xs(f0.xs());
  xs.insert(xs.end(), f1->xs().begin(), f1->xs().end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<double> ys;
  for (double x : xs) ys.push_back((1.0 - w) * f0(x) + w * (*f1)(x));
  ys.front() = 0.0;
  ys.back() = 1.0;
  return ReparamFunction(std::move(xs), std::move(ys));
}

}  // namespace screwgen
