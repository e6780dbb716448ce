#include "screwgen/egg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "screwgen/quadrature.hpp"

namespace screwgen {

namespace {

struct Point1D {
  double x = 0.0;
  double w = 0.0;
  BasisEval sigma;  // order 2
  BasisEval aux;    // order 1 (xi only)
};

// Gauss points grouped by span, with cached 1D basis evaluations.
std::vector<std::vector<Point1D>> quad_1d(const KnotVector& sigma, const KnotVector* aux, int per_span) {
  const auto q = span_quadrature(sigma, per_span);
  std::vector<std::vector<Point1D>> out(q.points.size());
  for (size_t e = 0; e < q.points.size(); ++e)
    for (size_t k = 0; k < q.points[e].size(); ++k) {
      Point1D p;
      p.x = q.points[e][k];
      p.w = q.weights[e][k];
      p.sigma = eval_local(sigma, p.x, 2);
      if (aux) p.aux = eval_local(*aux, p.x, 1);
      out[e].push_back(p);
    }
  return out;
}

int default_quad(const EggProblem& P) {
  return std::max(P.aux.basis.xi.degree(), P.map.basis().eta.degree()) + 1;
}

class Assembler {
 public:
  Assembler(const EggProblem& P, int per_span)
      : n_(P.map.n()),
        na_(P.aux.basis.xi.dim()),
        xq_(quad_1d(P.map.basis().xi, &P.aux.basis.xi, per_span)),
        yq_(quad_1d(P.map.basis().eta, nullptr, per_span)),
        inner_(static_cast<size_t>(P.map.n() * P.map.m()), -1) {
    const auto idx = P.map.inner_indices();
    for (size_t r = 0; r < idx.size(); ++r) inner_[static_cast<size_t>(idx[r])] = static_cast<int>(r);
    n_inner_ = static_cast<int>(idx.size());
    n_aux_ = P.aux.basis.dim();
  }

  int unknowns() const { return 2 * n_inner_ + 2 * n_aux_; }

  // Structural pattern of the Jacobian (all couplings within an element).
  Eigen::SparseMatrix<double> pattern() const {
    std::vector<Eigen::Triplet<double>> t;
    for_each_element([&](const Local& L) {
      for (int r = 0; r < L.rows(); ++r) {
        const int gr = L.row_global(r);
        if (gr < 0) continue;
        for (int c = 0; c < L.cols(); ++c) {
          const int gc = L.col_global(c);
          if (gc >= 0) t.emplace_back(gr, gc, 0.0);
        }
      }
    });
    Eigen::SparseMatrix<double> J(unknowns(), unknowns());
    J.setFromTriplets(t.begin(), t.end());
    J.makeCompressed();
    return J;
  }

  // Residual and, when J is given (with the structural pattern), the Jacobian.
  void run(const EggProblem& P, Eigen::VectorXd* R, Eigen::SparseMatrix<double>* J) const {
    R->setZero(unknowns());
    if (J) J->coeffs().setZero();
    const auto& cps = P.map.control_points();
    const int p1 = P.map.basis().xi.degree(), p2 = P.map.basis().eta.degree();
    const int q1 = P.aux.basis.xi.degree();
    const int nsx = p1 + 1, nsy = p2 + 1, nax = q1 + 1;
    const int nS = nsx * nsy, nA = nax * nsy;
    std::vector<double> W(nS), Wx(nS), Wy(nS), Wxy(nS), Wyy(nS), A(nA), Ax(nA), Ay(nA);
    Eigen::VectorXd rl;
    Eigen::MatrixXd jl;
    std::vector<std::array<Vec2, 2>> dU(static_cast<size_t>(nS));

    for_each_element([&](const Local& L) {
      rl.setZero(L.rows());
      if (J) jl.setZero(L.rows(), L.cols());
      for (const Point1D& px : *L.xs)
        for (const Point1D& py : *L.ys) {
          const double w = px.w * py.w;
          for (int b = 0; b < nsy; ++b)
            for (int a = 0; a < nsx; ++a) {
              const int k = b * nsx + a;
              W[k] = px.sigma.values[0][a] * py.sigma.values[0][b];
              Wx[k] = px.sigma.values[1][a] * py.sigma.values[0][b];
              Wy[k] = px.sigma.values[0][a] * py.sigma.values[1][b];
              Wxy[k] = px.sigma.values[1][a] * py.sigma.values[1][b];
              Wyy[k] = px.sigma.values[0][a] * py.sigma.values[2][b];
            }
          for (int b = 0; b < nsy; ++b)
            for (int a = 0; a < nax; ++a) {
              const int k = b * nax + a;
              A[k] = px.aux.values[0][a] * py.sigma.values[0][b];
              Ax[k] = px.aux.values[1][a] * py.sigma.values[0][b];
              Ay[k] = px.aux.values[0][a] * py.sigma.values[1][b];
            }
          Vec2 xx, xy, xxy, xyy, u, ux, uy;
          for (int k = 0; k < nS; ++k) {
            const Vec2& c = cps[static_cast<size_t>(L.sigma[k])];
            xx += c * Wx[k];
            xy += c * Wy[k];
            xxy += c * Wxy[k];
            xyy += c * Wyy[k];
          }
          for (int k = 0; k < nA; ++k) {
            const Vec2& d = P.d[static_cast<size_t>(L.aux[k])];
            u += d * A[k];
            ux += d * Ax[k];
            uy += d * Ay[k];
          }
          const double g11 = dot(xx, xx), g12 = dot(xx, xy), g22 = dot(xy, xy);
          const double D = g11 + g22 + P.epsilon;
          const Vec2 N = ux * g22 - (uy + xxy) * g12 + xyy * g11;
          const Vec2 U = N / D;
          const Vec2 gap = xx - u;
          for (int l = 0; l < nA; ++l)
            for (int c = 0; c < 2; ++c) rl[2 * l + c] += w * A[l] * gap[c];
          for (int a = 0; a < nS; ++a)
            for (int c = 0; c < 2; ++c) rl[2 * nA + 2 * a + c] += w * W[a] * U[c];
          if (!J) continue;

          // u-equation
          for (int l = 0; l < nA; ++l) {
            for (int j = 0; j < nS; ++j) {
              const double v = w * A[l] * Wx[j];
              jl(2 * l, 2 * j) += v;
              jl(2 * l + 1, 2 * j + 1) += v;
            }
            for (int m = 0; m < nA; ++m) {
              const double v = -w * A[l] * A[m];
              jl(2 * l, 2 * nS + 2 * m) += v;
              jl(2 * l + 1, 2 * nS + 2 * m + 1) += v;
            }
          }
          // x-equation: derivatives of U with respect to c_j (component cb)
          for (int j = 0; j < nS; ++j)
            for (int cb = 0; cb < 2; ++cb) {
              const double d11 = 2.0 * xx[cb] * Wx[j];
              const double d22 = 2.0 * xy[cb] * Wy[j];
              const double d12 = xx[cb] * Wy[j] + xy[cb] * Wx[j];
              Vec2 dN = ux * d22 - (uy + xxy) * d12 + xyy * d11;
              dN[cb] += -g12 * Wxy[j] + g11 * Wyy[j];
              dU[static_cast<size_t>(j)][cb] = dN / D - N * ((d11 + d22) / (D * D));
            }
          for (int a = 0; a < nS; ++a) {
            const double wa = w * W[a];
            for (int j = 0; j < nS; ++j)
              for (int cb = 0; cb < 2; ++cb) {
                const Vec2& g = dU[static_cast<size_t>(j)][cb];
                jl(2 * nA + 2 * a, 2 * j + cb) += wa * g.x;
                jl(2 * nA + 2 * a + 1, 2 * j + cb) += wa * g.y;
              }
            for (int m = 0; m < nA; ++m) {
              const double v = wa * (g22 * Ax[m] - g12 * Ay[m]) / D;
              jl(2 * nA + 2 * a, 2 * nS + 2 * m) += v;
              jl(2 * nA + 2 * a + 1, 2 * nS + 2 * m + 1) += v;
            }
          }
        }
      for (int r = 0; r < L.rows(); ++r) {
        const int gr = L.row_global(r);
        if (gr < 0) continue;
        (*R)[gr] += rl[r];
        if (!J) continue;
        for (int c = 0; c < L.cols(); ++c) {
          const int gc = L.col_global(c);
          if (gc >= 0) J->coeffRef(gr, gc) += jl(r, c);
        }
      }
    });
  }

  // L2 projection of x_xi onto the auxiliary space.
  std::vector<Vec2> project_derivative(const EggProblem& P) const {
    std::vector<Eigen::Triplet<double>> t;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n_aux_, 2);
    const auto& cps = P.map.control_points();
    for_each_element([&](const Local& L) {
      const int nsx = L.sx, nsy = L.sy, nax = L.ax;
      for (const Point1D& px : *L.xs)
        for (const Point1D& py : *L.ys) {
          const double w = px.w * py.w;
          Vec2 xx;
          for (int b = 0; b < nsy; ++b)
            for (int a = 0; a < nsx; ++a)
              xx += cps[static_cast<size_t>(L.sigma[b * nsx + a])] * (px.sigma.values[1][a] * py.sigma.values[0][b]);
          for (int b = 0; b < nsy; ++b)
            for (int a = 0; a < nax; ++a) {
              const double al = px.aux.values[0][a] * py.sigma.values[0][b];
              const int gl = L.aux[b * nax + a];
              rhs(gl, 0) += w * al * xx.x;
              rhs(gl, 1) += w * al * xx.y;
              for (int bb = 0; bb < nsy; ++bb)
                for (int aa = 0; aa < nax; ++aa)
                  t.emplace_back(gl, L.aux[bb * nax + aa],
                                 w * al * px.aux.values[0][aa] * py.sigma.values[0][bb]);
            }
        }
    });
    Eigen::SparseMatrix<double> M(n_aux_, n_aux_);
    M.setFromTriplets(t.begin(), t.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(M);
    if (solver.info() != Eigen::Success) fail(ErrorCode::kNonconvergence, "auxiliary mass matrix is singular");
    const Eigen::MatrixXd sol = solver.solve(rhs);
    std::vector<Vec2> d(static_cast<size_t>(n_aux_));
    for (int k = 0; k < n_aux_; ++k) d[static_cast<size_t>(k)] = {sol(k, 0), sol(k, 1)};
    return d;
  }

  std::vector<double> metric_traces(const EggProblem& P) const {
    std::vector<double> out;
    const auto& cps = P.map.control_points();
    for_each_element([&](const Local& L) {
      for (const Point1D& px : *L.xs)
        for (const Point1D& py : *L.ys) {
          Vec2 xx, xy;
          for (int b = 0; b < L.sy; ++b)
            for (int a = 0; a < L.sx; ++a) {
              const Vec2& c = cps[static_cast<size_t>(L.sigma[b * L.sx + a])];
              xx += c * (px.sigma.values[1][a] * py.sigma.values[0][b]);
              xy += c * (px.sigma.values[0][a] * py.sigma.values[1][b]);
            }
          out.push_back(dot(xx, xx) + dot(xy, xy));
        }
    });
    return out;
  }

 private:
  struct Local {
    const std::vector<Point1D>* xs = nullptr;
    const std::vector<Point1D>* ys = nullptr;
    int sx = 0, sy = 0, ax = 0;
    std::vector<int> sigma;  // global control point index per local function
    std::vector<int> aux;    // global aux index per local function
    const Assembler* owner = nullptr;

    int nS() const { return static_cast<int>(sigma.size()); }
    int nA() const { return static_cast<int>(aux.size()); }
    int rows() const { return 2 * nA() + 2 * nS(); }
    int cols() const { return 2 * nS() + 2 * nA(); }
    int row_global(int r) const {
      if (r < 2 * nA()) return 2 * aux[static_cast<size_t>(r / 2)] + r % 2;
      r -= 2 * nA();
      const int in = owner->inner_[static_cast<size_t>(sigma[static_cast<size_t>(r / 2)])];
      return in < 0 ? -1 : 2 * owner->n_aux_ + 2 * in + r % 2;
    }
    int col_global(int c) const {
      if (c < 2 * nS()) {
        const int in = owner->inner_[static_cast<size_t>(sigma[static_cast<size_t>(c / 2)])];
        return in < 0 ? -1 : 2 * in + c % 2;
      }
      c -= 2 * nS();
      return 2 * owner->n_inner_ + 2 * aux[static_cast<size_t>(c / 2)] + c % 2;
    }
  };

  template <class F>
  void for_each_element(F&& f) const {
    Local L;
    L.owner = this;
    for (const auto& ys : yq_) {
      if (ys.empty()) continue;
      for (const auto& xs : xq_) {
        if (xs.empty()) continue;
        const BasisEval& ex = xs.front().sigma;
        const BasisEval& ea = xs.front().aux;
        const BasisEval& ey = ys.front().sigma;
        L.xs = &xs;
        L.ys = &ys;
        L.sx = ex.count;
        L.sy = ey.count;
        L.ax = ea.count;
        L.sigma.clear();
        L.aux.clear();
        for (int b = 0; b < ey.count; ++b)
          for (int a = 0; a < ex.count; ++a) L.sigma.push_back((ey.first + b) * n_ + ex.first + a);
        for (int b = 0; b < ey.count; ++b)
          for (int a = 0; a < ea.count; ++a) L.aux.push_back((ey.first + b) * na_ + ea.first + a);
        f(L);
      }
    }
  }

  int n_;
  int na_;
  std::vector<std::vector<Point1D>> xq_;
  std::vector<std::vector<Point1D>> yq_;
  std::vector<int> inner_;
  int n_inner_ = 0;
  int n_aux_ = 0;
};

int quad_points(const EggProblem& P, int override_q) {
  if (override_q > 0) return override_q;
  return P.quad_per_span > 0 ? P.quad_per_span : default_quad(P);
}

}  // namespace

EggProblem make_egg_problem(const SplineMap& initial, const EggOptions& opts) {
  EggProblem P;
  P.map = initial;
  P.aux = build_aux_space(initial.basis());
  P.newton_tol = opts.newton_tol;
  P.max_iter = opts.max_iter;
  P.max_halvings = opts.max_halvings;
  P.quad_per_span = opts.quad_per_span;
  P.d.assign(static_cast<size_t>(P.aux.basis.dim()), Vec2{});
  const Assembler as(P, quad_points(P, 0));
  if (opts.epsilon > 0.0) {
    P.epsilon = opts.epsilon;
  } else {
    auto tr = as.metric_traces(P);
    auto mid = tr.begin() + static_cast<std::ptrdiff_t>(tr.size() / 2);
    std::nth_element(tr.begin(), mid, tr.end());
    P.epsilon = 1e-4 * *mid;
    if (!(P.epsilon > 0.0)) fail(ErrorCode::kInvalidGeometry, "initial map has a degenerate metric");
  }
  P.d = as.project_derivative(P);
  return P;
}

Eigen::VectorXd egg_unknowns(const EggProblem& P) {
  const auto idx = P.map.inner_indices();
  Eigen::VectorXd z(2 * idx.size() + 2 * P.d.size());
  for (size_t r = 0; r < idx.size(); ++r) {
    const Vec2& c = P.map.control_points()[static_cast<size_t>(idx[r])];
    z[2 * r] = c.x;
    z[2 * r + 1] = c.y;
  }
  const size_t off = 2 * idx.size();
  for (size_t k = 0; k < P.d.size(); ++k) {
    z[off + 2 * k] = P.d[k].x;
    z[off + 2 * k + 1] = P.d[k].y;
  }
  return z;
}

void set_egg_unknowns(EggProblem& P, const Eigen::VectorXd& z) {
  const auto idx = P.map.inner_indices();
  if (static_cast<size_t>(z.size()) != 2 * idx.size() + 2 * P.d.size())
    fail(ErrorCode::kDomain, "unknown vector has the wrong size");
  auto& cps = P.map.control_points();
  for (size_t r = 0; r < idx.size(); ++r) cps[static_cast<size_t>(idx[r])] = {z[2 * r], z[2 * r + 1]};
  const size_t off = 2 * idx.size();
  for (size_t k = 0; k < P.d.size(); ++k) P.d[k] = {z[off + 2 * k], z[off + 2 * k + 1]};
}

Eigen::VectorXd egg_residual(const EggProblem& P, int quad_per_span) {
  const Assembler as(P, quad_points(P, quad_per_span));
  Eigen::VectorXd R;
  as.run(P, &R, nullptr);
  return R;
}

Eigen::SparseMatrix<double> egg_jacobian(const EggProblem& P) {
  const Assembler as(P, quad_points(P, 0));
  Eigen::SparseMatrix<double> J = as.pattern();
  Eigen::VectorXd R;
  as.run(P, &R, &J);
  return J;
}

EggResult egg_solve(const EggProblem& problem) {
  EggProblem P = problem;
  const Assembler as(P, quad_points(P, 0));
  Eigen::SparseMatrix<double> J = as.pattern();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(J);
  Eigen::VectorXd R;
  as.run(P, &R, nullptr);
  EggResult out;
  auto snapshot = [&]() {
    out.map = P.map;
    out.d = P.d;
    return out;
  };
  double norm = R.norm();
  out.stats.residual_history.push_back(norm);
  const double tol = P.newton_tol * (norm + 1.0);
  Eigen::VectorXd z = egg_unknowns(P);
  while (norm > tol) {
    if (out.stats.iterations >= P.max_iter)
      throw EggNonconvergence("EGG Newton iteration did not converge within the iteration cap", snapshot());
    as.run(P, &R, &J);
    lu.factorize(J);
    if (lu.info() != Eigen::Success)
      throw EggNonconvergence("EGG Newton matrix is singular", snapshot());
    const Eigen::VectorXd dz = lu.solve(-R);
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h <= P.max_halvings; ++h, step *= 0.5) {
      set_egg_unknowns(P, z + step * dz);
      Eigen::VectorXd trial;
      as.run(P, &trial, nullptr);
      const double tn = trial.norm();
      if (std::isfinite(tn) && tn < norm) {
        z += step * dz;
        R = std::move(trial);
        norm = tn;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      set_egg_unknowns(P, z);
      throw EggNonconvergence("EGG line search failed to reduce the residual", snapshot());
    }
    ++out.stats.iterations;
    out.stats.residual_history.push_back(norm);
  }
  return snapshot();
}

FoldReport check_folding(const SplineMap& map, int n_samples) {
  if (n_samples < 1) fail(ErrorCode::kDomain, "folding check needs at least one sample cell");
  FoldReport rep;
  rep.n_samples = n_samples;
  const int n = n_samples;
  std::vector<char> bad(static_cast<size_t>((n + 1) * (n + 1)), 0);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const double u = static_cast<double>(i) / n, v = static_cast<double>(j) / n;
      if (!(map.jacobian(u, v).det > 0.0)) {
        bad[static_cast<size_t>(j * (n + 1) + i)] = 1;
        rep.points.emplace_back(u, v);
      }
    }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto at = [&](int a, int b) { return bad[static_cast<size_t>((j + b) * (n + 1) + i + a)] != 0; };
      if (at(0, 0) || at(1, 0) || at(0, 1) || at(1, 1)) rep.cells.emplace_back(i, j);
    }
  return rep;
}

namespace {

std::vector<double> span_midpoints(const KnotVector& kv, const std::vector<double>& xs) {
  const auto& U = kv.knots();
  std::set<double> mids;
  for (double x : xs) {
    const int s = kv.find_span(x);
    mids.insert(0.5 * (U[static_cast<size_t>(s)] + U[static_cast<size_t>(s + 1)]));
    // a defect sitting on a knot touches the span to its left as well
    if (s > kv.degree() && x == U[static_cast<size_t>(s)]) {
      int t = s - 1;
      while (t > kv.degree() && U[static_cast<size_t>(t)] == U[static_cast<size_t>(s)]) --t;
      if (U[static_cast<size_t>(t)] < x) mids.insert(0.5 * (U[static_cast<size_t>(t)] + x));
    }
  }
  return {mids.begin(), mids.end()};
}

}  // namespace

EggResult repair_folding(const EggProblem& problem, const FoldReport& defects) {
  SplineMap map = problem.map;
  FoldReport rep = defects;
  EggOptions opts;
  opts.epsilon = problem.epsilon;
  opts.newton_tol = problem.newton_tol;
  opts.max_iter = problem.max_iter;
  opts.max_halvings = problem.max_halvings;
  opts.quad_per_span = problem.quad_per_span;
  const int samples = defects.n_samples > 0 ? defects.n_samples : 64;
  for (int round = 0; round < 3; ++round) {
    std::vector<double> us, vs;
    for (const auto& [u, v] : rep.points) {
      us.push_back(u);
      vs.push_back(v);
    }
    const auto mx = span_midpoints(map.basis().xi, us);
    const auto my = span_midpoints(map.basis().eta, vs);
    map = refine_eta(refine_xi(map, mx), my);
    EggResult res = egg_solve(make_egg_problem(map, opts));
    rep = check_folding(res.map, samples);
    if (rep.empty()) return res;
    map = res.map;
  }
  fail(ErrorCode::kFoldingUnrepaired, "parameterization still folds after three refinement rounds");
}

}  // namespace screwgen
