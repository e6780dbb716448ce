#include "screwgen/control_map.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace screwgen {

double ControlMap::eval(double mu, double nu) const {
  const BasisEval a = eval_local(basis.xi, mu, 0), b = eval_local(basis.eta, nu, 0);
  double s = 0.0;
  for (int j = 0; j < b.count; ++j)
    for (int i = 0; i < a.count; ++i) s += at(a.first + i, b.first + j) * a.values[0][i] * b.values[0][j];
  return s;
}

Vec2 ControlMap::gradient(double mu, double nu) const {
  const BasisEval a = eval_local(basis.xi, mu, 1), b = eval_local(basis.eta, nu, 1);
  Vec2 g;
  for (int j = 0; j < b.count; ++j)
    for (int i = 0; i < a.count; ++i) {
      const double c = at(a.first + i, b.first + j);
      g.x += c * a.values[1][i] * b.values[0][j];
      g.y += c * a.values[0][i] * b.values[1][j];
    }
  return g;
}

bool ControlMap::feasible(double delta_mono) const {
  if (static_cast<int>(sigma.size()) != n() * m() || m() < 2) return false;
  for (int i = 0; i < n(); ++i) {
    if (at(i, 0) != 0.0 || at(i, m() - 1) != 1.0) return false;
    for (int j = 0; j + 1 < m(); ++j)
      if (at(i, j + 1) - at(i, j) < delta_mono - 1e-12) return false;
  }
  return true;
}

TensorBasis default_control_basis() { return {KnotVector::uniform(2, 8), KnotVector::uniform(2, 8)}; }

ControlMap identity_control(const TensorBasis& basis) {
  ControlMap s{basis, {}};
  const auto g = greville_abscissae(basis.eta);
  for (int j = 0; j < s.m(); ++j)
    for (int i = 0; i < s.n(); ++i) s.sigma.push_back(g[static_cast<size_t>(j)]);
  for (int i = 0; i < s.n(); ++i) {
    s.sigma[static_cast<size_t>(i)] = 0.0;
    s.sigma[static_cast<size_t>((s.m() - 1) * s.n() + i)] = 1.0;
  }
  return s;
}

namespace {

// Riemann-sum cost with x restricted to the sample columns, so that moving
// sigma needs only one-dimensional evaluations.
class CostField {
 public:
  CostField(const SplineMap& x, const TensorBasis& cb, int samples)
      : x_(x), S_(samples), cb_(cb) {
    if (samples < 1) fail(ErrorCode::kDomain, "cost needs at least one sample cell");
    const int nx = x.n(), mx = x.m();
    for (int a = 0; a < S_; ++a) {
      const double mu = (a + 0.5) / S_;
      bm_.push_back(eval_local(cb.xi, mu, 1));
      bn_.push_back(eval_local(cb.eta, mu, 1));
      const BasisEval e = eval_local(x.basis().xi, mu, 1);
      std::vector<Vec2> p(static_cast<size_t>(mx)), pd(static_cast<size_t>(mx));
      for (int j = 0; j < mx; ++j)
        for (int k = 0; k < e.count; ++k) {
          const Vec2& c = x.control_points()[static_cast<size_t>(j * nx + e.first + k)];
          p[static_cast<size_t>(j)] += c * e.values[0][k];
          pd[static_cast<size_t>(j)] += c * e.values[1][k];
        }
      col_.push_back(std::move(p));
      cold_.push_back(std::move(pd));
    }
    rows_of_i_.resize(static_cast<size_t>(cb.xi.dim()));
    rows_of_j_.resize(static_cast<size_t>(cb.eta.dim()));
    for (int a = 0; a < S_; ++a) {
      for (int k = 0; k < bm_[a].count; ++k) rows_of_i_[static_cast<size_t>(bm_[a].first + k)].push_back(a);
      for (int k = 0; k < bn_[a].count; ++k) rows_of_j_[static_cast<size_t>(bn_[a].first + k)].push_back(a);
    }
  }

  double area() const { return 1.0 / (static_cast<double>(S_) * S_); }

  // Integrand at sample column a for given sigma and its derivatives.
  double integrand(int a, double s, double s_mu, double s_nu) const {
    s = std::clamp(s, 0.0, 1.0);
    const BasisEval e = eval_local(x_.basis().eta, s, 1);
    Vec2 x_xi, x_eta;
    for (int k = 0; k < e.count; ++k) {
      x_xi += cold_[static_cast<size_t>(a)][static_cast<size_t>(e.first + k)] * e.values[0][k];
      x_eta += col_[static_cast<size_t>(a)][static_cast<size_t>(e.first + k)] * e.values[1][k];
    }
    const Vec2 d_mu = x_xi + x_eta * s_mu;
    const Vec2 d_nu = x_eta * s_nu;
    const double v = dot(d_mu, d_nu);
    return v * v;
  }

  struct SigmaAt {
    double s, s_mu, s_nu;
  };

  SigmaAt sigma(const std::vector<double>& c, int a, int b) const {
    const BasisEval& A = bm_[static_cast<size_t>(a)];
    const BasisEval& B = bn_[static_cast<size_t>(b)];
    const int n = cb_.xi.dim();
    SigmaAt r{0.0, 0.0, 0.0};
    for (int j = 0; j < B.count; ++j)
      for (int i = 0; i < A.count; ++i) {
        const double v = c[static_cast<size_t>((B.first + j) * n + A.first + i)];
        r.s += v * A.values[0][i] * B.values[0][j];
        r.s_mu += v * A.values[1][i] * B.values[0][j];
        r.s_nu += v * A.values[0][i] * B.values[1][j];
      }
    return r;
  }

  double cost(const std::vector<double>& c) const {
    double sum = 0.0;
    for (int b = 0; b < S_; ++b)
      for (int a = 0; a < S_; ++a) {
        const SigmaAt z = sigma(c, a, b);
        sum += integrand(a, z.s, z.s_mu, z.s_nu);
      }
    return 0.5 * area() * sum;
  }

  // Central differences per free control value, re-evaluating only the
  // samples inside its support.
  std::vector<double> gradient(const std::vector<double>& c, double h) const {
    const int n = cb_.xi.dim(), m = cb_.eta.dim();
    std::vector<SigmaAt> base(static_cast<size_t>(S_ * S_));
    for (int b = 0; b < S_; ++b)
      for (int a = 0; a < S_; ++a) base[static_cast<size_t>(b * S_ + a)] = sigma(c, a, b);
    std::vector<double> g(c.size(), 0.0);
    for (int j = 1; j + 1 < m; ++j)
      for (int i = 0; i < n; ++i) {
        double diff = 0.0;
        for (int b : rows_of_j_[static_cast<size_t>(j)])
          for (int a : rows_of_i_[static_cast<size_t>(i)]) {
            const BasisEval& A = bm_[static_cast<size_t>(a)];
            const BasisEval& B = bn_[static_cast<size_t>(b)];
            const int ki = i - A.first, kj = j - B.first;
            const double w0 = A.values[0][ki] * B.values[0][kj];
            const double w_mu = A.values[1][ki] * B.values[0][kj];
            const double w_nu = A.values[0][ki] * B.values[1][kj];
            const SigmaAt& z = base[static_cast<size_t>(b * S_ + a)];
            diff += integrand(a, z.s + h * w0, z.s_mu + h * w_mu, z.s_nu + h * w_nu) -
                    integrand(a, z.s - h * w0, z.s_mu - h * w_mu, z.s_nu - h * w_nu);
          }
        g[static_cast<size_t>(j * n + i)] = 0.5 * area() * diff / (2.0 * h);
      }
    return g;
  }

 private:
  const SplineMap& x_;
  int S_;
  TensorBasis cb_;
  std::vector<BasisEval> bm_, bn_;
  std::vector<std::vector<Vec2>> col_, cold_;
  std::vector<std::vector<int>> rows_of_i_, rows_of_j_;
};

// Euclidean projection onto {v >= lo, sum v = total}.
void project_capped_simplex(std::vector<double>& v, double lo, double total) {
  const size_t k = v.size();
  std::vector<double> u(k);
  for (size_t i = 0; i < k; ++i) u[i] = v[i] - lo;
  const double r = total - lo * static_cast<double>(k);
  std::vector<double> s = u;
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, tau = 0.0;
  for (size_t i = 0; i < k; ++i) {
    cum += s[i];
    const double t = (cum - r) / static_cast<double>(i + 1);
    if (s[i] - t > 0.0) tau = t;
  }
  for (size_t i = 0; i < k; ++i) v[i] = lo + std::max(u[i] - tau, 0.0);
}

}  // namespace

double orthogonality_cost(const SplineMap& x, const ControlMap& s, int samples) {
  return CostField(x, s.basis, samples).cost(s.sigma);
}

std::vector<double> control_cost_gradient(const SplineMap& x, const ControlMap& s, double h, int samples) {
  return CostField(x, s.basis, samples).gradient(s.sigma, h);
}

ControlResult optimize_control(const SplineMap& x, const ControlMap& init, const ControlOptions& opts) {
  if (!init.feasible(opts.delta_mono))
    fail(ErrorCode::kConstraint, "initial control mapping violates the boundary or monotonicity constraints");
  const int n = init.n(), m = init.m();
  if ((m - 1) * opts.delta_mono >= 1.0) fail(ErrorCode::kConstraint, "monotonicity margin too large for the basis");
  const CostField field(x, init.basis, opts.samples);

  // increments z(i, k) = c(i, k+1) - c(i, k), k = 0 .. m-2
  const size_t nz = static_cast<size_t>(n * (m - 1));
  auto to_values = [&](const std::vector<double>& z) {
    std::vector<double> c(static_cast<size_t>(n * m), 0.0);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int k = 0; k + 1 < m; ++k) {
        acc += z[static_cast<size_t>(i * (m - 1) + k)];
        c[static_cast<size_t>((k + 1) * n + i)] = acc;
      }
      c[static_cast<size_t>((m - 1) * n + i)] = 1.0;
    }
    return c;
  };
  auto grad_z = [&](const std::vector<double>& c) {
    const auto gc = field.gradient(c, opts.fd_step);
    std::vector<double> gz(nz, 0.0);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int k = m - 2; k >= 0; --k) {
        acc += gc[static_cast<size_t>((k + 1) * n + i)];
        gz[static_cast<size_t>(i * (m - 1) + k)] = acc;
      }
    }
    return gz;
  };
  auto project = [&](std::vector<double>& z) {
    std::vector<double> col(static_cast<size_t>(m - 1));
    for (int i = 0; i < n; ++i) {
      std::copy_n(z.begin() + i * (m - 1), m - 1, col.begin());
      project_capped_simplex(col, opts.delta_mono, 1.0);
      std::copy(col.begin(), col.end(), z.begin() + i * (m - 1));
    }
  };

  std::vector<double> z(nz);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k + 1 < m; ++k) z[static_cast<size_t>(i * (m - 1) + k)] = init.at(i, k + 1) - init.at(i, k);

  ControlResult out;
  out.map = init;
  double f = field.cost(init.sigma);
  out.initial_cost = f;
  std::vector<double> g = grad_z(init.sigma);
  double gmax = 0.0;
  for (double v : g) gmax = std::max(gmax, std::abs(v));
  double alpha = gmax > 0.0 ? 0.1 / gmax : 1.0;

  // limited-memory BFGS pairs; cleared whenever the projected step fails
  std::deque<std::pair<std::vector<double>, std::vector<double>>> memory;
  auto direction = [&]() {
    std::vector<double> q = g;
    std::vector<double> rho, a(memory.size());
    for (const auto& [s, y] : memory) rho.push_back(1.0 / std::inner_product(s.begin(), s.end(), y.begin(), 0.0));
    for (size_t k = memory.size(); k-- > 0;) {
      const auto& [s, y] = memory[k];
      a[k] = rho[k] * std::inner_product(s.begin(), s.end(), q.begin(), 0.0);
      for (size_t t = 0; t < nz; ++t) q[t] -= a[k] * y[t];
    }
    double gamma = alpha;
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      gamma = std::inner_product(s.begin(), s.end(), y.begin(), 0.0) /
              std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
    }
    for (double& v : q) v *= gamma;
    for (size_t k = 0; k < memory.size(); ++k) {
      const auto& [s, y] = memory[k];
      const double b = rho[k] * std::inner_product(y.begin(), y.end(), q.begin(), 0.0);
      for (size_t t = 0; t < nz; ++t) q[t] += (a[k] - b) * s[t];
    }
    for (double& v : q) v = -v;
    return q;
  };

  std::vector<double> z_new(nz), c_new;
  // Backtracking along the projection arc z(l) = P(z + l p).
  auto search = [&](const std::vector<double>& p, double& f_new) {
    double lambda = 1.0;
    for (int h = 0; h < 40; ++h, lambda *= 0.5) {
      for (size_t k = 0; k < nz; ++k) z_new[k] = z[k] + lambda * p[k];
      project(z_new);
      double slope = 0.0, dmax = 0.0;
      for (size_t k = 0; k < nz; ++k) {
        slope += g[k] * (z_new[k] - z[k]);
        dmax = std::max(dmax, std::abs(z_new[k] - z[k]));
      }
      if (dmax < 1e-15 || slope >= 0.0) return false;
      c_new = to_values(z_new);
      f_new = field.cost(c_new);
      if (f_new <= f + 1e-4 * slope) return true;
    }
    return false;
  };

  for (int it = 0; it < opts.max_iter; ++it) {
    double f_new = f;
    bool ok = !memory.empty() && search(direction(), f_new);
    if (!ok) {
      memory.clear();
      std::vector<double> p(nz);
      for (size_t k = 0; k < nz; ++k) p[k] = -alpha * g[k];
      ok = search(p, f_new);
    }
    if (!ok) break;
    ControlMap next{init.basis, c_new};
    if (!next.feasible(opts.delta_mono)) break;
    const std::vector<double> g_new = grad_z(c_new);
    std::vector<double> s(nz), y(nz);
    for (size_t k = 0; k < nz; ++k) {
      s[k] = z_new[k] - z[k];
      y[k] = g_new[k] - g[k];
    }
    const double ss = std::inner_product(s.begin(), s.end(), s.begin(), 0.0);
    const double sy = std::inner_product(s.begin(), s.end(), y.begin(), 0.0);
    const double yy = std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
    alpha = sy > 0.0 ? std::clamp(ss / sy, 1e-12 * alpha, 1e12 * alpha) : 10.0 * alpha;
    if (sy > 1e-10 * std::sqrt(ss * yy)) {
      memory.emplace_back(std::move(s), std::move(y));
      if (memory.size() > 10) memory.pop_front();
    }
    const double rel = std::abs(f - f_new) / std::max(std::abs(f), 1e-300);
    z = z_new;
    f = f_new;
    g = g_new;
    out.map = std::move(next);
    ++out.iterations;
    if (rel < opts.rel_tol) break;
  }
  out.final_cost = f;
  return out;
}

}  // namespace screwgen
