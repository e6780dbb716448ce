#include "screwgen/quadrature.hpp"

#include <cmath>

namespace screwgen {

GaussRule gauss_legendre(int n) {
  if (n < 1) fail(ErrorCode::kDomain, "Gauss rule needs at least one point");
  GaussRule r;
  r.nodes.resize(static_cast<size_t>(n));
  r.weights.resize(static_cast<size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const size_t a = static_cast<size_t>(i);
    const size_t b = static_cast<size_t>(n - 1 - i);
    r.nodes[a] = 0.5 * (1.0 - x);
    r.nodes[b] = 0.5 * (1.0 + x);
    r.weights[a] = r.weights[b] = 0.5 * w;
  }
  if (n % 2 == 1) r.nodes[static_cast<size_t>(n / 2)] = 0.5;
  return r;
}

SpanQuadrature span_quadrature(const KnotVector& kv, int per_span) {
  const GaussRule g = gauss_legendre(per_span);
  const auto bp = kv.breakpoints();
  SpanQuadrature q;
  for (size_t e = 0; e + 1 < bp.size(); ++e) {
    const double a = bp[e], b = bp[e + 1];
    q.lo.push_back(a);
    q.hi.push_back(b);
    std::vector<double> pts, wts;
    for (size_t k = 0; k < g.nodes.size(); ++k) {
      pts.push_back(a + (b - a) * g.nodes[k]);
      wts.push_back((b - a) * g.weights[k]);
    }
    q.points.push_back(std::move(pts));
    q.weights.push_back(std::move(wts));
  }
  return q;
}

}  // namespace screwgen
