#pragma once

#include <vector>

#include "screwgen/spline.hpp"

namespace screwgen {

struct GaussRule {
  std::vector<double> nodes;    // on [0, 1]
  std::vector<double> weights;  // sum to 1
};

/// Gauss-Legendre rule with n points on [0, 1].
GaussRule gauss_legendre(int n);

/// Quadrature points of a knot vector: `per_span` Gauss points on every
/// non-empty span, with weights scaled by the span length.
struct SpanQuadrature {
  std::vector<double> lo;  // span start per element
  std::vector<double> hi;
  std::vector<std::vector<double>> points;
  std::vector<std::vector<double>> weights;
};
SpanQuadrature span_quadrature(const KnotVector& kv, int per_span);

}  // namespace screwgen
