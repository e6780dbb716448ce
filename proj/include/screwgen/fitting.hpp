#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "screwgen/error.hpp"
#include "screwgen/profile.hpp"
#include "screwgen/spline.hpp"

namespace screwgen {

/// Normalized cumulative chord length of an ordered cloud (0 at the first
/// point, 1 at the last).
std::vector<double> chord_length_params(std::span<const Vec2> points);

struct FitResult {
  SplineCurve curve;
  std::vector<double> residuals;  // distance to the curve at each point's parameter
  double max_residual = 0.0;
};

/// Least-squares fit with pinned end points plus lambda times a
/// second-difference penalty on the control points. A negative lambda selects
/// the default 1e-7 * (bounding-box diagonal)^2.
FitResult fit_curve(std::span<const Vec2> points, std::span<const double> params, const KnotVector& kv,
                    double lambda = -1.0);

/// Bisect every span that contains a point with residual above `threshold`.
KnotVector adapt_knots(const FitResult& fit, std::span<const double> params, const KnotVector& kv,
                       double threshold);

class FitNotConverged : public Error {
 public:
  FitNotConverged(const std::string& msg, FitResult best)
      : Error(ErrorCode::kFit, msg), best_(std::move(best)) {}
  const FitResult& best() const { return best_; }

 private:
  FitResult best_;
};

/// Fit + adapt until max residual <= threshold; throws FitNotConverged once
/// the number of spans would exceed `max_spans`.
FitResult fit_adaptive(std::span<const Vec2> points, std::span<const double> params, KnotVector kv,
                       double threshold, int max_spans = 4096, double lambda = -1.0);

/// Strictly increasing piecewise-linear map of [0,1] onto itself.
class ReparamFunction {
 public:
  ReparamFunction() : xs_{0.0, 1.0}, ys_{0.0, 1.0} {}
  ReparamFunction(std::vector<double> xs, std::vector<double> ys);

  double operator()(double t) const;
  double inverse(double y) const;
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

enum class MatchMode { kOneSideFixed, kBothFloat };

struct MatchResult {
  /// Matched index pairs (a, b), increasing in both entries.
  std::vector<std::pair<int, int>> pairs;
  /// kOneSideFixed: maps b's parameters onto a's. kBothFloat: reparam of a.
  ReparamFunction first;
  /// kBothFloat only: reparam of b.
  ReparamFunction second;
};

/// Hierarchical closest-pair matching of two ordered clouds. End points are
/// matched to each other. Parameters come from `params` when present and from
/// chord length otherwise.
MatchResult match_points(const PointCloud& a, const PointCloud& b, MatchMode mode);

/// f shifted in its domain by theta / period (periodic lift), renormalized so
/// the result again maps 0 to 0 and 1 to 1.
ReparamFunction shift_reparam(const ReparamFunction& f, double theta, double period);

/// Linear blend of sampled reparameterizations. With period > 0 the samples
/// are treated as periodic in theta.
ReparamFunction blend_reparams(std::span<const std::pair<double, ReparamFunction>> samples, double theta,
                               double period = 0.0);

}  // namespace screwgen
