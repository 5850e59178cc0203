#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "flexbus/common.hpp"

namespace flexbus {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

enum class CurveForm { linear, exponential, piecewise };

// Detour time from the zone boundary to the nearest service location, as a
// function of the number of locations visited. Convex non-increasing over
// the valid range [0, 2*cap].
class BoundaryDetourCurve {
 public:
  // a - b*y
  static BoundaryDetourCurve linear(double a, double b);
  // a*exp(-b*y) + c
  static BoundaryDetourCurve exponential(double a, double b, double c);
  // values at integer points 0..k, linearly interpolated
  static BoundaryDetourCurve piecewise(std::vector<double> knot_values);

  CurveForm form() const { return form_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  const std::vector<double>& knots() const { return knots_; }

  double operator()(double y) const;
  bool convex_nonincreasing(int max_y) const;

 private:
  BoundaryDetourCurve() = default;
  CurveForm form_ = CurveForm::linear;
  double a_ = 0.0, b_ = 0.0, c_ = 0.0;
  std::vector<double> knots_;
};

// Per-zone symmetric matrix of realized request detours. Diagonal holds the
// request detour times (zero for requests not touching the zone), the
// off-diagonal entries hold half the pairwise detour reduction (non-positive).
struct DetourMatrix {
  int zone = -1;
  // set when every off-diagonal entry is -min(tau_d, tau_b) / (2 cap); the
  // assignment solver then uses an aggregated exact linearization
  bool uniform_min_rule = false;
  double min_rule_divisor = 0.0;  // 2 cap when uniform_min_rule
  std::vector<double> entries;    // n*n row-major, symmetric
  int size() const { return n_; }
  void resize(int n) {
    n_ = n;
    entries.assign(static_cast<std::size_t>(n) * n, 0.0);
  }
  double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * n_ + j]; }
  double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * n_ + j]; }

  // Eq.-style guard: for every request, the cap strongest reductions may not
  // exceed the request's own detour time.
  bool reduction_bound_holds(int cap, double tol = 1e-9) const;

 private:
  int n_ = 0;
};

enum class ReductionRule { scaled_min, proximity };

// w^T T w; w must be 0/1 flags of the same dimension as the matrix.
double zonal_detour(const DetourMatrix& t, const std::vector<std::uint8_t>& w);

// Builds a zone's detour matrix from per-request detour times (0 when the
// request does not touch the zone). Rule scaled_min divides min(tau_d, tau_b)
// by 2*cap; rule proximity scales by location distance and then normalizes
// uniformly so the reduction bound holds. locations[i] is the request's
// service point inside this zone (required for proximity pairs).
DetourMatrix build_detour_matrix(int zone, const std::vector<double>& detours,
                                 const std::vector<std::optional<Vec2>>& locations, int cap,
                                 ReductionRule rule, double max_dist);

// Planned detour of one vehicle in one zone for y service points (Phase-1
// approximation): 2*curve(y) + (y-1)*tau2 for y >= 1, zero for y == 0.
double phase1_detour(long long y, const BoundaryDetourCurve& curve, double tau2);

struct TangentCut {
  double slope = 0.0;
  double intercept = 0.0;
  double operator()(double y) const { return slope * y + intercept; }
};

// Chords of the convex curve between consecutive integers: the pointwise max
// of the cuts reproduces the curve exactly at every integer in [0, 2*cap].
std::vector<TangentCut> tangent_cuts(const BoundaryDetourCurve& curve, int cap);

struct Rect {
  double x_min = 0.0, y_min = 0.0;
  double x_max = 0.0, y_max = 0.0;
  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
};

struct CurveFit {
  BoundaryDetourCurve curve = BoundaryDetourCurve::linear(0.0, 0.0);
  std::vector<std::pair<int, double>> samples;  // (count, mean boundary detour)
  bool exponential_ok = false;
  double a = 0.0, b = 0.0, c = 0.0;
};

inline constexpr double kMinutesPerMeter = 0.003;

// Monte Carlo estimate of the boundary detour per visit count followed by a
// least-squares fit of a*exp(-b*i) + c. Falls back to a piecewise-linear
// curve when the fit diverges.
CurveFit fit_boundary_curve(const Rect& zone, const std::function<Vec2(RngStream&)>& sampler,
                            const std::vector<int>& counts, int trials, RngStream rng);

// Nonlinear least squares for a*exp(-b*x) + c (Gauss-Newton, analytic
// Jacobian). Returns false on divergence.
bool fit_exponential(const std::vector<std::pair<int, double>>& pts, double& a, double& b,
                     double& c);

}  // namespace flexbus
