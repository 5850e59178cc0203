#pragma once

#include <optional>
#include <vector>

#include "flexbus/common.hpp"

namespace flexbus {

// Standard normal CDF and its inverse (Acklam's rational approximation
// polished with one Halley step; |error| well below 1e-12).
double normal_cdf(double x);
double normal_quantile(double p);

enum class DistKind { truncated_normal, lognormal, empirical };

// A scalar probability law on [0, +inf). When integer_valued, draws are
// rounded half-to-even and quantiles/CDFs refer to the rounded law.
class Distribution {
 public:
  static Distribution truncated_normal(double mu, double variance, double lo,
                                       double hi = kInf, bool integer_valued = false);
  static Distribution lognormal(double shape, double scale, bool integer_valued = false);
  static Distribution empirical(std::vector<double> values, std::vector<double> weights,
                                bool integer_valued = false);

  DistKind kind() const { return kind_; }
  bool integer_valued() const { return integer_valued_; }

  // CDF of the continuous (un-rounded) law.
  double cdf(double x) const;
  // Continuous p-quantile, p in [0, 1).
  double quantile(double p) const;
  // CDF of the rounded law: Pr(round(X) <= n).
  double integer_cdf(long long n) const;
  // Smallest integer n >= 0 with Pr(round(X) <= n) >= rho.
  long long integer_quantile(double rho) const;

  double sample(RngStream& rng) const;
  double mean() const;

  // Parameter access (used by serialization and demand scaling).
  double tn_mu() const { return a_; }
  double tn_sigma() const { return b_; }
  double tn_lo() const { return lo_; }
  double tn_hi() const { return hi_; }
  double ln_shape() const { return a_; }
  double ln_scale() const { return b_; }
  const std::vector<double>& emp_values() const { return values_; }
  const std::vector<double>& emp_weights() const { return weights_; }

  // Same law with the location parameter scaled by f (TN mean, lognormal
  // scale, empirical atoms); used by demand-multiplier sweeps.
  Distribution scaled(double f) const;

 private:
  Distribution() = default;

  DistKind kind_ = DistKind::empirical;
  bool integer_valued_ = false;
  double a_ = 0.0, b_ = 0.0;      // tn: mu/sigma, lognormal: shape/scale
  double lo_ = 0.0, hi_ = kInf;   // tn bounds
  double phi_lo_ = 0.0, phi_hi_ = 1.0;
  std::vector<double> values_;    // empirical atoms, ascending
  std::vector<double> weights_;   // matching weights, sum 1
  std::vector<double> cum_;       // cumulative weights
};

long long demand_quantile(const Distribution& dist, double rho);
double detour_quantile(const Distribution& dist, double rho);

// Smallest reliability rho such that demand_quantile(dist, rho) == n,
// i.e. the CDF just below n bumped by one ulp. Returns nullopt when the
// support is exhausted (no rho < 1 reaches n).
std::optional<double> reliability_for_demand(const Distribution& dist, long long n);

double round_half_even(double x);

}  // namespace flexbus
