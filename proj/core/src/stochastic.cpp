#include "flexbus/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flexbus {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

namespace {

// Acklam's rational approximation to the inverse normal CDF.
double acklam(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  double q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw Error(Errc::invalid_argument, "normal_quantile: p outside [0,1]");
  }
  double x = acklam(p);
  // One Halley refinement against the erfc-based CDF.
  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

double round_half_even(double x) {
  double r = std::nearbyint(x);  // default rounding mode is to-nearest-even
  return r == 0.0 ? 0.0 : r;     // normalize -0
}

Distribution Distribution::truncated_normal(double mu, double variance, double lo,
                                            double hi, bool integer_valued) {
  if (!(variance > 0.0)) throw Error(Errc::invalid_distribution, "tn: variance must be > 0");
  if (!(lo < hi)) throw Error(Errc::invalid_distribution, "tn: requires lo < hi");
  if (lo < 0.0) throw Error(Errc::invalid_distribution, "tn: support must be within [0,inf)");
  Distribution d;
  d.kind_ = DistKind::truncated_normal;
  d.integer_valued_ = integer_valued;
  d.a_ = mu;
  d.b_ = std::sqrt(variance);
  d.lo_ = lo;
  d.hi_ = hi;
  d.phi_lo_ = normal_cdf((lo - mu) / d.b_);
  d.phi_hi_ = std::isfinite(hi) ? normal_cdf((hi - mu) / d.b_) : 1.0;
  if (!(d.phi_hi_ > d.phi_lo_))
    throw Error(Errc::invalid_distribution, "tn: truncation interval has no mass");
  return d;
}

Distribution Distribution::lognormal(double shape, double scale, bool integer_valued) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw Error(Errc::invalid_distribution, "lognormal: shape and scale must be > 0");
  Distribution d;
  d.kind_ = DistKind::lognormal;
  d.integer_valued_ = integer_valued;
  d.a_ = shape;
  d.b_ = scale;
  return d;
}

Distribution Distribution::empirical(std::vector<double> values, std::vector<double> weights,
                                     bool integer_valued) {
  if (values.empty() || values.size() != weights.size())
    throw Error(Errc::invalid_distribution, "empirical: values/weights size mismatch");
  Distribution d;
  d.kind_ = DistKind::empirical;
  d.integer_valued_ = integer_valued;
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw Error(Errc::invalid_distribution, "empirical: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw Error(Errc::invalid_distribution, "empirical: zero total weight");
  for (std::size_t k : order) {
    double v = values[k];
    if (v < 0.0) throw Error(Errc::invalid_distribution, "empirical: negative atom");
    if (integer_valued) v = round_half_even(v);
    double w = weights[k] / total;
    if (!d.values_.empty() && v == d.values_.back()) {
      d.weights_.back() += w;
    } else {
      d.values_.push_back(v);
      d.weights_.push_back(w);
    }
  }
  d.cum_.resize(d.weights_.size());
  std::partial_sum(d.weights_.begin(), d.weights_.end(), d.cum_.begin());
  d.cum_.back() = 1.0;
  return d;
}

double Distribution::cdf(double x) const {
  switch (kind_) {
    case DistKind::truncated_normal: {
      if (x <= lo_) return 0.0;
      if (x >= hi_) return 1.0;
      double p = normal_cdf((x - a_) / b_);
      return std::clamp((p - phi_lo_) / (phi_hi_ - phi_lo_), 0.0, 1.0);
    }
    case DistKind::lognormal: {
      if (x <= 0.0) return 0.0;
      return normal_cdf(std::log(x / b_) / a_);
    }
    case DistKind::empirical: {
      double acc = 0.0;
      for (std::size_t i = 0; i < values_.size() && values_[i] <= x; ++i) acc = cum_[i];
      return acc;
    }
  }
  return 0.0;
}

double Distribution::quantile(double p) const {
  if (!(p >= 0.0 && p < 1.0))
    throw Error(Errc::invalid_reliability, "quantile: p must lie in [0,1)");
  switch (kind_) {
    case DistKind::truncated_normal: {
      if (p == 0.0) return lo_;
      double z = normal_quantile(phi_lo_ + p * (phi_hi_ - phi_lo_));
      double x = a_ + b_ * z;
      return std::clamp(x, lo_, std::isfinite(hi_) ? hi_ : x);
    }
    case DistKind::lognormal: {
      if (p == 0.0) return 0.0;
      return b_ * std::exp(a_ * normal_quantile(p));
    }
    case DistKind::empirical: {
      for (std::size_t i = 0; i < values_.size(); ++i)
        if (cum_[i] >= p || i + 1 == values_.size()) return values_[i];
      return values_.back();
    }
  }
  return 0.0;
}

double Distribution::integer_cdf(long long n) const {
  if (n < 0) return 0.0;
  if (kind_ == DistKind::empirical) {
    // integer-valued empirical laws have pre-rounded atoms
    double acc = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      double v = integer_valued_ ? values_[i] : round_half_even(values_[i]);
      if (v <= static_cast<double>(n)) acc += weights_[i];
    }
    return std::min(acc, 1.0);
  }
  return cdf(static_cast<double>(n) + 0.5);
}

long long Distribution::integer_quantile(double rho) const {
  if (!(rho >= 0.0 && rho < 1.0))
    throw Error(Errc::invalid_reliability, "integer_quantile: rho must lie in [0,1)");
  if (rho == 0.0) return 0;
  // bracket by doubling, then binary search on the rounded CDF
  long long hi = 1;
  while (integer_cdf(hi) < rho) {
    hi *= 2;
    if (hi > (1ll << 40))
      throw Error(Errc::invalid_distribution, "integer_quantile: no finite quantile");
  }
  long long lo = 0;
  while (lo < hi) {
    long long mid = lo + (hi - lo) / 2;
    if (integer_cdf(mid) >= rho)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

double Distribution::sample(RngStream& rng) const {
  double u = rng.next_open();
  double x;
  switch (kind_) {
    case DistKind::truncated_normal:
      x = a_ + b_ * normal_quantile(phi_lo_ + u * (phi_hi_ - phi_lo_));
      x = std::clamp(x, lo_, std::isfinite(hi_) ? hi_ : x);
      break;
    case DistKind::lognormal:
      x = b_ * std::exp(a_ * normal_quantile(u));
      break;
    case DistKind::empirical: {
      std::size_t i = 0;
      while (i + 1 < cum_.size() && cum_[i] < u) ++i;
      x = values_[i];
      break;
    }
    default:
      x = 0.0;
  }
  return integer_valued_ ? round_half_even(x) : x;
}

double Distribution::mean() const {
  switch (kind_) {
    case DistKind::truncated_normal: {
      double alpha = (lo_ - a_) / b_;
      double phi_a = std::exp(-0.5 * alpha * alpha) / std::sqrt(2.0 * M_PI);
      double phi_b = 0.0;
      if (std::isfinite(hi_)) {
        double beta = (hi_ - a_) / b_;
        phi_b = std::exp(-0.5 * beta * beta) / std::sqrt(2.0 * M_PI);
      }
      return a_ + b_ * (phi_a - phi_b) / (phi_hi_ - phi_lo_);
    }
    case DistKind::lognormal:
      return b_ * std::exp(0.5 * a_ * a_);
    case DistKind::empirical: {
      double m = 0.0;
      for (std::size_t i = 0; i < values_.size(); ++i) m += values_[i] * weights_[i];
      return m;
    }
  }
  return 0.0;
}

Distribution Distribution::scaled(double f) const {
  if (!(f > 0.0)) throw Error(Errc::invalid_argument, "scaled: factor must be > 0");
  switch (kind_) {
    case DistKind::truncated_normal:
      return truncated_normal(a_ * f, b_ * b_, lo_, hi_, integer_valued_);
    case DistKind::lognormal:
      return lognormal(a_, b_ * f, integer_valued_);
    case DistKind::empirical: {
      std::vector<double> v = values_;
      for (double& x : v) x *= f;
      return empirical(std::move(v), weights_, integer_valued_);
    }
  }
  throw Error(Errc::invalid_distribution, "scaled: unknown kind");
}

long long demand_quantile(const Distribution& dist, double rho) {
  return dist.integer_quantile(rho);
}

double detour_quantile(const Distribution& dist, double rho) {
  double q = dist.quantile(rho);
  return q < 0.0 ? 0.0 : q;
}

std::optional<double> reliability_for_demand(const Distribution& dist, long long n) {
  if (n <= 0) return 0.0;
  double below = dist.integer_cdf(n - 1);
  double rho = std::nextafter(below, 1.0);
  if (rho >= 1.0) return std::nullopt;
  // guard against rounded laws with zero mass at n
  if (dist.integer_quantile(rho) != n) {
    double at = dist.integer_cdf(n);
    if (at >= 1.0 || at <= below) return std::nullopt;
    rho = at;
    if (dist.integer_quantile(rho) != n) return std::nullopt;
  }
  return rho;
}

}  // namespace flexbus
