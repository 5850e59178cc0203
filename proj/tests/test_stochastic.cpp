#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flexbus/stochastic.hpp"

using namespace flexbus;

namespace {

// Quadrature-based truncated-normal CDF, independent of the implementation's
// erfc path: Simpson integration of the density over [lo, x].
double tn_cdf_quadrature(double mu, double var, double lo, double x) {
  if (x <= lo) return 0.0;
  double sigma = std::sqrt(var);
  auto pdf = [&](double t) {
    double z = (t - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
  };
  auto simpson = [&](double a, double b) {
    const int n = 4000;  // even
    double h = (b - a) / n;
    double s = pdf(a) + pdf(b);
    for (int i = 1; i < n; ++i) s += pdf(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
  };
  double upper = mu + 12.0 * sigma;
  double mass = simpson(lo, upper);
  return simpson(lo, std::min(x, upper)) / mass;
}

double tn_quantile_bisect(double mu, double var, double lo, double p) {
  double a = lo, b = mu + 12.0 * std::sqrt(var);
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (a + b);
    if (tn_cdf_quadrature(mu, var, lo, m) < p)
      a = m;
    else
      b = m;
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("normal quantile inverts the normal cdf to high precision") {
  for (double p : {1e-9, 1e-5, 0.01, 0.2, 0.5, 0.7, 0.9, 0.999, 1.0 - 1e-9}) {
    double x = normal_quantile(p);
    CHECK(std::abs(normal_cdf(x) - p) < 1e-12);
  }
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("detour quantile matches the quadrature oracle") {
  Distribution d = Distribution::truncated_normal(1.5, 1.0, 0.0);
  for (double rho : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
    double expected = tn_quantile_bisect(1.5, 1.0, 0.0, rho);
    CHECK(detour_quantile(d, rho) == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("quantile of the cdf is the identity on continuous laws") {
  Distribution d = Distribution::truncated_normal(1.0, 1.0, 0.0);
  double rho = d.cdf(1.0);
  CHECK(detour_quantile(d, rho) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("lognormal median equals the scale parameter") {
  Distribution d = Distribution::lognormal(0.8, 4.0);
  CHECK(detour_quantile(d, 0.5) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("demand quantile of the rounded truncated normal") {
  Distribution d = Distribution::truncated_normal(16.0, 6.0, 0.0, kInf, true);
  CHECK(demand_quantile(d, 0.5) == 16);
  // oracle cross-check: P(round(X) <= n) = F(n + 0.5)
  double f155 = tn_cdf_quadrature(16.0, 6.0, 0.0, 15.5);
  double f165 = tn_cdf_quadrature(16.0, 6.0, 0.0, 16.5);
  CHECK(f155 < 0.5);
  CHECK(f165 >= 0.5);
  CHECK(demand_quantile(d, 0.0) == 0);
}

TEST_CASE("empirical step inversion") {
  Distribution d = Distribution::empirical({3.0, 5.0}, {0.5, 0.5}, true);
  CHECK(demand_quantile(d, 0.6) == 5);
  CHECK(demand_quantile(d, 0.5) == 3);
  CHECK(demand_quantile(d, 0.0) == 0);
}

TEST_CASE("quantiles are monotone in the reliability") {
  Distribution tn = Distribution::truncated_normal(4.0, 2.0, 0.0, kInf, true);
  Distribution ln = Distribution::lognormal(0.8, 4.0);
  long long prev_n = -1;
  double prev_x = -1.0;
  for (double rho = 0.0; rho < 0.999; rho += 0.001) {
    long long n = demand_quantile(tn, rho);
    double x = detour_quantile(ln, rho);
    CHECK(n >= prev_n);
    CHECK(x >= prev_x - 1e-12);
    prev_n = n;
    prev_x = x;
  }
}

TEST_CASE("reliability_for_demand is the left edge of the quantile step") {
  Distribution d = Distribution::truncated_normal(6.0, 4.0, 0.0, kInf, true);
  for (long long n : {0ll, 1ll, 3ll, 6ll, 9ll, 14ll}) {
    auto rho = reliability_for_demand(d, n);
    REQUIRE(rho.has_value());
    CHECK(demand_quantile(d, *rho) == n);
    if (n > 0) CHECK(demand_quantile(d, d.integer_cdf(n - 1)) < n + 1);
  }
  Distribution degenerate = Distribution::empirical({2.0}, {1.0}, true);
  CHECK(!reliability_for_demand(degenerate, 3).has_value());
}

TEST_CASE("round half to even") {
  CHECK(round_half_even(2.5) == 2.0);
  CHECK(round_half_even(3.5) == 4.0);
  CHECK(round_half_even(-0.0) == 0.0);
  CHECK(round_half_even(16.2) == 16.0);
}

TEST_CASE("sampling is deterministic per (seed, stream, draw index)") {
  Distribution d = Distribution::truncated_normal(16.0, 6.0, 0.0);
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 100; ++i) CHECK(d.sample(a) == d.sample(b));
  RngStream c(43, 7);
  bool all_equal = true;
  RngStream a2(42, 7);
  for (int i = 0; i < 100; ++i) all_equal = all_equal && (d.sample(a2) == d.sample(c));
  CHECK(!all_equal);
}

TEST_CASE("sample means land within three standard errors") {
  Distribution d = Distribution::truncated_normal(16.0, 6.0, 0.0, kInf, true);
  RngStream rng(7, 0);
  const int n = 10000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = d.sample(rng);
    sum += x;
    sumsq += x * x;
  }
  double mean = sum / n;
  double sd = std::sqrt(std::max(0.0, sumsq / n - mean * mean));
  CHECK(std::abs(mean - d.mean()) <= 3.0 * sd / std::sqrt(double(n)) + 0.5 / n);
}

TEST_CASE("truncated normal mean matches quadrature") {
  Distribution d = Distribution::truncated_normal(1.5, 1.0, 0.0);
  // E[X] by integrating x f(x) with Simpson
  double sigma = 1.0, mu = 1.5;
  auto pdf = [&](double t) {
    double z = (t - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
  };
  const int n = 20000;
  double hi = mu + 12.0 * sigma, h = hi / n;
  double num = 0.0, den = 0.0;
  for (int i = 0; i <= n; ++i) {
    double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    num += w * (i * h) * pdf(i * h);
    den += w * pdf(i * h);
  }
  CHECK(d.mean() == doctest::Approx(num / den).epsilon(1e-8));
}

TEST_CASE("invalid reliabilities are rejected") {
  Distribution d = Distribution::truncated_normal(4.0, 1.0, 0.0);
  CHECK_THROWS_AS(demand_quantile(d, 1.0), Error);
  CHECK_THROWS_AS(detour_quantile(d, -0.1), Error);
}
