#include "flexbus/detour.hpp"

#include <algorithm>
#include <cmath>

namespace flexbus {

BoundaryDetourCurve BoundaryDetourCurve::linear(double a, double b) {
  BoundaryDetourCurve c;
  c.form_ = CurveForm::linear;
  c.a_ = a;
  c.b_ = b;
  return c;
}

BoundaryDetourCurve BoundaryDetourCurve::exponential(double a, double b, double c) {
  BoundaryDetourCurve k;
  k.form_ = CurveForm::exponential;
  k.a_ = a;
  k.b_ = b;
  k.c_ = c;
  return k;
}

BoundaryDetourCurve BoundaryDetourCurve::piecewise(std::vector<double> knot_values) {
  if (knot_values.size() < 2)
    throw Error(Errc::invalid_curve, "piecewise curve needs at least two knots");
  BoundaryDetourCurve k;
  k.form_ = CurveForm::piecewise;
  k.knots_ = std::move(knot_values);
  return k;
}

double BoundaryDetourCurve::operator()(double y) const {
  switch (form_) {
    case CurveForm::linear:
      return a_ - b_ * y;
    case CurveForm::exponential:
      return a_ * std::exp(-b_ * y) + c_;
    case CurveForm::piecewise: {
      int last = static_cast<int>(knots_.size()) - 1;
      if (y <= 0.0) return knots_[0] + (knots_[1] - knots_[0]) * y;
      if (y >= last) return knots_[last] + (knots_[last] - knots_[last - 1]) * (y - last);
      int i = static_cast<int>(std::floor(y));
      double f = y - i;
      return knots_[i] * (1.0 - f) + knots_[i + 1] * f;
    }
  }
  return 0.0;
}

bool BoundaryDetourCurve::convex_nonincreasing(int max_y) const {
  const double tol = 1e-12;
  for (int i = 0; i <= max_y; ++i) {
    double d1 = (*this)(i + 1) - (*this)(i);
    if (d1 > tol) return false;
    if (i + 2 <= max_y + 1) {
      double d2 = (*this)(i + 2) - 2.0 * (*this)(i + 1) + (*this)(i);
      if (d2 < -tol) return false;
    }
  }
  return true;
}

bool DetourMatrix::reduction_bound_holds(int cap, double tol) const {
  for (int d = 0; d < n_; ++d) {
    std::vector<double> reds;
    for (int b = 0; b < n_; ++b)
      if (b != d && at(d, b) < 0.0) reds.push_back(at(d, b));
    std::sort(reds.begin(), reds.end());  // most negative first
    double sum = 0.0;
    for (int k = 0; k < std::min<int>(cap, static_cast<int>(reds.size())); ++k)
      sum += -2.0 * reds[k];
    if (sum > at(d, d) + tol) return false;
  }
  return true;
}

double zonal_detour(const DetourMatrix& t, const std::vector<std::uint8_t>& w) {
  if (static_cast<int>(w.size()) != t.size())
    throw Error(Errc::dimension_mismatch, "zonal_detour: flag vector does not match matrix");
  double total = 0.0;
  for (int i = 0; i < t.size(); ++i) {
    if (!w[i]) continue;
    total += t.at(i, i);
    for (int j = i + 1; j < t.size(); ++j)
      if (w[j]) total += 2.0 * t.at(i, j);
  }
  return total;
}

DetourMatrix build_detour_matrix(int zone, const std::vector<double>& detours,
                                 const std::vector<std::optional<Vec2>>& locations, int cap,
                                 ReductionRule rule, double max_dist) {
  const int n = static_cast<int>(detours.size());
  DetourMatrix t;
  t.zone = zone;
  t.resize(n);
  for (int i = 0; i < n; ++i) {
    if (detours[i] < 0.0)
      throw Error(Errc::invalid_argument, "build_detour_matrix: negative detour time");
    t.at(i, i) = detours[i];
  }
  auto touching = [&](int i) { return detours[i] > 0.0; };
  if (rule == ReductionRule::scaled_min) {
    const double divisor = 2.0 * cap;
    t.uniform_min_rule = true;
    t.min_rule_divisor = divisor;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (touching(i) && touching(j)) {
          double r = -std::min(detours[i], detours[j]) / divisor;
          t.at(i, j) = t.at(j, i) = r;
        }
  } else {
    if (!(max_dist > 0.0))
      throw Error(Errc::invalid_argument, "proximity rule requires a positive max distance");
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        if (!(touching(i) && touching(j))) continue;
        if (!locations[i] || !locations[j])
          throw Error(Errc::invalid_argument, "proximity rule requires request locations");
        double dx = locations[i]->x - locations[j]->x;
        double dy = locations[i]->y - locations[j]->y;
        double factor = std::clamp(1.0 - std::sqrt(dx * dx + dy * dy) / max_dist, 0.0, 1.0);
        double r = -std::min(detours[i], detours[j]) * factor;
        t.at(i, j) = t.at(j, i) = r;
      }
    // uniform shrink so the per-request reduction bound holds on every row
    double scale = 1.0;
    for (int d = 0; d < n; ++d) {
      std::vector<double> reds;
      for (int b = 0; b < n; ++b)
        if (b != d && t.at(d, b) < 0.0) reds.push_back(t.at(d, b));
      std::sort(reds.begin(), reds.end());
      double sum = 0.0;
      for (int k = 0; k < std::min<int>(cap, static_cast<int>(reds.size())); ++k)
        sum += -2.0 * reds[k];
      if (sum > 0.0) scale = std::min(scale, t.at(d, d) / sum);
    }
    if (scale < 1.0)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (i != j) t.at(i, j) *= scale;
  }
  return t;
}

double phase1_detour(long long y, const BoundaryDetourCurve& curve, double tau2) {
  if (y <= 0) return 0.0;
  return 2.0 * curve(static_cast<double>(y)) + static_cast<double>(y - 1) * tau2;
}

std::vector<TangentCut> tangent_cuts(const BoundaryDetourCurve& curve, int cap) {
  const int top = 2 * cap;
  if (!curve.convex_nonincreasing(top))
    throw Error(Errc::invalid_curve, "tangent_cuts: curve is not convex non-increasing");
  std::vector<TangentCut> cuts;
  cuts.reserve(top);
  for (int i = 0; i < top; ++i) {
    double slope = curve(i + 1) - curve(i);
    double intercept = curve(i) - slope * i;
    cuts.push_back({slope, intercept});
  }
  return cuts;
}

bool fit_exponential(const std::vector<std::pair<int, double>>& pts, double& a, double& b,
                     double& c) {
  if (pts.size() < 3) return false;
  double ymin = kInf;
  for (auto& [x, y] : pts) ymin = std::min(ymin, y);
  a = pts.front().second - ymin;
  if (!(a > 0.0)) a = std::max(1e-3, pts.front().second);
  b = 0.3;
  c = ymin;
  for (int iter = 0; iter < 200; ++iter) {
    double jtj[3][3] = {};
    double jtr[3] = {};
    for (auto& [xi, yi] : pts) {
      double e = std::exp(-b * xi);
      double r = a * e + c - yi;
      double j[3] = {e, -a * xi * e, 1.0};
      for (int u = 0; u < 3; ++u) {
        jtr[u] += j[u] * r;
        for (int v = 0; v < 3; ++v) jtj[u][v] += j[u] * j[v];
      }
    }
    // solve the 3x3 normal equations by Gaussian elimination
    double m[3][4];
    for (int u = 0; u < 3; ++u) {
      for (int v = 0; v < 3; ++v) m[u][v] = jtj[u][v];
      m[u][3] = -jtr[u];
    }
    for (int col = 0; col < 3; ++col) {
      int piv = col;
      for (int rr = col + 1; rr < 3; ++rr)
        if (std::abs(m[rr][col]) > std::abs(m[piv][col])) piv = rr;
      if (std::abs(m[piv][col]) < 1e-14) return false;
      std::swap(m[col], m[piv]);
      for (int rr = 0; rr < 3; ++rr) {
        if (rr == col) continue;
        double f = m[rr][col] / m[col][col];
        for (int cc = col; cc < 4; ++cc) m[rr][cc] -= f * m[col][cc];
      }
    }
    double da = m[0][3] / m[0][0];
    double db = m[1][3] / m[1][1];
    double dc = m[2][3] / m[2][2];
    // damped update keeps b in a sane range
    double step = 1.0;
    while (step > 1e-6 && (b + step * db <= 0.0 || b + step * db > 50.0)) step *= 0.5;
    a += step * da;
    b += step * db;
    c += step * dc;
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) return false;
    if (std::abs(da) + std::abs(db) + std::abs(dc) < 1e-10) break;
  }
  return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && b > 0.0;
}

CurveFit fit_boundary_curve(const Rect& zone, const std::function<Vec2(RngStream&)>& sampler,
                            const std::vector<int>& counts, int trials, RngStream rng) {
  if (!(zone.width() > 0.0) || !(zone.height() > 0.0))
    throw Error(Errc::invalid_argument, "fit_boundary_curve: degenerate zone rectangle");
  if (counts.empty() || trials < 1)
    throw Error(Errc::invalid_argument, "fit_boundary_curve: empty counts or trials");
  CurveFit out;
  for (std::size_t ci = 0; ci < counts.size(); ++ci) {
    int i = counts[ci];
    RngStream stream = rng.split(ci);
    double acc = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
      RngStream tr = stream.split(trial);
      double px_min = kInf, px_max = -kInf, py_min = kInf, py_max = -kInf;
      for (int k = 0; k < i; ++k) {
        Vec2 p = sampler(tr);
        px_min = std::min(px_min, p.x);
        px_max = std::max(px_max, p.x);
        py_min = std::min(py_min, p.y);
        py_max = std::max(py_max, p.y);
      }
      double d = ((zone.x_max - px_max) + (px_min - zone.x_min) + (zone.y_max - py_max) +
                  (py_min - zone.y_min)) /
                 4.0;
      acc += d * kMinutesPerMeter;
    }
    out.samples.push_back({i, acc / trials});
  }
  double a, b, c;
  if (fit_exponential(out.samples, a, b, c)) {
    out.exponential_ok = true;
    out.a = a;
    out.b = b;
    out.c = c;
    out.curve = BoundaryDetourCurve::exponential(a, b, c);
  } else {
    // fall back to the raw points, linearly interpolated over integers
    int max_i = out.samples.back().first;
    std::vector<double> knots(max_i + 1, out.samples.front().second);
    for (std::size_t k = 0; k + 1 < out.samples.size(); ++k) {
      auto [x0, y0] = out.samples[k];
      auto [x1, y1] = out.samples[k + 1];
      for (int x = x0; x <= x1; ++x)
        knots[x] = y0 + (y1 - y0) * (x1 == x0 ? 0.0 : double(x - x0) / (x1 - x0));
    }
    if (out.samples.front().first > 0)
      for (int x = 0; x < out.samples.front().first; ++x) knots[x] = out.samples.front().second;
    out.curve = BoundaryDetourCurve::piecewise(std::move(knots));
  }
  return out;
}

}  // namespace flexbus
