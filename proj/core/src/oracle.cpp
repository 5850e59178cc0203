#include "flexbus/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

namespace flexbus {

Plan plan_from_deployment(const ServiceInstance& inst, const Deployment& d) {
  Plan plan;
  plan.vehicle_route.assign(d.begin(), d.end());
  plan.y.assign(inst.categories.size(), std::vector<long long>(d.size(), 0));
  plan.fixed_cost = 0.0;
  for (int p : d) plan.fixed_cost += inst.effective_route_cost(p);
  return plan;
}

namespace {

double deployment_recourse(const ServiceInstance& inst, const Plan& plan,
                           const std::vector<Scenario>& scenarios) {
  double q = 0.0;
  for (const Scenario& sc : scenarios) q += sc.probability * solve_p2(inst, plan, sc).adhoc_cost;
  return q;
}

}  // namespace

P0Result solve_p0_exact(const ServiceInstance& inst, const std::vector<Scenario>& scenarios,
                        long long max_enumerations) {
  const int np = static_cast<int>(inst.routes.size());
  P0Result best;
  best.expected_cost = kInf;
  long long tried = 0;
  Deployment cur;
  // lexicographic enumeration over non-decreasing route id multisets
  std::function<void(int, int)> rec = [&](int from, int remaining) {
    ++tried;
    if (tried > max_enumerations)
      throw Error(Errc::enumeration_too_large, "deployment enumeration exceeds the configured cap");
    Plan plan = plan_from_deployment(inst, cur);
    if (plan.fixed_cost < best.expected_cost) {  // recourse is non-negative
      double cost = plan.fixed_cost + deployment_recourse(inst, plan, scenarios);
      if (cost < best.expected_cost - 1e-12) {
        best.expected_cost = cost;
        best.fixed_cost = plan.fixed_cost;
        best.deployment = cur;
      }
    }
    if (remaining == 0) return;
    for (int p = from; p < np; ++p) {
      cur.push_back(p);
      rec(p, remaining - 1);
      cur.pop_back();
    }
  };
  rec(0, inst.fleet.size);
  best.deployments_tried = tried;
  return best;
}

namespace {

class DeploymentCache {
 public:
  explicit DeploymentCache(const ServiceInstance& inst, const std::vector<Scenario>& scenarios)
      : inst_(inst), scenarios_(scenarios) {}

  std::pair<double, double> cost(const Plan& plan) {  // (fixed, expected adhoc)
    Deployment d = plan.deployment();
    auto it = cache_.find(d);
    if (it != cache_.end()) return it->second;
    double q = deployment_recourse(inst_, plan, scenarios_);
    auto val = std::make_pair(plan.fixed_cost, q);
    cache_.emplace(std::move(d), val);
    return val;
  }

 private:
  const ServiceInstance& inst_;
  const std::vector<Scenario>& scenarios_;
  std::map<Deployment, std::pair<double, double>> cache_;
};

// With per-zone budgets only, the phase-1 optimum depends on the cell only
// through the truncated volumes and the per-zone service caps, so grid cells
// share solves.
class P1Memo {
 public:
  explicit P1Memo(const ServiceInstance& inst)
      : inst_(inst),
        memoizable_(!inst.detour_mode.per_trip && inst.detour_mode.per_od.empty()) {}

  Plan solve(const ReliabilityVector& rho, bool& feasible) {
    ResolvedReliability rr = resolve_reliability(inst_, rho);
    feasible = true;
    if (!memoizable_) {
      try {
        return solve_p1_resolved(inst_, rr);
      } catch (const Error& e) {
        if (e.code() != Errc::infeasible_at_rho) throw;
        feasible = false;
        return {};
      }
    }
    std::vector<long long> key = rr.delta;
    for (std::size_t z = 0; z < inst_.zones.size(); ++z)
      key.push_back(zone_service_cap(inst_.zones[z], rr.tau2[z], inst_.fleet.capacity));
    auto it = memo_.find(key);
    if (it != memo_.end()) {
      feasible = it->second.first;
      return it->second.second;
    }
    Plan plan;
    try {
      plan = solve_p1_resolved(inst_, rr);
    } catch (const Error& e) {
      if (e.code() != Errc::infeasible_at_rho) throw;
      feasible = false;
    }
    memo_.emplace(std::move(key), std::make_pair(feasible, plan));
    return plan;
  }

 private:
  const ServiceInstance& inst_;
  bool memoizable_;
  std::map<std::vector<long long>, std::pair<bool, Plan>> memo_;
};

GridRow evaluate_cell(const ServiceInstance& inst, const ReliabilityVector& rho,
                      DeploymentCache& cache, P1Memo& p1memo) {
  GridRow row;
  row.rho = rho;
  bool feasible = true;
  Plan plan = p1memo.solve(rho, feasible);
  if (!feasible) {
    row.feasible = false;
    row.total_cost = kInf;
    return row;
  }
  auto [cf, q] = cache.cost(plan);
  row.fixed_cost = cf;
  row.expected_adhoc = q;
  row.total_cost = cf + q;
  row.deployment = plan.deployment();
  return row;
}

}  // namespace

std::vector<GridRow> rho_grid(const ServiceInstance& inst, double step,
                              const std::vector<Scenario>& scenarios) {
  if (!(step > 0.0 && step <= 1.0))
    throw Error(Errc::invalid_argument, "rho_grid: step must lie in (0,1]");
  // zones no demand category touches have no effect; only live components
  // are enumerated (the rest stay at zero)
  std::vector<int> live;
  for (int e = 0; e < static_cast<int>(inst.categories.size()); ++e) live.push_back(e);
  for (int z = 0; z < static_cast<int>(inst.zones.size()); ++z) {
    bool touched = false;
    for (const DemandCategory& c : inst.categories)
      touched = touched || c.od.origin == z || c.od.dest == z;
    if (touched) live.push_back(static_cast<int>(inst.categories.size()) + z);
  }
  if (live.size() > 3)
    throw Error(Errc::invalid_argument,
                "rho_grid: full factorial limited to 3 live reliability components; use the "
                "uniform sweep for larger instances");
  std::vector<double> values;
  for (double v = 0.0; v < 1.0 - 1e-12; v += step) values.push_back(v);
  DeploymentCache cache(inst, scenarios);
  P1Memo p1memo(inst);
  std::vector<GridRow> rows;
  std::vector<int> idx(live.size(), 0);
  while (true) {
    ReliabilityVector rho;
    rho.category.assign(inst.categories.size(), 0.0);
    rho.zone.assign(inst.zones.size(), 0.0);
    for (std::size_t i = 0; i < live.size(); ++i) rho.component(live[i]) = values[idx[i]];
    rows.push_back(evaluate_cell(inst, rho, cache, p1memo));
    int i = static_cast<int>(live.size()) - 1;
    while (i >= 0 && ++idx[i] == static_cast<int>(values.size())) idx[i--] = 0;
    if (i < 0) break;
  }
  return rows;
}

std::vector<GridRow> rho_grid_uniform(const ServiceInstance& inst, double step,
                                      const std::vector<Scenario>& scenarios) {
  if (!(step > 0.0 && step <= 1.0))
    throw Error(Errc::invalid_argument, "rho_grid_uniform: step must lie in (0,1]");
  DeploymentCache cache(inst, scenarios);
  P1Memo p1memo(inst);
  std::vector<GridRow> rows;
  for (double v = 0.0; v < 1.0 - 1e-12; v += step)
    rows.push_back(evaluate_cell(inst, ReliabilityVector::uniform(inst, v), cache, p1memo));
  return rows;
}

std::vector<GridRow> rho_scan(const ServiceInstance& inst, int component, double step,
                              const ReliabilityVector& fixed,
                              const std::vector<Scenario>& scenarios) {
  if (component < 0 || component >= fixed.dimension())
    throw Error(Errc::invalid_argument, "rho_scan: component out of range");
  DeploymentCache cache(inst, scenarios);
  P1Memo p1memo(inst);
  std::vector<GridRow> rows;
  for (double v = 0.0; v < 1.0 - 1e-12; v += step) {
    ReliabilityVector rho = fixed;
    rho.component(component) = v;
    rows.push_back(evaluate_cell(inst, rho, cache, p1memo));
  }
  return rows;
}

std::vector<GridRow> rho_scan_resampled(const ServiceInstance& inst, int component, double step,
                                        const ReliabilityVector& fixed, int scenario_count,
                                        std::uint64_t seed) {
  if (component < 0 || component >= fixed.dimension())
    throw Error(Errc::invalid_argument, "rho_scan_resampled: component out of range");
  std::vector<GridRow> rows;
  long long cell = 0;
  for (double v = 0.0; v < 1.0 - 1e-12; v += step, ++cell) {
    ReliabilityVector rho = fixed;
    rho.component(component) = v;
    GridRow row;
    row.rho = rho;
    try {
      Plan plan = solve_p1(inst, rho);
      std::vector<Scenario> sc =
          sample_scenarios(inst, scenario_count, seed ^ (0x9e37ull * (cell + 1)));
      double q = 0.0;
      for (const Scenario& s : sc) q += s.probability * solve_p2(inst, plan, s).adhoc_cost;
      row.fixed_cost = plan.fixed_cost;
      row.expected_adhoc = q;
      row.total_cost = plan.fixed_cost + q;
      row.deployment = plan.deployment();
    } catch (const Error& e) {
      if (e.code() != Errc::infeasible_at_rho) throw;
      row.feasible = false;
      row.total_cost = kInf;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

EquivalenceReport check_equivalence(const ServiceInstance& inst,
                                    const std::vector<Scenario>& scenarios) {
  EquivalenceReport rep;
  // forward direction: P1-P2 solutions satisfy the two-stage constraint set
  rep.forward_feasible = true;
  for (double level : {0.25, 0.55, 0.85}) {
    ReliabilityVector rho = ReliabilityVector::uniform(inst, level);
    ResolvedReliability rr = resolve_reliability(inst, rho);
    Plan plan;
    try {
      plan = solve_p1_resolved(inst, rr);
    } catch (const Error& e) {
      if (e.code() == Errc::infeasible_at_rho) {
        rep.notes.push_back("phase-1 infeasible at uniform rho " + std::to_string(level) +
                            "; sample skipped");
        continue;
      }
      throw;
    }
    auto bad = verify_plan(inst, rr, plan);
    for (const Scenario& sc : scenarios) {
      Assignment a = solve_p2(inst, plan, sc);
      auto b2 = verify_assignment(inst, plan, sc, a);
      bad.insert(bad.end(), b2.begin(), b2.end());
    }
    if (!bad.empty()) {
      rep.forward_feasible = false;
      rep.notes.push_back("two-stage feasibility violated at uniform rho " +
                          std::to_string(level) + ": " + bad.front());
    }
  }
  // backward direction: rebuild the exact optimum from constructed reliabilities
  P0Result p0 = solve_p0_exact(inst, scenarios);
  rep.p0_cost = p0.expected_cost;
  rep.p0_fixed_cost = p0.fixed_cost;
  std::map<int, int> route_counts;
  for (int p : p0.deployment) route_counts[p] += 1;
  ReliabilityVector rho;
  rho.category.assign(inst.categories.size(), 0.0);
  rho.zone.assign(inst.zones.size(), 0.0);
  bool constructible = true;
  for (auto [p, count] : route_counts) {
    const Route& route = inst.routes[p];
    int chosen = -1;
    for (std::size_t e = 0; e < inst.categories.size(); ++e) {
      const DemandCategory& cat = inst.categories[e];
      if (cat.passengers == 1 && cat.od.origin == route.zones.front() &&
          cat.od.dest == route.zones.back()) {
        chosen = static_cast<int>(e);
        break;
      }
    }
    if (chosen < 0) {
      rep.notes.push_back("route " + route.name +
                          " has no single-passenger demand category; assumption B3 violated");
      constructible = false;
      continue;
    }
    long long target = static_cast<long long>(count) * inst.fleet.capacity;
    auto r = reliability_for_demand(inst.categories[chosen].volume, target);
    if (!r) {
      rep.notes.push_back("category " + inst.categories[chosen].name +
                          ": demand distribution cannot reach " + std::to_string(target));
      constructible = false;
      continue;
    }
    rho.category[chosen] = *r;
  }
  if (constructible) {
    Plan plan = solve_p1(inst, rho);
    rep.constructed_p1_cost = plan.fixed_cost;
    rep.backward_matched = std::abs(plan.fixed_cost - p0.fixed_cost) <= 1e-6;
    if (!rep.backward_matched)
      rep.notes.push_back("constructed-reliability phase-1 cost " +
                          std::to_string(plan.fixed_cost) + " differs from the exact optimum " +
                          std::to_string(p0.fixed_cost));
  }
  rep.ok = rep.forward_feasible && rep.backward_matched;
  return rep;
}

ServiceInstance make_random_micro_instance(std::uint64_t seed) {
  RngStream rng(seed, 77);
  ServiceInstance inst;
  inst.name = "micro-" + std::to_string(seed);
  int nz = 3;
  const char* names[3] = {"A", "B", "C"};
  for (int z = 0; z < nz; ++z) {
    Zone zone;
    zone.name = names[z];
    zone.max_detour = 6.0 + 3.0 * rng.next_double();
    zone.boundary_curve = BoundaryDetourCurve::linear(0.4 + 0.2 * rng.next_double(), 0.02);
    zone.detour_dist = Distribution::truncated_normal(0.8 + 0.6 * rng.next_double(),
                                                      0.5 + 0.5 * rng.next_double(), 0.0);
    inst.zones.push_back(std::move(zone));
  }
  inst.links = {{0, 1, 4.0 + std::floor(rng.next_double() * 5.0)},
                {1, 2, 4.0 + std::floor(rng.next_double() * 5.0)}};
  if (rng.next_double() < 0.5)
    inst.links.push_back({0, 2, 11.0 + std::floor(rng.next_double() * 4.0)});
  inst.routes_auto = true;
  // one or two ODs, each with a single-passenger category, optionally a group one
  std::vector<OdPair> ods = {{0, 2}};
  if (rng.next_double() < 0.6) ods.push_back({0, 1});
  int cap = 3 + static_cast<int>(rng.next_double() * 3.0);
  int cid = 0;
  for (const OdPair& od : ods) {
    DemandCategory c1;
    c1.name = "e" + std::to_string(cid++);
    c1.od = od;
    c1.passengers = 1;
    c1.volume = Distribution::truncated_normal(1.0 + 3.0 * rng.next_double(),
                                               1.0 + 2.0 * rng.next_double(), 0.0, kInf, true);
    inst.categories.push_back(std::move(c1));
    if (rng.next_double() < 0.5) {
      DemandCategory c2;
      c2.name = "e" + std::to_string(cid++);
      c2.od = od;
      c2.passengers = 2 + static_cast<int>(rng.next_double() * 2.0);
      if (c2.passengers > cap) c2.passengers = cap;
      c2.volume = Distribution::truncated_normal(1.0 + 2.0 * rng.next_double(), 1.0, 0.0, kInf,
                                                 true);
      inst.categories.push_back(std::move(c2));
    }
  }
  inst.fleet.size = 2 + static_cast<int>(rng.next_double() * 3.0);
  inst.fleet.capacity = cap;
  inst.adhoc_ratio = 0.9;
  inst.finalize();
  return inst;
}

}  // namespace flexbus
