#include "flexbus/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace flexbus {

std::pair<double, double> SolutionCache::evaluate(const Plan& plan) {
  std::vector<int> key = plan.deployment();
  auto it = map_.find(key);
  if (it != map_.end()) {
    ++hits_;
    return it->second;
  }
  ++misses_;
  double q = 0.0;
  for (const Scenario& sc : scenarios_) q += sc.probability * solve_p2(inst_, plan, sc).adhoc_cost;
  auto val = std::make_pair(plan.fixed_cost, q);
  map_.emplace(std::move(key), val);
  return val;
}

long long max_demand_increment(const ServiceInstance& inst, const ResolvedReliability& rr,
                               const Plan& plan, int category) {
  const DemandCategory& cat = inst.categories[category];
  const int cap = inst.fleet.capacity;
  long long total = 0;
  for (int v = 0; v < plan.vehicles(); ++v) {
    int p = plan.vehicle_route[v];
    if (p < 0) continue;
    const Route& route = inst.routes[p];
    if (!route.traverses(cat.od)) continue;
    int pr = *route.position(cat.od.origin);
    int ps = *route.position(cat.od.dest);
    std::vector<long long> mu = plan.onboard_loads(inst, v);
    double cap_slack = kInf;
    for (int i = pr; i < ps; ++i)
      cap_slack = std::min(cap_slack, double(cap - mu[i]) / cat.passengers);
    auto detour_ratio = [&](ZoneIndex z) {
      double tau2 = rr.tau2[z];
      double slack = inst.zones[z].max_detour - plan.planned_detour(inst, rr.tau2, v, z);
      if (!inst.detour_mode.per_zone) slack = kInf;
      if (!(tau2 > 0.0)) return kInf;  // no per-segment detour, never binding
      return slack / tau2;
    };
    double bound = std::min({cap_slack, detour_ratio(cat.od.origin), detour_ratio(cat.od.dest)});
    if (inst.detour_mode.per_trip) {
      double trip = 0.0;
      for (ZoneIndex z = 0; z < static_cast<ZoneIndex>(inst.zones.size()); ++z)
        trip += plan.planned_detour(inst, rr.tau2, v, z);
      double marginal = rr.tau2[cat.od.origin] + rr.tau2[cat.od.dest];
      if (marginal > 0.0)
        bound = std::min(bound, (*inst.detour_mode.per_trip - trip) / marginal);
    }
    for (const auto& [od, limit] : inst.detour_mode.per_od) {
      if (!route.traverses(od)) continue;
      int qr = *route.position(od.origin);
      int qs = *route.position(od.dest);
      double marginal = 0.0;
      if (pr >= qr && pr <= qs) marginal += rr.tau2[cat.od.origin];
      if (ps >= qr && ps <= qs) marginal += rr.tau2[cat.od.dest];
      if (marginal <= 0.0) continue;
      double acc = 0.0;
      for (int i = qr; i <= qs; ++i)
        acc += plan.planned_detour(inst, rr.tau2, v, route.zones[i]);
      bound = std::min(bound, (limit - acc) / marginal);
    }
    if (std::isfinite(bound))
      total += std::max<long long>(0, static_cast<long long>(std::floor(bound + 1e-9)));
    else
      total += std::max<long long>(0, static_cast<long long>(
                                          std::floor(cap_slack + 1e-9)));
  }
  return total;
}

double max_detour_increment(const ServiceInstance& inst, const ResolvedReliability& rr,
                            const Plan& plan, ZoneIndex zone) {
  const double eps = 1e-9;
  double best = kInf;
  for (int v = 0; v < plan.vehicles(); ++v) {
    double slack = kInf;
    if (inst.detour_mode.per_zone)
      slack = inst.zones[zone].max_detour - plan.planned_detour(inst, rr.tau2, v, zone);
    if (inst.detour_mode.per_trip) {
      double trip = 0.0;
      for (ZoneIndex z = 0; z < static_cast<ZoneIndex>(inst.zones.size()); ++z)
        trip += plan.planned_detour(inst, rr.tau2, v, z);
      slack = std::min(slack, *inst.detour_mode.per_trip - trip);
    }
    if (!std::isfinite(slack)) continue;
    double y = static_cast<double>(plan.ytilde(inst, v, zone));
    best = std::min(best, slack / (y + eps));
  }
  return std::max(0.0, best);
}

namespace {

double total_cost_of(SolutionCache& cache, const Plan& plan) {
  auto [cf, q] = cache.evaluate(plan);
  return cf + q;
}

}  // namespace

std::vector<double> sensitivity(const ServiceInstance& inst, const ReliabilityVector& rho,
                                const ResolvedReliability& rr, const Plan& plan,
                                double total_cost, SolutionCache& cache,
                                const OptimizerConfig& cfg, std::vector<std::string>& log) {
  const int ne = static_cast<int>(inst.categories.size());
  const int nz = static_cast<int>(inst.zones.size());
  std::vector<double> grad(ne + nz, 0.0);
  // volume components
  for (int e = 0; e < ne; ++e) {
    ResolvedReliability work = rr;
    Plan work_plan = plan;
    double rho_e = rho.category[e];
    double rho_bumped = rho_e;
    for (int bump = 0; bump < cfg.max_bumps_per_component; ++bump) {
      long long inc = max_demand_increment(inst, work, work_plan, e);
      long long target = work.delta[e] + inc + 1;
      auto r = reliability_for_demand(inst.categories[e].volume, target);
      if (!r || *r >= 1.0) {
        log.push_back("category " + inst.categories[e].name +
                      ": demand support exhausted during perturbation; gradient entry zeroed");
        break;
      }
      rho_bumped = std::max(*r, std::nextafter(rho_bumped, 1.0));
      work.delta[e] = target;
      Plan bumped_plan;
      try {
        bumped_plan = solve_p1_resolved(inst, work);
      } catch (const Error& err) {
        if (err.code() == Errc::infeasible_at_rho) {
          log.push_back("category " + inst.categories[e].name +
                        ": phase-1 infeasible beyond the perturbation; gradient entry zeroed");
          break;
        }
        throw;
      }
      if (std::abs(bumped_plan.fixed_cost - plan.fixed_cost) > 1e-9) {
        double c_bumped = total_cost_of(cache, bumped_plan);
        grad[e] = (c_bumped - total_cost) / (rho_bumped - rho_e);
        break;
      }
      work_plan = std::move(bumped_plan);
    }
  }
  // detour components
  for (int z = 0; z < nz; ++z) {
    ResolvedReliability work = rr;
    Plan work_plan = plan;
    double rho_z = rho.zone[z];
    double rho_bumped = rho_z;
    for (int bump = 0; bump < cfg.max_bumps_per_component; ++bump) {
      double inc = max_detour_increment(inst, work, work_plan, z);
      double target = work.tau2[z] + inc + cfg.detour_bump_eps;
      double r = inst.zones[z].detour_dist.cdf(target);
      if (r >= 1.0 - 1e-15) {
        log.push_back("zone " + inst.zones[z].name +
                      ": detour support exhausted during perturbation; gradient entry zeroed");
        break;
      }
      rho_bumped = std::max(r, std::nextafter(rho_bumped, 1.0));
      work.tau2[z] = target;
      Plan bumped_plan;
      try {
        bumped_plan = solve_p1_resolved(inst, work);
      } catch (const Error& err) {
        if (err.code() == Errc::infeasible_at_rho) {
          log.push_back("zone " + inst.zones[z].name +
                        ": phase-1 infeasible beyond the perturbation; gradient entry zeroed");
          break;
        }
        throw;
      }
      if (std::abs(bumped_plan.fixed_cost - plan.fixed_cost) > 1e-9) {
        double c_bumped = total_cost_of(cache, bumped_plan);
        grad[ne + z] = (c_bumped - total_cost) / (rho_bumped - rho_z);
        break;
      }
      work_plan = std::move(bumped_plan);
    }
  }
  return grad;
}

std::vector<double> adam_step(AdamState& state, const std::vector<double>& rho,
                              const std::vector<double>& grad, const OptimizerConfig& cfg) {
  const std::size_t n = rho.size();
  if (state.m.size() != n) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
    state.t = 0;
  }
  ++state.t;
  std::vector<double> out(n);
  double bc1 = 1.0 - std::pow(cfg.beta1, state.t);
  double bc2 = 1.0 - std::pow(cfg.beta2, state.t);
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    out[i] = rho[i] - cfg.alpha * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
  return out;
}

std::vector<double> analytic_step(const std::vector<double>& rho, const std::vector<double>& grad,
                                  double total_cost, double best_cost,
                                  const OptimizerConfig& cfg) {
  double g2 = 0.0;
  for (double g : grad) g2 += g * g;
  double pi = cfg.lambda * (total_cost - cfg.gamma * best_cost) / g2;
  std::vector<double> out(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) out[i] = rho[i] - pi * grad[i];
  return out;
}

void project_reliability(ReliabilityVector& rho) {
  auto clamp = [](double& v) {
    if (v < 0.0) v = 0.0;
    if (v >= 1.0) v = std::nextafter(1.0, 0.0) - 1e-9;
  };
  for (double& v : rho.category) clamp(v);
  for (double& v : rho.zone) clamp(v);
}

ResolvedReliability mean_point_estimate(const ServiceInstance& inst) {
  ResolvedReliability rr;
  for (const DemandCategory& c : inst.categories)
    rr.delta.push_back(std::max<long long>(0, std::llround(round_half_even(c.volume.mean()))));
  for (const Zone& z : inst.zones) rr.tau2.push_back(z.detour_dist.mean());
  return rr;
}

OptimizerResult run_optimizer(const ServiceInstance& inst, const ReliabilityVector& rho0,
                              const OptimizerConfig& cfg) {
  return run_optimizer(inst, rho0, cfg,
                       sample_scenarios(inst, cfg.scenario_count, cfg.seed));
}

OptimizerResult run_optimizer(const ServiceInstance& inst, const ReliabilityVector& rho0,
                              const OptimizerConfig& cfg,
                              const std::vector<Scenario>& scenarios) {
  auto t0 = std::chrono::steady_clock::now();
  OptimizerResult result;
  SolutionCache cache(inst, scenarios);
  ReliabilityVector rho = rho0;
  project_reliability(rho);
  AdamState adam;
  bool adam_active = false;
  int stall = 0;
  double prev_cost = kInf;

  for (int k = 1; k <= cfg.max_iterations; ++k) {
    // step 2: solve P1, backing the reliability off until feasible
    ResolvedReliability rr;
    Plan plan;
    int backoffs = 0;
    while (true) {
      rr = resolve_reliability(inst, rho);
      try {
        plan = solve_p1_resolved(inst, rr);
        break;
      } catch (const Error& e) {
        if (e.code() != Errc::infeasible_at_rho) throw;
        for (int i = 0; i < rho.dimension(); ++i) rho.component(i) *= cfg.infeasibility_backoff;
        if (++backoffs > 400)
          throw Error(Errc::infeasible_at_rho, "phase-1 stayed infeasible through the backoff");
      }
    }
    if (backoffs > 0)
      result.log.push_back("iteration " + std::to_string(k) + ": reliability reduced " +
                           std::to_string(backoffs) + " times to regain feasibility");
    // step 3: Monte Carlo cost
    auto [cf, qbar] = cache.evaluate(plan);
    double cost = cf + qbar;
    IterationTrace tr;
    tr.k = k;
    tr.rho = rho;
    tr.fixed_cost = cf;
    tr.expected_adhoc = qbar;
    tr.total_cost = cost;
    tr.adam_active = adam_active;
    tr.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.trace.push_back(tr);
    result.iterations = k;

    if (cost < result.best_cost - 1e-12) {
      result.best_cost = cost;
      result.best_rho = rho;
      result.best_plan = plan;
      stall = 0;
    } else {
      ++stall;
    }
    // step 3.1: relative-change stopping rule
    if (std::isfinite(prev_cost) && prev_cost > 0.0 &&
        std::abs(cost - prev_cost) / prev_cost < cfg.stop_rel_change) {
      result.converged = true;
      break;
    }
    prev_cost = cost;
    // step 4: switch to Adam after three stalled iterations
    if (!adam_active && stall >= cfg.stall_limit) {
      adam_active = true;
      result.log.push_back("iteration " + std::to_string(k) + ": switching to the Adam update");
    }
    if (k == cfg.max_iterations) break;
    // step 5: perturbation gradient and reliability update
    std::vector<double> grad = sensitivity(inst, rho, rr, plan, cost, cache, cfg, result.log);
    double g2 = 0.0;
    for (double g : grad) g2 += g * g;
    if (g2 == 0.0) {
      result.converged = true;
      result.log.push_back("iteration " + std::to_string(k) + ": zero gradient, terminating");
      break;
    }
    std::vector<double> flat(rho.dimension());
    for (int i = 0; i < rho.dimension(); ++i) flat[i] = rho.component(i);
    std::vector<double> next =
        adam_active ? adam_step(adam, flat, grad, cfg)
                    : analytic_step(flat, grad, cost, result.best_cost, cfg);
    for (int i = 0; i < rho.dimension(); ++i) rho.component(i) = next[i];
    project_reliability(rho);
  }
  // final report for the incumbent
  result.best_report = evaluate(inst, result.best_plan, scenarios);
  return result;
}

}  // namespace flexbus
