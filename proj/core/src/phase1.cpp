#include "flexbus/phase1.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flexbus {

ReliabilityVector ReliabilityVector::uniform(const ServiceInstance& inst, double value) {
  ReliabilityVector r;
  r.category.assign(inst.categories.size(), value);
  r.zone.assign(inst.zones.size(), value);
  r.validate();
  return r;
}

void ReliabilityVector::validate() const {
  for (double v : category)
    if (!(v >= 0.0 && v < 1.0))
      throw Error(Errc::invalid_reliability, "volume reliability outside [0,1)");
  for (double v : zone)
    if (!(v >= 0.0 && v < 1.0))
      throw Error(Errc::invalid_reliability, "detour reliability outside [0,1)");
}

long long Plan::vehicles_used() const {
  long long n = 0;
  for (int r : vehicle_route) n += (r >= 0) ? 1 : 0;
  return n;
}

long long Plan::ytilde(const ServiceInstance& inst, int v, ZoneIndex z) const {
  long long t = 0;
  for (std::size_t e = 0; e < y.size(); ++e) {
    const OdPair& od = inst.categories[e].od;
    int touch = (od.origin == z ? 1 : 0) + (od.dest == z ? 1 : 0);
    if (touch) t += touch * y[e][v];
  }
  return t;
}

double Plan::planned_detour(const ServiceInstance& inst, const std::vector<double>& tau2, int v,
                            ZoneIndex z) const {
  return phase1_detour(ytilde(inst, v, z), inst.zones[z].boundary_curve, tau2[z]);
}

std::vector<long long> Plan::onboard_loads(const ServiceInstance& inst, int v) const {
  std::vector<long long> loads;
  int p = vehicle_route[v];
  if (p < 0) return loads;
  const Route& route = inst.routes[p];
  loads.assign(route.zone_count() - 1, 0);
  for (std::size_t e = 0; e < y.size(); ++e) {
    if (y[e][v] == 0) continue;
    const OdPair& od = inst.categories[e].od;
    auto pr = route.position(od.origin);
    auto ps = route.position(od.dest);
    if (!pr || !ps) continue;
    for (int i = *pr; i < *ps; ++i)
      loads[i] += static_cast<long long>(inst.categories[e].passengers) * y[e][v];
  }
  return loads;
}

std::vector<int> Plan::deployment() const {
  std::vector<int> d;
  for (int r : vehicle_route)
    if (r >= 0) d.push_back(r);
  std::sort(d.begin(), d.end());
  return d;
}

long long zone_service_cap(const Zone& zone, double tau2, int cap) {
  long long y_max = 0;
  while (y_max < 2ll * cap &&
         phase1_detour(y_max + 1, zone.boundary_curve, tau2) <= zone.max_detour + 1e-12)
    ++y_max;
  return y_max;
}

ResolvedReliability resolve_reliability(const ServiceInstance& inst,
                                        const ReliabilityVector& rho) {
  rho.validate();
  if (rho.category.size() != inst.categories.size() || rho.zone.size() != inst.zones.size())
    throw Error(Errc::dimension_mismatch, "reliability vector does not match the instance");
  ResolvedReliability rr;
  rr.delta.resize(inst.categories.size());
  rr.tau2.resize(inst.zones.size());
  for (std::size_t e = 0; e < inst.categories.size(); ++e)
    rr.delta[e] = demand_quantile(inst.categories[e].volume, rho.category[e]);
  for (std::size_t z = 0; z < inst.zones.size(); ++z)
    rr.tau2[z] = detour_quantile(inst.zones[z].detour_dist, rho.zone[z]);
  return rr;
}

P1Problem::P1Problem(const ServiceInstance& inst, const ResolvedReliability& rr, Form form)
    : inst_(inst), rr_(rr) {
  const bool reduced = form == Form::reduced && !inst.detour_mode.per_trip &&
                       inst.detour_mode.per_od.empty();
  using milp::LinExpr;
  using milp::Sense;
  const int ne = static_cast<int>(inst.categories.size());
  const int np = static_cast<int>(inst.routes.size());
  const int cap = inst.fleet.capacity;

  long long total_requests = 0;
  for (int e = 0; e < ne; ++e) total_requests += rr.delta[e];
  vt_ = static_cast<int>(std::min<long long>(inst.fleet.size, total_requests));
  if (vt_ == 0) return;

  std::vector<int> active_cats;
  for (int e = 0; e < ne; ++e)
    if (rr.delta[e] > 0) active_cats.push_back(e);

  std::vector<OdPair> active_ods;
  for (int e : active_cats)
    if (std::find(active_ods.begin(), active_ods.end(), inst.categories[e].od) == active_ods.end())
      active_ods.push_back(inst.categories[e].od);

  std::vector<ZoneIndex> active_zones;
  for (int e : active_cats)
    for (ZoneIndex z : {inst.categories[e].od.origin, inst.categories[e].od.dest})
      if (std::find(active_zones.begin(), active_zones.end(), z) == active_zones.end())
        active_zones.push_back(z);
  std::sort(active_zones.begin(), active_zones.end());

  long long total_passengers = 0;
  for (int e : active_cats)
    total_passengers += rr.delta[e] * inst.categories[e].passengers;

  x_.assign(np, std::vector<int>(vt_, -1));
  yvar_.assign(ne, std::vector<int>(vt_, -1));
  std::vector<std::vector<int>> zeta(active_ods.size(), std::vector<int>(vt_, -1));
  std::vector<std::vector<int>> tau_epi(inst.zones.size(), std::vector<int>(vt_, -1));
  std::vector<std::vector<int>> theta(inst.zones.size(), std::vector<int>(vt_, -1));

  for (int p = 0; p < np; ++p)
    for (int v = 0; v < vt_; ++v)
      x_[p][v] = model_.add_binary("x_" + inst.routes[p].name + "_" + std::to_string(v));
  for (int e : active_cats)
    for (int v = 0; v < vt_; ++v) {
      double ub = std::min<double>(static_cast<double>(rr.delta[e]),
                                   std::floor(double(cap) / inst.categories[e].passengers));
      yvar_[e][v] = model_.add_variable("y_" + inst.categories[e].name + "_" + std::to_string(v),
                                        milp::VarKind::integer, 0.0, ub);
    }
  for (std::size_t o = 0; o < active_ods.size(); ++o)
    for (int v = 0; v < vt_; ++v)
      zeta[o][v] = model_.add_continuous(
          "zeta_" + inst.zones[active_ods[o].origin].name + inst.zones[active_ods[o].dest].name +
              "_" + std::to_string(v),
          0.0, static_cast<double>(total_passengers));
  for (ZoneIndex z : active_zones)
    for (int v = 0; v < vt_; ++v) {
      tau_epi[z][v] =
          model_.add_continuous("taub_" + inst.zones[z].name + "_" + std::to_string(v), 0.0, kInf);
      theta[z][v] = model_.add_binary("th_" + inst.zones[z].name + "_" + std::to_string(v));
    }

  // objective: regular service operating cost
  for (int p = 0; p < np; ++p)
    for (int v = 0; v < vt_; ++v) model_.add_objective(x_[p][v], inst.effective_route_cost(p));

  // one route per vehicle
  for (int v = 0; v < vt_; ++v) {
    LinExpr row;
    for (int p = 0; p < np; ++p) row.push_back({x_[p][v], 1.0});
    model_.add_constraint("route_per_vehicle_" + std::to_string(v), row, Sense::le, 1.0);
  }
  // cover the truncated demand exactly
  for (int e : active_cats) {
    LinExpr row;
    for (int v = 0; v < vt_; ++v) row.push_back({yvar_[e][v], 1.0});
    model_.add_constraint("demand_" + inst.categories[e].name, row, Sense::eq,
                          static_cast<double>(rr.delta[e]));
  }
  // per-OD passenger tallies
  for (std::size_t o = 0; o < active_ods.size(); ++o)
    for (int v = 0; v < vt_; ++v) {
      LinExpr row{{zeta[o][v], 1.0}};
      for (int e : active_cats)
        if (inst.categories[e].od == active_ods[o])
          row.push_back({yvar_[e][v], -double(inst.categories[e].passengers)});
      model_.add_constraint("", row, Sense::eq, 0.0);
    }
  // capacity along each candidate route, active only when the vehicle takes
  // it. The converting-matrix rows are split into their unit-entry part
  // (onboard load) and big-entry part (off-route ODs, pinned to zero when the
  // route is taken); the split keeps every row well-conditioned.
  double m2_eff = std::max(2.0, double(total_passengers) / std::max(1, cap) + 2.0);
  for (int p = 0; p < np; ++p) {
    ConvertingMatrix b = build_converting_matrix(inst.routes[p], active_ods, inst.m1);
    for (int v = 0; v < vt_; ++v) {
      std::vector<LinExpr> rows;
      for (std::size_t r = 0; r < b.row_zones.size(); ++r) {
        LinExpr row;
        for (std::size_t o = 0; o < active_ods.size(); ++o)
          if (b.at(static_cast<int>(r), static_cast<int>(o)) == 1.0)
            row.push_back({zeta[o][v], 1.0});
        if (!row.empty()) rows.push_back(std::move(row));
      }
      milp::linearize_bilinear_indicator(model_, x_[p][v], rows, cap, m2_eff);
      LinExpr off;
      for (std::size_t o = 0; o < active_ods.size(); ++o)
        if (!inst.routes[p].traverses(active_ods[o])) off.push_back({zeta[o][v], 1.0});
      if (!off.empty()) {
        off.push_back({x_[p][v], double(total_passengers)});
        model_.add_constraint("", off, Sense::le, double(total_passengers));
      }
    }
  }
  if (reduced) {
    // the planned zonal detour is convex in the served-point count and
    // feasible at one point, so the budget is exactly an upper bound on it
    if (inst.detour_mode.per_zone) {
      for (ZoneIndex z : active_zones) {
        const Zone& zone = inst.zones[z];
        long long y_max = zone_service_cap(zone, rr.tau2[z], cap);
        if (y_max >= 2ll * cap) continue;  // never binding
        for (int v = 0; v < vt_; ++v) {
          LinExpr ytilde;
          for (int e : active_cats) {
            const OdPair& od = inst.categories[e].od;
            if (od.origin == z || od.dest == z) ytilde.push_back({yvar_[e][v], 1.0});
          }
          if (!ytilde.empty())
            model_.add_constraint("ymax_" + zone.name + "_" + std::to_string(v), ytilde,
                                  Sense::le, static_cast<double>(y_max));
        }
      }
    }
    finish_common_rows(active_cats, active_ods, zeta, total_passengers);
    return;
  }
  // zonal detour: epigraph cuts plus the activated budget row
  for (ZoneIndex z : active_zones) {
    const Zone& zone = inst.zones[z];
    std::vector<TangentCut> cuts = tangent_cuts(zone.boundary_curve, cap);
    // identical cuts collapse (linear curves produce one)
    std::vector<TangentCut> uniq;
    for (const TangentCut& c : cuts) {
      bool dup = false;
      for (const TangentCut& u : uniq)
        dup = dup || (std::abs(u.slope - c.slope) < 1e-15 &&
                      std::abs(u.intercept - c.intercept) < 1e-15);
      if (!dup) uniq.push_back(c);
    }
    double tau2 = rr.tau2[z];
    double big = std::max(0.0, 2.0 * zone.boundary_curve(0) + (2.0 * cap - 1.0) * tau2 -
                                   zone.max_detour) +
                 1.0;
    for (int v = 0; v < vt_; ++v) {
      LinExpr ytilde;  // sum over categories touching z
      for (int e : active_cats) {
        const OdPair& od = inst.categories[e].od;
        if (od.origin == z || od.dest == z) ytilde.push_back({yvar_[e][v], 1.0});
      }
      for (const TangentCut& c : uniq) {
        LinExpr row{{tau_epi[z][v], 1.0}};
        for (auto [var, coef] : ytilde) row.push_back({var, -c.slope * coef});
        model_.add_constraint("", row, Sense::ge, c.intercept);
      }
      // theta = 1 whenever the vehicle serves anything in the zone
      LinExpr act = ytilde;
      act.push_back({theta[z][v], -2.0 * cap});
      model_.add_constraint("", act, Sense::le, 0.0);
      if (inst.detour_mode.per_zone) {
        LinExpr row{{tau_epi[z][v], 2.0}, {theta[z][v], big}};
        for (auto [var, coef] : ytilde) row.push_back({var, tau2 * coef});
        model_.add_constraint("", row, Sense::le, zone.max_detour + tau2 + big);
      }
    }
  }
  // optional whole-trip and per-OD detour budgets
  if (inst.detour_mode.per_trip || !inst.detour_mode.per_od.empty()) {
    std::vector<std::vector<int>> tvz(inst.zones.size(), std::vector<int>(vt_, -1));
    for (ZoneIndex z : active_zones) {
      const Zone& zone = inst.zones[z];
      double tau2 = rr.tau2[z];
      double big = 2.0 * zone.boundary_curve(0) + tau2 + 1.0;
      for (int v = 0; v < vt_; ++v) {
        tvz[z][v] =
            model_.add_continuous("t_" + zone.name + "_" + std::to_string(v), 0.0, kInf);
        LinExpr row{{tvz[z][v], -1.0}, {tau_epi[z][v], 2.0}, {theta[z][v], big}};
        for (int e : active_cats) {
          const OdPair& od = inst.categories[e].od;
          if (od.origin == z || od.dest == z) row.push_back({yvar_[e][v], tau2});
        }
        model_.add_constraint("", row, Sense::le, tau2 + big);
      }
    }
    if (inst.detour_mode.per_trip) {
      for (int v = 0; v < vt_; ++v) {
        LinExpr row;
        for (ZoneIndex z : active_zones)
          if (tvz[z][v] >= 0) row.push_back({tvz[z][v], 1.0});
        if (!row.empty())
          model_.add_constraint("trip_budget_" + std::to_string(v), row, Sense::le,
                                *inst.detour_mode.per_trip);
      }
    }
    for (const auto& [od, limit] : inst.detour_mode.per_od) {
      for (int p = 0; p < np; ++p) {
        const Route& route = inst.routes[p];
        if (!route.traverses(od)) continue;
        int pr = *route.position(od.origin);
        int ps = *route.position(od.dest);
        double big = 0.0;
        for (int i = pr; i <= ps; ++i) {
          ZoneIndex z = route.zones[i];
          big += 2.0 * inst.zones[z].boundary_curve(0) + 2.0 * cap * rr.tau2[z];
        }
        for (int v = 0; v < vt_; ++v) {
          LinExpr row{{x_[p][v], big}};
          bool any = false;
          for (int i = pr; i <= ps; ++i) {
            ZoneIndex z = route.zones[i];
            if (tvz[z][v] >= 0) {
              row.push_back({tvz[z][v], 1.0});
              any = true;
            }
          }
          if (any) model_.add_constraint("", row, Sense::le, limit + big);
        }
      }
    }
  }
  finish_common_rows(active_cats, active_ods, zeta, total_passengers);
}

void P1Problem::finish_common_rows(const std::vector<int>& active_cats,
                                   const std::vector<OdPair>& active_ods,
                                   const std::vector<std::vector<int>>& zeta,
                                   long long total_passengers) {
  using milp::LinExpr;
  using milp::Sense;
  (void)active_cats;
  const int np = static_cast<int>(inst_.routes.size());
  // passengers only on routed vehicles
  double m1_tight = static_cast<double>(total_passengers) + 1.0;
  for (int v = 0; v < vt_; ++v) {
    LinExpr row;
    for (std::size_t o = 0; o < active_ods.size(); ++o) row.push_back({zeta[o][v], 1.0});
    for (int p = 0; p < np; ++p) row.push_back({x_[p][v], -m1_tight});
    model_.add_constraint("", row, Sense::le, 0.0);
  }
  // vehicle symmetry: routed slots form a prefix with ascending route index
  for (int v = 1; v < vt_; ++v) {
    LinExpr row;
    for (int p = 0; p < np; ++p) {
      row.push_back({x_[p][v], 1.0});
      row.push_back({x_[p][v - 1], -1.0});
    }
    model_.add_constraint("", row, Sense::le, 0.0);
    LinExpr ord;
    double maxidx = static_cast<double>(np);
    for (int p = 0; p < np; ++p) {
      ord.push_back({x_[p][v - 1], static_cast<double>(p + 1)});
      ord.push_back({x_[p][v], -(static_cast<double>(p + 1)) + maxidx});
    }
    model_.add_constraint("", ord, Sense::le, maxidx);
  }
}

Plan P1Problem::extract(const milp::Solution& sol) const {
  Plan plan;
  plan.vehicle_route.assign(vt_, -1);
  plan.y.assign(inst_.categories.size(), std::vector<long long>(vt_, 0));
  for (std::size_t p = 0; p < x_.size(); ++p)
    for (int v = 0; v < vt_; ++v)
      if (x_[p][v] >= 0 && sol.values[x_[p][v]] > 0.5)
        plan.vehicle_route[v] = static_cast<int>(p);
  for (std::size_t e = 0; e < yvar_.size(); ++e)
    for (int v = 0; v < vt_; ++v)
      if (yvar_[e][v] >= 0)
        plan.y[e][v] = std::llround(sol.values[yvar_[e][v]]);
  plan.fixed_cost = 0.0;
  for (int v = 0; v < vt_; ++v)
    if (plan.vehicle_route[v] >= 0)
      plan.fixed_cost += inst_.effective_route_cost(plan.vehicle_route[v]);
  return plan;
}

milp::Model build_p1(const ServiceInstance& inst, const ResolvedReliability& rr) {
  return P1Problem(inst, rr, P1Problem::Form::contract).model();
}

namespace {

Plan solve_single_component(const ServiceInstance& inst, const ResolvedReliability& rr) {
  P1Problem prob(inst, rr, P1Problem::Form::reduced);
  if (prob.trimmed_vehicles() == 0) {
    Plan empty;
    empty.y.assign(inst.categories.size(), {});
    return empty;
  }
  milp::Solution sol = milp::solve(prob.model());
  if (sol.status == milp::SolveStatus::infeasible)
    throw Error(Errc::infeasible_at_rho, "phase-1 infeasible at the requested reliability");
  if (sol.status != milp::SolveStatus::optimal)
    throw Error(Errc::invalid_argument, "phase-1 solve hit a limit");
  return prob.extract(sol);
}

}  // namespace

Plan solve_p1_resolved(const ServiceInstance& inst, const ResolvedReliability& rr,
                       bool decompose) {
  const int ne = static_cast<int>(inst.categories.size());
  if (!decompose) {
    Plan p = solve_single_component(inst, rr);
    // widen the y matrix to the instance's category count if trimmed
    if (static_cast<int>(p.y.size()) != ne) p.y.resize(ne);
    return p;
  }
  std::vector<SubInstance> subs = decompose_instance(inst);
  if (subs.size() <= 1) return solve_p1_resolved(inst, rr, false);
  Plan merged;
  merged.y.assign(ne, {});
  for (const SubInstance& sub : subs) {
    ResolvedReliability sub_rr;
    for (int e : sub.category_ids) sub_rr.delta.push_back(rr.delta[e]);
    sub_rr.tau2 = rr.tau2;
    Plan part = solve_p1_resolved(sub.instance, sub_rr, false);
    int base = merged.vehicles();
    for (int v = 0; v < part.vehicles(); ++v) {
      int local_route = part.vehicle_route[v];
      merged.vehicle_route.push_back(local_route < 0 ? -1 : sub.route_ids[local_route]);
    }
    for (std::size_t le = 0; le < sub.category_ids.size(); ++le) {
      auto& row = merged.y[sub.category_ids[le]];
      row.resize(base + part.vehicles(), 0);
      for (int v = 0; v < part.vehicles(); ++v) row[base + v] = part.y[le][v];
    }
    merged.fixed_cost += part.fixed_cost;
  }
  for (auto& row : merged.y) row.resize(merged.vehicles(), 0);
  if (merged.vehicles_used() > inst.fleet.size) return solve_p1_resolved(inst, rr, false);
  return merged;
}

Plan solve_p1(const ServiceInstance& inst, const ReliabilityVector& rho, bool decompose) {
  return solve_p1_resolved(inst, resolve_reliability(inst, rho), decompose);
}

std::vector<std::string> verify_plan(const ServiceInstance& inst, const ResolvedReliability& rr,
                                     const Plan& plan) {
  std::vector<std::string> bad;
  const double tol = 1e-6;
  const int ne = static_cast<int>(inst.categories.size());
  // demand covered exactly
  for (int e = 0; e < ne; ++e) {
    long long served = 0;
    for (int v = 0; v < plan.vehicles(); ++v) served += plan.y[e][v];
    if (served != rr.delta[e])
      bad.push_back("category " + inst.categories[e].name + ": served " + std::to_string(served) +
                    " != delta " + std::to_string(rr.delta[e]));
  }
  for (int v = 0; v < plan.vehicles(); ++v) {
    int p = plan.vehicle_route[v];
    long long carried = 0;
    for (int e = 0; e < ne; ++e) {
      if (plan.y[e][v] < 0) bad.push_back("negative y");
      carried += plan.y[e][v];
      if (plan.y[e][v] > 0) {
        if (p < 0)
          bad.push_back("vehicle " + std::to_string(v) + " serves requests without a route");
        else if (!inst.routes[p].traverses(inst.categories[e].od))
          bad.push_back("vehicle " + std::to_string(v) + " route does not cover category " +
                        inst.categories[e].name);
      }
    }
    if (p < 0) continue;
    std::vector<long long> loads = plan.onboard_loads(inst, v);
    for (long long load : loads)
      if (load > inst.fleet.capacity)
        bad.push_back("vehicle " + std::to_string(v) + " exceeds capacity: " +
                      std::to_string(load));
    double trip_total = 0.0;
    for (ZoneIndex z = 0; z < static_cast<ZoneIndex>(inst.zones.size()); ++z) {
      double t = plan.planned_detour(inst, rr.tau2, v, z);
      trip_total += t;
      if (inst.detour_mode.per_zone && t > inst.zones[z].max_detour + tol)
        bad.push_back("vehicle " + std::to_string(v) + " zone " + inst.zones[z].name +
                      " planned detour " + std::to_string(t) + " exceeds budget");
    }
    if (inst.detour_mode.per_trip && trip_total > *inst.detour_mode.per_trip + tol)
      bad.push_back("vehicle " + std::to_string(v) + " trip detour exceeds budget");
    for (const auto& [od, limit] : inst.detour_mode.per_od) {
      const Route& route = inst.routes[p];
      if (!route.traverses(od)) continue;
      double acc = 0.0;
      for (int i = *route.position(od.origin); i <= *route.position(od.dest); ++i)
        acc += plan.planned_detour(inst, rr.tau2, v, route.zones[i]);
      if (acc > limit + tol)
        bad.push_back("vehicle " + std::to_string(v) + " od detour budget exceeded");
    }
  }
  double cf = 0.0;
  for (int v = 0; v < plan.vehicles(); ++v)
    if (plan.vehicle_route[v] >= 0) cf += inst.effective_route_cost(plan.vehicle_route[v]);
  if (std::abs(cf - plan.fixed_cost) > tol) bad.push_back("fixed cost mismatch");
  return bad;
}

}  // namespace flexbus
