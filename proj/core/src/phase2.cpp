#include "flexbus/phase2.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

namespace flexbus {

namespace {

std::atomic<long long> g_p2_solves{0};
constexpr double kTieEps = 1e-7;

bool compatible(const ServiceInstance& inst, const Plan& plan, int v, const ServiceRequest& req) {
  int p = plan.vehicle_route[v];
  return p >= 0 && inst.routes[p].traverses(req.od);
}

}  // namespace

long long p2_solve_count() { return g_p2_solves.load(); }

P2Problem::P2Problem(const ServiceInstance& inst, const Plan& plan, const Scenario& scenario,
                     const std::vector<int>* request_subset,
                     const std::vector<int>* vehicle_subset, bool force_pairwise)
    : scenario_(scenario) {
  using milp::LinExpr;
  using milp::Sense;
  const int nreq = static_cast<int>(scenario.requests.size());
  std::vector<int> reqs, vehs;
  if (request_subset)
    reqs = *request_subset;
  else
    for (int d = 0; d < nreq; ++d) reqs.push_back(d);
  if (vehicle_subset)
    vehs = *vehicle_subset;
  else
    for (int v = 0; v < plan.vehicles(); ++v)
      if (plan.vehicle_route[v] >= 0) vehs.push_back(v);

  w_.assign(nreq, std::vector<int>(plan.vehicles(), -1));
  double base = 0.0;
  int pairs = 0;
  for (int d : reqs) base += scenario.requests[d].adhoc_cost;
  for (int d : reqs)
    for (int v : vehs)
      if (compatible(inst, plan, v, scenario.requests[d])) {
        w_[d][v] = model_.add_binary("w_" + std::to_string(d) + "_" + std::to_string(v));
        ++pairs;
      }
  model_.set_objective_constant(base);
  if (pairs == 0) {
    trivial_ = true;
    trivial_cost_ = base;
    return;
  }
  // serving a request saves its ad hoc cost
  for (int d : reqs)
    for (int v : vehs)
      if (w_[d][v] >= 0) model_.add_objective(w_[d][v], -scenario.requests[d].adhoc_cost);
  // a request rides at most one bus
  for (int d : reqs) {
    LinExpr row;
    for (int v : vehs)
      if (w_[d][v] >= 0) row.push_back({w_[d][v], 1.0});
    if (!row.empty()) model_.add_constraint("assign_" + std::to_string(d), row, Sense::le, 1.0);
  }
  // dominance: under the scaled-min rule, swapping a served request for an
  // unserved same-category one with smaller detours at both ends never
  // increases any zonal net detour, so some optimum serves the easier
  // request at least as often
  bool all_uniform = true;
  for (const DetourMatrix& t : scenario.zone_matrices)
    if (t.size() > 0 && !t.uniform_min_rule) all_uniform = false;
  if (all_uniform && !force_pairwise) {
    for (std::size_t a = 0; a < reqs.size(); ++a)
      for (std::size_t b = 0; b < reqs.size(); ++b) {
        if (a == b) continue;
        int i = reqs[a], j = reqs[b];
        const ServiceRequest& ri = scenario.requests[i];
        const ServiceRequest& rj = scenario.requests[j];
        if (ri.category != rj.category || ri.adhoc_cost != rj.adhoc_cost ||
            ri.passengers != rj.passengers)
          continue;
        bool j_easier = rj.origin_detour <= ri.origin_detour &&
                        rj.dest_detour <= ri.dest_detour;
        bool tie = rj.origin_detour == ri.origin_detour && rj.dest_detour == ri.dest_detour;
        if (!j_easier || (tie && j > i)) continue;
        LinExpr row;
        for (int v : vehs) {
          if (w_[i][v] >= 0) row.push_back({w_[i][v], 1.0});
          if (w_[j][v] >= 0) row.push_back({w_[j][v], -1.0});
        }
        if (!row.empty()) model_.add_constraint("", row, Sense::le, 0.0);
      }
  }
  // onboard load along each routed vehicle
  for (int v : vehs) {
    const Route& route = inst.routes[plan.vehicle_route[v]];
    for (int i = 0; i + 1 < route.zone_count(); ++i) {
      LinExpr row;
      for (int d : reqs) {
        if (w_[d][v] < 0) continue;
        const ServiceRequest& r = scenario.requests[d];
        int pr = *route.position(r.od.origin);
        int ps = *route.position(r.od.dest);
        if (i >= pr && i < ps) row.push_back({w_[d][v], double(r.passengers)});
      }
      if (!row.empty())
        model_.add_constraint("cap_" + std::to_string(v) + "_" + std::to_string(i), row,
                              Sense::le, double(inst.fleet.capacity));
    }
  }
  // zonal detour expressions, one per (vehicle, zone)
  std::map<std::pair<int, int>, int> pairwise_cache;  // (a*nreq+b, v) -> var
  auto product_var = [&](int a, int b, int v) {
    auto key = std::make_pair(a * nreq + b, v);
    auto it = pairwise_cache.find(key);
    if (it != pairwise_cache.end()) return it->second;
    int z = milp::linearize_product(model_, w_[a][v], w_[b][v]);
    product_vars_.push_back({z, v, a, b});
    pairwise_cache[key] = z;
    return z;
  };
  std::vector<std::vector<LinExpr>> detour_expr(plan.vehicles());
  for (int v : vehs) detour_expr[v].assign(inst.zones.size(), LinExpr{});
  std::vector<std::map<int, int>> zone_card(inst.zones.size());  // per zone: vehicle -> card cap
  for (ZoneIndex z = 0; z < static_cast<ZoneIndex>(inst.zones.size()); ++z) {
    const DetourMatrix& t = scenario.zone_matrices[z];
    if (t.size() == 0) continue;
    bool aggregated = t.uniform_min_rule && !force_pairwise;
    for (int v : vehs) {
      // compatible requests touching this zone
      std::vector<int> touching;
      for (int d : reqs)
        if (w_[d][v] >= 0 && t.at(d, d) > 0.0) touching.push_back(d);
      if (touching.empty()) continue;
      LinExpr& row = detour_expr[v][z];
      for (int d : touching) row.push_back({w_[d][v], t.at(d, d)});
      if (aggregated) {
        // sort ascending by detour; each pair's reduction min(tau_a, tau_b)
        // is charged at its smaller member through a counting variable
        std::vector<int> order = touching;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
          if (t.at(a, a) != t.at(b, b)) return t.at(a, a) < t.at(b, b);
          return a < b;
        });
        if (inst.detour_mode.per_zone) {
          // cardinality cut: among k served requests the net zonal detour is
          // minimized by the k smallest (their rank weights 1 - 2(k-1-i)/div
          // stay positive up to the capacity), so the largest feasible k
          // bounds the head count outright
          std::size_t k_max = 0;
          while (k_max < order.size()) {
            std::size_t k = k_max + 1;
            double net = 0.0;
            for (std::size_t i = 0; i < k; ++i)
              net += t.at(order[i], order[i]) *
                     (1.0 - 2.0 * double(k - 1 - i) / t.min_rule_divisor);
            if (net > inst.zones[z].max_detour + 1e-12) break;
            ++k_max;
          }
          if (k_max < order.size()) {
            LinExpr cut;
            for (int d : order) cut.push_back({w_[d][v], 1.0});
            model_.add_constraint("card_" + inst.zones[z].name + "_" + std::to_string(v), cut,
                                  Sense::le, static_cast<double>(k_max));
          }
          zone_card[z][v] = k_max < order.size() ? static_cast<int>(k_max)
                                                 : static_cast<int>(order.size());
        }
        std::vector<int> cvars;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
          int d = order[i];
          std::vector<int> after(order.begin() + i + 1, order.end());
          int cvar = model_.add_continuous(
              "cnt_" + std::to_string(d) + "_" + std::to_string(v) + "_" + inst.zones[z].name,
              0.0, static_cast<double>(after.size()));
          LinExpr le1{{cvar, 1.0}};
          for (int j : after) le1.push_back({w_[j][v], -1.0});
          model_.add_constraint("", le1, Sense::le, 0.0);
          model_.add_constraint("", {{cvar, 1.0}, {w_[d][v], -double(after.size())}}, Sense::le,
                                0.0);
          row.push_back({cvar, -2.0 * t.at(d, d) / t.min_rule_divisor});
          cvars.push_back(cvar);
          count_vars_.push_back({cvar, v, d, std::move(after)});
        }
        (void)cvars;
      } else {
        for (std::size_t a = 0; a < touching.size(); ++a)
          for (std::size_t b = a + 1; b < touching.size(); ++b) {
            double red = t.at(touching[a], touching[b]);
            if (red != 0.0)
              row.push_back({product_var(touching[a], touching[b], v), 2.0 * red});
          }
      }
      if (inst.detour_mode.per_zone)
        model_.add_constraint("det_" + inst.zones[z].name + "_" + std::to_string(v), row,
                              Sense::le, inst.zones[z].max_detour);
    }
  }
  // pooled cardinality: all vehicles together can absorb only so many
  // touching requests of a zone; the adversarial partition of the k smallest
  // detours is solved exactly for two vehicles, capacity-capped otherwise
  for (ZoneIndex z = 0; z < static_cast<ZoneIndex>(inst.zones.size()); ++z) {
    const DetourMatrix& t = scenario.zone_matrices[z];
    if (t.size() == 0 || !t.uniform_min_rule || force_pairwise ||
        !inst.detour_mode.per_zone)
      continue;
    std::vector<int> touching;
    std::vector<int> caps;
    for (int d : reqs) {
      bool anyv = false;
      for (int v : vehs) anyv = anyv || w_[d][v] >= 0;
      if (anyv && t.at(d, d) > 0.0) touching.push_back(d);
    }
    for (int v : vehs)
      if (zone_card[z].count(v) && zone_card[z][v] > 0) caps.push_back(zone_card[z][v]);
    if (touching.size() < 3 || caps.empty()) continue;
    std::vector<double> taus;
    for (int d : touching) taus.push_back(t.at(d, d));
    std::sort(taus.begin(), taus.end());
    const double div = t.min_rule_divisor;
    double budget = inst.zones[z].max_detour * caps.size();
    long long cap_total = 0;
    for (int c : caps) cap_total += c;
    int gmax = *std::max_element(caps.begin(), caps.end());
    auto adversary_reduction = [&](int k) {
      if (caps.size() == 2) {
        // exact two-group maximization of the within-group min pair sums
        std::vector<double> dp(k + 1, -kInf);
        dp[0] = 0.0;
        for (int r = 0; r < k; ++r) {          // descending values
          double val = taus[k - 1 - r];
          std::vector<double> nd(k + 1, -kInf);
          for (int a = 0; a <= r; ++a) {
            if (dp[a] == -kInf) continue;
            int b = r - a;
            if (a + 1 <= caps[0] && dp[a] + val * a > nd[a + 1]) nd[a + 1] = dp[a] + val * a;
            if (b + 1 <= caps[1] && dp[a] + val * b > nd[a]) nd[a] = dp[a] + val * b;
          }
          dp.swap(nd);
        }
        double best = -kInf;
        for (int a = 0; a <= k; ++a) best = std::max(best, dp[a]);
        return best;
      }
      double acc = 0.0;
      for (int r = 0; r < k; ++r) acc += taus[k - 1 - r] * std::min(gmax - 1, r);
      return acc;
    };
    int k_pool = 0;
    for (int k = 1; k <= std::min<long long>(cap_total, taus.size()); ++k) {
      double red = adversary_reduction(k);
      if (red == -kInf) break;
      double net = 0.0;
      for (int i = 0; i < k; ++i) net += taus[i];
      net -= 2.0 * red / div;
      if (net <= budget + 1e-12) k_pool = k;
    }
    if (k_pool < static_cast<int>(touching.size())) {
      LinExpr cut;
      for (int d : touching)
        for (int v : vehs)
          if (w_[d][v] >= 0) cut.push_back({w_[d][v], 1.0});
      model_.add_constraint("pool_" + inst.zones[z].name, cut, Sense::le,
                            static_cast<double>(k_pool));
    }
  }
  if (inst.detour_mode.per_trip) {
    for (int v : vehs) {
      LinExpr row;
      for (ZoneIndex z = 0; z < static_cast<ZoneIndex>(inst.zones.size()); ++z)
        for (auto& term : detour_expr[v][z]) row.push_back(term);
      if (!row.empty())
        model_.add_constraint("trip_" + std::to_string(v), row, Sense::le,
                              *inst.detour_mode.per_trip);
    }
  }
  for (const auto& [od, limit] : inst.detour_mode.per_od) {
    for (int v : vehs) {
      const Route& route = inst.routes[plan.vehicle_route[v]];
      if (!route.traverses(od)) continue;
      LinExpr row;
      for (int i = *route.position(od.origin); i <= *route.position(od.dest); ++i)
        for (auto& term : detour_expr[v][route.zones[i]]) row.push_back(term);
      if (!row.empty()) model_.add_constraint("", row, Sense::le, limit);
    }
  }
  // interchangeable vehicles on the same route: a request may ride the next
  // vehicle of the group only if an earlier request rides the previous one
  // (lexicographic group fixing; any optimum can be relabeled to satisfy it)
  std::map<int, std::vector<int>> by_route;
  for (int v : vehs) by_route[plan.vehicle_route[v]].push_back(v);
  for (auto& [p, group] : by_route) {
    for (std::size_t g = 1; g < group.size(); ++g) {
      int prev = group[g - 1], cur = group[g];
      LinExpr earlier;
      for (int d : reqs) {
        if (w_[d][cur] >= 0) {
          LinExpr row = earlier;
          for (auto& term : row) term.second = -1.0;
          row.push_back({w_[d][cur], 1.0});
          model_.add_constraint("", row, Sense::le, 0.0);
        }
        if (w_[d][prev] >= 0) earlier.push_back({w_[d][prev], 1.0});
      }
    }
  }
}

Assignment P2Problem::extract(const milp::Solution& sol) const {
  Assignment a;
  const int nreq = static_cast<int>(scenario_.requests.size());
  a.vehicle.assign(nreq, -1);
  if (!trivial_) {
    for (int d = 0; d < nreq; ++d)
      for (std::size_t v = 0; v < w_[d].size(); ++v)
        if (w_[d][v] >= 0 && sol.values[w_[d][v]] > 0.5) a.vehicle[d] = static_cast<int>(v);
  }
  a.adhoc_cost = 0.0;
  for (int d = 0; d < nreq; ++d)
    if (a.vehicle[d] < 0) a.adhoc_cost += scenario_.requests[d].adhoc_cost;
  return a;
}

std::vector<double> P2Problem::hint_from(const Assignment& a) const {
  std::vector<double> x(model_.num_variables(), 0.0);
  for (std::size_t d = 0; d < w_.size(); ++d)
    if (a.vehicle[d] >= 0 && w_[d][a.vehicle[d]] >= 0) x[w_[d][a.vehicle[d]]] = 1.0;
  for (const CountVar& c : count_vars_) {
    if (a.vehicle[c.request] != c.vehicle) continue;
    double cnt = 0.0;
    for (int j : c.after) cnt += a.vehicle[j] == c.vehicle ? 1.0 : 0.0;
    x[c.var] = cnt;
  }
  for (const ProductVar& p : product_vars_)
    x[p.var] = (a.vehicle[p.a] == p.vehicle && a.vehicle[p.b] == p.vehicle) ? 1.0 : 0.0;
  if (served_var_ >= 0) {
    double s = 0.0;
    for (std::size_t d = 0; d < w_.size(); ++d)
      if (a.vehicle[d] >= 0 && w_[d][a.vehicle[d]] >= 0) s += 1.0;
    x[served_var_] = s;
  }
  return x;
}

Assignment greedy_assignment(const ServiceInstance& inst, const Plan& plan,
                             const Scenario& scenario, const std::vector<int>& requests,
                             const std::vector<int>& vehicles) {
  const int nreq = static_cast<int>(scenario.requests.size());
  Assignment a;
  a.vehicle.assign(nreq, -1);
  // expensive fallbacks first, then the easy-to-fit requests
  std::vector<int> order = requests;
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    if (scenario.requests[i].adhoc_cost != scenario.requests[j].adhoc_cost)
      return scenario.requests[i].adhoc_cost > scenario.requests[j].adhoc_cost;
    double ti = scenario.requests[i].origin_detour + scenario.requests[i].dest_detour;
    double tj = scenario.requests[j].origin_detour + scenario.requests[j].dest_detour;
    if (ti != tj) return ti < tj;
    return i < j;
  });
  std::vector<std::vector<std::uint8_t>> flags(plan.vehicles(),
                                               std::vector<std::uint8_t>(nreq, 0));
  std::vector<std::vector<long long>> loads(plan.vehicles());
  for (int v : vehicles)
    loads[v].assign(inst.routes[plan.vehicle_route[v]].zone_count() - 1, 0);
  auto fits = [&](int d, int v) {
    const ServiceRequest& r = scenario.requests[d];
    if (!compatible(inst, plan, v, r)) return false;
    const Route& route = inst.routes[plan.vehicle_route[v]];
    int pr = *route.position(r.od.origin);
    int ps = *route.position(r.od.dest);
    for (int i = pr; i < ps; ++i)
      if (loads[v][i] + r.passengers > inst.fleet.capacity) return false;
    flags[v][d] = 1;
    bool ok = true;
    double trip = 0.0;
    for (ZoneIndex z = 0; z < static_cast<ZoneIndex>(inst.zones.size()) && ok; ++z) {
      if (scenario.zone_matrices[z].size() == 0) continue;
      double t = zonal_detour(scenario.zone_matrices[z], flags[v]);
      trip += t;
      if (inst.detour_mode.per_zone) ok = t <= inst.zones[z].max_detour + 1e-12;
    }
    if (inst.detour_mode.per_trip) ok = ok && trip <= *inst.detour_mode.per_trip + 1e-12;
    if (ok)
      for (const auto& [od, limit] : inst.detour_mode.per_od) {
        if (!route.traverses(od)) continue;
        double acc = 0.0;
        for (int i = *route.position(od.origin); i <= *route.position(od.dest); ++i) {
          ZoneIndex z = route.zones[i];
          if (scenario.zone_matrices[z].size() > 0)
            acc += zonal_detour(scenario.zone_matrices[z], flags[v]);
        }
        if (acc > limit + 1e-12) ok = false;
      }
    flags[v][d] = 0;
    return ok;
  };
  auto added_detour = [&](int d, int v) {
    double before = 0.0, after = 0.0;
    for (ZoneIndex z = 0; z < static_cast<ZoneIndex>(inst.zones.size()); ++z) {
      if (scenario.zone_matrices[z].size() == 0) continue;
      before += zonal_detour(scenario.zone_matrices[z], flags[v]);
    }
    flags[v][d] = 1;
    for (ZoneIndex z = 0; z < static_cast<ZoneIndex>(inst.zones.size()); ++z) {
      if (scenario.zone_matrices[z].size() == 0) continue;
      after += zonal_detour(scenario.zone_matrices[z], flags[v]);
    }
    flags[v][d] = 0;
    return after - before;
  };
  for (int d : order) {
    int best_v = -1;
    double best_add = kInf;
    for (int v : vehicles) {
      if (!fits(d, v)) continue;
      double add = added_detour(d, v);
      if (add < best_add - 1e-12) {
        best_add = add;
        best_v = v;
      }
    }
    if (best_v < 0) continue;
    a.vehicle[d] = best_v;
    flags[best_v][d] = 1;
    const Route& route = inst.routes[plan.vehicle_route[best_v]];
    const ServiceRequest& r = scenario.requests[d];
    for (int i = *route.position(r.od.origin); i < *route.position(r.od.dest); ++i)
      loads[best_v][i] += r.passengers;
  }
  a.adhoc_cost = 0.0;
  for (int d : requests)
    if (a.vehicle[d] < 0) a.adhoc_cost += scenario.requests[d].adhoc_cost;
  return a;
}

milp::Model build_p2(const ServiceInstance& inst, const Plan& plan, const Scenario& scenario) {
  return P2Problem(inst, plan, scenario, nullptr, nullptr, true).model();
}

Assignment solve_p2(const ServiceInstance& inst, const Plan& plan, const Scenario& scenario) {
  const int nreq = static_cast<int>(scenario.requests.size());
  Assignment merged;
  merged.vehicle.assign(nreq, -1);
  // connected blocks of the request/vehicle compatibility graph
  std::vector<int> routed;
  for (int v = 0; v < plan.vehicles(); ++v)
    if (plan.vehicle_route[v] >= 0) routed.push_back(v);
  const int nv = static_cast<int>(routed.size());
  std::vector<int> parent(nreq + nv);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int d = 0; d < nreq; ++d)
    for (int i = 0; i < nv; ++i)
      if (compatible(inst, plan, routed[i], scenario.requests[d]))
        parent[find(d)] = find(nreq + i);
  std::vector<int> block_order;
  std::map<int, std::pair<std::vector<int>, std::vector<int>>> blocks;
  for (int d = 0; d < nreq; ++d) {
    int r = find(d);
    if (!blocks.count(r)) block_order.push_back(r);
    blocks[r].first.push_back(d);
  }
  for (int i = 0; i < nv; ++i) {
    int r = find(nreq + i);
    if (blocks.count(r)) blocks[r].second.push_back(routed[i]);
  }
  for (int root : block_order) {
    auto& [reqs, vehs] = blocks[root];
    P2Problem prob(inst, plan, scenario, &reqs, &vehs);
    if (prob.trivial()) continue;
    Assignment warm = greedy_assignment(inst, plan, scenario, reqs, vehs);
    std::vector<double> hint = prob.hint_from(warm);
    ++g_p2_solves;
    milp::Solution sol = milp::solve(prob.model(), {}, &hint);
    if (sol.status != milp::SolveStatus::optimal)
      throw Error(Errc::invalid_argument, "phase-2 solve failed");
    Assignment part = prob.extract(sol);
    for (int d : reqs) merged.vehicle[d] = part.vehicle[d];
  }
  merged.adhoc_cost = 0.0;
  for (int d = 0; d < nreq; ++d)
    if (merged.vehicle[d] < 0) merged.adhoc_cost += scenario.requests[d].adhoc_cost;
  return merged;
}

CostReport evaluate(const ServiceInstance& inst, const Plan& plan,
                    const std::vector<Scenario>& scenarios) {
  double psum = 0.0;
  for (const Scenario& sc : scenarios) psum += sc.probability;
  if (std::abs(psum - 1.0) > 1e-6)
    throw Error(Errc::invalid_argument, "scenario probabilities must sum to 1");
  CostReport rep;
  rep.fixed_cost = plan.fixed_cost;
  double seat_segments = 0.0;
  for (int v = 0; v < plan.vehicles(); ++v)
    if (plan.vehicle_route[v] >= 0)
      seat_segments +=
          double(inst.fleet.capacity) * (inst.routes[plan.vehicle_route[v]].zone_count() - 1);
  double pax_total = 0.0, pax_served = 0.0, pax_segments = 0.0;
  double detour_total = 0.0, detour_max = 0.0, visits = 0.0;
  for (const Scenario& sc : scenarios) {
    Assignment a = solve_p2(inst, plan, sc);
    rep.per_scenario_adhoc.push_back(a.adhoc_cost);
    rep.expected_adhoc += sc.probability * a.adhoc_cost;
    double sc_detour = 0.0, sc_max = 0.0, sc_visits = 0.0;
    for (int v = 0; v < plan.vehicles(); ++v) {
      if (plan.vehicle_route[v] < 0) continue;
      std::vector<std::uint8_t> flags(sc.requests.size(), 0);
      bool any = false;
      for (std::size_t d = 0; d < sc.requests.size(); ++d)
        if (a.vehicle[d] == v) {
          flags[d] = 1;
          any = true;
        }
      if (!any) continue;
      for (ZoneIndex z = 0; z < static_cast<ZoneIndex>(inst.zones.size()); ++z) {
        if (sc.zone_matrices[z].size() == 0) continue;
        double t = zonal_detour(sc.zone_matrices[z], flags);
        if (t <= 0.0) continue;
        sc_detour += t;
        sc_max = std::max(sc_max, t);
        sc_visits += 1.0;
      }
    }
    detour_total += sc.probability * sc_detour;
    detour_max += sc.probability * sc_max;
    visits += sc.probability * sc_visits;
    for (std::size_t d = 0; d < sc.requests.size(); ++d) {
      const ServiceRequest& r = sc.requests[d];
      pax_total += sc.probability * r.passengers;
      if (a.vehicle[d] >= 0) {
        pax_served += sc.probability * r.passengers;
        const Route& route = inst.routes[plan.vehicle_route[a.vehicle[d]]];
        pax_segments += sc.probability * double(r.passengers) *
                        (*route.position(r.od.dest) - *route.position(r.od.origin));
      }
    }
  }
  rep.total_cost = rep.fixed_cost + rep.expected_adhoc;
  rep.service_rate = pax_total > 0.0 ? pax_served / pax_total : 1.0;
  rep.occupancy = seat_segments > 0.0 ? pax_segments / seat_segments : 0.0;
  rep.mean_total_detour = detour_total;
  rep.mean_max_detour = detour_max;
  rep.detour_per_visit = visits > 0.0 ? detour_total / visits : 0.0;
  return rep;
}

std::vector<std::string> verify_assignment(const ServiceInstance& inst, const Plan& plan,
                                           const Scenario& scenario, const Assignment& a) {
  std::vector<std::string> bad;
  const double tol = 1e-9;
  for (std::size_t d = 0; d < scenario.requests.size(); ++d) {
    int v = a.vehicle[d];
    if (v < 0) continue;
    if (v >= plan.vehicles() || plan.vehicle_route[v] < 0) {
      bad.push_back("request " + std::to_string(d) + " assigned to an unrouted vehicle");
      continue;
    }
    if (!inst.routes[plan.vehicle_route[v]].traverses(scenario.requests[d].od))
      bad.push_back("request " + std::to_string(d) + " OD off its vehicle's route");
  }
  for (int v = 0; v < plan.vehicles(); ++v) {
    if (plan.vehicle_route[v] < 0) continue;
    const Route& route = inst.routes[plan.vehicle_route[v]];
    std::vector<std::uint8_t> flags(scenario.requests.size(), 0);
    for (std::size_t d = 0; d < scenario.requests.size(); ++d)
      if (a.vehicle[d] == v) flags[d] = 1;
    std::vector<long long> load(route.zone_count() - 1, 0);
    for (std::size_t d = 0; d < scenario.requests.size(); ++d) {
      if (!flags[d]) continue;
      const ServiceRequest& r = scenario.requests[d];
      for (int i = *route.position(r.od.origin); i < *route.position(r.od.dest); ++i)
        load[i] += r.passengers;
    }
    for (long long l : load)
      if (l > inst.fleet.capacity)
        bad.push_back("vehicle " + std::to_string(v) + " over capacity: " + std::to_string(l));
    double trip = 0.0;
    for (ZoneIndex z = 0; z < static_cast<ZoneIndex>(inst.zones.size()); ++z) {
      if (scenario.zone_matrices[z].size() == 0) continue;
      double t = zonal_detour(scenario.zone_matrices[z], flags);
      trip += t;
      if (inst.detour_mode.per_zone && t > inst.zones[z].max_detour + tol)
        bad.push_back("vehicle " + std::to_string(v) + " zone " + inst.zones[z].name +
                      " detour " + std::to_string(t) + " over budget");
    }
    if (inst.detour_mode.per_trip && trip > *inst.detour_mode.per_trip + tol)
      bad.push_back("vehicle " + std::to_string(v) + " trip detour over budget");
    for (const auto& [od, limit] : inst.detour_mode.per_od) {
      if (!route.traverses(od)) continue;
      double acc = 0.0;
      for (int i = *route.position(od.origin); i <= *route.position(od.dest); ++i) {
        ZoneIndex z = route.zones[i];
        if (scenario.zone_matrices[z].size() > 0)
          acc += zonal_detour(scenario.zone_matrices[z], flags);
      }
      if (acc > limit + tol)
        bad.push_back("vehicle " + std::to_string(v) + " od detour over budget");
    }
  }
  double q = 0.0;
  for (std::size_t d = 0; d < scenario.requests.size(); ++d)
    if (a.vehicle[d] < 0) q += scenario.requests[d].adhoc_cost;
  if (std::abs(q - a.adhoc_cost) > 1e-6) bad.push_back("ad hoc cost mismatch");
  return bad;
}

}  // namespace flexbus
