#include "flexbus/scenario.hpp"

#include <algorithm>
#include <cmath>

namespace flexbus {

namespace {

double pool_detour(const Zone& zone, const Vec2& p) {
  double dx = p.x - zone.centroid->x;
  double dy = p.y - zone.centroid->y;
  return std::sqrt(dx * dx + dy * dy) * kMinutesPerMeter;
}

}  // namespace

std::vector<DetourMatrix> build_scenario_matrices(const ServiceInstance& inst,
                                                  const std::vector<ServiceRequest>& requests) {
  const int n = static_cast<int>(requests.size());
  std::vector<DetourMatrix> mats;
  for (ZoneIndex z = 0; z < static_cast<ZoneIndex>(inst.zones.size()); ++z) {
    std::vector<double> det(n, 0.0);
    std::vector<std::optional<Vec2>> locs(n);
    for (int i = 0; i < n; ++i) {
      if (requests[i].od.origin == z) {
        det[i] = requests[i].origin_detour;
        locs[i] = requests[i].origin_xy;
      } else if (requests[i].od.dest == z) {
        det[i] = requests[i].dest_detour;
        locs[i] = requests[i].dest_xy;
      }
    }
    double norm = inst.proximity_max_dist;
    mats.push_back(
        build_detour_matrix(z, det, locs, inst.fleet.capacity, inst.reduction_rule, norm));
  }
  return mats;
}

std::vector<Scenario> sample_scenarios(const ServiceInstance& inst, int n, std::uint64_t seed) {
  if (n < 1) throw Error(Errc::invalid_argument, "sample_scenarios: n must be >= 1");
  RngStream master(seed);
  std::vector<Scenario> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    RngStream sk = master.split(static_cast<std::uint64_t>(k));
    Scenario sc;
    sc.id = k;
    sc.probability = 1.0 / n;
    int rid = 0;
    for (std::size_t e = 0; e < inst.categories.size(); ++e) {
      const DemandCategory& cat = inst.categories[e];
      RngStream se = sk.split(e);
      double draw = cat.volume.sample(se);
      long long volume = std::max<long long>(0, std::llround(round_half_even(draw)));
      const Zone& zo = inst.zones[cat.od.origin];
      const Zone& zd = inst.zones[cat.od.dest];
      bool pools = inst.reduction_rule == ReductionRule::proximity && !zo.location_pool.empty() &&
                   !zd.location_pool.empty() && zo.centroid && zd.centroid;
      for (long long r = 0; r < volume; ++r) {
        RngStream sr = se.split(static_cast<std::uint64_t>(r) + 1);
        ServiceRequest req;
        req.id = rid++;
        req.category = static_cast<int>(e);
        req.od = cat.od;
        req.passengers = cat.passengers;
        if (pools) {
          const Vec2& o = zo.location_pool[sr.next_u64() % zo.location_pool.size()];
          const Vec2& d = zd.location_pool[sr.next_u64() % zd.location_pool.size()];
          req.origin_xy = o;
          req.dest_xy = d;
          req.origin_detour = pool_detour(zo, o);
          req.dest_detour = pool_detour(zd, d);
        } else {
          req.origin_detour = zo.detour_dist.sample(sr);
          req.dest_detour = zd.detour_dist.sample(sr);
        }
        req.adhoc_cost = inst.default_adhoc_cost(cat.od);
        sc.requests.push_back(std::move(req));
      }
    }
    sc.zone_matrices = build_scenario_matrices(inst, sc.requests);
    out.push_back(std::move(sc));
  }
  return out;
}

std::vector<Scenario> fixed_scenarios(const ServiceInstance& inst) {
  std::vector<Scenario> out;
  double total_p = 0.0;
  for (const FixedScenarioSpec& spec : inst.fixed_scenarios) total_p += spec.probability;
  if (!inst.fixed_scenarios.empty() && std::abs(total_p - 1.0) > 1e-9)
    throw Error(Errc::invalid_argument, "fixed scenario probabilities must sum to 1");
  int k = 0;
  for (const FixedScenarioSpec& spec : inst.fixed_scenarios) {
    Scenario sc;
    sc.id = k++;
    sc.probability = spec.probability;
    sc.requests = spec.requests;
    for (std::size_t i = 0; i < sc.requests.size(); ++i) {
      sc.requests[i].id = static_cast<int>(i);
      if (sc.requests[i].adhoc_cost < 0.0)
        sc.requests[i].adhoc_cost = inst.default_adhoc_cost(sc.requests[i].od);
    }
    sc.zone_matrices = build_scenario_matrices(inst, sc.requests);
    // explicit matrices override the rule-built ones
    for (const auto& [zone_name, rows] : spec.matrices) {
      ZoneIndex z = inst.zone_index(zone_name);
      const int n = static_cast<int>(sc.requests.size());
      if (static_cast<int>(rows.size()) != n)
        throw Error(Errc::dimension_mismatch, "explicit detour matrix size mismatch");
      DetourMatrix m;
      m.zone = z;
      m.resize(n);
      for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i].size()) != n)
          throw Error(Errc::dimension_mismatch, "explicit detour matrix is not square");
        for (int j = 0; j < n; ++j) m.at(i, j) = rows[i][j];
      }
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (std::abs(m.at(i, j) - m.at(j, i)) > 1e-12)
            throw Error(Errc::invalid_argument, "explicit detour matrix not symmetric");
          if (i == j && m.at(i, i) < 0.0)
            throw Error(Errc::invalid_argument, "explicit detour matrix diagonal negative");
          if (i != j && m.at(i, j) > 0.0)
            throw Error(Errc::invalid_argument, "explicit detour matrix off-diagonal positive");
        }
      if (!m.reduction_bound_holds(inst.fleet.capacity))
        throw Error(Errc::invalid_argument,
                    "explicit detour matrix violates the reduction bound");
      sc.zone_matrices[z] = std::move(m);
    }
    out.push_back(std::move(sc));
  }
  return out;
}

}  // namespace flexbus
