#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flexbus/detour.hpp"
#include "flexbus/stochastic.hpp"

namespace flexbus {

using ZoneIndex = int;

struct OdPair {
  ZoneIndex origin = -1;
  ZoneIndex dest = -1;
  friend auto operator<=>(const OdPair&, const OdPair&) = default;
};

struct Zone {
  std::string name;
  double max_detour = 0.0;  // minutes per vehicle visit budget
  BoundaryDetourCurve boundary_curve = BoundaryDetourCurve::linear(0.0, 0.0);
  Distribution detour_dist = Distribution::empirical({0.0}, {1.0});
  std::optional<Vec2> centroid;
  std::vector<Vec2> location_pool;  // historical service points (proximity rule)
};

struct Link {
  ZoneIndex a = -1;
  ZoneIndex b = -1;
  double cost = 0.0;
};

struct Route {
  std::string name;
  std::vector<ZoneIndex> zones;
  double operating_cost = 0.0;

  int zone_count() const { return static_cast<int>(zones.size()); }
  std::optional<int> position(ZoneIndex z) const {
    for (int i = 0; i < zone_count(); ++i)
      if (zones[i] == z) return i;
    return std::nullopt;
  }
  // true when the route visits od.origin strictly before od.dest
  bool traverses(const OdPair& od) const {
    auto r = position(od.origin), s = position(od.dest);
    return r && s && *r < *s;
  }
};

// Maps per-OD passenger counts to the onboard load when leaving each
// non-terminal zone of a route. Off-route ODs carry the big entry M1.
struct ConvertingMatrix {
  std::vector<ZoneIndex> row_zones;  // route zones except the last
  std::vector<OdPair> cols;          // od_set order
  std::vector<double> entries;       // row-major
  double at(int r, int c) const { return entries[static_cast<std::size_t>(r) * cols.size() + c]; }
};

struct DemandCategory {
  std::string name;
  OdPair od;
  int passengers = 1;  // per request
  Distribution volume = Distribution::empirical({0.0}, {1.0});
};

struct ServiceRequest {
  int id = 0;
  int category = -1;
  OdPair od;
  int passengers = 1;
  double origin_detour = 0.0;
  double dest_detour = 0.0;
  double adhoc_cost = 0.0;
  std::optional<Vec2> origin_xy;
  std::optional<Vec2> dest_xy;
};

struct Fleet {
  int size = 0;
  int capacity = 0;
  double cost_factor = 1.0;
};

struct DetourLimitMode {
  bool per_zone = true;
  std::optional<double> per_trip;
  std::map<OdPair, double> per_od;
};

// Explicit scenario shipped with an instance (fixture-style): realized
// requests plus optional hand-given detour matrices.
struct FixedScenarioSpec {
  double probability = 1.0;
  std::vector<ServiceRequest> requests;
  std::map<std::string, std::vector<std::vector<double>>> matrices;  // zone name -> full matrix
};

struct ServiceInstance {
  std::string name;
  std::vector<Zone> zones;
  std::vector<Link> links;
  std::vector<Route> routes;
  bool routes_auto = false;
  std::vector<DemandCategory> categories;
  std::vector<OdPair> od_set;  // declaration order of category ODs
  Fleet fleet;
  double adhoc_ratio = 0.9;
  DetourLimitMode detour_mode;
  double m1 = 1e6;
  double m2 = 1e9;
  ReductionRule reduction_rule = ReductionRule::scaled_min;
  double proximity_max_dist = 0.0;  // rule-B normalizer (zone diagonal)
  std::vector<FixedScenarioSpec> fixed_scenarios;

  ZoneIndex zone_index(const std::string& zone_name) const;
  double effective_route_cost(int route) const {
    return routes[route].operating_cost * fleet.cost_factor;
  }
  // cost of the cheapest direct connection for an OD (link shortest path when
  // links exist, otherwise the cheapest explicit end-to-end route)
  double direct_route_cost(const OdPair& od) const;
  double default_adhoc_cost(const OdPair& od) const { return adhoc_ratio * direct_route_cost(od); }

  // Fills od_set from categories, auto-generates routes when requested, and
  // enforces all structural invariants. Must be called before solving.
  void finalize();
};

ConvertingMatrix build_converting_matrix(const Route& route, const std::vector<OdPair>& od_set,
                                         double m1);

// Passenger tally per OD for one vehicle's assignment flags.
std::map<OdPair, long long> od_load(const std::vector<std::uint8_t>& assignment,
                                    const std::vector<ServiceRequest>& requests);

// One shortest route per OD over the link graph (deterministic lexicographic
// tie-break on the zone index sequence).
std::vector<Route> shortest_direct_routes(const std::vector<Link>& links, int zone_count,
                                          const std::vector<OdPair>& od_set,
                                          const std::vector<Zone>& zones);

struct SubInstance {
  ServiceInstance instance;
  std::vector<int> category_ids;  // indices into the parent instance
  std::vector<int> route_ids;
};

// Connected components of the bipartite serving relation between demand
// categories and routes. Routes serving no category are dropped.
std::vector<SubInstance> decompose_instance(const ServiceInstance& instance);

}  // namespace flexbus
