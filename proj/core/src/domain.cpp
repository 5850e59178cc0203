#include "flexbus/domain.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>
#include <set>

namespace flexbus {

ZoneIndex ServiceInstance::zone_index(const std::string& zone_name) const {
  for (std::size_t i = 0; i < zones.size(); ++i)
    if (zones[i].name == zone_name) return static_cast<ZoneIndex>(i);
  throw Error(Errc::invalid_argument, "unknown zone '" + zone_name + "'");
}

namespace {

// Dijkstra with full-path lexicographic tie-break.
struct PathEntry {
  double dist;
  std::vector<ZoneIndex> path;
  bool operator>(const PathEntry& o) const {
    if (dist != o.dist) return dist > o.dist;
    return path > o.path;
  }
};

std::optional<PathEntry> shortest_path(const std::vector<std::vector<std::pair<int, double>>>& adj,
                                       ZoneIndex from, ZoneIndex to) {
  std::priority_queue<PathEntry, std::vector<PathEntry>, std::greater<>> pq;
  pq.push({0.0, {from}});
  std::vector<std::optional<PathEntry>> best(adj.size());
  while (!pq.empty()) {
    PathEntry cur = pq.top();
    pq.pop();
    ZoneIndex u = cur.path.back();
    if (best[u] && !(cur.dist < best[u]->dist ||
                     (cur.dist == best[u]->dist && cur.path < best[u]->path)))
      continue;
    best[u] = cur;
    if (u == to) continue;
    for (auto [v, w] : adj[u]) {
      if (std::find(cur.path.begin(), cur.path.end(), v) != cur.path.end()) continue;
      PathEntry nxt{cur.dist + w, cur.path};
      nxt.path.push_back(v);
      if (!best[v] || nxt.dist < best[v]->dist ||
          (nxt.dist == best[v]->dist && nxt.path < best[v]->path))
        pq.push(std::move(nxt));
    }
  }
  return best[to];
}

std::string route_name(const std::vector<Zone>& zones, const std::vector<ZoneIndex>& seq) {
  std::string s;
  for (ZoneIndex z : seq) s += zones[z].name;
  return s;
}

}  // namespace

std::vector<Route> shortest_direct_routes(const std::vector<Link>& links, int zone_count,
                                          const std::vector<OdPair>& od_set,
                                          const std::vector<Zone>& zones) {
  std::vector<std::vector<std::pair<int, double>>> adj(zone_count);
  for (const Link& l : links) {
    adj[l.a].push_back({l.b, l.cost});
    adj[l.b].push_back({l.a, l.cost});
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  std::vector<Route> out;
  for (const OdPair& od : od_set) {
    auto p = shortest_path(adj, od.origin, od.dest);
    if (!p)
      throw Error(Errc::unreachable_od, "no route between '" + zones[od.origin].name + "' and '" +
                                            zones[od.dest].name + "'");
    Route r;
    r.zones = p->path;
    r.operating_cost = p->dist;
    r.name = route_name(zones, r.zones);
    out.push_back(std::move(r));
  }
  return out;
}

double ServiceInstance::direct_route_cost(const OdPair& od) const {
  if (!links.empty()) {
    std::vector<std::vector<std::pair<int, double>>> adj(zones.size());
    for (const Link& l : links) {
      adj[l.a].push_back({l.b, l.cost});
      adj[l.b].push_back({l.a, l.cost});
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    auto p = shortest_path(adj, od.origin, od.dest);
    if (p) return p->dist;
  }
  double best = kInf;
  for (const Route& r : routes)
    if (r.zones.front() == od.origin && r.zones.back() == od.dest)
      best = std::min(best, r.operating_cost);
  if (!std::isfinite(best))
    throw Error(Errc::unreachable_od, "no direct route cost available for OD");
  return best;
}

void ServiceInstance::finalize() {
  if (zones.empty()) throw Error(Errc::invalid_argument, "instance has no zones");
  if (fleet.size < 1) throw Error(Errc::invalid_argument, "fleet size must be >= 1");
  for (const Zone& z : zones) {
    if (!(z.max_detour > 0.0))
      throw Error(Errc::invalid_argument, "zone '" + z.name + "': max_detour must be > 0");
    if (2.0 * z.boundary_curve(1.0) > z.max_detour + 1e-12)
      throw Error(Errc::invalid_argument,
                  "zone '" + z.name + "': 2*curve(1) exceeds the zone detour budget");
  }
  od_set.clear();
  for (const DemandCategory& c : categories) {
    if (c.od.origin == c.od.dest)
      throw Error(Errc::invalid_argument, "category '" + c.name + "': intra-zone OD");
    if (c.passengers < 1)
      throw Error(Errc::invalid_argument, "category '" + c.name + "': passengers must be >= 1");
    if (fleet.capacity < c.passengers)
      throw Error(Errc::invalid_argument,
                  "category '" + c.name + "' exceeds the vehicle capacity; unservable");
    if (std::find(od_set.begin(), od_set.end(), c.od) == od_set.end()) od_set.push_back(c.od);
  }
  if (routes_auto) {
    if (!routes.empty())
      throw Error(Errc::invalid_argument, "mixed explicit and auto route sets are not supported");
    routes = shortest_direct_routes(links, static_cast<int>(zones.size()), od_set, zones);
  }
  for (const Route& r : routes) {
    if (r.zone_count() < 2)
      throw Error(Errc::invalid_route, "route '" + r.name + "': needs at least two zones");
    if (!(r.operating_cost > 0.0))
      throw Error(Errc::invalid_route, "route '" + r.name + "': operating cost must be > 0");
    std::set<ZoneIndex> uniq(r.zones.begin(), r.zones.end());
    if (static_cast<int>(uniq.size()) != r.zone_count())
      throw Error(Errc::invalid_route, "route '" + r.name + "': repeated zone visits");
  }
  for (const OdPair& od : od_set) {
    bool covered = false;
    for (const Route& r : routes) covered = covered || r.traverses(od);
    if (!covered)
      throw Error(Errc::invalid_argument, "OD '" + zones[od.origin].name + zones[od.dest].name +
                                              "' has no traversing route");
  }
}

ConvertingMatrix build_converting_matrix(const Route& route, const std::vector<OdPair>& od_set,
                                         double m1) {
  if (route.zone_count() < 2)
    throw Error(Errc::invalid_route, "converting matrix: route needs at least two zones");
  if (od_set.empty())
    throw Error(Errc::invalid_argument, "converting matrix: empty OD set");
  ConvertingMatrix b;
  b.cols = od_set;
  b.row_zones.assign(route.zones.begin(), route.zones.end() - 1);
  b.entries.assign(b.row_zones.size() * od_set.size(), 0.0);
  for (std::size_t r = 0; r < b.row_zones.size(); ++r) {
    for (std::size_t c = 0; c < od_set.size(); ++c) {
      const OdPair& od = od_set[c];
      double e;
      if (!route.traverses(od)) {
        e = m1;
      } else {
        int zr = static_cast<int>(r);
        int pr = *route.position(od.origin);
        int ps = *route.position(od.dest);
        e = (zr >= pr && zr < ps) ? 1.0 : 0.0;
      }
      b.entries[r * od_set.size() + c] = e;
    }
  }
  return b;
}

std::map<OdPair, long long> od_load(const std::vector<std::uint8_t>& assignment,
                                    const std::vector<ServiceRequest>& requests) {
  if (assignment.size() != requests.size())
    throw Error(Errc::dimension_mismatch, "od_load: flag/request count mismatch");
  std::map<OdPair, long long> out;
  for (std::size_t i = 0; i < requests.size(); ++i)
    if (assignment[i]) out[requests[i].od] += requests[i].passengers;
  return out;
}

std::vector<SubInstance> decompose_instance(const ServiceInstance& instance) {
  const int ne = static_cast<int>(instance.categories.size());
  const int np = static_cast<int>(instance.routes.size());
  // union-find over categories [0, ne) and routes [ne, ne+np)
  std::vector<int> parent(ne + np);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  std::vector<std::vector<int>> routes_for_cat(ne);
  for (int e = 0; e < ne; ++e)
    for (int p = 0; p < np; ++p)
      if (instance.routes[p].traverses(instance.categories[e].od)) {
        unite(e, ne + p);
        routes_for_cat[e].push_back(p);
      }
  // components keyed by smallest category index for deterministic order
  std::vector<int> comp_order;
  std::map<int, std::pair<std::vector<int>, std::vector<int>>> comps;  // root -> (cats, routes)
  for (int e = 0; e < ne; ++e) {
    int r = find(e);
    if (!comps.count(r)) comp_order.push_back(r);
    comps[r].first.push_back(e);
  }
  for (int p = 0; p < np; ++p) {
    int r = find(ne + p);
    if (comps.count(r)) comps[r].second.push_back(p);  // routes with no category are dropped
  }
  std::vector<SubInstance> out;
  for (int root : comp_order) {
    auto& [cats, rts] = comps[root];
    SubInstance sub;
    sub.category_ids = cats;
    sub.route_ids = rts;
    sub.instance = instance;
    sub.instance.routes_auto = false;
    sub.instance.categories.clear();
    sub.instance.routes.clear();
    for (int e : cats) sub.instance.categories.push_back(instance.categories[e]);
    for (int p : rts) sub.instance.routes.push_back(instance.routes[p]);
    sub.instance.fixed_scenarios.clear();
    sub.instance.finalize();
    out.push_back(std::move(sub));
  }
  return out;
}

}  // namespace flexbus
