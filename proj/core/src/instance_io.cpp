#include "flexbus/instance_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace flexbus {

using nlohmann::json;

namespace {

Distribution parse_distribution(const json& j, bool integer_valued) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "tn") {
    double hi = j.contains("hi") ? j.at("hi").get<double>() : kInf;
    return Distribution::truncated_normal(j.at("mu").get<double>(), j.at("var").get<double>(),
                                          j.value("lo", 0.0), hi, integer_valued);
  }
  if (kind == "lognormal")
    return Distribution::lognormal(j.at("shape").get<double>(), j.at("scale").get<double>(),
                                   integer_valued);
  if (kind == "empirical")
    return Distribution::empirical(j.at("values").get<std::vector<double>>(),
                                   j.at("weights").get<std::vector<double>>(), integer_valued);
  throw Error(Errc::parse_error, "unknown distribution kind '" + kind + "'");
}

json distribution_to_json(const Distribution& d) {
  json j;
  switch (d.kind()) {
    case DistKind::truncated_normal:
      j["kind"] = "tn";
      j["mu"] = d.tn_mu();
      j["var"] = d.tn_sigma() * d.tn_sigma();
      j["lo"] = d.tn_lo();
      if (std::isfinite(d.tn_hi())) j["hi"] = d.tn_hi();
      break;
    case DistKind::lognormal:
      j["kind"] = "lognormal";
      j["shape"] = d.ln_shape();
      j["scale"] = d.ln_scale();
      break;
    case DistKind::empirical:
      j["kind"] = "empirical";
      j["values"] = d.emp_values();
      j["weights"] = d.emp_weights();
      break;
  }
  return j;
}

BoundaryDetourCurve parse_curve(const json& j) {
  std::string form = j.at("form").get<std::string>();
  if (form == "linear")
    return BoundaryDetourCurve::linear(j.at("a").get<double>(), j.at("b").get<double>());
  if (form == "exponential")
    return BoundaryDetourCurve::exponential(j.at("a").get<double>(), j.at("b").get<double>(),
                                            j.value("c", 0.0));
  if (form == "piecewise")
    return BoundaryDetourCurve::piecewise(j.at("knots").get<std::vector<double>>());
  throw Error(Errc::parse_error, "unknown curve form '" + form + "'");
}

json curve_to_json(const BoundaryDetourCurve& c) {
  json j;
  switch (c.form()) {
    case CurveForm::linear:
      j["form"] = "linear";
      j["a"] = c.a();
      j["b"] = c.b();
      break;
    case CurveForm::exponential:
      j["form"] = "exponential";
      j["a"] = c.a();
      j["b"] = c.b();
      j["c"] = c.c();
      break;
    case CurveForm::piecewise:
      j["form"] = "piecewise";
      j["knots"] = c.knots();
      break;
  }
  return j;
}

}  // namespace

ServiceInstance parse_instance_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("instance config: ") + e.what());
  }
  try {
    if (j.value("schema_version", 1) != 1)
      throw Error(Errc::parse_error, "unsupported schema_version");
    ServiceInstance inst;
    inst.name = j.value("name", "");
    for (const json& zj : j.at("zones")) {
      Zone z;
      z.name = zj.at("id").get<std::string>();
      z.max_detour = zj.at("max_detour").get<double>();
      z.boundary_curve = parse_curve(zj.at("boundary_curve"));
      z.detour_dist = parse_distribution(zj.at("detour_dist"), false);
      if (zj.contains("centroid"))
        z.centroid = Vec2{zj["centroid"][0].get<double>(), zj["centroid"][1].get<double>()};
      if (zj.contains("location_pool"))
        for (const json& p : zj["location_pool"])
          z.location_pool.push_back({p[0].get<double>(), p[1].get<double>()});
      inst.zones.push_back(std::move(z));
    }
    if (j.contains("links"))
      for (const json& lj : j["links"])
        inst.links.push_back({inst.zone_index(lj.at("from").get<std::string>()),
                              inst.zone_index(lj.at("to").get<std::string>()),
                              lj.at("cost").get<double>()});
    if (j.contains("routes") && j["routes"].is_string()) {
      if (j["routes"].get<std::string>() != "auto")
        throw Error(Errc::parse_error, "routes must be \"auto\" or an array");
      inst.routes_auto = true;
    } else if (j.contains("routes")) {
      for (const json& rj : j["routes"]) {
        Route r;
        r.name = rj.at("id").get<std::string>();
        for (const json& zn : rj.at("zones")) r.zones.push_back(inst.zone_index(zn));
        r.operating_cost = rj.at("cost").get<double>();
        inst.routes.push_back(std::move(r));
      }
    }
    std::map<std::string, int> cat_ids;
    for (const json& cj : j.at("categories")) {
      DemandCategory c;
      c.name = cj.at("id").get<std::string>();
      c.od = {inst.zone_index(cj.at("origin").get<std::string>()),
              inst.zone_index(cj.at("dest").get<std::string>())};
      c.passengers = cj.value("passengers", 1);
      c.volume = parse_distribution(cj.at("volume_dist"), true);
      cat_ids[c.name] = static_cast<int>(inst.categories.size());
      inst.categories.push_back(std::move(c));
    }
    const json& fj = j.at("fleet");
    inst.fleet.size = fj.at("size").get<int>();
    inst.fleet.capacity = fj.at("capacity").get<int>();
    inst.fleet.cost_factor = fj.value("cost_factor", 1.0);
    inst.adhoc_ratio = j.value("adhoc_ratio", 0.9);
    if (j.contains("detour_limit_mode")) {
      const json& dm = j["detour_limit_mode"];
      inst.detour_mode.per_zone = dm.value("per_zone", true);
      if (dm.contains("per_trip") && !dm["per_trip"].is_null())
        inst.detour_mode.per_trip = dm["per_trip"].get<double>();
      if (dm.contains("per_od"))
        for (const json& oj : dm["per_od"])
          inst.detour_mode.per_od[{inst.zone_index(oj.at("origin").get<std::string>()),
                                   inst.zone_index(oj.at("dest").get<std::string>())}] =
              oj.at("limit").get<double>();
    }
    inst.m1 = j.value("m1", 1e6);
    inst.m2 = j.value("m2", 1e9);
    std::string rule = j.value("reduction_rule", "scaled_min");
    if (rule == "scaled_min")
      inst.reduction_rule = ReductionRule::scaled_min;
    else if (rule == "proximity")
      inst.reduction_rule = ReductionRule::proximity;
    else
      throw Error(Errc::parse_error, "unknown reduction_rule '" + rule + "'");
    inst.proximity_max_dist = j.value("proximity_max_dist", 0.0);
    if (j.contains("fixed_scenarios")) {
      for (const json& sj : j["fixed_scenarios"]) {
        FixedScenarioSpec spec;
        spec.probability = sj.value("probability", 1.0);
        for (const json& rj : sj.at("requests")) {
          ServiceRequest r;
          std::string cat = rj.at("category").get<std::string>();
          if (!cat_ids.count(cat))
            throw Error(Errc::parse_error, "fixed scenario references unknown category " + cat);
          r.category = cat_ids[cat];
          r.od = inst.categories[r.category].od;
          r.passengers = rj.value("passengers", inst.categories[r.category].passengers);
          r.origin_detour = rj.at("origin_detour").get<double>();
          r.dest_detour = rj.at("dest_detour").get<double>();
          r.adhoc_cost = rj.value("adhoc_cost", -1.0);
          if (rj.contains("origin_xy"))
            r.origin_xy = Vec2{rj["origin_xy"][0].get<double>(), rj["origin_xy"][1].get<double>()};
          if (rj.contains("dest_xy"))
            r.dest_xy = Vec2{rj["dest_xy"][0].get<double>(), rj["dest_xy"][1].get<double>()};
          spec.requests.push_back(std::move(r));
        }
        if (sj.contains("matrices"))
          for (auto it = sj["matrices"].begin(); it != sj["matrices"].end(); ++it)
            spec.matrices[it.key()] = it.value().get<std::vector<std::vector<double>>>();
        inst.fixed_scenarios.push_back(std::move(spec));
      }
    }
    inst.finalize();
    return inst;
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("instance config: ") + e.what());
  }
}

ServiceInstance load_instance(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::io_error, "cannot open instance file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_instance_json(ss.str());
}

std::string instance_to_json(const ServiceInstance& inst) {
  json j;
  j["schema_version"] = 1;
  j["name"] = inst.name;
  json zones = json::array();
  for (const Zone& z : inst.zones) {
    json zj;
    zj["id"] = z.name;
    zj["max_detour"] = z.max_detour;
    zj["boundary_curve"] = curve_to_json(z.boundary_curve);
    zj["detour_dist"] = distribution_to_json(z.detour_dist);
    if (z.centroid) zj["centroid"] = {z.centroid->x, z.centroid->y};
    if (!z.location_pool.empty()) {
      json pool = json::array();
      for (const Vec2& p : z.location_pool) pool.push_back({p.x, p.y});
      zj["location_pool"] = pool;
    }
    zones.push_back(zj);
  }
  j["zones"] = zones;
  json links = json::array();
  for (const Link& l : inst.links)
    links.push_back(
        {{"from", inst.zones[l.a].name}, {"to", inst.zones[l.b].name}, {"cost", l.cost}});
  j["links"] = links;
  if (inst.routes_auto) {
    j["routes"] = "auto";
  } else {
    json routes = json::array();
    for (const Route& r : inst.routes) {
      json rj;
      rj["id"] = r.name;
      json zs = json::array();
      for (ZoneIndex z : r.zones) zs.push_back(inst.zones[z].name);
      rj["zones"] = zs;
      rj["cost"] = r.operating_cost;
      routes.push_back(rj);
    }
    j["routes"] = routes;
  }
  json cats = json::array();
  for (const DemandCategory& c : inst.categories) {
    json cj;
    cj["id"] = c.name;
    cj["origin"] = inst.zones[c.od.origin].name;
    cj["dest"] = inst.zones[c.od.dest].name;
    cj["passengers"] = c.passengers;
    cj["volume_dist"] = distribution_to_json(c.volume);
    cats.push_back(cj);
  }
  j["categories"] = cats;
  j["fleet"] = {{"size", inst.fleet.size},
                {"capacity", inst.fleet.capacity},
                {"cost_factor", inst.fleet.cost_factor}};
  j["adhoc_ratio"] = inst.adhoc_ratio;
  json dm;
  dm["per_zone"] = inst.detour_mode.per_zone;
  if (inst.detour_mode.per_trip) dm["per_trip"] = *inst.detour_mode.per_trip;
  if (!inst.detour_mode.per_od.empty()) {
    json po = json::array();
    for (const auto& [od, limit] : inst.detour_mode.per_od)
      po.push_back({{"origin", inst.zones[od.origin].name},
                    {"dest", inst.zones[od.dest].name},
                    {"limit", limit}});
    dm["per_od"] = po;
  }
  j["detour_limit_mode"] = dm;
  j["m1"] = inst.m1;
  j["m2"] = inst.m2;
  j["reduction_rule"] =
      inst.reduction_rule == ReductionRule::scaled_min ? "scaled_min" : "proximity";
  if (inst.proximity_max_dist > 0.0) j["proximity_max_dist"] = inst.proximity_max_dist;
  return j.dump(2);
}

std::string plan_to_json(const ServiceInstance& inst, const Plan& plan) {
  json j;
  j["fixed_cost"] = plan.fixed_cost;
  j["vehicles_used"] = plan.vehicles_used();
  json vehicles = json::array();
  for (int v = 0; v < plan.vehicles(); ++v) {
    if (plan.vehicle_route[v] < 0) continue;
    json vj;
    vj["vehicle"] = v;
    vj["route"] = inst.routes[plan.vehicle_route[v]].name;
    json served = json::object();
    for (std::size_t e = 0; e < plan.y.size(); ++e)
      if (plan.y[e][v] > 0) served[inst.categories[e].name] = plan.y[e][v];
    vj["requests"] = served;
    vehicles.push_back(vj);
  }
  j["vehicles"] = vehicles;
  return j.dump(2);
}

Plan plan_from_json(const ServiceInstance& inst, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("plan json: ") + e.what());
  }
  std::map<std::string, int> route_ids, cat_ids;
  for (std::size_t p = 0; p < inst.routes.size(); ++p)
    route_ids[inst.routes[p].name] = static_cast<int>(p);
  for (std::size_t e = 0; e < inst.categories.size(); ++e)
    cat_ids[inst.categories[e].name] = static_cast<int>(e);
  int max_vehicle = -1;
  for (const json& vj : j.at("vehicles"))
    max_vehicle = std::max(max_vehicle, vj.at("vehicle").get<int>());
  Plan plan;
  plan.vehicle_route.assign(max_vehicle + 1, -1);
  plan.y.assign(inst.categories.size(), std::vector<long long>(max_vehicle + 1, 0));
  for (const json& vj : j.at("vehicles")) {
    int v = vj.at("vehicle").get<int>();
    std::string rn = vj.at("route").get<std::string>();
    if (!route_ids.count(rn))
      throw Error(Errc::parse_error, "plan json references unknown route '" + rn + "'");
    plan.vehicle_route[v] = route_ids[rn];
    if (vj.contains("requests"))
      for (auto it = vj["requests"].begin(); it != vj["requests"].end(); ++it) {
        if (!cat_ids.count(it.key()))
          throw Error(Errc::parse_error, "plan json references unknown category " + it.key());
        plan.y[cat_ids[it.key()]][v] = it.value().get<long long>();
      }
  }
  plan.fixed_cost = 0.0;
  for (int v = 0; v <= max_vehicle; ++v)
    if (plan.vehicle_route[v] >= 0) plan.fixed_cost += inst.effective_route_cost(plan.vehicle_route[v]);
  return plan;
}

std::string report_to_json(const CostReport& report) {
  json j;
  j["fixed_cost"] = report.fixed_cost;
  j["expected_adhoc"] = report.expected_adhoc;
  j["total_cost"] = report.total_cost;
  j["service_rate"] = report.service_rate;
  j["occupancy"] = report.occupancy;
  j["mean_total_detour"] = report.mean_total_detour;
  j["mean_max_detour"] = report.mean_max_detour;
  j["detour_per_visit"] = report.detour_per_visit;
  j["per_scenario_adhoc"] = report.per_scenario_adhoc;
  return j.dump(2);
}

std::string optimizer_result_to_json(const ServiceInstance& inst, const OptimizerResult& result) {
  json j;
  j["best_cost"] = result.best_cost;
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  json rho;
  for (std::size_t e = 0; e < inst.categories.size(); ++e)
    rho["volume"][inst.categories[e].name] = result.best_rho.category[e];
  for (std::size_t z = 0; z < inst.zones.size(); ++z)
    rho["detour"][inst.zones[z].name] = result.best_rho.zone[z];
  j["best_rho"] = rho;
  j["plan"] = json::parse(plan_to_json(inst, result.best_plan));
  j["report"] = json::parse(report_to_json(result.best_report));
  j["log"] = result.log;
  return j.dump(2);
}

void write_trace_csv(const std::vector<IterationTrace>& trace, const ServiceInstance& inst,
                     std::ostream& os) {
  os << "k";
  for (const DemandCategory& c : inst.categories) os << ",rho_I_" << c.name;
  for (const Zone& z : inst.zones) os << ",rho_II_" << z.name;
  os << ",fixed_cost,expected_adhoc,total_cost,adam,wall_seconds\n";
  os.precision(12);
  for (const IterationTrace& t : trace) {
    os << t.k;
    for (double v : t.rho.category) os << ',' << v;
    for (double v : t.rho.zone) os << ',' << v;
    os << ',' << t.fixed_cost << ',' << t.expected_adhoc << ',' << t.total_cost << ','
       << (t.adam_active ? 1 : 0) << ',' << t.wall_seconds << "\n";
  }
}

void write_grid_csv(const std::vector<GridRow>& rows, const ServiceInstance& inst,
                    std::ostream& os) {
  os << "feasible";
  for (const DemandCategory& c : inst.categories) os << ",rho_I_" << c.name;
  for (const Zone& z : inst.zones) os << ",rho_II_" << z.name;
  os << ",fixed_cost,expected_adhoc,total_cost,deployment\n";
  os.precision(12);
  for (const GridRow& r : rows) {
    os << (r.feasible ? 1 : 0);
    for (double v : r.rho.category) os << ',' << v;
    for (double v : r.rho.zone) os << ',' << v;
    os << ',' << r.fixed_cost << ',' << r.expected_adhoc << ','
       << (r.feasible ? r.total_cost : -1.0) << ',';
    for (std::size_t i = 0; i < r.deployment.size(); ++i) {
      if (i) os << '|';
      os << inst.routes[r.deployment[i]].name;
    }
    os << "\n";
  }
}

void write_assignment_csv(const Scenario& scenario, const Assignment& assignment,
                          std::ostream& os) {
  os << "request,category,vehicle\n";
  for (std::size_t d = 0; d < scenario.requests.size(); ++d) {
    os << d << ',' << scenario.requests[d].category << ',';
    if (assignment.vehicle[d] >= 0)
      os << assignment.vehicle[d];
    else
      os << "adhoc";
    os << "\n";
  }
}

void write_curve_samples_csv(const std::vector<std::pair<int, double>>& samples,
                             std::ostream& os) {
  os << "count,mean_detour\n";
  os.precision(12);
  for (auto [i, v] : samples) os << i << ',' << v << "\n";
}

}  // namespace flexbus
