#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "flexbus/ingest.hpp"
#include "flexbus/instance_io.hpp"

#ifndef FLEXBUS_FIXTURE_DIR
#define FLEXBUS_FIXTURE_DIR "fixtures"
#endif

namespace fs = std::filesystem;
using namespace flexbus;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error(Errc::io_error, "cannot write '" + path.string() + "'");
  f << text;
}

ReliabilityVector parse_rho0(const ServiceInstance& inst, const std::string& spec) {
  // either a single scalar or a comma list covering every component
  if (spec.find(',') == std::string::npos)
    return ReliabilityVector::uniform(inst, std::stod(spec));
  std::vector<double> vals;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  ReliabilityVector rho;
  rho.category.assign(inst.categories.size(), 0.0);
  rho.zone.assign(inst.zones.size(), 0.0);
  if (static_cast<int>(vals.size()) != rho.dimension())
    throw Error(Errc::invalid_argument, "rho list must cover every reliability component");
  for (int i = 0; i < rho.dimension(); ++i) rho.component(i) = vals[i];
  rho.validate();
  return rho;
}

std::vector<Scenario> scenarios_for(const ServiceInstance& inst, int count, std::uint64_t seed) {
  if (!inst.fixed_scenarios.empty()) return fixed_scenarios(inst);
  return sample_scenarios(inst, count, seed);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

int cmd_plan(const std::string& config, std::uint64_t seed, const std::string& out,
             int scenario_count, const std::string& rho0_spec, OptimizerConfig cfg) {
  ServiceInstance inst = load_instance(config);
  cfg.seed = seed;
  cfg.scenario_count = scenario_count;
  ReliabilityVector rho0 = parse_rho0(inst, rho0_spec);
  OptimizerResult result = run_optimizer(inst, rho0, cfg);
  write_file(fs::path(out) / "result.json", optimizer_result_to_json(inst, result));
  write_file(fs::path(out) / "plan.json", plan_to_json(inst, result.best_plan));
  std::ostringstream trace;
  write_trace_csv(result.trace, inst, trace);
  write_file(fs::path(out) / "trace.csv", trace.str());
  std::cout << "total cost " << result.best_cost << " after " << result.iterations
            << " iterations (" << (result.converged ? "converged" : "iteration cap") << ")\n";
  return 0;
}

int cmd_evaluate(const std::string& config, std::uint64_t seed, const std::string& out,
                 int scenario_count, const std::string& plan_path, const std::string& rho_spec,
                 bool dump_assignments) {
  ServiceInstance inst = load_instance(config);
  Plan plan;
  if (!plan_path.empty()) {
    std::ifstream f(plan_path);
    if (!f) throw Error(Errc::io_error, "cannot open plan '" + plan_path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    plan = plan_from_json(inst, ss.str());
  } else if (!rho_spec.empty()) {
    plan = solve_p1(inst, parse_rho0(inst, rho_spec));
  } else {
    throw Error(Errc::invalid_argument, "evaluate needs --plan or --rho");
  }
  std::vector<Scenario> scenarios = scenarios_for(inst, scenario_count, seed);
  CostReport report = evaluate(inst, plan, scenarios);
  write_file(fs::path(out) / "report.json", report_to_json(report));
  if (dump_assignments) {
    for (const Scenario& sc : scenarios) {
      Assignment a = solve_p2(inst, plan, sc);
      std::ostringstream csv;
      write_assignment_csv(sc, a, csv);
      write_file(fs::path(out) / ("assignment_" + std::to_string(sc.id) + ".csv"), csv.str());
    }
  }
  std::cout << "total cost " << report.total_cost << " (fixed " << report.fixed_cost
            << ", adhoc " << report.expected_adhoc << ")\n";
  return 0;
}

int cmd_grid(const std::string& config, std::uint64_t seed, const std::string& out, double step,
             int scenario_count, bool uniform, int scan_component, const std::string& fixed_spec) {
  ServiceInstance inst = load_instance(config);
  std::vector<Scenario> scenarios = scenarios_for(inst, scenario_count, seed);
  std::vector<GridRow> rows;
  if (scan_component >= 0) {
    ReliabilityVector fixed = parse_rho0(inst, fixed_spec.empty() ? "0.5" : fixed_spec);
    rows = rho_scan(inst, scan_component, step, fixed, scenarios);
  } else if (uniform) {
    rows = rho_grid_uniform(inst, step, scenarios);
  } else {
    rows = rho_grid(inst, step, scenarios);
  }
  std::ostringstream csv;
  write_grid_csv(rows, inst, csv);
  write_file(fs::path(out) / "grid.csv", csv.str());
  const GridRow* best = nullptr;
  for (const GridRow& r : rows)
    if (r.feasible && (!best || r.total_cost < best->total_cost)) best = &r;
  if (best) {
    std::cout << "argmin total cost " << best->total_cost << " with deployment ";
    for (std::size_t i = 0; i < best->deployment.size(); ++i)
      std::cout << (i ? "|" : "") << inst.routes[best->deployment[i]].name;
    std::cout << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& config, std::uint64_t seed, const std::string& out,
              const std::string& axis, const std::string& values_spec,
              const std::string& factors_spec, int eval_scenarios, OptimizerConfig cfg) {
  ServiceInstance base = load_instance(config);
  std::vector<double> values = parse_list(values_spec);
  std::vector<double> factors =
      factors_spec.empty() ? std::vector<double>(values.size(), 1.0) : parse_list(factors_spec);
  if (values.empty() || factors.size() != values.size())
    throw Error(Errc::invalid_argument, "sweep values/cost-factors mismatch");
  std::ostringstream csv;
  csv << "axis,value,total_cost,fixed_cost,adhoc_cost,mean_rho_I,mean_rho_II,vehicles,"
         "occupancy,total_detour,detour_per_visit,wall_seconds,iterations\n";
  csv.precision(10);
  for (std::size_t i = 0; i < values.size(); ++i) {
    ServiceInstance inst = base;
    if (axis == "capacity") {
      inst.fleet.capacity = static_cast<int>(values[i]);
      inst.fleet.cost_factor = factors[i];
    } else if (axis == "detour_limit") {
      for (Zone& z : inst.zones) z.max_detour = values[i];
    } else if (axis == "demand_multiplier") {
      for (DemandCategory& c : inst.categories) c.volume = c.volume.scaled(values[i]);
    } else {
      throw Error(Errc::invalid_argument, "unknown sweep axis '" + axis + "'");
    }
    inst.finalize();
    cfg.seed = seed + i;
    auto t0 = std::chrono::steady_clock::now();
    OptimizerResult result = run_optimizer(inst, ReliabilityVector::uniform(inst, 0.5), cfg);
    CostReport rep =
        evaluate(inst, result.best_plan, sample_scenarios(inst, eval_scenarios, seed * 977 + i));
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double mri = 0.0, mrii = 0.0;
    for (double v : result.best_rho.category) mri += v;
    for (double v : result.best_rho.zone) mrii += v;
    mri /= std::max<std::size_t>(1, result.best_rho.category.size());
    mrii /= std::max<std::size_t>(1, result.best_rho.zone.size());
    csv << axis << ',' << values[i] << ',' << rep.total_cost << ',' << rep.fixed_cost << ','
        << rep.expected_adhoc << ',' << mri << ',' << mrii << ','
        << result.best_plan.vehicles_used() << ',' << rep.occupancy << ','
        << rep.mean_total_detour << ',' << rep.detour_per_visit << ',' << wall << ','
        << result.iterations << "\n";
    std::cout << axis << "=" << values[i] << ": total " << rep.total_cost << "\n";
  }
  write_file(fs::path(out) / "sweep.csv", csv.str());
  return 0;
}

int cmd_fit_detour(const std::string& out, double side, const std::string& counts_spec,
                   int trials, std::uint64_t seed, const std::string& sampler_kind) {
  Rect zone{0.0, 0.0, side, side};
  std::function<Vec2(RngStream&)> sampler;
  if (sampler_kind == "uniform") {
    sampler = [side](RngStream& rng) {
      return Vec2{side * rng.next_double(), side * rng.next_double()};
    };
  } else if (sampler_kind == "clustered") {
    Distribution tn = Distribution::truncated_normal(side / 2.0, side * side / 16.0, 0.0, side);
    sampler = [tn](RngStream& rng) { return Vec2{tn.sample(rng), tn.sample(rng)}; };
  } else {
    throw Error(Errc::invalid_argument, "sampler must be uniform or clustered");
  }
  std::vector<int> counts;
  for (double v : parse_list(counts_spec)) counts.push_back(static_cast<int>(v));
  CurveFit fit = fit_boundary_curve(zone, sampler, counts, trials, RngStream(seed));
  std::ostringstream js;
  js << "{\n  \"exponential_ok\": " << (fit.exponential_ok ? "true" : "false");
  if (fit.exponential_ok)
    js << ",\n  \"a\": " << fit.a << ",\n  \"b\": " << fit.b << ",\n  \"c\": " << fit.c;
  js << "\n}\n";
  write_file(fs::path(out) / "curve.json", js.str());
  std::ostringstream csv;
  write_curve_samples_csv(fit.samples, csv);
  write_file(fs::path(out) / "curve_samples.csv", csv.str());
  if (fit.exponential_ok)
    std::cout << "fit a=" << fit.a << " b=" << fit.b << " c=" << fit.c << "\n";
  else
    std::cout << "exponential fit diverged; piecewise fallback written\n";
  return 0;
}

int cmd_ingest(const std::string& requests, const std::string& out, const std::string& bounds_spec,
               int nx, int ny, double window, double scale, std::uint64_t seed,
               double adhoc_ratio, double max_detour, int fleet_size, int fleet_capacity) {
  std::vector<double> b = parse_list(bounds_spec);
  if (b.size() != 4) throw Error(Errc::invalid_argument, "--bounds needs xmin,ymin,xmax,ymax");
  IngestOptions opt;
  opt.grid.bounds = {b[0], b[1], b[2], b[3]};
  opt.grid.nx = nx;
  opt.grid.ny = ny;
  opt.window_minutes = window;
  opt.demand_scale = scale;
  opt.seed = seed;
  opt.adhoc_ratio = adhoc_ratio;
  opt.max_detour = max_detour;
  opt.fleet_size = fleet_size;
  opt.fleet_capacity = fleet_capacity;
  IngestResult res = ingest_requests_file(requests, opt);
  write_file(fs::path(out) / "instance.json", instance_to_json(res.instance));
  for (std::size_t z = 0; z < res.curve_samples.size(); ++z) {
    if (res.curve_samples[z].empty()) continue;
    std::ostringstream csv;
    write_curve_samples_csv(res.curve_samples[z], csv);
    write_file(fs::path(out) / ("curve_" + res.instance.zones[z].name + ".csv"), csv.str());
  }
  std::cout << "parsed " << res.parsed << ", kept " << res.kept << ", dropped intra-zone "
            << res.dropped_intra_zone << ", dropped out-of-bounds " << res.dropped_out_of_bounds
            << "\n";
  for (const std::string& w : res.warnings) std::cout << "warning: " << w << "\n";
  return 0;
}

int cmd_check(const std::string& fixture_dir, std::uint64_t seed, bool skip_grid) {
  int failures = 0;
  auto verdict = [&](const std::string& name, bool ok, const std::string& detail = "") {
    std::cout << (ok ? "PASS" : "FAIL") << "  " << name;
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++failures;
  };
  // exact single-scenario fixture
  {
    ServiceInstance inst = load_instance(fixture_dir + "/appendix_a.json");
    std::vector<Scenario> sc = fixed_scenarios(inst);
    P0Result p0 = solve_p0_exact(inst, sc);
    verdict("fixture generous limits: cost 10", std::abs(p0.expected_cost - 10.0) < 1e-9,
            "got " + std::to_string(p0.expected_cost));
    ServiceInstance tight = load_instance(fixture_dir + "/appendix_a_tight.json");
    std::vector<Scenario> sct = fixed_scenarios(tight);
    P0Result p0t = solve_p0_exact(tight, sct);
    bool cost_ok = std::abs(p0t.expected_cost - 13.0) < 1e-9;
    Plan plan = plan_from_deployment(tight, p0t.deployment);
    Assignment a = solve_p2(tight, plan, sct[0]);
    bool served_ok = a.vehicle.size() == 4 && a.vehicle[0] >= 0 && a.vehicle[1] >= 0 &&
                     a.vehicle[2] < 0 && a.vehicle[3] >= 0;
    verdict("fixture tight limits: cost 13, request 3 ad hoc", cost_ok && served_ok,
            "got " + std::to_string(p0t.expected_cost));
  }
  // stochastic three-zone grid
  if (!skip_grid) {
    ServiceInstance inst = load_instance(fixture_dir + "/three_zone.json");
    std::vector<Scenario> sc = sample_scenarios(inst, 150, seed);
    std::vector<GridRow> rows = rho_grid(inst, 0.05, sc);
    const GridRow* best = nullptr;
    const GridRow* target = nullptr;
    for (const GridRow& r : rows) {
      if (!r.feasible) continue;
      if (!best || r.total_cost < best->total_cost) best = &r;
      if (std::abs(r.rho.category[0] - 0.3) < 1e-9 && std::abs(r.rho.zone[0] - 0.25) < 1e-9 &&
          std::abs(r.rho.zone[2] - 0.3) < 1e-9)
        target = &r;
    }
    bool ok = best && target && best->deployment == target->deployment;
    verdict("grid argmin matches the (0.3, 0.25, 0.3) deployment", ok,
            best ? ("argmin cost " + std::to_string(best->total_cost)) : "no feasible cell");
  }
  // randomized equivalence micro-instances
  {
    int okc = 0;
    std::string first_note;
    for (int s = 0; s < 20; ++s) {
      ServiceInstance inst = make_random_micro_instance(seed + s);
      std::vector<Scenario> sc = sample_scenarios(inst, 1 + (s % 3), seed * 31 + s);
      EquivalenceReport rep = check_equivalence(inst, sc);
      if (rep.ok)
        ++okc;
      else if (first_note.empty() && !rep.notes.empty())
        first_note = rep.notes.front();
    }
    verdict("oracle equivalence on 20 random micro-instances", okc == 20,
            std::to_string(okc) + "/20" + (first_note.empty() ? "" : "; " + first_note));
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zonal flexible bus service planner"};
  app.require_subcommand(1);

  std::string config, out = "out", plan_path, rho_spec, axis, values_spec, factors_spec;
  std::string counts_spec = "1,2,3,4,5,6,7,8,9,10", sampler_kind = "uniform";
  std::string requests, bounds_spec, fixture_dir = FLEXBUS_FIXTURE_DIR;
  std::uint64_t seed = 1;
  int scenario_count = 150, eval_scenarios = 200, trials = 1000;
  int nx = 3, ny = 3, scan_component = -1;
  double step = 0.05, side = 2708.43, window = 15.0, scale = 1.0;
  double adhoc_ratio = 0.9, max_detour = 15.0;
  int fleet_size = 45, fleet_capacity = 10;
  bool uniform = false, dump_assignments = false, skip_grid = false;
  std::string rho0_spec = "0.5";
  OptimizerConfig cfg;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--config", config, "instance config json")->required();
    c->add_option("--seed", seed, "random seed");
    c->add_option("--out", out, "output directory");
  };

  CLI::App* plan = app.add_subcommand("plan", "optimize the service reliabilities");
  add_common(plan);
  plan->add_option("--scenarios", scenario_count, "Monte Carlo scenario count");
  plan->add_option("--rho0", rho0_spec, "initial reliability (scalar or comma list)");
  plan->add_option("--max-iterations", cfg.max_iterations);
  plan->add_option("--stop-tol", cfg.stop_rel_change);
  plan->add_option("--lambda", cfg.lambda);
  plan->add_option("--gamma", cfg.gamma);
  plan->add_option("--alpha", cfg.alpha);

  CLI::App* ev = app.add_subcommand("evaluate", "Monte Carlo evaluation of a plan");
  add_common(ev);
  ev->add_option("--scenarios", scenario_count);
  ev->add_option("--plan", plan_path, "plan json produced by 'plan'");
  ev->add_option("--rho", rho_spec, "solve phase-1 at this reliability instead");
  ev->add_flag("--dump-assignments", dump_assignments, "write per-scenario assignment csv");

  CLI::App* grid = app.add_subcommand("grid", "enumerate the reliability grid");
  add_common(grid);
  grid->add_option("--step", step);
  grid->add_option("--scenarios", scenario_count);
  grid->add_flag("--uniform", uniform, "sweep one scalar for all components");
  grid->add_option("--scan", scan_component, "fine-scan a single component index");
  grid->add_option("--fixed", rho_spec, "fixed reliabilities for --scan");

  CLI::App* sweep = app.add_subcommand("sweep", "sensitivity sweep over an instance axis");
  add_common(sweep);
  sweep->add_option("--axis", axis, "capacity | detour_limit | demand_multiplier")->required();
  sweep->add_option("--values", values_spec, "comma list")->required();
  sweep->add_option("--cost-factors", factors_spec, "comma list parallel to --values");
  sweep->add_option("--eval-scenarios", eval_scenarios);
  sweep->add_option("--scenarios", cfg.scenario_count);
  sweep->add_option("--max-iterations", cfg.max_iterations);

  CLI::App* fit = app.add_subcommand("fit-detour", "fit the boundary detour curve");
  fit->add_option("--out", out);
  fit->add_option("--side", side, "square zone side length in meters");
  fit->add_option("--counts", counts_spec);
  fit->add_option("--trials", trials);
  fit->add_option("--seed", seed);
  fit->add_option("--sampler", sampler_kind, "uniform | clustered");

  CLI::App* ing = app.add_subcommand("ingest", "build an instance from ride request records");
  ing->add_option("--requests", requests, "csv of ride records")->required();
  ing->add_option("--out", out);
  ing->add_option("--bounds", bounds_spec, "xmin,ymin,xmax,ymax")->required();
  ing->add_option("--nx", nx);
  ing->add_option("--ny", ny);
  ing->add_option("--window", window, "demand window minutes");
  ing->add_option("--scale", scale, "demand volume scale");
  ing->add_option("--seed", seed);
  ing->add_option("--adhoc-ratio", adhoc_ratio);
  ing->add_option("--max-detour", max_detour);
  ing->add_option("--fleet-size", fleet_size);
  ing->add_option("--fleet-capacity", fleet_capacity);

  CLI::App* check = app.add_subcommand("check", "run the bundled verification suites");
  check->add_option("--fixtures", fixture_dir, "fixture directory");
  check->add_option("--seed", seed);
  check->add_flag("--skip-grid", skip_grid, "skip the long grid reproduction");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan) return cmd_plan(config, seed, out, scenario_count, rho0_spec, cfg);
    if (*ev)
      return cmd_evaluate(config, seed, out, scenario_count, plan_path, rho_spec,
                          dump_assignments);
    if (*grid)
      return cmd_grid(config, seed, out, step, scenario_count, uniform, scan_component, rho_spec);
    if (*sweep)
      return cmd_sweep(config, seed, out, axis, values_spec, factors_spec, eval_scenarios, cfg);
    if (*fit) return cmd_fit_detour(out, side, counts_spec, trials, seed, sampler_kind);
    if (*ing)
      return cmd_ingest(requests, out, bounds_spec, nx, ny, window, scale, seed, adhoc_ratio,
                        max_detour, fleet_size, fleet_capacity);
    if (*check) return cmd_check(fixture_dir, seed, skip_grid);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
