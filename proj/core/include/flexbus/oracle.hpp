#pragma once

#include <string>
#include <vector>

#include "flexbus/phase2.hpp"

namespace flexbus {

// Canonical fleet deployment: sorted route ids of routed vehicles.
using Deployment = std::vector<int>;

struct P0Result {
  Deployment deployment;
  double fixed_cost = 0.0;
  double expected_cost = 0.0;
  long long deployments_tried = 0;
};

Plan plan_from_deployment(const ServiceInstance& inst, const Deployment& d);

// Exact two-stage optimum by enumeration over canonical deployments, with
// per-scenario recourse solved by the phase-2 engine.
P0Result solve_p0_exact(const ServiceInstance& inst, const std::vector<Scenario>& scenarios,
                        long long max_enumerations = 100000);

struct GridRow {
  ReliabilityVector rho;
  bool feasible = true;
  double fixed_cost = 0.0;
  double expected_adhoc = 0.0;
  double total_cost = 0.0;
  Deployment deployment;
};

// Full factorial sweep over every reliability component (guarded to <= 3
// components) on a shared scenario set.
std::vector<GridRow> rho_grid(const ServiceInstance& inst, double step,
                              const std::vector<Scenario>& scenarios);

// Sweep of a single scalar applied to all components uniformly.
std::vector<GridRow> rho_grid_uniform(const ServiceInstance& inst, double step,
                                      const std::vector<Scenario>& scenarios);

// Fine scan of one component with the others held fixed.
std::vector<GridRow> rho_scan(const ServiceInstance& inst, int component, double step,
                              const ReliabilityVector& fixed,
                              const std::vector<Scenario>& scenarios);

// Same scan, but every cell draws a fresh scenario set (the experimental
// protocol behind the published cost-vs-reliability curves; the Monte Carlo
// spread is part of the picture).
std::vector<GridRow> rho_scan_resampled(const ServiceInstance& inst, int component, double step,
                                        const ReliabilityVector& fixed, int scenario_count,
                                        std::uint64_t seed);

struct EquivalenceReport {
  bool ok = false;
  bool forward_feasible = false;   // sampled P1-P2 solutions satisfy the two-stage constraints
  bool backward_matched = false;   // constructed reliabilities reproduce the exact optimum cost
  double p0_cost = 0.0;
  double constructed_p1_cost = 0.0;
  double p0_fixed_cost = 0.0;
  std::vector<std::string> notes;
};

// Propositions 1-3 as an executable check on an instance satisfying the
// direct-route assumptions.
EquivalenceReport check_equivalence(const ServiceInstance& inst,
                                    const std::vector<Scenario>& scenarios);

// Random micro-instance generator for the equivalence and increment suites:
// <= 3 zones, direct routes from links, at least one single-passenger
// category per OD, small fleet.
ServiceInstance make_random_micro_instance(std::uint64_t seed);

}  // namespace flexbus
