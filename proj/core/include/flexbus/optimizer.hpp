#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flexbus/phase2.hpp"

namespace flexbus {

struct OptimizerConfig {
  int max_iterations = 50;
  double stop_rel_change = 0.01;  // 1% stopping rule
  int scenario_count = 150;
  std::uint64_t seed = 1;
  double lambda = 0.005;  // analytic step scale
  double gamma = 0.05;    // incumbent pull
  double alpha = 0.2;     // Adam learning rate
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-6;
  double detour_bump_eps = 1e-6;
  int max_bumps_per_component = 10;
  double infeasibility_backoff = 0.9;
  int stall_limit = 3;
};

struct IterationTrace {
  int k = 0;
  ReliabilityVector rho;
  double fixed_cost = 0.0;
  double expected_adhoc = 0.0;
  double total_cost = 0.0;
  bool adam_active = false;
  double wall_seconds = 0.0;
};

struct OptimizerResult {
  ReliabilityVector best_rho;
  Plan best_plan;
  CostReport best_report;
  double best_cost = kInf;
  std::vector<IterationTrace> trace;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> log;
};

// Memoizes total cost per canonical deployment; a permuted-vehicle plan hits
// the same entry.
class SolutionCache {
 public:
  explicit SolutionCache(const ServiceInstance& inst, const std::vector<Scenario>& scenarios)
      : inst_(inst), scenarios_(scenarios) {}

  // returns (fixed cost, expected ad hoc cost)
  std::pair<double, double> evaluate(const Plan& plan);
  long long hits() const { return hits_; }
  long long misses() const { return misses_; }

 private:
  const ServiceInstance& inst_;
  const std::vector<Scenario>& scenarios_;
  std::map<std::vector<int>, std::pair<double, double>> map_;
  long long hits_ = 0;
  long long misses_ = 0;
};

// Maximum demand increment of one category that provably keeps the phase-1
// optimum unchanged (summed over routed vehicles able to take it).
long long max_demand_increment(const ServiceInstance& inst, const ResolvedReliability& rr,
                               const Plan& plan, int category);

// Maximum uniform increase of a zone's segment detour that keeps every
// vehicle inside its detour budget.
double max_detour_increment(const ServiceInstance& inst, const ResolvedReliability& rr,
                            const Plan& plan, ZoneIndex zone);

// Perturbation-analysis gradient of the total cost at rho. Components whose
// distribution support is exhausted (or that stay flat through the bump cap)
// come back as zero, with a log entry.
std::vector<double> sensitivity(const ServiceInstance& inst, const ReliabilityVector& rho,
                                const ResolvedReliability& rr, const Plan& plan,
                                double total_cost, SolutionCache& cache,
                                const OptimizerConfig& cfg, std::vector<std::string>& log);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  int t = 0;
};

// One Adam update; returns the new iterate (before projection).
std::vector<double> adam_step(AdamState& state, const std::vector<double>& rho,
                              const std::vector<double>& grad, const OptimizerConfig& cfg);

// Analytic step of the gradient procedure.
std::vector<double> analytic_step(const std::vector<double>& rho, const std::vector<double>& grad,
                                  double total_cost, double best_cost,
                                  const OptimizerConfig& cfg);

// clamp into [0, 1)
void project_reliability(ReliabilityVector& rho);

// Point-estimate baseline: demand at the distribution means (rounded), segment
// detours at their means.
ResolvedReliability mean_point_estimate(const ServiceInstance& inst);

// The full outer loop.
OptimizerResult run_optimizer(const ServiceInstance& inst, const ReliabilityVector& rho0,
                              const OptimizerConfig& cfg);
OptimizerResult run_optimizer(const ServiceInstance& inst, const ReliabilityVector& rho0,
                              const OptimizerConfig& cfg, const std::vector<Scenario>& scenarios);

}  // namespace flexbus
