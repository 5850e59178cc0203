#pragma once

#include <string>
#include <vector>

#include "flexbus/milp.hpp"
#include "flexbus/phase1.hpp"
#include "flexbus/scenario.hpp"

namespace flexbus {

struct Assignment {
  std::vector<int> vehicle;  // per request; -1 = ad hoc
  double adhoc_cost = 0.0;   // Q_kappa
  long long served() const {
    long long s = 0;
    for (int v : vehicle) s += (v >= 0) ? 1 : 0;
    return s;
  }
};

struct CostReport {
  double fixed_cost = 0.0;
  double expected_adhoc = 0.0;
  double total_cost = 0.0;
  std::vector<double> per_scenario_adhoc;
  double service_rate = 1.0;      // served passengers / total passengers
  double occupancy = 0.0;         // passenger-segments / provided seat-segments
  double mean_total_detour = 0.0; // realized zonal detour summed per scenario, averaged
  double mean_max_detour = 0.0;   // per-scenario max over (vehicle, zone), averaged
  double detour_per_visit = 0.0;  // total detour / vehicle-zone visits
};

// Request-to-vehicle assignment MILP for one scenario against a fixed plan.
class P2Problem {
 public:
  // Optional subsets restrict the model to one decomposition block. Scaled-min
  // detour matrices are linearized through sorted counting variables unless
  // pairwise products are forced; explicit and proximity matrices always use
  // the product gadget.
  P2Problem(const ServiceInstance& inst, const Plan& plan, const Scenario& scenario,
            const std::vector<int>* request_subset = nullptr,
            const std::vector<int>* vehicle_subset = nullptr, bool force_pairwise = false);
  const milp::Model& model() const { return model_; }
  Assignment extract(const milp::Solution& sol) const;
  bool trivial() const { return trivial_; }  // no compatible pairs at all
  double trivial_cost() const { return trivial_cost_; }
  // model-space point for a feasible assignment (warm incumbent)
  std::vector<double> hint_from(const Assignment& a) const;

 private:
  const Scenario& scenario_;
  milp::Model model_;
  std::vector<std::vector<int>> w_;  // [request][vehicle] variable ids (-1 incompatible)
  struct CountVar {
    int var, vehicle, request;
    std::vector<int> after;  // requests counted once selected together
  };
  struct ProductVar {
    int var, vehicle, a, b;
  };
  std::vector<CountVar> count_vars_;
  std::vector<ProductVar> product_vars_;
  int served_var_ = -1;
  bool trivial_ = false;
  double trivial_cost_ = 0.0;
};

// Deterministic greedy assignment; always feasible, used as a warm incumbent.
Assignment greedy_assignment(const ServiceInstance& inst, const Plan& plan,
                             const Scenario& scenario, const std::vector<int>& requests,
                             const std::vector<int>& vehicles);

milp::Model build_p2(const ServiceInstance& inst, const Plan& plan, const Scenario& scenario);

// Proven-optimal assignment; decomposes by connected request/vehicle blocks.
Assignment solve_p2(const ServiceInstance& inst, const Plan& plan, const Scenario& scenario);

// Monte Carlo aggregation of per-scenario assignments.
CostReport evaluate(const ServiceInstance& inst, const Plan& plan,
                    const std::vector<Scenario>& scenarios);

// Independent feasibility check against the raw quadratic detour form and
// the onboard-load recursion; returns violations (empty = feasible).
std::vector<std::string> verify_assignment(const ServiceInstance& inst, const Plan& plan,
                                           const Scenario& scenario, const Assignment& a);

// Counts MILP solves triggered through solve_p2 (cache assertions in the
// optimizer tests rely on it).
long long p2_solve_count();

}  // namespace flexbus
