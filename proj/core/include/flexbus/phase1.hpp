#pragma once

#include <string>
#include <vector>

#include "flexbus/domain.hpp"
#include "flexbus/milp.hpp"

namespace flexbus {

// Outer-loop decision variable: one volume reliability per demand category,
// one detour reliability per zone, each in [0, 1).
struct ReliabilityVector {
  std::vector<double> category;
  std::vector<double> zone;

  static ReliabilityVector uniform(const ServiceInstance& inst, double value);
  void validate() const;
  int dimension() const { return static_cast<int>(category.size() + zone.size()); }
  double& component(int i) {
    return i < static_cast<int>(category.size()) ? category[i]
                                                 : zone[i - static_cast<int>(category.size())];
  }
  double component(int i) const {
    return i < static_cast<int>(category.size()) ? category[i]
                                                 : zone[i - static_cast<int>(category.size())];
  }
};

// Reliability-truncated demand and planned segment detours.
struct ResolvedReliability {
  std::vector<long long> delta;  // delta_e per category
  std::vector<double> tau2;      // tau^II per zone
};

struct Plan {
  std::vector<int> vehicle_route;         // route per vehicle slot, -1 idle
  std::vector<std::vector<long long>> y;  // [category][vehicle] request counts
  double fixed_cost = 0.0;

  int vehicles() const { return static_cast<int>(vehicle_route.size()); }
  long long vehicles_used() const;
  // number of service points of vehicle v in zone z
  long long ytilde(const ServiceInstance& inst, int v, ZoneIndex z) const;
  // planned detour time of vehicle v in zone z at the given tau^II
  double planned_detour(const ServiceInstance& inst, const std::vector<double>& tau2, int v,
                        ZoneIndex z) const;
  // onboard passengers when leaving each non-terminal zone of v's route
  std::vector<long long> onboard_loads(const ServiceInstance& inst, int v) const;
  // canonical vehicle-permutation-invariant form: sorted route ids of routed vehicles
  std::vector<int> deployment() const;
};

ResolvedReliability resolve_reliability(const ServiceInstance& inst, const ReliabilityVector& rho);

// Largest number of service points one vehicle can take in the zone under
// its detour budget at segment detour tau2 (the per-zone constraint is an
// interval in the count).
long long zone_service_cap(const Zone& zone, double tau2, int cap);

// Single-component P1 builder; exposes the variable layout for extraction.
// The contract form carries the boundary-detour epigraph with tangent cuts;
// the reduced form replaces the per-zone detour machinery by the equivalent
// integer bound on served points (same feasible set, far fewer rows) and is
// what the solve path uses when only per-zone budgets are active.
class P1Problem {
 public:
  enum class Form { contract, reduced };
  P1Problem(const ServiceInstance& inst, const ResolvedReliability& rr,
            Form form = Form::contract);
  const milp::Model& model() const { return model_; }
  Plan extract(const milp::Solution& sol) const;
  int trimmed_vehicles() const { return vt_; }

 private:
  void finish_common_rows(const std::vector<int>& active_cats,
                          const std::vector<OdPair>& active_ods,
                          const std::vector<std::vector<int>>& zeta, long long total_passengers);

  const ServiceInstance& inst_;
  ResolvedReliability rr_;
  milp::Model model_;
  int vt_ = 0;
  std::vector<std::vector<int>> x_;          // [route][vehicle]
  std::vector<std::vector<int>> yvar_;       // [category][vehicle], -1 when dropped
};

milp::Model build_p1(const ServiceInstance& inst, const ResolvedReliability& rr);

// Proven-optimal plan at the given reliability; throws Errc::infeasible_at_rho
// when the fleet cannot cover the truncated demand. Decomposes the instance
// internally unless decompose = false.
Plan solve_p1_resolved(const ServiceInstance& inst, const ResolvedReliability& rr,
                       bool decompose = true);
Plan solve_p1(const ServiceInstance& inst, const ReliabilityVector& rho, bool decompose = true);

// Re-evaluates the P1 constraint set from raw data; returns human-readable
// violations (empty = plan feasible).
std::vector<std::string> verify_plan(const ServiceInstance& inst, const ResolvedReliability& rr,
                                     const Plan& plan);

}  // namespace flexbus
