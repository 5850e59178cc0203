#pragma once

#include <vector>

#include "flexbus/domain.hpp"

namespace flexbus {

// One realized demand draw: the request set plus per-zone detour matrices.
struct Scenario {
  int id = 0;
  double probability = 1.0;
  std::vector<ServiceRequest> requests;
  std::vector<DetourMatrix> zone_matrices;  // indexed by zone
};

// n equiprobable scenarios drawn from the instance's demand and detour laws.
// Scenario k depends only on (seed, k); matrices follow the instance's
// reduction rule and always satisfy the reduction bound.
std::vector<Scenario> sample_scenarios(const ServiceInstance& inst, int n, std::uint64_t seed);

// Fixture scenarios shipped inside the instance (explicit requests and,
// optionally, hand-given matrices).
std::vector<Scenario> fixed_scenarios(const ServiceInstance& inst);

// Builds the per-zone matrices for an explicit request list.
std::vector<DetourMatrix> build_scenario_matrices(const ServiceInstance& inst,
                                                  const std::vector<ServiceRequest>& requests);

}  // namespace flexbus
