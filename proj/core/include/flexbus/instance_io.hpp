#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "flexbus/optimizer.hpp"
#include "flexbus/oracle.hpp"

namespace flexbus {

// Versioned instance config (see README for the schema).
ServiceInstance parse_instance_json(const std::string& text);
ServiceInstance load_instance(const std::string& path);
std::string instance_to_json(const ServiceInstance& inst);

std::string plan_to_json(const ServiceInstance& inst, const Plan& plan);
Plan plan_from_json(const ServiceInstance& inst, const std::string& text);
std::string report_to_json(const CostReport& report);
std::string optimizer_result_to_json(const ServiceInstance& inst, const OptimizerResult& result);

void write_trace_csv(const std::vector<IterationTrace>& trace, const ServiceInstance& inst,
                     std::ostream& os);
void write_grid_csv(const std::vector<GridRow>& rows, const ServiceInstance& inst,
                    std::ostream& os);
void write_assignment_csv(const Scenario& scenario, const Assignment& assignment,
                          std::ostream& os);
void write_curve_samples_csv(const std::vector<std::pair<int, double>>& samples, std::ostream& os);

}  // namespace flexbus
