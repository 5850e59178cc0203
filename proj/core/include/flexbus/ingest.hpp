#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "flexbus/domain.hpp"

namespace flexbus {

struct GridZoning {
  Rect bounds;
  int nx = 3;
  int ny = 3;
};

struct IngestOptions {
  GridZoning grid;
  double window_minutes = 15.0;     // demand counting window
  std::vector<int> weekdays;        // optional filter; 0 = Thursday 1970-01-01 epoch weekday basis
  double demand_scale = 1.0;        // volume scale applied before the empirical law is built
  double adhoc_ratio = 0.9;
  double max_detour = 15.0;
  int fleet_size = 45;
  int fleet_capacity = 10;
  double link_cost_side = 5.0;      // neighbors sharing an edge
  double link_cost_corner = 7.0;    // neighbors sharing a corner only
  int curve_trials = 1000;
  std::vector<int> curve_counts = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::uint64_t seed = 1;
};

struct IngestResult {
  ServiceInstance instance;
  long long parsed = 0;
  long long kept = 0;
  long long dropped_intra_zone = 0;
  long long dropped_out_of_bounds = 0;
  std::vector<std::string> warnings;
  // per zone: (count, mean boundary detour) samples behind the fitted curves
  std::vector<std::vector<std::pair<int, double>>> curve_samples;
};

// Builds a ready-to-solve instance from raw ride records
// (origin_x,origin_y,dest_x,dest_y,timestamp,passengers).
IngestResult ingest_requests(std::istream& csv, const IngestOptions& opt);
IngestResult ingest_requests_file(const std::string& path, const IngestOptions& opt);

}  // namespace flexbus
