#include "flexbus/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace flexbus {

namespace {

struct Record {
  Vec2 origin, dest;
  long long timestamp = 0;
  int passengers = 1;
};

Record parse_record(const std::string& line, long long line_no) {
  Record r;
  std::istringstream ss(line);
  std::string field;
  double vals[5];
  for (int i = 0; i < 5; ++i) {
    if (!std::getline(ss, field, ','))
      throw Error(Errc::parse_error,
                  "requests csv line " + std::to_string(line_no) + ": missing field");
    try {
      vals[i] = std::stod(field);
    } catch (...) {
      throw Error(Errc::parse_error,
                  "requests csv line " + std::to_string(line_no) + ": bad number '" + field + "'");
    }
  }
  if (!std::getline(ss, field, ','))
    throw Error(Errc::parse_error,
                "requests csv line " + std::to_string(line_no) + ": missing passengers");
  int pax;
  try {
    pax = std::stoi(field);
  } catch (...) {
    throw Error(Errc::parse_error,
                "requests csv line " + std::to_string(line_no) + ": bad passengers");
  }
  if (pax < 1)
    throw Error(Errc::parse_error,
                "requests csv line " + std::to_string(line_no) + ": passengers must be >= 1");
  for (double v : vals)
    if (!std::isfinite(v))
      throw Error(Errc::parse_error,
                  "requests csv line " + std::to_string(line_no) + ": non-finite coordinate");
  r.origin = {vals[0], vals[1]};
  r.dest = {vals[2], vals[3]};
  r.timestamp = static_cast<long long>(vals[4]);
  r.passengers = pax;
  return r;
}

std::string cell_name(int idx) {
  std::string s;
  while (true) {
    s.insert(s.begin(), static_cast<char>('A' + idx % 26));
    idx = idx / 26 - 1;
    if (idx < 0) break;
  }
  return s;
}

}  // namespace

IngestResult ingest_requests(std::istream& csv, const IngestOptions& opt) {
  if (opt.grid.nx < 1 || opt.grid.ny < 1 || !(opt.grid.bounds.width() > 0.0) ||
      !(opt.grid.bounds.height() > 0.0))
    throw Error(Errc::invalid_argument, "ingest: bad grid zoning");
  IngestResult out;
  const Rect& b = opt.grid.bounds;
  const int nz = opt.grid.nx * opt.grid.ny;
  double cw = b.width() / opt.grid.nx;
  double ch = b.height() / opt.grid.ny;
  auto cell_of = [&](const Vec2& p) -> int {
    if (p.x < b.x_min || p.x > b.x_max || p.y < b.y_min || p.y > b.y_max) return -1;
    int cx = std::min(opt.grid.nx - 1, static_cast<int>((p.x - b.x_min) / cw));
    int cy = std::min(opt.grid.ny - 1, static_cast<int>((p.y - b.y_min) / ch));
    return cy * opt.grid.nx + cx;
  };

  std::string line;
  long long line_no = 0;
  bool header_skipped = false;
  struct Kept {
    int oz, dz;
    Record rec;
  };
  std::vector<Kept> kept;
  while (std::getline(csv, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!header_skipped) {
      header_skipped = true;
      if (line.find("origin_x") != std::string::npos) continue;  // header row
    }
    Record rec = parse_record(line, line_no);
    ++out.parsed;
    if (!opt.weekdays.empty()) {
      int weekday = static_cast<int>(((rec.timestamp / 86400) % 7 + 7) % 7);
      if (std::find(opt.weekdays.begin(), opt.weekdays.end(), weekday) == opt.weekdays.end()) {
        // filtered records do not count against the conservation tally
        --out.parsed;
        continue;
      }
    }
    int oz = cell_of(rec.origin);
    int dz = cell_of(rec.dest);
    if (oz < 0 || dz < 0) {
      ++out.dropped_out_of_bounds;
      continue;
    }
    if (oz == dz) {
      ++out.dropped_intra_zone;
      continue;
    }
    ++out.kept;
    kept.push_back({oz, dz, rec});
  }
  if (out.dropped_out_of_bounds > 0)
    out.warnings.push_back(std::to_string(out.dropped_out_of_bounds) +
                           " records outside the zoning grid were dropped");
  if (out.dropped_intra_zone > 0)
    out.warnings.push_back(std::to_string(out.dropped_intra_zone) +
                           " intra-zone records were dropped");
  if (kept.empty()) out.warnings.push_back("no usable inter-zone records; demand set is empty");

  ServiceInstance& inst = out.instance;
  inst.name = "ingested";
  std::vector<std::vector<double>> zone_detours(nz);
  for (int z = 0; z < nz; ++z) {
    int cx = z % opt.grid.nx, cy = z / opt.grid.nx;
    Zone zone;
    zone.name = cell_name(z);
    zone.max_detour = opt.max_detour;
    zone.centroid = Vec2{b.x_min + (cx + 0.5) * cw, b.y_min + (cy + 0.5) * ch};
    inst.zones.push_back(std::move(zone));
  }
  for (const Kept& k : kept) {
    auto& zo = inst.zones[k.oz];
    auto& zd = inst.zones[k.dz];
    zo.location_pool.push_back(k.rec.origin);
    zd.location_pool.push_back(k.rec.dest);
    double od = std::hypot(k.rec.origin.x - zo.centroid->x, k.rec.origin.y - zo.centroid->y) *
                kMinutesPerMeter;
    double dd = std::hypot(k.rec.dest.x - zd.centroid->x, k.rec.dest.y - zd.centroid->y) *
                kMinutesPerMeter;
    zone_detours[k.oz].push_back(od);
    zone_detours[k.dz].push_back(dd);
  }
  // per-zone empirical detour law and boundary curve
  out.curve_samples.resize(nz);
  RngStream curve_rng(opt.seed, 404);
  for (int z = 0; z < nz; ++z) {
    Zone& zone = inst.zones[z];
    if (zone_detours[z].empty()) {
      zone.detour_dist = Distribution::empirical({0.0}, {1.0});
      zone.boundary_curve = BoundaryDetourCurve::exponential(0.0, 0.3, 0.0);
      continue;
    }
    zone.detour_dist = Distribution::empirical(
        zone_detours[z], std::vector<double>(zone_detours[z].size(), 1.0));
    int cx = z % opt.grid.nx, cy = z / opt.grid.nx;
    Rect cell{b.x_min + cx * cw, b.y_min + cy * ch, b.x_min + (cx + 1) * cw,
              b.y_min + (cy + 1) * ch};
    const std::vector<Vec2>& pool = zone.location_pool;
    auto sampler = [&pool](RngStream& rng) { return pool[rng.next_u64() % pool.size()]; };
    CurveFit fit = fit_boundary_curve(cell, sampler, opt.curve_counts, opt.curve_trials,
                                      curve_rng.split(z));
    out.curve_samples[z] = fit.samples;
    zone.boundary_curve = fit.curve;
    if (!fit.exponential_ok)
      out.warnings.push_back("zone " + zone.name +
                             ": exponential fit diverged, using the piecewise curve");
    // keep the serviceability invariant: one request must fit the budget
    if (2.0 * zone.boundary_curve(1.0) > zone.max_detour)
      throw Error(Errc::invalid_argument,
                  "zone " + zone.name + ": boundary detour exceeds half the zone budget");
  }
  // demand categories per (OD, party size) from time-window counts
  std::set<long long> windows;
  double wsec = opt.window_minutes * 60.0;
  for (const Kept& k : kept)
    windows.insert(static_cast<long long>(std::floor(k.rec.timestamp / wsec)));
  std::map<std::tuple<int, int, int>, std::map<long long, long long>> counts;
  for (const Kept& k : kept)
    counts[{k.oz, k.dz, k.rec.passengers}]
          [static_cast<long long>(std::floor(k.rec.timestamp / wsec))] += 1;
  for (const auto& [key, per_window] : counts) {
    auto [oz, dz, pax] = key;
    DemandCategory cat;
    cat.name = inst.zones[oz].name + inst.zones[dz].name + "_" + std::to_string(pax);
    cat.od = {oz, dz};
    cat.passengers = pax;
    std::vector<double> volumes;
    for (long long w : windows) {
      auto it = per_window.find(w);
      double v = it == per_window.end() ? 0.0 : static_cast<double>(it->second);
      volumes.push_back(round_half_even(v * opt.demand_scale));
    }
    cat.volume =
        Distribution::empirical(volumes, std::vector<double>(volumes.size(), 1.0), true);
    inst.categories.push_back(std::move(cat));
  }
  // grid links: edge-sharing and corner-sharing neighbors
  for (int z = 0; z < nz; ++z) {
    int cx = z % opt.grid.nx, cy = z / opt.grid.nx;
    auto add = [&](int ox, int oy, double cost) {
      int nx = cx + ox, ny = cy + oy;
      if (nx < 0 || ny < 0 || nx >= opt.grid.nx || ny >= opt.grid.ny) return;
      inst.links.push_back({z, ny * opt.grid.nx + nx, cost});
    };
    add(1, 0, opt.link_cost_side);
    add(0, 1, opt.link_cost_side);
    add(1, 1, opt.link_cost_corner);
    add(1, -1, opt.link_cost_corner);
  }
  inst.routes_auto = true;
  inst.fleet.size = opt.fleet_size;
  inst.fleet.capacity = opt.fleet_capacity;
  inst.adhoc_ratio = opt.adhoc_ratio;
  inst.reduction_rule = ReductionRule::proximity;
  inst.proximity_max_dist = std::hypot(cw, ch);
  if (!inst.categories.empty()) inst.finalize();
  return out;
}

IngestResult ingest_requests_file(const std::string& path, const IngestOptions& opt) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::io_error, "cannot open requests file '" + path + "'");
  return ingest_requests(f, opt);
}

}  // namespace flexbus
