#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

#include "flexbus/milp.hpp"
#include "flexbus/simplex.hpp"

namespace flexbus::milp {

namespace {

struct NodeRec {
  int parent = -1;
  int var = -1;  // branching override; -1 at the root
  double lo = 0.0, hi = 0.0;
  Basis basis;  // warm-start snapshot for queued nodes
  // pseudocost bookkeeping
  double parent_bound = -kInf;
  double dist = 0.0;  // fractional distance covered by this child's bound change
  int dir = 0;        // 0 = down, 1 = up
};

struct QueueEntry {
  double bound;
  long long seq;
  int node;
  bool operator>(const QueueEntry& o) const {
    if (bound != o.bound) return bound > o.bound;
    return seq < o.seq;  // newest first among equal bounds
  }
};

double fractionality(double v) { return std::abs(v - std::round(v)); }

}  // namespace

namespace {

bool hint_feasible(const Model& model, const std::vector<double>& x, double tol) {
  if (static_cast<int>(x.size()) != model.num_variables()) return false;
  for (int j = 0; j < model.num_variables(); ++j) {
    const Variable& v = model.variable(j);
    if (x[j] < v.lb - tol || x[j] > v.ub + tol) return false;
    if (v.kind != VarKind::continuous && std::abs(x[j] - std::round(x[j])) > tol) return false;
  }
  for (int i = 0; i < model.num_constraints(); ++i) {
    const Constraint& c = model.constraint(i);
    double lhs = 0.0;
    double scale = 1.0;
    for (auto [j, a] : c.coeffs) {
      lhs += a * x[j];
      scale = std::max(scale, std::abs(a));
    }
    double t = tol * scale;
    switch (c.sense) {
      case Sense::le:
        if (lhs > c.rhs + t) return false;
        break;
      case Sense::ge:
        if (lhs < c.rhs - t) return false;
        break;
      case Sense::eq:
        if (std::abs(lhs - c.rhs) > t) return false;
        break;
    }
  }
  return true;
}

}  // namespace

Solution solve(const Model& model, const SolveLimits& limits, const std::vector<double>* hint) {
  auto t0 = std::chrono::steady_clock::now();
  const int n = model.num_variables();

  Solution sol;
  if (n == 0) {
    sol.status = SolveStatus::optimal;
    sol.objective = model.objective_constant();
    return sol;
  }

  std::vector<double> base_lb(n), base_ub(n);
  std::vector<int> int_vars;
  for (int j = 0; j < n; ++j) {
    const Variable& v = model.variable(j);
    base_lb[j] = v.lb;
    base_ub[j] = v.ub;
    if (v.kind != VarKind::continuous) int_vars.push_back(j);
  }

  // objective lattice: when every cost sits on integer variables and shares
  // a common quantum, fractional bounds round up to the next lattice point
  double quantum = 0.0;
  {
    bool lattice = true;
    auto fgcd = [](double a, double b) {
      while (b > 1e-7) {
        double r = std::fmod(a, b);
        if (r > b - 1e-9) r = 0.0;  // fmod noise at exact multiples
        a = b;
        b = r;
      }
      return a;
    };
    for (int j = 0; j < n && lattice; ++j) {
      double c = std::abs(model.objective_coeff(j));
      if (c == 0.0) continue;
      if (model.variable(j).kind == VarKind::continuous)
        lattice = false;
      else
        quantum = quantum == 0.0 ? c : fgcd(std::max(quantum, c), std::min(quantum, c));
    }
    if (lattice && quantum > 1e-6) {
      for (int j = 0; j < n && lattice; ++j) {
        double c = std::abs(model.objective_coeff(j));
        if (c == 0.0) continue;
        double k = c / quantum;
        if (std::abs(k - std::round(k)) > 1e-7 * k) lattice = false;
      }
    } else {
      lattice = false;
    }
    if (!lattice) quantum = 0.0;
  }
  auto lift = [&](double bound) {
    if (quantum <= 0.0) return bound;
    double steps = std::ceil(bound / quantum - 1e-9);
    return steps * quantum;
  };

  SimplexSolver lp(model);
  std::vector<NodeRec> pool(1);
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> open;

  double inc_obj = kInf;
  std::vector<double> inc_x;
  if (hint != nullptr && hint_feasible(model, *hint, limits.feas_tol)) {
    inc_x = *hint;
    for (int j : int_vars) inc_x[j] = std::round(inc_x[j]);
    inc_obj = 0.0;
    for (int j = 0; j < n; ++j) inc_obj += model.objective_coeff(j) * inc_x[j];
  }
  long long seq = 0;
  long long nodes = 0;
  bool hit_limit = false;
  bool unbounded = false;

  std::vector<double> lb, ub;
  auto resolve_bounds = [&](int node) {
    lb = base_lb;
    ub = base_ub;
    for (int cur = node; cur >= 0; cur = pool[cur].parent) {
      const NodeRec& r = pool[cur];
      if (r.var >= 0) {
        lb[r.var] = std::max(lb[r.var], r.lo);
        ub[r.var] = std::min(ub[r.var], r.hi);
      }
    }
  };

  // root relaxation info for reduced-cost fixing
  double root_bound = -kInf;
  std::vector<double> root_rc;
  std::vector<std::uint8_t> root_at_upper;
  bool have_root_info = false;
  double last_fixing_inc = kInf;

  // pseudocosts: observed bound gain per unit of fractional distance
  std::vector<double> pc_sum[2] = {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  std::vector<int> pc_cnt[2] = {std::vector<int>(n, 0), std::vector<int>(n, 0)};
  auto pc_update = [&](int var, int dir, double dist, double gain) {
    if (var < 0 || dist <= 1e-9) return;
    pc_sum[dir][var] += std::max(0.0, gain) / dist;
    pc_cnt[dir][var] += 1;
  };

  int current = 0;
  const Basis* warm = nullptr;
  bool have_node = true;
  while (have_node) {
    if (limits.max_nodes > 0 && nodes >= limits.max_nodes) {
      hit_limit = true;
      break;
    }
    if (limits.time_limit_seconds > 0.0) {
      double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (el > limits.time_limit_seconds) {
        hit_limit = true;
        break;
      }
    }
    ++nodes;
    resolve_bounds(current);
    LpResult res = lp.solve(lb, ub, warm);
    if (res.status == LpStatus::iteration_limit)
      throw Error(Errc::invalid_argument, "simplex iteration limit exceeded");

    bool prune = true;
    if (res.status == LpStatus::optimal) {
      if (nodes == 1) {
        for (int j = 0; j < n; ++j)
          if (std::abs(res.x[j]) >= 1e14) {
            unbounded = true;
            break;
          }
        if (unbounded) break;
        root_bound = res.objective - res.bound_slack;
        root_rc.assign(n, 0.0);
        root_at_upper.assign(n, 0);
        for (int j = 0; j < n; ++j) {
          if (lp.column_status(j) == VarStatus::basic) continue;
          root_rc[j] = lp.reduced_cost(j);
          root_at_upper[j] = lp.column_status(j) == VarStatus::at_upper;
        }
        have_root_info = true;
      }
      // reduced-cost fixing off the root relaxation: once moving a variable
      // away from its root bound provably reaches the incumbent, it can be
      // pinned globally
      if (have_root_info && inc_obj < kInf && inc_obj != last_fixing_inc) {
        last_fixing_inc = inc_obj;
        for (int j : int_vars) {
          if (base_lb[j] != base_ub[j] && std::isfinite(base_lb[j]) &&
              std::isfinite(base_ub[j])) {
            double span = 1.0;  // one integer step
            if (!root_at_upper[j] && root_rc[j] > 0.0 &&
                lift(root_bound + root_rc[j] * span) >= inc_obj - 1e-9)
              base_ub[j] = base_lb[j];
            else if (root_at_upper[j] && root_rc[j] < 0.0 &&
                     lift(root_bound - root_rc[j] * span) >= inc_obj - 1e-9)
              base_lb[j] = base_ub[j];
          }
        }
      }
      double node_bound = res.objective - res.bound_slack;
      pc_update(pool[current].var, pool[current].dir, pool[current].dist,
                node_bound - pool[current].parent_bound);
      if (lift(node_bound) < inc_obj - 1e-9) {
        int branch_var = -1;
        double best_frac = limits.int_tol;
        int max_prio = std::numeric_limits<int>::min();
        for (int j : int_vars)
          if (fractionality(res.x[j]) > limits.int_tol)
            max_prio = std::max(max_prio, model.branch_priority(j));
        std::vector<std::pair<double, int>> fractional;
        for (int j : int_vars) {
          if (model.branch_priority(j) != max_prio) continue;
          double f = fractionality(res.x[j]);
          if (f > limits.int_tol) fractional.push_back({-f, j});
          if (f > best_frac + 1e-12) {
            best_frac = f;
            branch_var = j;
          }
        }
        // pseudocost selection once observations exist
        if (branch_var >= 0) {
          double total = 0.0;
          int obs = 0;
          for (int j : int_vars)
            for (int dir = 0; dir < 2; ++dir)
              if (pc_cnt[dir][j] > 0) {
                total += pc_sum[dir][j] / pc_cnt[dir][j];
                ++obs;
              }
          if (obs >= 4) {
            double fallback = total / obs;
            auto mean = [&](int dir, int j) {
              return pc_cnt[dir][j] > 0 ? pc_sum[dir][j] / pc_cnt[dir][j] : fallback;
            };
            double best_score = -kInf;
            for (auto& [negf, j] : fractional) {
              double fdown = res.x[j] - std::floor(res.x[j]);
              double fup = 1.0 - fdown;
              double score =
                  std::min(mean(0, j) * fdown, mean(1, j) * fup) + 1e-6 * (-negf);
              if (score > best_score + 1e-12) {
                best_score = score;
                branch_var = j;
              }
            }
          }
        }
        // strong branching near the top of larger trees: probe both child
        // relaxations of the most fractional candidates and pick the variable
        // with the best worst-side bound
        if (branch_var >= 0 && static_cast<int>(int_vars.size()) >= 24 && nodes <= 48 &&
            fractional.size() > 1) {
          std::sort(fractional.begin(), fractional.end());
          std::size_t probes = std::min<std::size_t>(8, fractional.size());
          Basis probe_base = lp.snapshot();
          double best_score = -kInf, best_side = -kInf;
          int best_j = -1;
          for (std::size_t c = 0; c < probes; ++c) {
            int j = fractional[c].second;
            double fl = std::floor(res.x[j]), ce = std::ceil(res.x[j]);
            double child[2];
            for (int dir = 0; dir < 2; ++dir) {
              double save_lb = lb[j], save_ub = ub[j];
              if (dir == 0)
                ub[j] = fl;
              else
                lb[j] = ce;
              LpResult pr = lp.solve(lb, ub, &probe_base);
              child[dir] = pr.status == LpStatus::optimal
                               ? lift(pr.objective - pr.bound_slack)
                               : kInf;
              if (pr.status == LpStatus::optimal) {
                double dist = dir == 0 ? res.x[j] - fl : ce - res.x[j];
                pc_update(j, dir, dist, pr.objective - res.objective);
              }
              lb[j] = save_lb;
              ub[j] = save_ub;
            }
            double lo = std::min(child[0], child[1]);
            double hi = std::max(child[0], child[1]);
            if (lo > best_score + 1e-12 ||
                (lo > best_score - 1e-12 && hi > best_side + 1e-12)) {
              best_score = lo;
              best_side = hi;
              best_j = j;
            }
          }
          if (best_j >= 0) branch_var = best_j;
          // restore the node's own relaxation state for the plunge
          LpResult back = lp.solve(lb, ub, &probe_base);
          (void)back;
        }
        if (branch_var < 0) {
          // integral: adopt as incumbent with snapped integers
          inc_x = res.x;
          for (int j : int_vars) inc_x[j] = std::round(inc_x[j]);
          double obj = 0.0;
          for (int j = 0; j < n; ++j) obj += model.objective_coeff(j) * inc_x[j];
          inc_obj = obj;
        } else {
          double v = res.x[branch_var];
          double fl = std::floor(v), ce = std::ceil(v);
          int down = static_cast<int>(pool.size());
          pool.push_back({current, branch_var, -kInf, fl, {}, node_bound, v - fl, 0});
          int up = static_cast<int>(pool.size());
          pool.push_back({current, branch_var, ce, kInf, {}, node_bound, ce - v, 1});
          bool plunge_up = (v - fl) > 0.5;
          int queued = plunge_up ? down : up;
          int plunged = plunge_up ? up : down;
          pool[queued].basis = lp.snapshot();
          open.push({lift(node_bound), ++seq, queued});
          current = plunged;
          warm = &pool[queued].basis;  // same live version; no refactor
          prune = false;
        }
      }
    }
    if (prune) {
      have_node = false;
      while (!open.empty()) {
        QueueEntry top = open.top();
        open.pop();
        if (top.bound >= inc_obj - 1e-9) {
          pool[top.node].basis = Basis{};
          continue;
        }
        current = top.node;
        warm = &pool[top.node].basis;
        have_node = true;
        break;
      }
    }
  }

  sol.node_count = nodes;
  sol.pivots = lp.pivot_count();
  sol.basis_rebuilds = lp.rebuild_count();
  sol.basis_rebases = lp.rebase_count();
  sol.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (unbounded) {
    sol.status = SolveStatus::unbounded;
    return sol;
  }
  if (!inc_x.empty()) {
    sol.status = hit_limit ? SolveStatus::limit : SolveStatus::optimal;
    sol.values = inc_x;
    double obj = model.objective_constant();
    for (int j = 0; j < n; ++j) obj += model.objective_coeff(j) * inc_x[j];
    sol.objective = obj;
    // audit indicator rows: released constraints must never be binding
    for (const auto& ir : model.indicator_rows()) {
      if (inc_x[ir.x] > 0.5) continue;
      const Constraint& c = model.constraint(ir.row);
      double lhs = 0.0;
      for (auto [j, a] : c.coeffs) lhs += (j == ir.x ? 0.0 : a * inc_x[j]);
      if (lhs >= ir.slack_bound - 1e-6 * std::max(1.0, std::abs(ir.slack_bound)))
        throw Error(Errc::bound_too_small,
                    "bilinear indicator bound too small; released row is binding");
    }
  } else {
    sol.status = hit_limit ? SolveStatus::limit : SolveStatus::infeasible;
  }
  return sol;
}

}  // namespace flexbus::milp
