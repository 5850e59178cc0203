#pragma once

#include <cstdint>
#include <vector>

#include "flexbus/milp.hpp"

namespace flexbus::milp {

// Bounded-variable revised dual simplex over a fixed constraint matrix with
// per-solve variable bounds. Columns 0..n-1 are the structural variables,
// n..n+m-1 the row slacks. The basis inverse is kept dense; warm starts
// reuse the current factorization and re-enter other bases by incremental
// pivoting.

enum class VarStatus : std::uint8_t { basic, at_lower, at_upper };

struct Basis {
  std::vector<int> basic;             // one variable per row
  std::vector<VarStatus> status;      // per column
  std::uint64_t version = 0;
};

enum class LpStatus { optimal, infeasible, iteration_limit };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;     // true costs at the returned vertex
  double bound_slack = 0.0;   // objective - bound_slack lower-bounds the LP
  std::vector<double> x;      // structural variables only
};

class SimplexSolver {
 public:
  explicit SimplexSolver(const Model& model);

  // lb/ub cover the structural variables; the warm basis (if any) must have
  // been produced by this solver instance.
  LpResult solve(const std::vector<double>& lb, const std::vector<double>& ub,
                 const Basis* warm = nullptr);

  Basis snapshot() const;
  std::uint64_t version() const { return version_; }
  long long pivot_count() const { return pivots_total_; }
  // reduced cost of a column after the latest solve
  double reduced_cost(int j) const { return dual_[j]; }
  long long rebuild_count() const { return rebuilds_; }
  long long rebase_count() const { return rebases_; }
  long long install_count() const { return installs_; }
  long long solve_count() const { return solves_; }
  VarStatus column_status(int j) const { return status_[j]; }

 private:
  void install_basis(const Basis& basis);
  void rebuild_inverse();
  void compute_basics_and_duals();
  bool dual_iterate(bool bland, int& status_out);
  void pivot(int leaving_row, int entering, double target);

  int n_ = 0;  // structural
  int m_ = 0;  // rows
  std::vector<std::vector<std::pair<int, double>>> cols_;  // structural columns, scaled
  std::vector<double> cost_;       // pricing costs (perturbed)
  std::vector<double> cost_true_;
  double pert_budget_ = 0.0;
  std::vector<double> rhs_;            // scaled
  std::vector<double> slack_lb_, slack_ub_;
  std::vector<double> lb_, ub_;        // active bounds, all columns
  std::vector<double> binv_;           // m*m row-major
  std::vector<int> basic_;
  std::vector<int> row_of_;            // var -> row when basic, else -1
  std::vector<VarStatus> status_;
  std::vector<double> x_basic_;
  std::vector<double> dual_;           // reduced costs per column
  std::uint64_t version_ = 0;
  long long pivots_total_ = 0;
  long long rebuilds_ = 0;
  long long rebases_ = 0;
  long long installs_ = 0;
  long long solves_ = 0;
  long long pivots_since_refresh_ = 0;
  double feas_tol_ = 1e-7;
  double pivot_tol_ = 1e-9;
  std::vector<double> big_ub_;         // artificial clamps (unboundedness probe)
  std::vector<double> work_col_;
  std::vector<double> work_row_;
  std::vector<double> alpha_;          // entering ratios per column

  friend class BranchAndBound;
  friend struct SimplexInspector;
  double nonbasic_value(int j) const {
    return status_[j] == VarStatus::at_upper ? ub_[j] : lb_[j];
  }
};

}  // namespace flexbus::milp
