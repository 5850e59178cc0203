#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flexbus/common.hpp"

namespace flexbus::milp {

enum class VarKind { continuous, integer, binary };
enum class Sense { le, eq, ge };

struct Variable {
  std::string name;
  VarKind kind = VarKind::continuous;
  double lb = 0.0;
  double ub = kInf;
};

using LinExpr = std::vector<std::pair<int, double>>;  // (variable, coefficient)

struct Constraint {
  std::string name;
  LinExpr coeffs;
  Sense sense = Sense::le;
  double rhs = 0.0;
};

class Model {
 public:
  int add_variable(std::string name, VarKind kind, double lb = 0.0, double ub = kInf);
  int add_binary(std::string name) { return add_variable(std::move(name), VarKind::binary, 0, 1); }
  int add_integer(std::string name, double ub = kInf) {
    return add_variable(std::move(name), VarKind::integer, 0.0, ub);
  }
  int add_continuous(std::string name, double lb = 0.0, double ub = kInf) {
    return add_variable(std::move(name), VarKind::continuous, lb, ub);
  }
  int add_constraint(std::string name, LinExpr coeffs, Sense sense, double rhs);

  void set_variable_bounds(int var, double lb, double ub);
  void set_variable_kind(int var, VarKind kind);

  void add_objective(int var, double coeff);
  void set_objective_constant(double c) { obj_constant_ = c; }

  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_constraints() const { return static_cast<int>(cons_.size()); }
  const Variable& variable(int i) const { return vars_[i]; }
  const Constraint& constraint(int i) const { return cons_[i]; }
  double objective_coeff(int i) const { return obj_[i]; }
  double objective_constant() const { return obj_constant_; }

  // rows registered by linearize_bilinear_indicator, audited after solving
  struct IndicatorRow {
    int row = -1;
    int x = -1;
    double slack_bound = 0.0;  // the headroom the bound must provide when x = 0
  };
  const std::vector<IndicatorRow>& indicator_rows() const { return indicator_rows_; }
  void register_indicator_row(IndicatorRow r) { indicator_rows_.push_back(r); }

  // higher-priority integer variables branch first
  void set_branch_priority(int var, int priority) { priority_[var] = priority; }
  int branch_priority(int var) const {
    auto it = priority_.find(var);
    return it == priority_.end() ? 0 : it->second;
  }

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> cons_;
  std::vector<double> obj_;
  double obj_constant_ = 0.0;
  std::vector<IndicatorRow> indicator_rows_;
  std::map<int, int> priority_;
};

enum class SolveStatus { optimal, infeasible, unbounded, limit };

struct Solution {
  SolveStatus status = SolveStatus::infeasible;
  double objective = 0.0;
  std::vector<double> values;
  long long node_count = 0;
  double wall_seconds = 0.0;
  // solver diagnostics
  long long pivots = 0;
  long long basis_rebuilds = 0;
  long long basis_rebases = 0;
};

struct SolveLimits {
  long long max_nodes = 20'000'000;
  double time_limit_seconds = 0.0;  // 0 disables the (non-deterministic) time cut-off
  double feas_tol = 1e-6;
  double int_tol = 1e-6;
};

// Exact product of two binaries as a continuous [0,1] variable with the
// standard triple z <= x, z <= y, z >= x + y - 1.
int linearize_product(Model& model, int x, int y);

// Indicator-style big-M family: when x = 1 each expression must satisfy
// expr <= cap, when x = 0 the rows are released up to bound*cap.
void linearize_bilinear_indicator(Model& model, int x, const std::vector<LinExpr>& exprs,
                                  double cap, double bound);

// hint: optional feasible point used as the initial incumbent (validated
// against the constraints before use).
Solution solve(const Model& model, const SolveLimits& limits = {},
               const std::vector<double>* hint = nullptr);

void export_lp(const Model& model, std::ostream& os);
void export_lp_file(const Model& model, const std::string& path);
Model import_lp(std::istream& is);
Model import_lp_file(const std::string& path);

}  // namespace flexbus::milp
