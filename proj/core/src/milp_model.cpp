#include <algorithm>
#include <cmath>

#include "flexbus/milp.hpp"

namespace flexbus::milp {

int Model::add_variable(std::string name, VarKind kind, double lb, double ub) {
  if (std::isnan(lb) || std::isnan(ub) || lb > ub)
    throw Error(Errc::invalid_argument, "variable '" + name + "': bad bounds");
  if (kind == VarKind::binary) {
    lb = std::max(lb, 0.0);
    ub = std::min(ub, 1.0);
  }
  Variable v;
  v.name = std::move(name);
  v.kind = kind;
  v.lb = lb;
  v.ub = ub;
  vars_.push_back(std::move(v));
  obj_.push_back(0.0);
  return static_cast<int>(vars_.size()) - 1;
}

int Model::add_constraint(std::string name, LinExpr coeffs, Sense sense, double rhs) {
  std::sort(coeffs.begin(), coeffs.end());
  LinExpr merged;
  for (auto& [j, a] : coeffs) {
    if (j < 0 || j >= num_variables())
      throw Error(Errc::invalid_argument, "constraint '" + name + "': unknown variable");
    if (!std::isfinite(a))
      throw Error(Errc::invalid_argument, "constraint '" + name + "': non-finite coefficient");
    if (!merged.empty() && merged.back().first == j)
      merged.back().second += a;
    else
      merged.push_back({j, a});
  }
  if (!std::isfinite(rhs))
    throw Error(Errc::invalid_argument, "constraint '" + name + "': non-finite rhs");
  Constraint c;
  c.name = std::move(name);
  c.coeffs = std::move(merged);
  c.sense = sense;
  c.rhs = rhs;
  cons_.push_back(std::move(c));
  return static_cast<int>(cons_.size()) - 1;
}

void Model::set_variable_bounds(int var, double lb, double ub) {
  if (var < 0 || var >= num_variables())
    throw Error(Errc::invalid_argument, "set_variable_bounds: unknown variable");
  vars_[var].lb = lb;
  vars_[var].ub = ub;
}

void Model::set_variable_kind(int var, VarKind kind) {
  if (var < 0 || var >= num_variables())
    throw Error(Errc::invalid_argument, "set_variable_kind: unknown variable");
  vars_[var].kind = kind;
  if (kind == VarKind::binary) {
    vars_[var].lb = std::max(vars_[var].lb, 0.0);
    vars_[var].ub = std::min(vars_[var].ub, 1.0);
  }
}

void Model::add_objective(int var, double coeff) {
  if (var < 0 || var >= num_variables())
    throw Error(Errc::invalid_argument, "objective references unknown variable");
  if (!std::isfinite(coeff))
    throw Error(Errc::invalid_argument, "objective coefficient not finite");
  obj_[var] += coeff;
}

int linearize_product(Model& model, int x, int y) {
  if (model.variable(x).kind != VarKind::binary || model.variable(y).kind != VarKind::binary)
    throw Error(Errc::invalid_argument, "linearize_product requires binary inputs");
  int z = model.add_continuous(
      "z_" + model.variable(x).name + "_" + model.variable(y).name, 0.0, 1.0);
  model.add_constraint("", {{z, 1.0}, {x, -1.0}}, Sense::le, 0.0);
  model.add_constraint("", {{z, 1.0}, {y, -1.0}}, Sense::le, 0.0);
  model.add_constraint("", {{z, 1.0}, {x, -1.0}, {y, -1.0}}, Sense::ge, -1.0);
  return z;
}

void linearize_bilinear_indicator(Model& model, int x, const std::vector<LinExpr>& exprs,
                                  double cap, double bound) {
  if (model.variable(x).kind != VarKind::binary)
    throw Error(Errc::invalid_argument, "bilinear indicator requires a binary activator");
  if (!(bound > 1.0))
    throw Error(Errc::invalid_argument, "bilinear indicator bound must exceed 1");
  for (const LinExpr& e : exprs) {
    LinExpr row = e;
    row.push_back({x, (bound - 1.0) * cap});
    int r = model.add_constraint("", std::move(row), Sense::le, bound * cap);
    model.register_indicator_row({r, x, bound * cap});
  }
}

}  // namespace flexbus::milp
