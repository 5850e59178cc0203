#include "flexbus/simplex.hpp"

#include <algorithm>
#include <cmath>

namespace flexbus::milp {

namespace {
constexpr double kBigBound = 1e15;
}

SimplexSolver::SimplexSolver(const Model& model) {
  n_ = model.num_variables();
  m_ = model.num_constraints();
  cols_.assign(n_, {});
  cost_.assign(n_, 0.0);
  cost_true_.assign(n_, 0.0);
  pert_budget_ = 0.0;
  for (int j = 0; j < n_; ++j) {
    cost_true_[j] = model.objective_coeff(j);
    // anti-degeneracy pricing perturbation on boxed columns; the budget is
    // subtracted from reported bounds so they stay valid lower bounds
    double range = model.variable(j).ub - model.variable(j).lb;
    double e = 0.0;
    if (std::isfinite(range) && range > 0.0) {
      e = 1e-9 * (1.0 + double((static_cast<unsigned>(j) * 2654435761u) % 97u));
      pert_budget_ += e * range;
    }
    cost_[j] = cost_true_[j] + e;
  }
  rhs_.assign(m_, 0.0);
  slack_lb_.assign(m_, 0.0);
  slack_ub_.assign(m_, 0.0);
  // row equilibration by the largest coefficient magnitude; the divisor is
  // clamped so that a unit violation in a big-M row still clears the
  // feasibility tolerance after scaling
  for (int r = 0; r < m_; ++r) {
    const Constraint& c = model.constraint(r);
    double maxc = 0.0;
    for (auto [j, a] : c.coeffs) maxc = std::max(maxc, std::abs(a));
    double s = 1.0 / std::clamp(maxc, 1.0, 1e4);
    for (auto [j, a] : c.coeffs)
      if (a != 0.0) cols_[j].push_back({r, a * s});
    rhs_[r] = c.rhs * s;
    switch (c.sense) {
      case Sense::le:
        slack_lb_[r] = 0.0;
        slack_ub_[r] = kInf;
        break;
      case Sense::ge:
        slack_lb_[r] = -kInf;
        slack_ub_[r] = 0.0;
        break;
      case Sense::eq:
        slack_lb_[r] = 0.0;
        slack_ub_[r] = 0.0;
        break;
    }
  }
  lb_.assign(n_ + m_, 0.0);
  ub_.assign(n_ + m_, 0.0);
  binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
  basic_.assign(m_, 0);
  row_of_.assign(n_ + m_, -1);
  status_.assign(n_ + m_, VarStatus::at_lower);
  x_basic_.assign(m_, 0.0);
  dual_.assign(n_ + m_, 0.0);
  work_col_.assign(m_, 0.0);
  work_row_.assign(m_, 0.0);
  alpha_.assign(n_ + m_, 0.0);
}

Basis SimplexSolver::snapshot() const {
  Basis b;
  b.basic = basic_;
  b.status = status_;
  b.version = version_;
  return b;
}

void SimplexSolver::rebuild_inverse() {
  ++rebuilds_;
  std::vector<double> mat(static_cast<std::size_t>(m_) * m_, 0.0);
  for (int p = 0; p < m_; ++p) {
    int j = basic_[p];
    if (j >= n_) {
      mat[static_cast<std::size_t>(j - n_) * m_ + p] = 1.0;
    } else {
      for (auto [r, a] : cols_[j]) mat[static_cast<std::size_t>(r) * m_ + p] = a;
    }
  }
  std::fill(binv_.begin(), binv_.end(), 0.0);
  for (int i = 0; i < m_; ++i) binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0;
  bool singular = false;
  for (int col = 0; col < m_ && !singular; ++col) {
    int piv = -1;
    double best = 1e-11;
    for (int r = col; r < m_; ++r) {
      double v = std::abs(mat[static_cast<std::size_t>(r) * m_ + col]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (piv < 0) {
      singular = true;
      break;
    }
    if (piv != col) {
      double* mp = &mat[static_cast<std::size_t>(piv) * m_];
      double* mc = &mat[static_cast<std::size_t>(col) * m_];
      double* bp = &binv_[static_cast<std::size_t>(piv) * m_];
      double* bc = &binv_[static_cast<std::size_t>(col) * m_];
      for (int c = 0; c < m_; ++c) {
        std::swap(mp[c], mc[c]);
        std::swap(bp[c], bc[c]);
      }
    }
    double inv = 1.0 / mat[static_cast<std::size_t>(col) * m_ + col];
    double* mc = &mat[static_cast<std::size_t>(col) * m_];
    double* bc = &binv_[static_cast<std::size_t>(col) * m_];
    for (int c = 0; c < m_; ++c) {
      mc[c] *= inv;
      bc[c] *= inv;
    }
    for (int r = 0; r < m_; ++r) {
      if (r == col) continue;
      double f = mat[static_cast<std::size_t>(r) * m_ + col];
      if (f == 0.0) continue;
      double* mr = &mat[static_cast<std::size_t>(r) * m_];
      double* br = &binv_[static_cast<std::size_t>(r) * m_];
      for (int c = 0; c < m_; ++c) {
        mr[c] -= f * mc[c];
        br[c] -= f * bc[c];
      }
    }
  }
  if (singular) {
    // drop to the all-slack basis; dual feasibility is restored by statuses
    for (int j = 0; j < n_ + m_; ++j)
      if (status_[j] == VarStatus::basic)
        status_[j] = (j < n_ && cost_[j] < 0.0) ? VarStatus::at_upper : VarStatus::at_lower;
    std::fill(row_of_.begin(), row_of_.end(), -1);
    for (int r = 0; r < m_; ++r) {
      basic_[r] = n_ + r;
      row_of_[n_ + r] = r;
      status_[n_ + r] = VarStatus::basic;
    }
    std::fill(binv_.begin(), binv_.end(), 0.0);
    for (int i = 0; i < m_; ++i) binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0;
  }
  pivots_since_refresh_ = 0;
  ++version_;
}

void SimplexSolver::install_basis(const Basis& basis) {
  ++installs_;
  // count how far the target basis is from the live one
  std::vector<char> in_current(n_ + m_, 0);
  for (int r = 0; r < m_; ++r) in_current[basic_[r]] = 1;
  std::vector<int> need_in;
  for (int r = 0; r < m_; ++r)
    if (!in_current[basis.basic[r]]) need_in.push_back(basis.basic[r]);
  std::vector<char> in_target(n_ + m_, 0);
  for (int r = 0; r < m_; ++r) in_target[basis.basic[r]] = 1;

  bool rebased = true;
  if (static_cast<int>(need_in.size()) <= std::max(4, (3 * m_) / 4)) {
    for (int j : need_in) {
      // column through the live inverse
      double* acol = work_col_.data();
      if (j < n_) {
        std::fill(work_col_.begin(), work_col_.end(), 0.0);
        for (auto [row, a] : cols_[j])
          for (int i = 0; i < m_; ++i)
            acol[i] += binv_[static_cast<std::size_t>(i) * m_ + row] * a;
      } else {
        for (int i = 0; i < m_; ++i) acol[i] = binv_[static_cast<std::size_t>(i) * m_ + (j - n_)];
      }
      int leave_row = -1;
      double best = 1e-9;
      for (int r = 0; r < m_; ++r) {
        if (in_target[basic_[r]]) continue;  // keep columns the target retains
        if (std::abs(acol[r]) > best) {
          best = std::abs(acol[r]);
          leave_row = r;
        }
      }
      if (leave_row < 0) {
        rebased = false;
        break;
      }
      // eta update of the inverse
      double inv = 1.0 / acol[leave_row];
      double* brow = &binv_[static_cast<std::size_t>(leave_row) * m_];
      for (int k = 0; k < m_; ++k) brow[k] *= inv;
      for (int i = 0; i < m_; ++i) {
        if (i == leave_row) continue;
        double f = acol[i];
        if (f == 0.0) continue;
        double* bi = &binv_[static_cast<std::size_t>(i) * m_];
        for (int k = 0; k < m_; ++k) bi[k] -= f * brow[k];
      }
      basic_[leave_row] = j;
      ++pivots_since_refresh_;
    }
  } else {
    rebased = false;
  }
  if (rebased) ++rebases_;
  status_ = basis.status;
  if (!rebased) {
    basic_ = basis.basic;
    std::fill(row_of_.begin(), row_of_.end(), -1);
    for (int r = 0; r < m_; ++r) row_of_[basic_[r]] = r;
    rebuild_inverse();
  } else {
    std::fill(row_of_.begin(), row_of_.end(), -1);
    for (int r = 0; r < m_; ++r) row_of_[basic_[r]] = r;
    ++version_;
  }
}

void SimplexSolver::compute_basics_and_duals() {
  std::vector<double> r = rhs_;
  for (int j = 0; j < n_; ++j) {
    if (status_[j] == VarStatus::basic) continue;
    double v = nonbasic_value(j);
    if (v == 0.0) continue;
    for (auto [row, a] : cols_[j]) r[row] -= a * v;
  }
  for (int s = 0; s < m_; ++s) {
    int j = n_ + s;
    if (status_[j] == VarStatus::basic) continue;
    double v = nonbasic_value(j);
    if (v != 0.0) r[s] -= v;
  }
  for (int i = 0; i < m_; ++i) {
    const double* row = &binv_[static_cast<std::size_t>(i) * m_];
    double acc = 0.0;
    for (int k = 0; k < m_; ++k) acc += row[k] * r[k];
    x_basic_[i] = acc;
  }
  std::vector<double> y(m_, 0.0);
  for (int p = 0; p < m_; ++p) {
    int j = basic_[p];
    double cb = (j < n_) ? cost_[j] : 0.0;
    if (cb == 0.0) continue;
    const double* row = &binv_[static_cast<std::size_t>(p) * m_];
    for (int k = 0; k < m_; ++k) y[k] += cb * row[k];
  }
  for (int j = 0; j < n_; ++j) {
    double d = cost_[j];
    for (auto [row, a] : cols_[j]) d -= y[row] * a;
    dual_[j] = d;
  }
  for (int s = 0; s < m_; ++s) dual_[n_ + s] = -y[s];
}

bool SimplexSolver::dual_iterate(bool bland, int& status_out) {
  int leave_row = -1;
  bool below = false;
  if (!bland) {
    double best_viol = feas_tol_;
    for (int r = 0; r < m_; ++r) {
      int var = basic_[r];
      double v = x_basic_[r];
      double vl = lb_[var] - v;
      double vu = v - ub_[var];
      double viol = std::max(vl, vu);
      if (viol > best_viol + 1e-15 ||
          (viol > feas_tol_ && leave_row >= 0 && viol > best_viol - 1e-15 &&
           var < basic_[leave_row])) {
        best_viol = viol;
        leave_row = r;
        below = vl > vu;
      }
    }
  } else {
    for (int r = 0; r < m_; ++r) {
      int var = basic_[r];
      double v = x_basic_[r];
      double vl = lb_[var] - v;
      double vu = v - ub_[var];
      if (std::max(vl, vu) <= feas_tol_) continue;
      if (leave_row < 0 || var < basic_[leave_row]) {
        leave_row = r;
        below = vl > vu;
      }
    }
  }
  if (leave_row < 0) {
    status_out = 1;
    return false;
  }
  const double* rho = &binv_[static_cast<std::size_t>(leave_row) * m_];
  int entering = -1;
  double best_ratio = kInf;
  double best_alpha = 0.0;
  auto consider = [&](int j, double aj) {
    alpha_[j] = aj;
    if (std::abs(aj) <= pivot_tol_) return;
    if (lb_[j] == ub_[j]) return;
    bool from_lower = status_[j] == VarStatus::at_lower;
    bool eligible = below ? (from_lower ? aj < 0.0 : aj > 0.0)
                          : (from_lower ? aj > 0.0 : aj < 0.0);
    if (!eligible) return;
    double ratio = std::abs(dual_[j]) / std::abs(aj);
    if (entering < 0) {
      entering = j;
      best_ratio = ratio;
      best_alpha = aj;
      return;
    }
    if (bland) {
      if (ratio < best_ratio - 1e-12) {
        entering = j;
        best_ratio = ratio;
        best_alpha = aj;
      }
      return;
    }
    if (ratio < best_ratio - 1e-12 ||
        (ratio <= best_ratio + 1e-12 && std::abs(aj) > std::abs(best_alpha) + 1e-12)) {
      entering = j;
      best_ratio = ratio;
      best_alpha = aj;
    }
  };
  for (int j = 0; j < n_; ++j) {
    if (status_[j] == VarStatus::basic) {
      alpha_[j] = 0.0;
      continue;
    }
    double aj = 0.0;
    for (auto [row, a] : cols_[j]) aj += rho[row] * a;
    consider(j, aj);
  }
  for (int s = 0; s < m_; ++s) {
    int j = n_ + s;
    if (status_[j] == VarStatus::basic) {
      alpha_[j] = 0.0;
      continue;
    }
    consider(j, rho[s]);
  }
  if (entering < 0) {
    status_out = 2;
    return false;
  }
  double target = below ? lb_[basic_[leave_row]] : ub_[basic_[leave_row]];
  pivot(leave_row, entering, target);
  status_out = 0;
  return true;
}

void SimplexSolver::pivot(int leave_row, int entering, double target) {
  double* acol = work_col_.data();
  if (entering < n_) {
    std::fill(work_col_.begin(), work_col_.end(), 0.0);
    for (auto [row, a] : cols_[entering]) {
      if (a == 0.0) continue;
      for (int i = 0; i < m_; ++i) acol[i] += binv_[static_cast<std::size_t>(i) * m_ + row] * a;
    }
  } else {
    int s = entering - n_;
    for (int i = 0; i < m_; ++i) acol[i] = binv_[static_cast<std::size_t>(i) * m_ + s];
  }
  double arow_q = alpha_[entering];
  double piv = acol[leave_row];
  if (std::abs(piv) < pivot_tol_) piv = arow_q;

  int leaving = basic_[leave_row];
  double t = (x_basic_[leave_row] - target) / piv;
  double enter_val = nonbasic_value(entering) + t;

  for (int i = 0; i < m_; ++i)
    if (i != leave_row) x_basic_[i] -= t * acol[i];
  x_basic_[leave_row] = enter_val;

  double inv = 1.0 / piv;
  double* brow = &binv_[static_cast<std::size_t>(leave_row) * m_];
  for (int k = 0; k < m_; ++k) brow[k] *= inv;
  for (int i = 0; i < m_; ++i) {
    if (i == leave_row) continue;
    double f = acol[i];
    if (f == 0.0) continue;
    double* bi = &binv_[static_cast<std::size_t>(i) * m_];
    for (int k = 0; k < m_; ++k) bi[k] -= f * brow[k];
  }

  double kappa = dual_[entering] / arow_q;
  for (int j = 0; j < n_ + m_; ++j) {
    if (status_[j] == VarStatus::basic || j == entering) continue;
    if (alpha_[j] != 0.0) dual_[j] -= kappa * alpha_[j];
  }
  dual_[leaving] = -kappa;
  dual_[entering] = 0.0;

  basic_[leave_row] = entering;
  row_of_[entering] = leave_row;
  row_of_[leaving] = -1;
  status_[entering] = VarStatus::basic;
  status_[leaving] = (target == lb_[leaving]) ? VarStatus::at_lower : VarStatus::at_upper;

  ++pivots_total_;
  ++pivots_since_refresh_;
  ++version_;
}

LpResult SimplexSolver::solve(const std::vector<double>& lb, const std::vector<double>& ub,
                              const Basis* warm) {
  ++solves_;
  for (int j = 0; j < n_; ++j) {
    lb_[j] = lb[j];
    ub_[j] = ub[j];
  }
  for (int s = 0; s < m_; ++s) {
    lb_[n_ + s] = slack_lb_[s];
    ub_[n_ + s] = slack_ub_[s];
  }
  if (warm != nullptr && !warm->basic.empty()) {
    if (warm->version != version_) install_basis(*warm);
  } else {
    std::fill(row_of_.begin(), row_of_.end(), -1);
    for (int r = 0; r < m_; ++r) {
      basic_[r] = n_ + r;
      row_of_[n_ + r] = r;
      status_[n_ + r] = VarStatus::basic;
    }
    for (int j = 0; j < n_; ++j)
      status_[j] = (cost_[j] < 0.0) ? VarStatus::at_upper : VarStatus::at_lower;
    std::fill(binv_.begin(), binv_.end(), 0.0);
    for (int i = 0; i < m_; ++i) binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0;
    pivots_since_refresh_ = 0;
    ++version_;
  }
  // nonbasic rest positions must be finite
  for (int j = 0; j < n_ + m_; ++j) {
    if (status_[j] == VarStatus::basic) continue;
    if (status_[j] == VarStatus::at_upper && !std::isfinite(ub_[j])) {
      if (std::isfinite(lb_[j]) && !(j < n_ && cost_[j] < 0.0))
        status_[j] = VarStatus::at_lower;
      else
        ub_[j] = kBigBound;  // unboundedness probe
    }
    if (status_[j] == VarStatus::at_lower && !std::isfinite(lb_[j])) {
      if (std::isfinite(ub_[j]))
        status_[j] = VarStatus::at_upper;
      else
        lb_[j] = -kBigBound;
    }
  }
  compute_basics_and_duals();

  const long long bland_after = 2000 + 20LL * (m_ + n_);
  const long long iter_cap = 50000 + 200LL * (m_ + n_);
  long long iters = 0;
  int st = 0;
  while (true) {
    bool bland = iters > bland_after;
    if (!dual_iterate(bland, st)) break;
    ++iters;
    if (pivots_since_refresh_ >= 256) {
      rebuild_inverse();
      compute_basics_and_duals();
    }
    if (iters > iter_cap) {
      LpResult lim;
      lim.status = LpStatus::iteration_limit;
      return lim;
    }
  }
  LpResult res;
  if (st == 2) {
    res.status = LpStatus::infeasible;
    return res;
  }
  res.status = LpStatus::optimal;
  res.x.assign(n_, 0.0);
  for (int j = 0; j < n_; ++j)
    res.x[j] = (status_[j] == VarStatus::basic) ? x_basic_[row_of_[j]] : nonbasic_value(j);
  double obj = 0.0;
  for (int j = 0; j < n_; ++j) obj += cost_true_[j] * res.x[j];
  res.objective = obj;
  res.bound_slack = pert_budget_;
  return res;
}

}  // namespace flexbus::milp
