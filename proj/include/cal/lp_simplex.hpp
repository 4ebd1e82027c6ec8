// Copyright 2026 The CAL Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense two-phase primal simplex with Bland's rule.
//
// Reference solver: exact-arithmetic-style answers at vertices, guaranteed
// termination (Bland's rule excludes cycling), O(rows * cols) memory. The
// entering variable is always the lowest-index column with negative reduced
// cost, and ratio-test ties leave the lowest-index basic variable; this
// fixes which optimal vertex is reported when the face is degenerate.
//
// Conversion to the tableau's standard form:
//   - finite lower bound: x = l + x', one column;
//   - only an upper bound: x = u - x', one column with sign -1;
//   - free: x = p - q, two columns;
//   - two finite bounds: shifted column plus a range row x' + slack = u - l.
// Inequality rows get slack columns; rows with negative shifted rhs are
// negated; rows lacking a +1 slack start from an artificial variable.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "cal/lp.hpp"

namespace cal::detail {

// Reduced costs below -kPivotTol qualify a column for entering; tableau
// entries above kPivotTol qualify as pivots.
inline constexpr double kPivotTol = 1e-9;

struct SimplexTableau {
  Eigen::MatrixXd t;            // (m + 1) x (cols + 1); last row: reduced costs
  std::vector<int> basis;       // basic column per row
  std::vector<bool> row_alive;  // redundant rows get retired after phase 1
  std::vector<bool> allowed;    // artificials are banned in phase 2
  int m = 0;
  int cols = 0;

  double& rhs(int i) { return t(i, cols); }

  void pivot(int row, int col) {
    t.row(row) /= t(row, col);
    for (int k = 0; k <= m; ++k) {
      if (k == row) continue;
      const double factor = t(k, col);
      if (factor != 0.0) t.row(k) -= factor * t.row(row);
    }
    basis[row] = col;
  }

  // Runs Bland iterations until no entering column remains (returns true)
  // or an entering column proves the problem unbounded (returns false).
  bool iterate(int& iterations, int max_iterations) {
    for (;;) {
      int entering = -1;
      for (int j = 0; j < cols; ++j)
        if (allowed[j] && t(m, j) < -kPivotTol) {
          entering = j;
          break;
        }
      if (entering < 0) return true;

      int leave = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < m; ++i) {
        if (!row_alive[i] || t(i, entering) <= kPivotTol) continue;
        const double ratio = rhs(i) / t(i, entering);
        if (leave < 0 || ratio < best_ratio - 1e-12 ||
            (std::abs(ratio - best_ratio) <= 1e-12 &&
             basis[i] < basis[leave]))
          leave = i, best_ratio = ratio;
      }
      if (leave < 0) return false;

      pivot(leave, entering);
      if (++iterations > max_iterations)
        throw LpNumericalError("simplex: iteration limit reached", iterations);
    }
  }
};

inline LpSolution solve_simplex(const LpProblem& p, int max_iterations) {
  const int n = p.num_variables();
  const int m_eq = p.num_eq();
  const int m_in = p.num_ineq();

  // Column mapping: x[var] = shift[var] + sum of sign * column value.
  struct Col {
    int var;
    double sign;
  };
  std::vector<Col> cols;
  std::vector<double> shift(n, 0.0);
  std::vector<int> range_vars;  // both bounds finite: extra row x' <= u - l
  for (int j = 0; j < n; ++j) {
    const double lo = p.lower_bounds(j);
    const double hi = p.upper_bounds(j);
    if (lo == -kInf && hi == kInf) {
      cols.push_back({j, 1.0});
      cols.push_back({j, -1.0});
    } else if (lo > -kInf) {
      shift[j] = lo;
      cols.push_back({j, 1.0});
      if (hi < kInf) range_vars.push_back(j);
    } else {
      shift[j] = hi;
      cols.push_back({j, -1.0});
    }
  }
  const int ns = static_cast<int>(cols.size());
  const int m_rg = static_cast<int>(range_vars.size());
  const int m = m_eq + m_in + m_rg;
  const int total_cols_max = ns + m_in + m_rg + m;

  if (static_cast<double>(m + 1) * (total_cols_max + 1) > 6.0e7)
    throw LpNumericalError(
        "simplex: dense tableau too large; use the interior-point method", 0);
  if (max_iterations <= 0) max_iterations = 50 * (m + total_cols_max) + 10000;

  // Column list per variable, to scatter the sparse rows.
  std::vector<std::vector<int>> var_cols(n);
  for (int j = 0; j < ns; ++j) var_cols[cols[j].var].push_back(j);

  SimplexTableau tab;
  tab.m = m;
  tab.cols = total_cols_max;
  tab.t = Eigen::MatrixXd::Zero(m + 1, total_cols_max + 1);
  tab.row_alive.assign(m, true);
  tab.allowed.assign(total_cols_max, false);
  tab.basis.assign(m, -1);
  for (int j = 0; j < ns; ++j) tab.allowed[j] = true;

  const auto scatter = [&](int row, int var, double value) {
    for (int j : var_cols[var]) tab.t(row, j) += value * cols[j].sign;
  };

  // Equality rows, then inequality rows (with slack), then range rows.
  Eigen::VectorXd rhs(m);
  for (int c = 0; c < p.eq_matrix.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.eq_matrix, c); it;
         ++it)
      scatter(static_cast<int>(it.row()), static_cast<int>(it.col()),
              it.value());
  for (int c = 0; c < p.ineq_matrix.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.ineq_matrix, c); it;
         ++it)
      scatter(m_eq + static_cast<int>(it.row()), static_cast<int>(it.col()),
              it.value());
  {
    // rhs is shifted by the bound substitution: b - A * shift.
    Eigen::VectorXd shift_vec =
        Eigen::Map<const Eigen::VectorXd>(shift.data(), n);
    if (m_eq > 0) rhs.head(m_eq) = p.eq_rhs - p.eq_matrix * shift_vec;
    if (m_in > 0)
      rhs.segment(m_eq, m_in) = p.ineq_rhs - p.ineq_matrix * shift_vec;
  }
  int next_col = ns;
  std::vector<int> slack_col(m_in + m_rg);
  for (int i = 0; i < m_in; ++i) {
    slack_col[i] = next_col++;
    tab.t(m_eq + i, slack_col[i]) = 1.0;
    tab.allowed[slack_col[i]] = true;
  }
  for (int r = 0; r < m_rg; ++r) {
    const int row = m_eq + m_in + r;
    const int var = range_vars[r];
    scatter(row, var, 1.0);
    rhs(row) = p.upper_bounds(var) - p.lower_bounds(var);
    slack_col[m_in + r] = next_col++;
    tab.t(row, slack_col[m_in + r]) = 1.0;
    tab.allowed[slack_col[m_in + r]] = true;
  }

  // Negate rows into rhs >= 0 form, then pick the starting basis: a +1
  // slack where available, an artificial otherwise.
  std::vector<int> artificial_cols;
  for (int i = 0; i < m; ++i) {
    if (rhs(i) < 0.0) {
      tab.t.row(i) = -tab.t.row(i);
      rhs(i) = -rhs(i);
    }
    tab.rhs(i) = rhs(i);
    const int s = (i >= m_eq) ? slack_col[i - m_eq] : -1;
    if (s >= 0 && tab.t(i, s) > 0.5) {
      tab.basis[i] = s;
    } else {
      const int art = next_col++;
      tab.t(i, art) = 1.0;
      tab.allowed[art] = true;
      tab.basis[i] = art;
      artificial_cols.push_back(art);
    }
  }
  const int first_artificial =
      artificial_cols.empty() ? total_cols_max : artificial_cols.front();

  LpSolution solution;
  int iterations = 0;

  // Phase 1: minimize the artificial mass.
  if (!artificial_cols.empty()) {
    for (int a : artificial_cols) tab.t(m, a) = 1.0;
    for (int i = 0; i < m; ++i)
      if (tab.basis[i] >= first_artificial) tab.t.row(m) -= tab.t.row(i);
    if (!tab.iterate(iterations, max_iterations))
      throw LpNumericalError("simplex: phase 1 unbounded (internal error)",
                             iterations);
    const double phase1 = -tab.t(m, total_cols_max);
    if (phase1 > kLpFeasTol) {
      solution.status = LpStatus::kInfeasible;
      solution.max_residual = phase1;
      solution.iterations = iterations;
      return solution;
    }
    // Pivot leftover artificials out on any usable column; rows that offer
    // none are redundant and retire. The basic value is at most the phase-1
    // optimum (<= 1e-7); zeroing it first keeps the pivot degenerate, so
    // feasibility of the other rows is untouched even for negative pivots.
    for (int i = 0; i < m; ++i) {
      if (tab.basis[i] < first_artificial) continue;
      tab.rhs(i) = 0.0;
      int col = -1;
      for (int j = 0; j < first_artificial; ++j)
        if (std::abs(tab.t(i, j)) > 1e-7) {
          col = j;
          break;
        }
      if (col >= 0)
        tab.pivot(i, col);
      else
        tab.row_alive[i] = false;
    }
  }

  // Phase 2: original costs on the shifted columns; artificials banned.
  tab.t.row(m).setZero();
  for (int a : artificial_cols) tab.allowed[a] = false;
  for (int j = 0; j < ns; ++j)
    tab.t(m, j) = p.objective(cols[j].var) * cols[j].sign;
  for (int i = 0; i < m; ++i) {
    if (!tab.row_alive[i]) continue;
    const int b = tab.basis[i];
    const double cb = tab.t(m, b);
    if (cb != 0.0) tab.t.row(m) -= cb * tab.t.row(i);
  }
  if (!tab.iterate(iterations, max_iterations)) {
    solution.status = LpStatus::kUnbounded;
    solution.iterations = iterations;
    return solution;
  }

  // Map the basic values back through the bound substitution.
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(shift.data(), n);
  for (int i = 0; i < m; ++i) {
    if (!tab.row_alive[i]) continue;
    const int b = tab.basis[i];
    if (b < ns) x(cols[b].var) += cols[b].sign * tab.rhs(i);
  }
  solution.status = LpStatus::kOptimal;
  solution.x = x;
  solution.objective_value = p.objective.dot(x);
  solution.iterations = iterations;
  return solution;
}

}  // namespace cal::detail
