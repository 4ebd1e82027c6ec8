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

// Linear programming layer.
//
//   min c'x   s.t.   A_eq x = b_eq,  A_in x <= b_in,  l <= x <= u
//
// Two solvers sit behind solve_lp: a dense two-phase primal simplex with
// Bland's rule (the reference method, exact vertex answers on small
// problems) and a sparse primal-dual interior-point method for the larger
// instances this library generates (tens of thousands of nonzeros). The
// kAuto method picks by problem size. Both certify the same contract:
// optimal solutions are feasible within 1e-7 and the reported objective is
// c'x to machine accuracy; infeasibility is declared when a phase-1 optimum
// exceeds 1e-7.

#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cal {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
// Feasibility tolerance for certified-optimal solutions, and the phase-1
// threshold above which a problem is declared infeasible.
inline constexpr double kLpFeasTol = 1e-7;

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

inline const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

class LpDimensionError : public std::invalid_argument {
 public:
  explicit LpDimensionError(const std::string& what)
      : std::invalid_argument(what) {}
};

// Numerical failure inside a solver; carries iteration diagnostics.
class LpNumericalError : public std::runtime_error {
 public:
  LpNumericalError(const std::string& what, int iterations)
      : std::runtime_error(what + " (after " + std::to_string(iterations) +
                           " iterations)"),
        iterations_(iterations) {}
  int iterations() const { return iterations_; }

 private:
  int iterations_;
};

struct LpProblem {
  Eigen::VectorXd objective;
  Eigen::SparseMatrix<double> eq_matrix;    // may have zero rows
  Eigen::VectorXd eq_rhs;
  Eigen::SparseMatrix<double> ineq_matrix;  // A_in x <= ineq_rhs
  Eigen::VectorXd ineq_rhs;
  Eigen::VectorXd lower_bounds;             // -inf allowed
  Eigen::VectorXd upper_bounds;             // +inf allowed
  std::vector<std::string> variable_names;  // optional, diagnostics only

  int num_variables() const { return static_cast<int>(objective.size()); }
  int num_eq() const { return static_cast<int>(eq_matrix.rows()); }
  int num_ineq() const { return static_cast<int>(ineq_matrix.rows()); }

  void validate() const {
    const int n = num_variables();
    if (n <= 0) throw LpDimensionError("LpProblem: no variables");
    if (eq_matrix.cols() != n || ineq_matrix.cols() != n)
      throw LpDimensionError("LpProblem: constraint matrix width mismatch");
    if (eq_rhs.size() != eq_matrix.rows())
      throw LpDimensionError("LpProblem: eq_rhs length mismatch");
    if (ineq_rhs.size() != ineq_matrix.rows())
      throw LpDimensionError("LpProblem: ineq_rhs length mismatch");
    if (lower_bounds.size() != n || upper_bounds.size() != n)
      throw LpDimensionError("LpProblem: bounds length mismatch");
    if (!variable_names.empty() &&
        static_cast<int>(variable_names.size()) != n)
      throw LpDimensionError("LpProblem: variable_names length mismatch");
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(objective(j)))
        throw LpDimensionError("LpProblem: non-finite objective entry");
      if (std::isnan(lower_bounds(j)) || std::isnan(upper_bounds(j)))
        throw LpDimensionError("LpProblem: NaN bound");
      if (lower_bounds(j) > upper_bounds(j))
        throw LpDimensionError("LpProblem: lower bound exceeds upper at " +
                               std::to_string(j));
      if (lower_bounds(j) == kInf || upper_bounds(j) == -kInf)
        throw LpDimensionError("LpProblem: bound at infinity of wrong sign");
    }
    for (int i = 0; i < eq_rhs.size(); ++i)
      if (!std::isfinite(eq_rhs(i)))
        throw LpDimensionError("LpProblem: non-finite eq_rhs entry");
    for (int i = 0; i < ineq_rhs.size(); ++i)
      if (!std::isfinite(ineq_rhs(i)))
        throw LpDimensionError("LpProblem: non-finite ineq_rhs entry");
  }

  // Max violation of all constraints and bounds at x (equalities by absolute
  // residual). Used to certify optimal solutions.
  double feasibility_residual(const Eigen::VectorXd& x) const {
    double r = 0.0;
    if (eq_matrix.rows() > 0) {
      const Eigen::VectorXd e = eq_matrix * x - eq_rhs;
      r = std::max(r, e.cwiseAbs().maxCoeff());
    }
    if (ineq_matrix.rows() > 0) {
      const Eigen::VectorXd v = ineq_matrix * x - ineq_rhs;
      r = std::max(r, v.maxCoeff());
    }
    for (int j = 0; j < num_variables(); ++j) {
      if (lower_bounds(j) > -kInf) r = std::max(r, lower_bounds(j) - x(j));
      if (upper_bounds(j) < kInf) r = std::max(r, x(j) - upper_bounds(j));
    }
    return std::max(r, 0.0);
  }
};

struct LpSolution {
  Eigen::VectorXd x;
  double objective_value = 0.0;
  LpStatus status = LpStatus::kInfeasible;
  // For optimal solutions, the feasibility residual of x; for infeasible
  // ones, the phase-1 optimum certifying the verdict.
  double max_residual = 0.0;
  int iterations = 0;
};

enum class LpMethod { kAuto, kSimplex, kInteriorPoint };

struct LpOptions {
  LpMethod method = LpMethod::kAuto;
  // 0 means per-method default.
  int max_iterations = 0;
};

// Incremental builder used by the problem constructors in this library.
// Rows are stored as triplets; duplicate (row, var) terms accumulate.
class LpAssembler {
 public:
  int add_variable(std::string name, double lower, double upper,
                   double cost = 0.0) {
    names_.push_back(std::move(name));
    lower_.push_back(lower);
    upper_.push_back(upper);
    cost_.push_back(cost);
    return static_cast<int>(cost_.size()) - 1;
  }

  void add_cost(int var, double cost) { cost_.at(var) += cost; }

  using Terms = std::vector<std::pair<int, double>>;

  void add_eq(const Terms& terms, double rhs) {
    for (const auto& [var, coef] : terms)
      eq_triplets_.emplace_back(n_eq_, check_var(var), coef);
    eq_rhs_.push_back(rhs);
    ++n_eq_;
  }

  void add_le(const Terms& terms, double rhs) {
    for (const auto& [var, coef] : terms)
      ineq_triplets_.emplace_back(n_ineq_, check_var(var), coef);
    ineq_rhs_.push_back(rhs);
    ++n_ineq_;
  }

  void add_ge(const Terms& terms, double rhs) {
    Terms negated = terms;
    for (auto& [var, coef] : negated) coef = -coef;
    add_le(negated, -rhs);
  }

  int num_variables() const { return static_cast<int>(cost_.size()); }

  LpProblem build() const {
    const int n = num_variables();
    LpProblem p;
    p.objective = Eigen::Map<const Eigen::VectorXd>(cost_.data(), n);
    p.lower_bounds = Eigen::Map<const Eigen::VectorXd>(lower_.data(), n);
    p.upper_bounds = Eigen::Map<const Eigen::VectorXd>(upper_.data(), n);
    p.eq_matrix.resize(n_eq_, n);
    p.eq_matrix.setFromTriplets(eq_triplets_.begin(), eq_triplets_.end());
    p.eq_rhs = Eigen::Map<const Eigen::VectorXd>(eq_rhs_.data(), n_eq_);
    p.ineq_matrix.resize(n_ineq_, n);
    p.ineq_matrix.setFromTriplets(ineq_triplets_.begin(),
                                  ineq_triplets_.end());
    p.ineq_rhs = Eigen::Map<const Eigen::VectorXd>(ineq_rhs_.data(), n_ineq_);
    p.variable_names = names_;
    p.validate();
    return p;
  }

 private:
  int check_var(int var) const {
    if (var < 0 || var >= num_variables())
      throw LpDimensionError("LpAssembler: variable index out of range");
    return var;
  }

  std::vector<std::string> names_;
  std::vector<double> lower_, upper_, cost_;
  std::vector<Eigen::Triplet<double>> eq_triplets_, ineq_triplets_;
  std::vector<double> eq_rhs_, ineq_rhs_;
  int n_eq_ = 0;
  int n_ineq_ = 0;
};

// Epigraph transform for L1 objectives: extends `base` with one auxiliary
// variable t_j per row of M and the constraints -t <= Mx - b <= t, adding
// sum_j t_j to the objective. Minimizing the result minimizes
// ||Mx - b||_1 + (base objective) over the base feasible set. The auxiliary
// variables get lower bound 0, valid because t_j >= |(Mx - b)_j| >= 0.
inline LpProblem l1_epigraph(const Eigen::SparseMatrix<double>& m,
                             const Eigen::VectorXd& offset,
                             const LpProblem& base) {
  base.validate();
  const int n = base.num_variables();
  const int k = static_cast<int>(m.rows());
  if (m.cols() != n)
    throw LpDimensionError("l1_epigraph: matrix width must match variables");
  if (offset.size() != k)
    throw LpDimensionError("l1_epigraph: offset length must match rows");

  LpProblem p;
  p.objective.resize(n + k);
  p.objective << base.objective, Eigen::VectorXd::Ones(k);
  p.lower_bounds.resize(n + k);
  p.lower_bounds << base.lower_bounds, Eigen::VectorXd::Zero(k);
  p.upper_bounds.resize(n + k);
  p.upper_bounds << base.upper_bounds, Eigen::VectorXd::Constant(k, kInf);

  std::vector<Eigen::Triplet<double>> eq;
  for (int c = 0; c < base.eq_matrix.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(base.eq_matrix, c); it;
         ++it)
      eq.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                      it.value());
  p.eq_matrix.resize(base.num_eq(), n + k);
  p.eq_matrix.setFromTriplets(eq.begin(), eq.end());
  p.eq_rhs = base.eq_rhs;

  std::vector<Eigen::Triplet<double>> ineq;
  for (int c = 0; c < base.ineq_matrix.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(base.ineq_matrix, c);
         it; ++it)
      ineq.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                        it.value());
  const int base_rows = base.num_ineq();
  for (int c = 0; c < m.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, c); it; ++it) {
      const int r = static_cast<int>(it.row());
      const int v = static_cast<int>(it.col());
      ineq.emplace_back(base_rows + r, v, it.value());        // Mx - t <= b
      ineq.emplace_back(base_rows + k + r, v, -it.value());   // -Mx - t <= -b
    }
  for (int r = 0; r < k; ++r) {
    ineq.emplace_back(base_rows + r, n + r, -1.0);
    ineq.emplace_back(base_rows + k + r, n + r, -1.0);
  }
  p.ineq_matrix.resize(base_rows + 2 * k, n + k);
  p.ineq_matrix.setFromTriplets(ineq.begin(), ineq.end());
  p.ineq_rhs.resize(base_rows + 2 * k);
  p.ineq_rhs << base.ineq_rhs, offset, -offset;

  if (!base.variable_names.empty()) {
    p.variable_names = base.variable_names;
    for (int r = 0; r < k; ++r)
      p.variable_names.push_back("abs" + std::to_string(r));
  }
  p.validate();
  return p;
}

namespace detail {

inline std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string lp_var_name(const LpProblem& p, int j) {
  std::string name = p.variable_names.empty() ? "x" + std::to_string(j)
                                              : p.variable_names[j];
  for (char& c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'))
      c = '_';
  if (name.empty() || std::isdigit(static_cast<unsigned char>(name[0])) ||
      name[0] == 'e' || name[0] == 'E' || name[0] == '.')
    name = "v_" + name;
  return name;
}

}  // namespace detail

// Writes the problem in LP interchange text (full decimal precision) so an
// instance can be cross-checked with an external solver.
inline void write_lp_text(const LpProblem& p, std::ostream& out) {
  p.validate();
  const int n = p.num_variables();

  // Row-major term lists for both constraint blocks.
  std::vector<std::vector<std::pair<int, double>>> eq_rows(p.num_eq());
  for (int c = 0; c < p.eq_matrix.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.eq_matrix, c); it;
         ++it)
      eq_rows[it.row()].emplace_back(static_cast<int>(it.col()), it.value());
  std::vector<std::vector<std::pair<int, double>>> ineq_rows(p.num_ineq());
  for (int c = 0; c < p.ineq_matrix.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.ineq_matrix, c); it;
         ++it)
      ineq_rows[it.row()].emplace_back(static_cast<int>(it.col()), it.value());

  const auto write_terms =
      [&](const std::vector<std::pair<int, double>>& terms) {
        if (terms.empty()) {
          out << " 0 " << detail::lp_var_name(p, 0);
          return;
        }
        auto sorted = terms;
        std::sort(sorted.begin(), sorted.end());
        for (const auto& [j, v] : sorted)
          out << (v < 0 ? " - " : " + ") << detail::fmt_full(std::abs(v))
              << ' ' << detail::lp_var_name(p, j);
      };

  out << "\\ LP debug dump\n";
  out << "Minimize\n obj:";
  bool any = false;
  for (int j = 0; j < n; ++j)
    if (p.objective(j) != 0.0) {
      out << (p.objective(j) < 0 ? " - " : " + ")
          << detail::fmt_full(std::abs(p.objective(j))) << ' '
          << detail::lp_var_name(p, j);
      any = true;
    }
  if (!any) out << " 0 " << detail::lp_var_name(p, 0);
  out << "\nSubject To\n";
  for (int i = 0; i < p.num_eq(); ++i) {
    out << " eq" << i << ':';
    write_terms(eq_rows[i]);
    out << " = " << detail::fmt_full(p.eq_rhs(i)) << '\n';
  }
  for (int i = 0; i < p.num_ineq(); ++i) {
    out << " le" << i << ':';
    write_terms(ineq_rows[i]);
    out << " <= " << detail::fmt_full(p.ineq_rhs(i)) << '\n';
  }
  out << "Bounds\n";
  for (int j = 0; j < n; ++j) {
    const double lo = p.lower_bounds(j);
    const double hi = p.upper_bounds(j);
    const std::string name = detail::lp_var_name(p, j);
    if (lo == -kInf && hi == kInf)
      out << ' ' << name << " free\n";
    else if (lo == -kInf)
      out << " -inf <= " << name << " <= " << detail::fmt_full(hi) << '\n';
    else if (hi == kInf)
      out << ' ' << name << " >= " << detail::fmt_full(lo) << '\n';
    else
      out << ' ' << detail::fmt_full(lo) << " <= " << name
          << " <= " << detail::fmt_full(hi) << '\n';
  }
  out << "End\n";
}

namespace detail {
// Defined in lp_simplex.hpp / lp_ipm.hpp (both included below).
LpSolution solve_simplex(const LpProblem& problem, int max_iterations);
LpSolution solve_interior_point(const LpProblem& problem, int max_iterations);
}  // namespace detail

// Solves the program and certifies the result: for optimal statuses the
// feasibility residual is rechecked against the original problem and the
// objective recomputed as c'x. kAuto routes small instances to the simplex
// and everything else to the interior-point method; both satisfy the same
// contract.
inline LpSolution solve_lp(const LpProblem& problem,
                           const LpOptions& options = {}) {
  problem.validate();

  LpMethod method = options.method;
  if (method == LpMethod::kAuto) {
    const long rows = problem.num_eq() + problem.num_ineq();
    const long cols = problem.num_variables();
    method = (rows + cols <= 700) ? LpMethod::kSimplex
                                  : LpMethod::kInteriorPoint;
  }

  LpSolution solution = (method == LpMethod::kSimplex)
                            ? detail::solve_simplex(problem,
                                                    options.max_iterations)
                            : detail::solve_interior_point(
                                  problem, options.max_iterations);

  if (solution.status == LpStatus::kOptimal) {
    solution.objective_value = problem.objective.dot(solution.x);
    solution.max_residual = problem.feasibility_residual(solution.x);
    if (solution.max_residual > kLpFeasTol)
      throw LpNumericalError(
          "solve_lp: claimed-optimal solution violates feasibility by " +
              std::to_string(solution.max_residual),
          solution.iterations);
  }
  return solution;
}

}  // namespace cal

#include "cal/lp_ipm.hpp"      // IWYU pragma: keep
#include "cal/lp_simplex.hpp"  // IWYU pragma: keep
