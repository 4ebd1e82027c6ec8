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

// Sparse primal-dual interior-point solver (Mehrotra predictor-corrector).
//
// Used for the larger instances this library generates (relaxation programs
// reach ~10^4 rows and ~4 * 10^4 nonzeros, far beyond what the dense
// reference simplex handles). The problem is standardized to
//     min c'x   s.t.  A x = b,  l <= x <= u,
// with slack columns absorbing inequality rows. Each iteration solves the
// symmetric quasi-definite augmented system
//     [ -(Theta + dd I)   A' ] [dx]   [ rhat ]
//     [  A                dp I] [dy] = [ r_p  ]
// by sparse LDL' (AMD ordering, no numerical pivoting, valid for
// quasi-definite matrices), with one step of iterative refinement. The
// small primal/dual regularization dd, dp keeps the factorization stable
// and is re-absorbed through the residuals recomputed every iteration.
//
// Status certification mirrors the simplex: when the direct solve fails to
// converge, a phase-1 program (minimum equality violation with artificial
// elastics) decides feasibility with the shared 1e-7 threshold, and a
// bounded retry with artificial boxes on the unbounded directions separates
// "unbounded" from plain numerical failure.

#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <cmath>
#include <vector>

#ifdef CAL_IPM_TRACE
#include <cstdio>
#endif

#include "cal/lp.hpp"

namespace cal::detail {

inline constexpr double kIpmTol = 1e-9;
// Degenerate instances floor out with the relative gap a few times above
// kIpmTol while primal and dual residuals sit near machine precision. The
// best iterate is accepted at this slightly looser complementarity level;
// the absolute feasibility certificate in solve_lp still applies unchanged.
inline constexpr double kIpmAcceptTol = 1e-8;
// Degenerate programs creep along a low-dimensional optimal face where
// complementarity is hard-floored by solve noise while both residuals sit
// orders below their tolerances. With residuals at that quality, a
// relative gap this small still bounds the objective error well inside
// every downstream tolerance, so the best iterate is accepted at it.
inline constexpr double kIpmAcceptGap = 1e-7;
// Programs whose optimum is near zero divide the complementarity by ~1, so
// their relative gap floors around m_c * machine noise. An absolute
// complementarity this small bounds the objective error directly and is
// accepted regardless of the relative gap.
inline constexpr double kIpmAcceptAbsComp = 1e-7;
inline constexpr double kIpmStepFraction = 0.9995;

struct IpmForm {
  Eigen::SparseMatrix<double> a;  // m x n
  Eigen::VectorXd b, c, l, u;

  int rows() const { return static_cast<int>(a.rows()); }
  int cols() const { return static_cast<int>(a.cols()); }
};

struct MehrotraResult {
  bool converged = false;
  Eigen::VectorXd x;
  double rel_primal = kInf;
  double rel_dual = kInf;
  double rel_gap = kInf;
  int iterations = 0;
};

inline MehrotraResult mehrotra_core(const IpmForm& f, int max_iterations) {
  const int n = f.cols();
  const int m = f.rows();

  std::vector<char> has_l(n), has_u(n);
  int m_c = 0;
  for (int j = 0; j < n; ++j) {
    has_l[j] = f.l(j) > -kInf;
    has_u[j] = f.u(j) < kInf;
    m_c += has_l[j] + has_u[j];
  }
  MehrotraResult result;
  if (m_c == 0) return result;  // nothing to center on; caller treats as failure

  Eigen::VectorXd x(n), z = Eigen::VectorXd::Zero(n),
                  w = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

  const double b_scale = 1.0 + (m > 0 ? f.b.cwiseAbs().maxCoeff() : 0.0);
  const double c_scale = 1.0 + f.c.cwiseAbs().maxCoeff();

  double delta_d = 1e-8, delta_p = 1e-8;
  Eigen::SparseMatrix<double> kkt(n + m, n + m);
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool analyzed = false;

  const auto build_kkt = [&](const Eigen::VectorXd& theta) {
    trips.clear();
    for (int j = 0; j < n; ++j)
      trips.emplace_back(j, j, -(theta(j) + delta_d));
    for (int i = 0; i < m; ++i) trips.emplace_back(n + i, n + i, delta_p);
    for (int col = 0; col < f.a.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(f.a, col); it; ++it) {
        const int r = static_cast<int>(it.row());
        const int c = static_cast<int>(it.col());
        trips.emplace_back(n + r, c, it.value());
        trips.emplace_back(c, n + r, it.value());
      }
    kkt.setFromTriplets(trips.begin(), trips.end());
  };

  // Starting point: the min-norm solution of Ax = b and the least-squares
  // multipliers of A'y ~ c, both from one KKT factorization with unit
  // scaling, shifted into the interior of the bounds. This starts the solve
  // with near-zero primal and dual residuals; a naive mid-box start makes
  // early iterations wander on larger programs. Falls back to mid-box with
  // unit multipliers when the factorization fails.
  bool ls_start = false;
  build_kkt(Eigen::VectorXd::Ones(n));
  ldlt.analyzePattern(kkt);
  analyzed = true;
  ldlt.factorize(kkt);
  if (ldlt.info() == Eigen::Success) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
    if (m > 0) rhs.tail(m) = f.b;
    const Eigen::VectorXd primal_sol = ldlt.solve(rhs);
    rhs.head(n) = f.c;
    if (m > 0) rhs.tail(m).setZero();
    const Eigen::VectorXd dual_sol = ldlt.solve(rhs);
    if (primal_sol.allFinite() && dual_sol.allFinite()) {
      const Eigen::VectorXd x_ls = primal_sol.head(n);
      y = dual_sol.tail(m);
      const Eigen::VectorXd z_ls = f.c - f.a.transpose() * y;
      for (int j = 0; j < n; ++j) {
        if (has_l[j] && has_u[j]) {
          const double margin = std::min(1.0, 0.25 * (f.u(j) - f.l(j)));
          x(j) = std::clamp(x_ls(j), f.l(j) + margin, f.u(j) - margin);
          // Splitting z_ls across the two multipliers keeps the dual
          // residual exactly zero on boxed coordinates.
          z(j) = std::max(z_ls(j), 0.0) + 1.0;
          w(j) = std::max(-z_ls(j), 0.0) + 1.0;
        } else if (has_l[j]) {
          x(j) = std::max(x_ls(j), f.l(j) + 1.0);
          z(j) = std::max(z_ls(j), 1.0);
        } else if (has_u[j]) {
          x(j) = std::min(x_ls(j), f.u(j) - 1.0);
          w(j) = std::max(-z_ls(j), 1.0);
        } else {
          x(j) = x_ls(j);
        }
      }
      ls_start = true;
    }
  }
  if (!ls_start) {
    y.setZero();
    for (int j = 0; j < n; ++j) {
      if (has_l[j] && has_u[j])
        x(j) = 0.5 * (f.l(j) + f.u(j));
      else if (has_l[j])
        x(j) = f.l(j) + 1.0;
      else if (has_u[j])
        x(j) = f.u(j) - 1.0;
      else
        x(j) = 0.0;
      if (has_l[j]) z(j) = std::max(1.0, std::abs(f.c(j)));
      if (has_u[j]) w(j) = std::max(1.0, std::abs(f.c(j)));
    }
  }

  double mu0 = 0.0;
  double stall_ref = kInf;
  int stalled = 0;

  // Snapshot of the best iterate seen so far. Late iterations at tiny mu can
  // destroy an essentially optimal point through ill-conditioned corrector
  // steps, so every non-converged exit returns this snapshot instead of the
  // current iterate, and accepts it when residuals are tight and the gap is
  // within kIpmAcceptTol.
  double best_metric = kInf;
  Eigen::VectorXd best_x = x;
  double best_primal = kInf, best_dual = kInf, best_gap = kInf;
  double best_comp = kInf;
  const auto finish_best = [&]() {
    result.x = best_x;
    result.rel_primal = best_primal;
    result.rel_dual = best_dual;
    result.rel_gap = best_gap;
    result.converged =
        best_primal <= kIpmTol && best_dual <= kIpmAcceptTol &&
        (best_gap <= kIpmAcceptGap || best_comp <= kIpmAcceptAbsComp);
    return result;
  };

  for (int iter = 1; iter <= max_iterations; ++iter) {
    result.iterations = iter;

    Eigen::VectorXd g(n), h(n);
    for (int j = 0; j < n; ++j) {
      g(j) = has_l[j] ? std::max(x(j) - f.l(j), 1e-14) : 1.0;
      h(j) = has_u[j] ? std::max(f.u(j) - x(j), 1e-14) : 1.0;
    }
    const Eigen::VectorXd r_p = f.b - f.a * x;
    const Eigen::VectorXd r_d =
        f.c - f.a.transpose() * y - z + w;
    double comp = 0.0;
    for (int j = 0; j < n; ++j) {
      if (has_l[j]) comp += g(j) * z(j);
      if (has_u[j]) comp += h(j) * w(j);
    }
    const double mu = comp / m_c;
    if (iter == 1) mu0 = mu;

    const double obj = f.c.dot(x);
    result.rel_primal =
        (m > 0 ? r_p.cwiseAbs().maxCoeff() : 0.0) / b_scale;
    result.rel_dual = r_d.cwiseAbs().maxCoeff() / c_scale;
    result.rel_gap = comp / (1.0 + std::abs(obj));
    result.x = x;
    if (result.rel_primal <= kIpmTol && result.rel_dual <= kIpmTol &&
        result.rel_gap <= kIpmTol) {
      result.converged = true;
      return result;
    }

#ifdef CAL_IPM_TRACE
    std::fprintf(stderr,
                 "ipm it=%3d mu=%10.3e rp=%10.3e rd=%10.3e gap=%10.3e "
                 "obj=%14.8e\n",
                 iter, mu, result.rel_primal, result.rel_dual, result.rel_gap,
                 obj);
#endif
    const double metric =
        std::max({result.rel_primal, result.rel_dual, result.rel_gap});
    if (std::isfinite(metric) && metric < best_metric) {
      best_metric = metric;
      best_x = x;
      best_primal = result.rel_primal;
      best_dual = result.rel_dual;
      best_gap = result.rel_gap;
      best_comp = comp;
    }
    if (metric < 0.9 * stall_ref) {
      stall_ref = metric;
      stalled = 0;
    } else if (++stalled > 50) {
      return finish_best();  // stalled; caller classifies
    }
    if (!std::isfinite(metric) || mu > 1e12 * (mu0 + 1.0)) return finish_best();
    // Near-optimal iterates can be wrecked by one ill-conditioned step; once
    // accuracy is high, a sudden large regression means the remaining path is
    // numerical noise and the best snapshot is the answer.
    if (best_metric < 1e-4 && metric > 1e3 * best_metric) return finish_best();

    // Theta = Z/G + W/H on the bounded coordinates.
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (has_l[j]) theta(j) += z(j) / g(j);
      if (has_u[j]) theta(j) += w(j) / h(j);
      theta(j) = std::min(theta(j), 1e12);
    }

    bool factored = false;
    for (int attempt = 0; attempt < 4 && !factored; ++attempt) {
      build_kkt(theta);
      if (!analyzed) {
        ldlt.analyzePattern(kkt);
        analyzed = true;
      }
      ldlt.factorize(kkt);
      if (ldlt.info() == Eigen::Success)
        factored = true;
      else {
        delta_d *= 100.0;
        delta_p *= 100.0;
      }
    }
    if (!factored) return finish_best();

    const auto solve_kkt = [&](const Eigen::VectorXd& rhs) {
      Eigen::VectorXd d = ldlt.solve(rhs);
      const double rhs_scale = 1.0 + rhs.cwiseAbs().maxCoeff();
      for (int round = 0; round < 3; ++round) {
        const Eigen::VectorXd res = rhs - kkt * d;
        if (res.cwiseAbs().maxCoeff() <= 1e-13 * rhs_scale) break;
        d += ldlt.solve(res);
      }
      return d;
    };

    // rhat = r_d - rgz/g + rhw/h for complementarity targets rgz, rhw.
    const auto assemble_rhs = [&](const Eigen::VectorXd& rgz,
                                  const Eigen::VectorXd& rhw) {
      Eigen::VectorXd rhs(n + m);
      for (int j = 0; j < n; ++j) {
        double v = r_d(j);
        if (has_l[j]) v -= rgz(j) / g(j);
        if (has_u[j]) v += rhw(j) / h(j);
        rhs(j) = v;
      }
      rhs.tail(m) = r_p;
      return rhs;
    };
    const auto recover_duals = [&](const Eigen::VectorXd& dx,
                                   const Eigen::VectorXd& rgz,
                                   const Eigen::VectorXd& rhw,
                                   Eigen::VectorXd& dz, Eigen::VectorXd& dw) {
      dz.setZero(n);
      dw.setZero(n);
      for (int j = 0; j < n; ++j) {
        if (has_l[j]) dz(j) = (rgz(j) - z(j) * dx(j)) / g(j);
        if (has_u[j]) dw(j) = (rhw(j) + w(j) * dx(j)) / h(j);
      }
    };
    // The multiplier steps above divide by g or h, which sit at 1e-14 near
    // active bounds, so any error in dx from the reduced solve (and the
    // delta_d regularization term) is amplified into dz and dw by up to the
    // theta cap. One such step can throw an almost-converged dual iterate
    // off by orders of magnitude. Reassigning the dual-row residual to the
    // multipliers makes c - A'(y+dy) - (z+dz) + (w+dw) = (1-ad)*r_d hold by
    // construction, while perturbing the complementarity targets by only
    // g*e or h*e, far below the targets themselves.
    const auto enforce_dual_row = [&](const Eigen::VectorXd& dy,
                                      Eigen::VectorXd& dz,
                                      Eigen::VectorXd& dw) {
      const Eigen::VectorXd s = r_d - f.a.transpose() * dy;
      for (int j = 0; j < n; ++j) {
        if (!has_l[j] && !has_u[j]) continue;
        const double e = s(j) - (dz(j) - dw(j));
        if (has_l[j] && (!has_u[j] || z(j) >= w(j)))
          dz(j) += e;
        else
          dw(j) -= e;
      }
    };
    // Largest primal / dual steps keeping (g, h) and (z, w) positive.
    const auto max_steps = [&](const Eigen::VectorXd& dx,
                               const Eigen::VectorXd& dz,
                               const Eigen::VectorXd& dw, double& ap,
                               double& ad) {
      ap = ad = 1.0;
      for (int j = 0; j < n; ++j) {
        if (has_l[j] && dx(j) < 0.0) ap = std::min(ap, -g(j) / dx(j));
        if (has_u[j] && dx(j) > 0.0) ap = std::min(ap, h(j) / dx(j));
        if (has_l[j] && dz(j) < 0.0) ad = std::min(ad, -z(j) / dz(j));
        if (has_u[j] && dw(j) < 0.0) ad = std::min(ad, -w(j) / dw(j));
      }
    };

    // Predictor (affine scaling, target 0).
    Eigen::VectorXd rgz(n), rhw(n);
    for (int j = 0; j < n; ++j) {
      rgz(j) = has_l[j] ? -g(j) * z(j) : 0.0;
      rhw(j) = has_u[j] ? -h(j) * w(j) : 0.0;
    }
    Eigen::VectorXd d = solve_kkt(assemble_rhs(rgz, rhw));
    if (!d.allFinite()) return finish_best();
    Eigen::VectorXd dx = d.head(n);
    Eigen::VectorXd dz, dw;
    recover_duals(dx, rgz, rhw, dz, dw);
    enforce_dual_row(d.tail(m), dz, dw);
    double ap_aff, ad_aff;
    max_steps(dx, dz, dw, ap_aff, ad_aff);

    double comp_aff = 0.0;
    for (int j = 0; j < n; ++j) {
      if (has_l[j])
        comp_aff += (g(j) + ap_aff * dx(j)) * (z(j) + ad_aff * dz(j));
      if (has_u[j])
        comp_aff += (h(j) - ap_aff * dx(j)) * (w(j) + ad_aff * dw(j));
    }
    const double mu_aff = std::max(comp_aff, 0.0) / m_c;
    double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3) : 0.0;
    sigma = std::clamp(sigma, 1e-8, 1.0);

    // Corrector: recenter to sigma*mu and cancel the second-order term.
    for (int j = 0; j < n; ++j) {
      if (has_l[j]) rgz(j) = sigma * mu - g(j) * z(j) - dx(j) * dz(j);
      if (has_u[j]) rhw(j) = sigma * mu - h(j) * w(j) + dx(j) * dw(j);
    }
    d = solve_kkt(assemble_rhs(rgz, rhw));
    if (!d.allFinite()) return finish_best();
    dx = d.head(n);
    const Eigen::VectorXd dy = d.tail(m);
    recover_duals(dx, rgz, rhw, dz, dw);
    enforce_dual_row(dy, dz, dw);
    double ap, ad;
    max_steps(dx, dz, dw, ap, ad);
    ap = std::min(1.0, kIpmStepFraction * ap);
    ad = std::min(1.0, kIpmStepFraction * ad);

    x += ap * dx;
    y += ad * dy;
    z += ad * dz;
    w += ad * dw;
    for (int j = 0; j < n; ++j) {
      if (has_l[j]) z(j) = std::max(z(j), 1e-14);
      if (has_u[j]) w(j) = std::max(w(j), 1e-14);
    }
  }
  return finish_best();
}

// Ruiz equilibration in front of the core solver. Constraint rows of these
// programs mix scales (flow rows near one, envelope rows near the visit
// cap), which drives the KKT condition number high enough that late
// corrector solves lose the digits the endgame needs and complementarity
// floors early. Scaling rows and columns toward unit infinity norm leaves
// barrier products and the objective value invariant (a column scale acts
// reciprocally on the variable and its multipliers), so gap and
// complementarity semantics pass through unchanged; only the residual
// norms are measured in the scaled geometry, where the solver actually
// operates.
inline MehrotraResult mehrotra(const IpmForm& f_in, int max_iterations) {
  const int n = f_in.cols();
  const int m = f_in.rows();
  Eigen::VectorXd row_scale = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd col_scale = Eigen::VectorXd::Ones(n);
  for (int pass = 0; pass < 4; ++pass) {
    Eigen::VectorXd row_max = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd col_max = Eigen::VectorXd::Zero(n);
    for (int col = 0; col < f_in.a.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(f_in.a, col); it;
           ++it) {
        const double v = std::abs(it.value()) * row_scale(it.row()) *
                         col_scale(it.col());
        row_max(it.row()) = std::max(row_max(it.row()), v);
        col_max(it.col()) = std::max(col_max(it.col()), v);
      }
    for (int i = 0; i < m; ++i)
      if (row_max(i) > 0.0) row_scale(i) /= std::sqrt(row_max(i));
    for (int j = 0; j < n; ++j)
      if (col_max(j) > 0.0) col_scale(j) /= std::sqrt(col_max(j));
  }

  IpmForm f = f_in;
  for (int col = 0; col < f.a.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(f.a, col); it; ++it)
      it.valueRef() *= row_scale(it.row()) * col_scale(it.col());
  f.b = f.b.cwiseProduct(row_scale);
  f.c = f.c.cwiseProduct(col_scale);
  for (int j = 0; j < n; ++j) {
    // Substituting x = col_scale .* x' divides the bounds; infinities stay.
    if (f.l(j) > -kInf) f.l(j) /= col_scale(j);
    if (f.u(j) < kInf) f.u(j) /= col_scale(j);
  }

  MehrotraResult result = mehrotra_core(f, max_iterations);
  if (result.x.size() == n) result.x = result.x.cwiseProduct(col_scale);
  return result;
}

// Bound substitution and slack absorption: pinned variables (l == u) leave
// the program, inequality rows gain slack columns in [0, inf).
struct IpmStandardized {
  IpmForm form;
  std::vector<int> col_of_var;      // -1 when pinned
  std::vector<double> pinned_value; // meaningful when col_of_var == -1
  int n_vars = 0;

  Eigen::VectorXd restore(const Eigen::VectorXd& x_std) const {
    Eigen::VectorXd x(n_vars);
    for (int j = 0; j < n_vars; ++j)
      x(j) = col_of_var[j] >= 0 ? x_std(col_of_var[j]) : pinned_value[j];
    return x;
  }
};

inline IpmStandardized ipm_standardize(const LpProblem& p) {
  const int n = p.num_variables();
  const int m_eq = p.num_eq();
  const int m_in = p.num_ineq();

  IpmStandardized sf;
  sf.n_vars = n;
  sf.col_of_var.assign(n, -1);
  sf.pinned_value.assign(n, 0.0);
  int n_active = 0;
  for (int j = 0; j < n; ++j) {
    if (p.lower_bounds(j) == p.upper_bounds(j))
      sf.pinned_value[j] = p.lower_bounds(j);
    else
      sf.col_of_var[j] = n_active++;
  }
  const int n_std = n_active + m_in;

  Eigen::VectorXd b(m_eq + m_in);
  if (m_eq > 0) b.head(m_eq) = p.eq_rhs;
  if (m_in > 0) b.tail(m_in) = p.ineq_rhs;

  std::vector<Eigen::Triplet<double>> trips;
  const auto scatter = [&](const Eigen::SparseMatrix<double>& mat,
                           int row_offset) {
    for (int col = 0; col < mat.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(mat, col); it; ++it) {
        const int var = static_cast<int>(it.col());
        const int row = row_offset + static_cast<int>(it.row());
        if (sf.col_of_var[var] >= 0)
          trips.emplace_back(row, sf.col_of_var[var], it.value());
        else
          b(row) -= it.value() * sf.pinned_value[var];
      }
  };
  scatter(p.eq_matrix, 0);
  scatter(p.ineq_matrix, m_eq);
  for (int i = 0; i < m_in; ++i)
    trips.emplace_back(m_eq + i, n_active + i, 1.0);

  IpmForm& f = sf.form;
  f.a.resize(m_eq + m_in, n_std);
  f.a.setFromTriplets(trips.begin(), trips.end());
  f.b = b;
  f.c = Eigen::VectorXd::Zero(n_std);
  f.l = Eigen::VectorXd::Constant(n_std, -kInf);
  f.u = Eigen::VectorXd::Constant(n_std, kInf);
  for (int j = 0; j < n; ++j)
    if (sf.col_of_var[j] >= 0) {
      f.c(sf.col_of_var[j]) = p.objective(j);
      f.l(sf.col_of_var[j]) = p.lower_bounds(j);
      f.u(sf.col_of_var[j]) = p.upper_bounds(j);
    }
  for (int i = 0; i < m_in; ++i) f.l(n_active + i) = 0.0;
  return sf;
}

// Elastic feasibility program: min 1'(pos + neg) s.t. Ax + pos - neg = b
// within the original bounds. Its optimum is the minimum total equality
// violation; above the shared 1e-7 threshold the problem is infeasible.
inline IpmForm ipm_phase1(const IpmForm& f) {
  const int n = f.cols();
  const int m = f.rows();
  IpmForm p1;
  std::vector<Eigen::Triplet<double>> trips;
  for (int col = 0; col < f.a.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(f.a, col); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()),
                         static_cast<int>(it.col()), it.value());
  for (int i = 0; i < m; ++i) {
    trips.emplace_back(i, n + i, 1.0);
    trips.emplace_back(i, n + m + i, -1.0);
  }
  p1.a.resize(m, n + 2 * m);
  p1.a.setFromTriplets(trips.begin(), trips.end());
  p1.b = f.b;
  p1.c = Eigen::VectorXd::Zero(n + 2 * m);
  p1.c.tail(2 * m).setOnes();
  p1.l = Eigen::VectorXd::Constant(n + 2 * m, -kInf);
  p1.u = Eigen::VectorXd::Constant(n + 2 * m, kInf);
  p1.l.head(n) = f.l;
  p1.u.head(n) = f.u;
  p1.l.tail(2 * m).setZero();
  return p1;
}

inline LpSolution solve_interior_point(const LpProblem& p,
                                       int max_iterations) {
  if (max_iterations <= 0) max_iterations = 500;
  const IpmStandardized sf = ipm_standardize(p);

  LpSolution solution;
  MehrotraResult main = mehrotra(sf.form, max_iterations);
  if (main.converged) {
    solution.status = LpStatus::kOptimal;
    solution.x = sf.restore(main.x);
    solution.iterations = main.iterations;
    return solution;
  }

  // Did not converge: decide between infeasible, unbounded, and failure.
  MehrotraResult ph1 = mehrotra(ipm_phase1(sf.form), max_iterations);
  const int m = sf.form.rows();
  const double violation =
      ph1.x.size() > 0 ? ph1.x.tail(2 * m).sum() : kInf;
  // The phase-1 optimum only has to land on one side of the feasibility
  // threshold. A run that stopped short of full convergence still decides
  // the question when its equality rows hold and its duality gap cannot
  // move the violation across the threshold.
  bool decided = ph1.converged;
  if (!decided && ph1.rel_primal <= kIpmTol) {
    const double gap_bound = ph1.rel_gap * (1.0 + std::abs(violation));
    decided = violation <= kLpFeasTol || violation - gap_bound > kLpFeasTol;
  }
  if (!decided)
    throw LpNumericalError(
        "interior-point: phase-1 feasibility program did not converge",
        main.iterations + ph1.iterations);
  if (violation > kLpFeasTol) {
    solution.status = LpStatus::kInfeasible;
    solution.max_residual = violation;
    solution.iterations = main.iterations + ph1.iterations;
    return solution;
  }

  // Feasible; retry with artificial boxes. A box sitting active at the
  // optimum exposes an unbounded ray.
  const double kBig = 1e8;
  IpmForm boxed = sf.form;
  std::vector<char> was_free_low(boxed.cols()), was_free_high(boxed.cols());
  for (int j = 0; j < boxed.cols(); ++j) {
    if (boxed.l(j) == -kInf) {
      boxed.l(j) = -kBig;
      was_free_low[j] = 1;
    }
    if (boxed.u(j) == kInf) {
      boxed.u(j) = kBig;
      was_free_high[j] = 1;
    }
  }
  MehrotraResult bx = mehrotra(boxed, max_iterations);
  if (!bx.converged)
    throw LpNumericalError(
        "interior-point: failed to converge (primal feasible instance)",
        main.iterations + ph1.iterations + bx.iterations);
  for (int j = 0; j < boxed.cols(); ++j) {
    const bool low_active =
        was_free_low[j] && bx.x(j) - boxed.l(j) < 1e-3 * kBig;
    const bool high_active =
        was_free_high[j] && boxed.u(j) - bx.x(j) < 1e-3 * kBig;
    if (low_active || high_active) {
      solution.status = LpStatus::kUnbounded;
      solution.iterations = main.iterations + ph1.iterations + bx.iterations;
      return solution;
    }
  }
  solution.status = LpStatus::kOptimal;
  solution.x = sf.restore(bx.x);
  solution.iterations = main.iterations + ph1.iterations + bx.iterations;
  return solution;
}

}  // namespace cal::detail
