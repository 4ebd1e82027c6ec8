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

// Test-only oracles and generators. Each oracle recomputes a quantity by a
// method independent of the implementation under test (Monte Carlo
// simulation, exhaustive enumeration, grid search), so agreement is evidence
// rather than tautology.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "cal/lp.hpp"
#include "cal/mdp.hpp"
#include "cal/rng.hpp"

namespace cal::testing {

// Random dense MDP with strictly positive transition probabilities and a
// strictly positive initial distribution (so Lemma-style mass lower bounds
// bind everywhere).
inline Mdp random_mdp(int n_states, int n_actions, double discount, Rng& rng) {
  Mdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.discount = discount;
  mdp.transition.resize(n_states * n_actions, n_states);
  for (int r = 0; r < mdp.transition.rows(); ++r) {
    double total = 0.0;
    for (int c = 0; c < n_states; ++c) {
      const double w = 0.05 + rng.uniform();
      mdp.transition(r, c) = w;
      total += w;
    }
    mdp.transition.row(r) /= total;
  }
  mdp.initial_dist.resize(n_states);
  double total = 0.0;
  for (int s = 0; s < n_states; ++s) {
    const double w = 0.05 + rng.uniform();
    mdp.initial_dist(s) = w;
    total += w;
  }
  mdp.initial_dist /= total;
  return mdp;
}

// Random policy with strictly positive action probabilities.
inline Policy random_policy(int n_states, int n_actions, Rng& rng) {
  Policy policy;
  policy.probs.resize(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    double total = 0.0;
    for (int a = 0; a < n_actions; ++a) {
      const double w = 0.05 + rng.uniform();
      policy.probs(s, a) = w;
      total += w;
    }
    policy.probs.row(s) /= total;
  }
  return policy;
}

inline Policy random_deterministic_policy(int n_states, int n_actions,
                                          Rng& rng) {
  Policy policy;
  policy.probs = Eigen::MatrixXd::Zero(n_states, n_actions);
  for (int s = 0; s < n_states; ++s)
    policy.probs(s, rng.uniform_int(n_actions)) = 1.0;
  return policy;
}

// Monte Carlo oracle for the occupation measure: averages discounted
// indicator sums over fresh rollouts simulated directly here (no use of the
// library's trajectory machinery beyond the Rng primitive). The truncation
// bias is at most discount^horizon / (1 - discount) in total mass.
inline Eigen::VectorXd mc_occupation(const Mdp& mdp, const Policy& policy,
                                     int n_rollouts, int horizon,
                                     std::uint64_t seed) {
  Eigen::VectorXd acc =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mdp.pair_count()));
  for (int k = 0; k < n_rollouts; ++k) {
    Rng rng(derive_seed(seed, "mc_occupation", static_cast<std::uint64_t>(k)));
    int s = rng.categorical(mdp.initial_dist);
    double weight = 1.0;
    for (int t = 0; t < horizon; ++t) {
      const int a = rng.categorical(policy.probs.row(s));
      acc(mdp.sa_index(s, a)) += weight;
      weight *= mdp.discount;
      s = rng.categorical(mdp.transition.row(mdp.sa_index(s, a)));
    }
  }
  return acc / static_cast<double>(n_rollouts);
}

inline double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// Visits every k-subset of {0, ..., total-1} in lexicographic order.
template <typename F>
inline void for_each_subset(int total, int k, F visit) {
  if (k > total) return;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    visit(idx);
    int pos = k - 1;
    while (pos >= 0 && idx[pos] == total - k + pos) --pos;
    if (pos < 0) return;
    ++idx[pos];
    for (int i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
  }
}

struct VertexOracleResult {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
  Eigen::VectorXd argmin;
};

// Brute-force LP optimum by vertex enumeration: every choice of n active
// constraints (all equalities plus a subset of inequalities and finite
// bounds) yields a candidate vertex; feasible candidates are scored by the
// objective. Exact for bounded feasible problems with <= 8 variables.
inline VertexOracleResult vertex_enumeration_optimum(const LpProblem& p) {
  const int n = p.num_variables();
  std::vector<std::pair<Eigen::VectorXd, double>> rows;  // optional-active
  std::vector<std::pair<Eigen::VectorXd, double>> eq_rows;
  const Eigen::MatrixXd eq_dense = Eigen::MatrixXd(p.eq_matrix);
  const Eigen::MatrixXd ineq_dense = Eigen::MatrixXd(p.ineq_matrix);
  for (int i = 0; i < p.num_eq(); ++i)
    eq_rows.emplace_back(eq_dense.row(i).transpose(), p.eq_rhs(i));
  for (int i = 0; i < p.num_ineq(); ++i)
    rows.emplace_back(ineq_dense.row(i).transpose(), p.ineq_rhs(i));
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(j) = 1.0;
    if (p.lower_bounds(j) > -kInf) rows.emplace_back(e, p.lower_bounds(j));
    if (p.upper_bounds(j) < kInf) rows.emplace_back(e, p.upper_bounds(j));
  }

  VertexOracleResult result;
  const int n_eq = static_cast<int>(eq_rows.size());
  if (n_eq > n) return result;
  for_each_subset(
      static_cast<int>(rows.size()), n - n_eq,
      [&](const std::vector<int>& subset) {
        Eigen::MatrixXd m(n, n);
        Eigen::VectorXd rhs(n);
        for (int i = 0; i < n_eq; ++i) {
          m.row(i) = eq_rows[i].first.transpose();
          rhs(i) = eq_rows[i].second;
        }
        for (int i = 0; i < n - n_eq; ++i) {
          m.row(n_eq + i) = rows[subset[i]].first.transpose();
          rhs(n_eq + i) = rows[subset[i]].second;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
        if (!lu.isInvertible()) return;
        const Eigen::VectorXd x = lu.solve(rhs);
        if (p.feasibility_residual(x) > 1e-7) return;
        result.feasible = true;
        const double value = p.objective.dot(x);
        if (value < result.objective) {
          result.objective = value;
          result.argmin = x;
        }
      });
  return result;
}

// Random fully-bounded LP, feasible by construction (a random interior point
// seeds the right-hand sides; pass `interior_out` to receive it). All
// variables live in [-5, 5], so vertex enumeration is complete on it.
inline LpProblem random_bounded_lp(int n_vars, int n_eq, int n_ineq, Rng& rng,
                                   Eigen::VectorXd* interior_out = nullptr) {
  LpAssembler assembler;
  for (int j = 0; j < n_vars; ++j)
    assembler.add_variable("x" + std::to_string(j), -5.0, 5.0,
                           2.0 * rng.uniform() - 1.0);
  Eigen::VectorXd x0(n_vars);
  for (int j = 0; j < n_vars; ++j) x0(j) = 2.0 * rng.uniform() - 1.0;
  if (interior_out != nullptr) *interior_out = x0;
  for (int i = 0; i < n_eq; ++i) {
    LpAssembler::Terms terms;
    double rhs = 0.0;
    for (int j = 0; j < n_vars; ++j) {
      const double coef = 2.0 * rng.uniform() - 1.0;
      terms.emplace_back(j, coef);
      rhs += coef * x0(j);
    }
    assembler.add_eq(terms, rhs);
  }
  for (int i = 0; i < n_ineq; ++i) {
    LpAssembler::Terms terms;
    double value = 0.0;
    for (int j = 0; j < n_vars; ++j) {
      const double coef = 2.0 * rng.uniform() - 1.0;
      terms.emplace_back(j, coef);
      value += coef * x0(j);
    }
    assembler.add_le(terms, value + 0.1 + rng.uniform());
  }
  return assembler.build();
}

}  // namespace cal::testing
