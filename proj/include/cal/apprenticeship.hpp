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

// Apprenticeship-learning primitives: cost bases, the worst-case cost
// discrepancy, the weighted performance function, the per-environment
// decoupled solve, and a brute-force grid oracle for the centralized
// (single shared policy) problem.
//
// Costs are never observed; the expert is known only through an occupation
// measure. For a cost basis Phi with columns of infinity norm <= 1, the
// worst-case cost gap between a candidate measure mu and the expert measure
// over the induced cost ball is ||Phi'(mu - mu_E)||_1, so imitation reduces
// to the linear program
//     min ||Phi' mu - Phi' mu_E||_1   s.t.   mu in F
// over the environment's occupation polytope F. Empirical expert measures
// need not lie in F themselves; they enter only through the objective.

#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cal/lp.hpp"
#include "cal/mdp.hpp"

namespace cal {

// Cost basis matrix Phi: one column per basis cost vector, rows indexed by
// (state, action) pairs. Every admissible cost is Phi w with ||w||_inf <= 1.
struct CostBasis {
  Eigen::MatrixXd basis;  // (n_states * n_actions) x n_costs

  int n_costs() const { return static_cast<int>(basis.cols()); }
  int n_pairs() const { return static_cast<int>(basis.rows()); }

  void validate() const {
    if (basis.rows() <= 0 || basis.cols() <= 0)
      throw ModelError("CostBasis: empty matrix");
    for (int j = 0; j < basis.cols(); ++j)
      if (basis.col(j).cwiseAbs().maxCoeff() > 1.0 + 1e-12)
        throw ModelError("CostBasis: column " + std::to_string(j) +
                         " has infinity norm above 1");
  }

  // One indicator column per (state, action) pair.
  static CostBasis identity(int n_pairs) {
    CostBasis b;
    b.basis = Eigen::MatrixXd::Identity(n_pairs, n_pairs);
    return b;
  }
};

// One environment plus the expert evidence collected in it.
struct EnvironmentBundle {
  Mdp mdp;
  OccupationMeasure expert_measure;
  std::string label;

  void validate() const {
    mdp.validate();
    expert_measure.validate();
    if (expert_measure.n_states != mdp.n_states ||
        expert_measure.n_actions != mdp.n_actions)
      throw ModelError("EnvironmentBundle: expert measure shape mismatch");
  }

  // Worst violation of the per-state mass bounds by the expert measure.
  // Empirical measures routinely violate them a little (truncation and
  // sampling noise); callers may warn but must not reject.
  double expert_mass_violation() const {
    const double upper = mdp.n_actions / (1.0 - mdp.discount);
    double v = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
      const double mass = expert_measure.state_mass(s);
      v = std::max(v, mdp.initial_dist(s) - mass);
      v = std::max(v, mass - upper);
    }
    return std::max(v, 0.0);
  }
};

// Weights over environments for the aggregate performance function.
struct PerformanceWeights {
  Eigen::VectorXd beta;

  void validate() const {
    if (beta.size() <= 0) throw ModelError("PerformanceWeights: empty");
    if (beta.minCoeff() < 0.0)
      throw ModelError("PerformanceWeights: negative weight");
    if (std::abs(beta.sum() - 1.0) > kStochasticTol)
      throw ModelError("PerformanceWeights: weights do not sum to 1");
  }
};

// Worst-case cost gap sup over the basis cost ball, which is
// ||Phi' mu - Phi' mu_E||_1 (the sup is attained at the sign pattern of
// Phi'(mu - mu_E)).
inline double discrepancy(const OccupationMeasure& mu,
                          const OccupationMeasure& expert,
                          const CostBasis& basis) {
  basis.validate();
  if (mu.mu.size() != expert.mu.size() ||
      mu.mu.size() != basis.basis.rows())
    throw ModelError("discrepancy: dimension mismatch");
  return (basis.basis.transpose() * (mu.mu - expert.mu)).lpNorm<1>();
}

// Aggregate performance: sum_i beta_i * discrepancy of the policy's exact
// occupation measure in environment i against that environment's expert.
inline double performance(const PerformanceWeights& weights,
                          const Policy& policy,
                          const std::vector<EnvironmentBundle>& envs,
                          const CostBasis& basis) {
  weights.validate();
  if (static_cast<int>(envs.size()) != weights.beta.size())
    throw ModelError("performance: weight/environment count mismatch");
  double value = 0.0;
  for (std::size_t i = 0; i < envs.size(); ++i) {
    envs[i].validate();
    value += weights.beta(static_cast<int>(i)) *
             discrepancy(occupation_from_policy(envs[i].mdp, policy),
                         envs[i].expert_measure, basis);
  }
  return value;
}

// Measure-matching program for one environment: variables mu >= 0 over the
// occupation polytope, L1 objective through the epigraph transform.
inline LpProblem decoupled_lp(const EnvironmentBundle& env,
                              const CostBasis& basis) {
  env.validate();
  basis.validate();
  if (basis.n_pairs() != env.mdp.pair_count())
    throw ModelError("decoupled_lp: basis row count mismatch");

  LpAssembler assembler;
  for (int i = 0; i < env.mdp.pair_count(); ++i)
    assembler.add_variable("mu" + std::to_string(i), 0.0, kInf);
  const FeasibilityPolytope poly = feasibility_polytope(env.mdp);
  for (int s = 0; s < env.mdp.n_states; ++s) {
    LpAssembler::Terms terms;
    for (int i = 0; i < env.mdp.pair_count(); ++i)
      if (poly.eq_matrix(s, i) != 0.0)
        terms.emplace_back(i, poly.eq_matrix(s, i));
    assembler.add_eq(terms, poly.eq_rhs(s));
  }
  const Eigen::SparseMatrix<double> phi_t =
      basis.basis.transpose().sparseView();
  return l1_epigraph(phi_t, basis.basis.transpose() * env.expert_measure.mu,
                     assembler.build());
}

struct DecoupledSolution {
  Policy policy;
  OccupationMeasure measure;
  double value = 0.0;
};

// Best imitation of one environment's expert in isolation.
inline DecoupledSolution solve_decoupled(const EnvironmentBundle& env,
                                         const CostBasis& basis,
                                         const LpOptions& options = {}) {
  const LpProblem p = decoupled_lp(env, basis);
  const LpSolution lp = solve_lp(p, options);
  if (lp.status != LpStatus::kOptimal)
    throw std::runtime_error(
        std::string("solve_decoupled: occupation polytope program is ") +
        to_string(lp.status) + " (malformed environment)");

  DecoupledSolution solution;
  solution.measure.n_states = env.mdp.n_states;
  solution.measure.n_actions = env.mdp.n_actions;
  solution.measure.mu = lp.x.head(env.mdp.pair_count()).cwiseMax(0.0);
  solution.policy = policy_from_occupation(solution.measure);
  // The objective is a norm; round-off in the solve can leave it a few ulps
  // below zero.
  solution.value = std::max(lp.objective_value, 0.0);
  return solution;
}

struct CentralizedSolution {
  Policy policy;
  double value = 0.0;
};

namespace detail {

// Enumerates grid points of the probability simplex with `grid` steps:
// all compositions of `grid` into n_actions parts, scaled by 1/grid.
inline void enumerate_simplex_grid(int n_actions, int grid,
                                   std::vector<Eigen::VectorXd>& out) {
  Eigen::VectorXd point = Eigen::VectorXd::Zero(n_actions);
  const std::function<void(int, int)> rec = [&](int index, int remaining) {
    if (index == n_actions - 1) {
      point(index) = static_cast<double>(remaining) / grid;
      out.push_back(point);
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      point(index) = static_cast<double>(k) / grid;
      rec(index + 1, remaining - k);
    }
  };
  rec(0, grid);
}

}  // namespace detail

// Exhaustive grid search for the centralized problem: one policy shared by
// every environment, scored by the summed discrepancies of its exact
// occupation measures. An oracle for small instances only; the answer is
// exact on the grid and within O(1/grid) of the continuous optimum.
inline CentralizedSolution solve_centralized_bruteforce(
    const std::vector<EnvironmentBundle>& envs, const CostBasis& basis,
    int grid) {
  if (envs.empty())
    throw ModelError("solve_centralized_bruteforce: no environments");
  for (const EnvironmentBundle& env : envs) env.validate();
  basis.validate();
  const int n_states = envs.front().mdp.n_states;
  const int n_actions = envs.front().mdp.n_actions;
  if (n_states * n_actions > 8)
    throw ModelError(
        "solve_centralized_bruteforce: instance too large (|S||A| > 8)");
  if (grid < 1 || grid > 21)
    throw ModelError("solve_centralized_bruteforce: grid must be in [1, 21]");

  std::vector<Eigen::VectorXd> rows;
  detail::enumerate_simplex_grid(n_actions, grid, rows);
  const int n_rows = static_cast<int>(rows.size());

  CentralizedSolution best;
  best.value = kInf;
  std::vector<int> choice(n_states, 0);
  Policy candidate;
  candidate.probs.resize(n_states, n_actions);
  for (;;) {
    for (int s = 0; s < n_states; ++s)
      candidate.probs.row(s) = rows[choice[s]].transpose();
    double value = 0.0;
    for (const EnvironmentBundle& env : envs)
      value += discrepancy(occupation_from_policy(env.mdp, candidate),
                           env.expert_measure, basis);
    if (value < best.value) {
      best.value = value;
      best.policy = candidate;
    }
    int pos = n_states - 1;
    while (pos >= 0 && choice[pos] == n_rows - 1) choice[pos--] = 0;
    if (pos < 0) break;
    ++choice[pos];
  }
  return best;
}

}  // namespace cal
