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

// Finite MDPs and the exact correspondence between stationary policies and
// discounted occupation measures.
//
// The occupation measure of a policy pi is
//   mu(s,a) = sum_t gamma^t P[s_t = s, a_t = a],
// the discounted expected number of visits to the pair (s,a) when s_0 is
// drawn from the initial distribution. For a fixed environment the set of
// occupation measures is the polytope
//   F = { mu >= 0 : (B - gamma * P)^T mu = alpha },
// where row (s,a) of B selects state s and row (s,a) of P is the next-state
// distribution. The maps occupation_from_policy / policy_from_occupation
// realize the bijection between stationary policies and points of F (for
// measures with positive per-state mass).

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cal/rng.hpp"

namespace cal {

// Dimension/validation failures on the numeric types below.
class ModelError : public std::invalid_argument {
 public:
  explicit ModelError(const std::string& what) : std::invalid_argument(what) {}
};

// Tolerance for checking that probability vectors sum to one.
inline constexpr double kStochasticTol = 1e-12;
// Residual tolerance for exact linear-algebra results (occupation measures,
// polytope membership).
inline constexpr double kResidualTol = 1e-8;

// Finite MDP with a dense transition table. Transition rows are indexed by
// the flattened pair a + s * n_actions and hold next-state distributions.
struct Mdp {
  int n_states = 0;
  int n_actions = 0;
  // (n_states * n_actions) x n_states, rows sum to 1.
  Eigen::MatrixXd transition;
  double discount = 0.0;
  Eigen::VectorXd initial_dist;

  int pair_count() const { return n_states * n_actions; }
  int sa_index(int s, int a) const { return a + s * n_actions; }

  void validate() const {
    if (n_states <= 0 || n_actions <= 0)
      throw ModelError("Mdp: state and action counts must be positive");
    if (!(discount > 0.0 && discount < 1.0))
      throw ModelError("Mdp: discount must lie in (0, 1)");
    if (transition.rows() != pair_count() || transition.cols() != n_states)
      throw ModelError("Mdp: transition table has wrong shape");
    if (initial_dist.size() != n_states)
      throw ModelError("Mdp: initial_dist has wrong length");
    for (int r = 0; r < transition.rows(); ++r) {
      if (transition.row(r).minCoeff() < 0.0)
        throw ModelError("Mdp: negative transition probability in row " +
                         std::to_string(r));
      if (std::abs(transition.row(r).sum() - 1.0) > kStochasticTol)
        throw ModelError("Mdp: transition row " + std::to_string(r) +
                         " does not sum to 1");
    }
    if (initial_dist.minCoeff() < 0.0)
      throw ModelError("Mdp: negative initial probability");
    if (std::abs(initial_dist.sum() - 1.0) > kStochasticTol)
      throw ModelError("Mdp: initial_dist does not sum to 1");
  }
};

// Stationary policy: row s is the action distribution in state s.
struct Policy {
  Eigen::MatrixXd probs;

  int n_states() const { return static_cast<int>(probs.rows()); }
  int n_actions() const { return static_cast<int>(probs.cols()); }

  void validate() const {
    if (probs.rows() <= 0 || probs.cols() <= 0)
      throw ModelError("Policy: empty table");
    for (int s = 0; s < probs.rows(); ++s) {
      if (probs.row(s).minCoeff() < 0.0)
        throw ModelError("Policy: negative probability in state " +
                         std::to_string(s));
      if (std::abs(probs.row(s).sum() - 1.0) > kStochasticTol)
        throw ModelError("Policy: row " + std::to_string(s) +
                         " does not sum to 1");
    }
  }
};

// Discounted visitation vector over (state, action) pairs, indexed like the
// rows of Mdp::transition. Exact measures have total mass 1/(1 - gamma);
// empirical estimates truncated at horizon H fall short of it by at most
// gamma^H / (1 - gamma).
struct OccupationMeasure {
  int n_states = 0;
  int n_actions = 0;
  Eigen::VectorXd mu;

  int sa_index(int s, int a) const { return a + s * n_actions; }
  double state_mass(int s) const {
    return mu.segment(static_cast<Eigen::Index>(s) * n_actions, n_actions)
        .sum();
  }

  void validate() const {
    if (n_states <= 0 || n_actions <= 0)
      throw ModelError("OccupationMeasure: counts must be positive");
    if (mu.size() != static_cast<Eigen::Index>(n_states) * n_actions)
      throw ModelError("OccupationMeasure: vector has wrong length");
    if (mu.size() > 0 && mu.minCoeff() < 0.0)
      throw ModelError("OccupationMeasure: negative entry");
  }
};

struct Trajectory {
  // (state, action) per time step.
  std::vector<std::pair<int, int>> steps;

  int horizon() const { return static_cast<int>(steps.size()); }
};

// Equality part of the occupation-measure polytope: eq_matrix * mu = eq_rhs
// together with mu >= 0. eq_matrix = (B - gamma * P)^T has one row per state.
struct FeasibilityPolytope {
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
};

// Raised by policy_from_occupation when some state has zero total mass, in
// which case the conditional action distribution is undefined. Such measures
// lie outside every polytope with entrywise-positive initial distribution
// (the per-state mass is bounded below by alpha(s)).
class ZeroStateMassError : public std::runtime_error {
 public:
  explicit ZeroStateMassError(int state)
      : std::runtime_error("policy_from_occupation: state " +
                           std::to_string(state) +
                           " has zero occupation mass"),
        state_(state) {}
  int state() const { return state_; }

 private:
  int state_;
};

inline FeasibilityPolytope feasibility_polytope(const Mdp& mdp) {
  mdp.validate();
  const int n = mdp.n_states;
  const int na = mdp.n_actions;
  FeasibilityPolytope poly;
  poly.eq_matrix = Eigen::MatrixXd::Zero(n, n * na);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < na; ++a) {
      const int col = mdp.sa_index(s, a);
      poly.eq_matrix(s, col) += 1.0;  // B^T
      for (int sn = 0; sn < n; ++sn)
        poly.eq_matrix(sn, col) -= mdp.discount * mdp.transition(col, sn);
    }
  }
  poly.eq_rhs = mdp.initial_dist;
  return poly;
}

// Infinity norm of (B - gamma*P)^T mu - alpha.
inline double polytope_residual(const FeasibilityPolytope& poly,
                                const OccupationMeasure& measure) {
  return (poly.eq_matrix * measure.mu - poly.eq_rhs)
      .cwiseAbs()
      .maxCoeff();
}

// Exact occupation measure of `policy` in `mdp`: solve the state-visitation
// system d = alpha + gamma * K^T d, where K(s, s') = sum_a pi(a|s) P(s'|s,a),
// then split d over actions, mu(s,a) = d(s) * pi(a|s). The system matrix
// I - gamma * K^T is strictly diagonally dominant in columns for gamma < 1,
// hence always nonsingular; the result is checked against the polytope and a
// residual above tolerance is reported as an internal error.
inline OccupationMeasure occupation_from_policy(const Mdp& mdp,
                                                const Policy& policy) {
  mdp.validate();
  policy.validate();
  if (policy.n_states() != mdp.n_states ||
      policy.n_actions() != mdp.n_actions)
    throw ModelError("occupation_from_policy: policy shape mismatch");

  const int n = mdp.n_states;
  const int na = mdp.n_actions;
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < na; ++a)
      kernel.row(s) += policy.probs(s, a) * mdp.transition.row(mdp.sa_index(s, a));

  Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(n, n) - mdp.discount * kernel.transpose();
  Eigen::VectorXd d = system.partialPivLu().solve(mdp.initial_dist);

  OccupationMeasure measure;
  measure.n_states = n;
  measure.n_actions = na;
  measure.mu.resize(static_cast<Eigen::Index>(n) * na);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < na; ++a)
      measure.mu(mdp.sa_index(s, a)) = d(s) * policy.probs(s, a);
  // Round-off can produce tiny negatives; clip them so downstream
  // nonnegativity validation holds.
  measure.mu = measure.mu.cwiseMax(0.0);

  const double residual = polytope_residual(feasibility_polytope(mdp), measure);
  if (residual > kResidualTol)
    throw std::runtime_error(
        "occupation_from_policy: linear solve residual " +
        std::to_string(residual) + " exceeds tolerance (internal error)");
  return measure;
}

// Conditional action distribution of a measure:
// pi(a|s) = mu(s,a) / sum_a' mu(s,a'). Inverse of occupation_from_policy on
// measures with positive per-state mass.
inline Policy policy_from_occupation(const OccupationMeasure& measure) {
  measure.validate();
  Policy policy;
  policy.probs.resize(measure.n_states, measure.n_actions);
  for (int s = 0; s < measure.n_states; ++s) {
    const double mass = measure.state_mass(s);
    if (!(mass > 0.0)) throw ZeroStateMassError(s);
    for (int a = 0; a < measure.n_actions; ++a)
      policy.probs(s, a) = measure.mu(measure.sa_index(s, a)) / mass;
  }
  return policy;
}

// Rolls out `policy` for exactly `horizon` steps. Deterministic given seed.
inline Trajectory sample_trajectory(const Mdp& mdp, const Policy& policy,
                                    int horizon, std::uint64_t seed) {
  mdp.validate();
  policy.validate();
  if (policy.n_states() != mdp.n_states ||
      policy.n_actions() != mdp.n_actions)
    throw ModelError("sample_trajectory: policy shape mismatch");
  if (horizon < 1) throw ModelError("sample_trajectory: horizon must be >= 1");

  Rng rng(seed);
  Trajectory traj;
  traj.steps.reserve(horizon);
  int s = rng.categorical(mdp.initial_dist);
  for (int t = 0; t < horizon; ++t) {
    const int a = rng.categorical(policy.probs.row(s));
    traj.steps.emplace_back(s, a);
    s = rng.categorical(mdp.transition.row(mdp.sa_index(s, a)));
  }
  return traj;
}

// Empirical occupation measure: average over trajectories of the discounted
// indicator sums, truncated at each trajectory's horizon. The truncation
// bias is at most gamma^horizon / (1 - gamma) in total mass and is left
// uncorrected, matching how expert demonstrations are consumed.
inline OccupationMeasure empirical_occupation(
    const std::vector<Trajectory>& trajectories, double discount, int n_states,
    int n_actions) {
  if (trajectories.empty())
    throw ModelError("empirical_occupation: no trajectories");
  if (!(discount > 0.0 && discount < 1.0))
    throw ModelError("empirical_occupation: discount must lie in (0, 1)");
  if (n_states <= 0 || n_actions <= 0)
    throw ModelError("empirical_occupation: counts must be positive");

  OccupationMeasure measure;
  measure.n_states = n_states;
  measure.n_actions = n_actions;
  measure.mu =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_states) * n_actions);
  for (const Trajectory& traj : trajectories) {
    double weight = 1.0;
    for (const auto& [s, a] : traj.steps) {
      if (s < 0 || s >= n_states || a < 0 || a >= n_actions)
        throw ModelError("empirical_occupation: step index out of range");
      measure.mu(measure.sa_index(s, a)) += weight;
      weight *= discount;
    }
  }
  measure.mu /= static_cast<double>(trajectories.size());
  return measure;
}

}  // namespace cal
