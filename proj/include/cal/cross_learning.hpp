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

// Cross apprenticeship learning (CAL).
//
// N environments share states, actions, discount and initial distribution
// but differ in dynamics. CAL couples per-environment imitation through a
// cross policy pi_c:
//
//   min  sum_i ||Phi' mu_i - Phi' mu_Ei||_1
//   s.t. mu_i in F_i,  pi_c row-stochastic,
//        |pi_i(a|s) - pi_c(a|s)| <= eps,
//
// where pi_i is the policy induced by mu_i. The proximity constraint is
// bilinear in (mu_i, pi_c) because pi_i(a|s) = mu_i(s,a) / sigma_i(s) with
// sigma_i(s) the state mass. Two convex surrogates are provided:
//
//  - An outer relaxation: substitute w_i(s,a) for the product
//    sigma_i(s) * pi_c(a|s), require |mu_i - w_i| <= eps * sigma_i, and bound
//    w_i by the four McCormick cuts for the box sigma_i(s) in
//    [alpha(s), |A|/(1-gamma)], pi_c(a|s) in [0, 1]. Its optimum is a lower
//    bound on the CAL optimum.
//
//  - An inner approximation: a central measure mu_c with per-state mass in
//    [nu_min, |A|/(1-gamma)] and ||mu_i - mu_c||_inf <= nu_min*eps/(2|S||A|),
//    where nu_min = min_s alpha(s). Any feasible point yields CAL-feasible
//    policies, but the program is often infeasible (radius 0 when some
//    alpha(s) = 0, which forces all mu_i equal).
//
// Policies are recovered from relaxation measures by per-state Euclidean
// projection onto the eps-box around a center (the metric is a choice; the
// projection target set is part of the problem, the metric is not).

#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cal/apprenticeship.hpp"
#include "cal/lp.hpp"
#include "cal/mdp.hpp"

namespace cal {

struct CalInstance {
  std::vector<EnvironmentBundle> envs;
  CostBasis basis;
  double epsilon = 1.0;

  int n_envs() const { return static_cast<int>(envs.size()); }

  void validate() const {
    if (envs.empty()) throw ModelError("CalInstance: no environments");
    basis.validate();
    const Mdp& first = envs.front().mdp;
    for (const EnvironmentBundle& env : envs) {
      env.validate();
      if (env.mdp.n_states != first.n_states ||
          env.mdp.n_actions != first.n_actions)
        throw ModelError("CalInstance: environments disagree on shape");
      if (env.mdp.discount != first.discount)
        throw ModelError("CalInstance: environments disagree on discount");
      if ((env.mdp.initial_dist - first.initial_dist).cwiseAbs().maxCoeff() >
          kStochasticTol)
        throw ModelError(
            "CalInstance: environments disagree on the initial distribution");
    }
    if (basis.n_pairs() != first.pair_count())
      throw ModelError("CalInstance: basis row count mismatch");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
      throw ModelError("CalInstance: epsilon must lie in [0, 1]");
  }
};

// Index arithmetic for the relaxation program's variable block layout:
// [mu_0 .. mu_{N-1} | pi_c | w_0 .. w_{N-1} | sigma_0 .. sigma_{N-1} | aux].
struct McCormickLayout {
  int n_envs = 0;
  int n_states = 0;
  int n_actions = 0;

  int pairs() const { return n_states * n_actions; }
  int mu(int env, int sa) const { return env * pairs() + sa; }
  int pi_c(int sa) const { return n_envs * pairs() + sa; }
  int w(int env, int sa) const {
    return (n_envs + 1) * pairs() + env * pairs() + sa;
  }
  int sigma(int env, int s) const {
    return (2 * n_envs + 1) * pairs() + env * n_states + s;
  }
  // Variables before the L1 epigraph block.
  int core_variables() const {
    return (2 * n_envs + 1) * pairs() + n_envs * n_states;
  }
};

struct McCormickSolution {
  std::vector<OccupationMeasure> measures;      // mu_i
  Policy cross_policy;                          // pi_c
  std::vector<Eigen::VectorXd> aux_w;           // bilinear surrogates
  std::vector<Eigen::VectorXd> aux_state_mass;  // sigma_i
  double lower_bound = 0.0;
};

// Assembles the outer-relaxation program. Sizes (S = |S|, A = |A|, N
// environments, n_c basis columns):
//   variables:   S*A*(2N + 1) + N*S core, plus N*n_c epigraph auxiliaries;
//   equalities:  S*(2N + 1)  (N polytopes, N sigma definitions, pi_c rows);
//   inequalities: 6*N*S*A core (4 cuts + 2-sided proximity), plus 2*N*n_c
//                 from the epigraph. At eps = 0 the proximity band is
//                 emitted as N*S*A equalities instead.
inline LpProblem build_mccormick(const CalInstance& instance) {
  instance.validate();
  const int n = instance.n_envs();
  const Mdp& shared = instance.envs.front().mdp;
  McCormickLayout idx{n, shared.n_states, shared.n_actions};
  const double mass_cap = shared.n_actions / (1.0 - shared.discount);
  const double eps = instance.epsilon;

  LpAssembler assembler;
  for (int i = 0; i < n; ++i)
    for (int sa = 0; sa < idx.pairs(); ++sa)
      assembler.add_variable("mu" + std::to_string(i) + "_" +
                                 std::to_string(sa),
                             0.0, kInf);
  for (int sa = 0; sa < idx.pairs(); ++sa)
    assembler.add_variable("pic_" + std::to_string(sa), 0.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int sa = 0; sa < idx.pairs(); ++sa)
      assembler.add_variable(
          "w" + std::to_string(i) + "_" + std::to_string(sa), 0.0, kInf);
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < shared.n_states; ++s) {
      const double lo = shared.initial_dist(s);
      // Strict for every valid model: alpha(s) <= 1 < |A|/(1-gamma).
      if (!(lo < mass_cap))
        throw std::logic_error(
            "build_mccormick: degenerate state-mass box (internal)");
      assembler.add_variable(
          "sigma" + std::to_string(i) + "_" + std::to_string(s), lo,
          mass_cap);
    }

  for (int i = 0; i < n; ++i) {
    // mu_i in F_i.
    const FeasibilityPolytope poly =
        feasibility_polytope(instance.envs[i].mdp);
    for (int s = 0; s < shared.n_states; ++s) {
      LpAssembler::Terms terms;
      for (int sa = 0; sa < idx.pairs(); ++sa)
        if (poly.eq_matrix(s, sa) != 0.0)
          terms.emplace_back(idx.mu(i, sa), poly.eq_matrix(s, sa));
      assembler.add_eq(terms, poly.eq_rhs(s));
    }
    // sigma_i(s) = sum_a mu_i(s,a).
    for (int s = 0; s < shared.n_states; ++s) {
      LpAssembler::Terms terms{{idx.sigma(i, s), -1.0}};
      for (int a = 0; a < shared.n_actions; ++a)
        terms.emplace_back(idx.mu(i, a + s * shared.n_actions), 1.0);
      assembler.add_eq(terms, 0.0);
    }
  }
  // pi_c rows on the simplex (entry bounds [0,1] are variable bounds).
  for (int s = 0; s < shared.n_states; ++s) {
    LpAssembler::Terms terms;
    for (int a = 0; a < shared.n_actions; ++a)
      terms.emplace_back(idx.pi_c(a + s * shared.n_actions), 1.0);
    assembler.add_eq(terms, 1.0);
  }

  // McCormick cuts for w ~ sigma * pi_c over the box
  // sigma in [alpha(s), mass_cap], pi_c in [0, 1], plus the proximity band
  // |mu - w| <= eps * sigma.
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < shared.n_states; ++s) {
      const double lo = shared.initial_dist(s);
      for (int a = 0; a < shared.n_actions; ++a) {
        const int sa = a + s * shared.n_actions;
        const int vw = idx.w(i, sa);
        const int vp = idx.pi_c(sa);
        const int vs = idx.sigma(i, s);
        const int vm = idx.mu(i, sa);
        assembler.add_le({{vw, -1.0}, {vp, lo}}, 0.0);
        assembler.add_le({{vw, -1.0}, {vs, 1.0}, {vp, mass_cap}}, mass_cap);
        assembler.add_le({{vw, 1.0}, {vs, -1.0}, {vp, -lo}}, -lo);
        assembler.add_le({{vw, 1.0}, {vp, -mass_cap}}, 0.0);
        if (eps == 0.0) {
          // A zero-width band written as two inequalities leaves both
          // slacks pinned at zero with degenerate multipliers; the
          // equivalent equality keeps the program numerically regular.
          assembler.add_eq({{vm, 1.0}, {vw, -1.0}}, 0.0);
        } else {
          assembler.add_le({{vm, 1.0}, {vw, -1.0}, {vs, -eps}}, 0.0);
          assembler.add_le({{vm, -1.0}, {vw, 1.0}, {vs, -eps}}, 0.0);
        }
      }
    }

  // Objective sum_i ||Phi' mu_i - Phi' mu_Ei||_1 through the epigraph.
  const int n_costs = instance.basis.n_costs();
  std::vector<Eigen::Triplet<double>> m_triplets;
  Eigen::VectorXd offset(n * n_costs);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n_costs; ++j)
      for (int sa = 0; sa < idx.pairs(); ++sa)
        if (instance.basis.basis(sa, j) != 0.0)
          m_triplets.emplace_back(i * n_costs + j, idx.mu(i, sa),
                                  instance.basis.basis(sa, j));
    offset.segment(i * n_costs, n_costs) =
        instance.basis.basis.transpose() * instance.envs[i].expert_measure.mu;
  }
  Eigen::SparseMatrix<double> m(n * n_costs, idx.core_variables());
  m.setFromTriplets(m_triplets.begin(), m_triplets.end());
  return l1_epigraph(m, offset, assembler.build());
}

// Solves the outer relaxation and unpacks the variable blocks. The LP is
// always feasible for a valid instance (exact products of any feasible
// measures with any row-stochastic pi_c satisfy every cut), so a
// non-optimal status signals an internal error.
inline McCormickSolution solve_mccormick(const CalInstance& instance,
                                         const LpOptions& options = {}) {
  const LpProblem p = build_mccormick(instance);
  const LpSolution lp = solve_lp(p, options);
  if (lp.status != LpStatus::kOptimal)
    throw std::runtime_error(
        std::string("solve_mccormick: relaxation program reported ") +
        to_string(lp.status) + " (internal error)");

  const Mdp& shared = instance.envs.front().mdp;
  McCormickLayout idx{instance.n_envs(), shared.n_states, shared.n_actions};
  McCormickSolution solution;
  solution.lower_bound = std::max(lp.objective_value, 0.0);
  for (int i = 0; i < instance.n_envs(); ++i) {
    OccupationMeasure mu;
    mu.n_states = shared.n_states;
    mu.n_actions = shared.n_actions;
    mu.mu = lp.x.segment(idx.mu(i, 0), idx.pairs()).cwiseMax(0.0);
    solution.measures.push_back(std::move(mu));
    solution.aux_w.push_back(lp.x.segment(idx.w(i, 0), idx.pairs()));
    solution.aux_state_mass.push_back(
        lp.x.segment(idx.sigma(i, 0), shared.n_states));
  }
  // pi_c satisfies the row sums only to solver accuracy; renormalize so the
  // result is a valid Policy.
  solution.cross_policy.probs.resize(shared.n_states, shared.n_actions);
  for (int s = 0; s < shared.n_states; ++s) {
    Eigen::VectorXd row(shared.n_actions);
    for (int a = 0; a < shared.n_actions; ++a)
      row(a) =
          std::max(lp.x(idx.pi_c(a + s * shared.n_actions)), 0.0);
    solution.cross_policy.probs.row(s) = row.transpose() / row.sum();
  }
  return solution;
}

struct InnerSolution {
  bool feasible = false;
  std::vector<OccupationMeasure> measures;  // mu_i, when feasible
  OccupationMeasure central_measure;        // mu_c, when feasible
  double value = 0.0;
};

// Inner (conservative) approximation: measures within an infinity-ball of
// radius nu_min * eps / (2|S||A|) around a central measure. Feasible points
// certify CAL feasibility of the recovered policies; infeasibility is an
// expected outcome and is returned, not thrown. With nu_min = 0 the radius
// collapses to zero and the program demands identical measures across
// environments.
inline InnerSolution solve_inner(const CalInstance& instance,
                                 const LpOptions& options = {}) {
  instance.validate();
  const int n = instance.n_envs();
  const Mdp& shared = instance.envs.front().mdp;
  const int pairs = shared.pair_count();
  const double nu_min = shared.initial_dist.minCoeff();
  const double radius =
      nu_min * instance.epsilon / (2.0 * shared.n_states * shared.n_actions);
  const double mass_cap = shared.n_actions / (1.0 - shared.discount);

  LpAssembler assembler;
  for (int i = 0; i < n; ++i)
    for (int sa = 0; sa < pairs; ++sa)
      assembler.add_variable(
          "mu" + std::to_string(i) + "_" + std::to_string(sa), 0.0, kInf);
  for (int sa = 0; sa < pairs; ++sa)
    assembler.add_variable("muc_" + std::to_string(sa), 0.0, kInf);
  const auto vm = [&](int env, int sa) { return env * pairs + sa; };
  const auto vc = [&](int sa) { return n * pairs + sa; };

  for (int i = 0; i < n; ++i) {
    const FeasibilityPolytope poly =
        feasibility_polytope(instance.envs[i].mdp);
    for (int s = 0; s < shared.n_states; ++s) {
      LpAssembler::Terms terms;
      for (int sa = 0; sa < pairs; ++sa)
        if (poly.eq_matrix(s, sa) != 0.0)
          terms.emplace_back(vm(i, sa), poly.eq_matrix(s, sa));
      assembler.add_eq(terms, poly.eq_rhs(s));
    }
    // ||mu_i - mu_c||_inf <= radius. A zero radius means equality; writing
    // it that way avoids inequality slacks pinned at zero with degenerate
    // multipliers.
    for (int sa = 0; sa < pairs; ++sa) {
      if (radius == 0.0) {
        assembler.add_eq({{vm(i, sa), 1.0}, {vc(sa), -1.0}}, 0.0);
      } else {
        assembler.add_le({{vm(i, sa), 1.0}, {vc(sa), -1.0}}, radius);
        assembler.add_le({{vm(i, sa), -1.0}, {vc(sa), 1.0}}, radius);
      }
    }
  }
  // mu_c in J: per-state mass within [nu_min, mass_cap].
  for (int s = 0; s < shared.n_states; ++s) {
    LpAssembler::Terms terms;
    for (int a = 0; a < shared.n_actions; ++a)
      terms.emplace_back(vc(a + s * shared.n_actions), 1.0);
    assembler.add_le(terms, mass_cap);
    assembler.add_ge(terms, nu_min);
  }

  const int n_costs = instance.basis.n_costs();
  std::vector<Eigen::Triplet<double>> m_triplets;
  Eigen::VectorXd offset(n * n_costs);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n_costs; ++j)
      for (int sa = 0; sa < pairs; ++sa)
        if (instance.basis.basis(sa, j) != 0.0)
          m_triplets.emplace_back(i * n_costs + j, vm(i, sa),
                                  instance.basis.basis(sa, j));
    offset.segment(i * n_costs, n_costs) =
        instance.basis.basis.transpose() * instance.envs[i].expert_measure.mu;
  }
  Eigen::SparseMatrix<double> m(n * n_costs, assembler.num_variables());
  m.setFromTriplets(m_triplets.begin(), m_triplets.end());
  const LpSolution lp = solve_lp(l1_epigraph(m, offset, assembler.build()),
                                 options);

  InnerSolution solution;
  if (lp.status == LpStatus::kInfeasible) return solution;
  if (lp.status != LpStatus::kOptimal)
    throw std::runtime_error(
        "solve_inner: bounded program reported unbounded (internal error)");
  solution.feasible = true;
  solution.value = std::max(lp.objective_value, 0.0);
  for (int i = 0; i < n; ++i) {
    OccupationMeasure mu;
    mu.n_states = shared.n_states;
    mu.n_actions = shared.n_actions;
    mu.mu = lp.x.segment(vm(i, 0), pairs).cwiseMax(0.0);
    solution.measures.push_back(std::move(mu));
  }
  solution.central_measure.n_states = shared.n_states;
  solution.central_measure.n_actions = shared.n_actions;
  solution.central_measure.mu = lp.x.segment(vc(0), pairs).cwiseMax(0.0);
  return solution;
}

// Euclidean projection of v onto {x on the simplex : |x - center| <= eps}.
// The KKT solution is x(lambda) = clamp(v - lambda, lo, hi) with
// lo = max(0, center - eps), hi = center + eps and lambda solving
// sum x(lambda) = 1; the sum is non-increasing in lambda, so bisection
// brackets it, and the exact multiplier is recovered on the final free set.
// The set is never empty: sum(lo) <= sum(center) = 1 <= sum(hi).
inline Eigen::VectorXd project_box_simplex(const Eigen::VectorXd& v,
                                           const Eigen::VectorXd& center,
                                           double epsilon) {
  const int n = static_cast<int>(v.size());
  if (center.size() != n)
    throw ModelError("project_box_simplex: dimension mismatch");
  if (epsilon < 0.0)
    throw ModelError("project_box_simplex: negative epsilon");
  if (std::abs(center.sum() - 1.0) > 1e-9 || center.minCoeff() < -1e-12)
    throw ModelError("project_box_simplex: center must lie on the simplex");

  Eigen::VectorXd lo(n), hi(n);
  for (int a = 0; a < n; ++a) {
    lo(a) = std::max(0.0, center(a) - epsilon);
    hi(a) = center(a) + epsilon;
  }
  const auto clamped = [&](double lambda, Eigen::VectorXd& out) {
    double total = 0.0;
    for (int a = 0; a < n; ++a) {
      out(a) = std::min(std::max(v(a) - lambda, lo(a)), hi(a));
      total += out(a);
    }
    return total;
  };

  double lambda_lo = (v - hi).minCoeff();  // everything at hi: sum >= 1
  double lambda_hi = (v - lo).maxCoeff();  // everything at lo: sum <= 1
  Eigen::VectorXd x(n);
  for (int it = 0; it < 200 && lambda_hi - lambda_lo > 1e-15; ++it) {
    const double mid = 0.5 * (lambda_lo + lambda_hi);
    if (clamped(mid, x) >= 1.0)
      lambda_lo = mid;
    else
      lambda_hi = mid;
  }
  double total = clamped(lambda_lo, x);
  // Exact correction on the free coordinates (strictly inside their
  // interval); they share the residual equally.
  int free_count = 0;
  for (int a = 0; a < n; ++a)
    if (x(a) > lo(a) + 1e-12 && x(a) < hi(a) - 1e-12) ++free_count;
  if (free_count > 0) {
    const double shift = (total - 1.0) / free_count;
    for (int a = 0; a < n; ++a)
      x(a) = std::min(std::max(x(a) - ((x(a) > lo(a) + 1e-12 &&
                                        x(a) < hi(a) - 1e-12)
                                           ? shift
                                           : 0.0),
                               lo(a)),
                      hi(a));
  }
  const double sum_error = std::abs(x.sum() - 1.0);
  double box_error = 0.0;
  for (int a = 0; a < n; ++a)
    box_error = std::max(
        {box_error, lo(a) - x(a), x(a) - hi(a)});
  if (sum_error > 1e-10 || box_error > 1e-10)
    throw std::runtime_error(
        "project_box_simplex: projection tolerance not met (internal)");
  return x;
}

enum class ProjectionStrategy {
  kCrossCentered = 1,   // project each pi_i onto the eps-box around pi_c
  kAverageCentered = 2  // center = mean of pi_i; project all onto its box
};

struct CalPolicies {
  std::vector<Policy> individual;
  Policy cross;
  bool feasible = false;
  double achieved_objective = 0.0;
};

// Turns relaxation measures into CAL-feasible policies. Both strategies
// project per state; the cross policy of kAverageCentered is the average
// itself (a convex combination of simplex rows, hence a valid policy).
// achieved_objective re-evaluates the objective with exact occupation
// measures of the projected policies, making the relaxation sandwich
// lower_bound <= achieved_objective checkable deterministically.
inline CalPolicies recover_policies(const McCormickSolution& sol,
                                    const CalInstance& instance,
                                    ProjectionStrategy strategy) {
  instance.validate();
  const int n = instance.n_envs();
  if (static_cast<int>(sol.measures.size()) != n)
    throw ModelError("recover_policies: measure count mismatch");
  const Mdp& shared = instance.envs.front().mdp;

  std::vector<Policy> raw;
  raw.reserve(n);
  for (const OccupationMeasure& mu : sol.measures)
    raw.push_back(policy_from_occupation(mu));

  Policy center;
  if (strategy == ProjectionStrategy::kCrossCentered) {
    center = sol.cross_policy;
  } else {
    center.probs = Eigen::MatrixXd::Zero(shared.n_states, shared.n_actions);
    for (const Policy& p : raw) center.probs += p.probs;
    center.probs /= static_cast<double>(n);
  }
  center.validate();

  CalPolicies out;
  out.cross = center;
  for (Policy p : raw) {
    for (int s = 0; s < shared.n_states; ++s)
      p.probs.row(s) = project_box_simplex(p.probs.row(s).transpose(),
                                           center.probs.row(s).transpose(),
                                           instance.epsilon)
                           .transpose();
    out.individual.push_back(std::move(p));
  }

  out.feasible = true;
  for (const Policy& p : out.individual)
    if ((p.probs - center.probs).cwiseAbs().maxCoeff() >
        instance.epsilon + 1e-9)
      out.feasible = false;

  out.achieved_objective = 0.0;
  for (int i = 0; i < n; ++i)
    out.achieved_objective +=
        discrepancy(occupation_from_policy(instance.envs[i].mdp,
                                           out.individual[i]),
                    instance.envs[i].expert_measure, instance.basis);
  return out;
}

}  // namespace cal
