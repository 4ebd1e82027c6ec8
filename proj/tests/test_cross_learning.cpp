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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "cal/apprenticeship.hpp"
#include "cal/cross_learning.hpp"
#include "cal/lp.hpp"
#include "cal/mdp.hpp"
#include "oracles.hpp"

using namespace cal;
using cal::testing::max_abs_diff;

namespace {

// Environments sharing shape, discount and initial distribution, each with
// an exactly realizable expert.
CalInstance random_instance(int n_states, int n_actions, int n_envs,
                            double discount, double epsilon, Rng& rng) {
  CalInstance instance;
  instance.epsilon = epsilon;
  instance.basis = CostBasis::identity(n_states * n_actions);
  for (int i = 0; i < n_envs; ++i) {
    EnvironmentBundle env;
    env.mdp = cal::testing::random_mdp(n_states, n_actions, discount, rng);
    if (i > 0) env.mdp.initial_dist = instance.envs.front().mdp.initial_dist;
    env.expert_measure = occupation_from_policy(
        env.mdp, cal::testing::random_policy(n_states, n_actions, rng));
    env.label = "env" + std::to_string(i);
    instance.envs.push_back(std::move(env));
  }
  return instance;
}

// A CAL-feasible policy tuple: random cross policy, individual policies
// projected into its epsilon-box, objective evaluated on exact measures.
double random_feasible_tuple_objective(const CalInstance& instance,
                                       Rng& rng) {
  const Mdp& shared = instance.envs.front().mdp;
  const Policy pc = cal::testing::random_policy(shared.n_states,
                                                shared.n_actions, rng);
  double total = 0.0;
  for (const EnvironmentBundle& env : instance.envs) {
    Policy p = cal::testing::random_policy(shared.n_states,
                                           shared.n_actions, rng);
    for (int s = 0; s < shared.n_states; ++s)
      p.probs.row(s) = project_box_simplex(p.probs.row(s).transpose(),
                                           pc.probs.row(s).transpose(),
                                           instance.epsilon)
                           .transpose();
    total += discrepancy(occupation_from_policy(env.mdp, p),
                         env.expert_measure, instance.basis);
  }
  return total;
}

// Deterministic two-state pair whose occupation sets are far apart: one
// environment drifts between the states, the other freezes in place. With a
// skewed initial distribution the per-state masses disagree by orders of
// magnitude more than any proximity radius allows.
CalInstance frozen_vs_drift_instance(double alpha0, double epsilon) {
  const int n_states = 2;
  const int n_actions = 2;
  CalInstance instance;
  instance.epsilon = epsilon;
  instance.basis = CostBasis::identity(n_states * n_actions);
  for (int which = 0; which < 2; ++which) {
    EnvironmentBundle env;
    env.mdp.n_states = n_states;
    env.mdp.n_actions = n_actions;
    env.mdp.discount = 0.9;
    env.mdp.initial_dist.resize(n_states);
    env.mdp.initial_dist << alpha0, 1.0 - alpha0;
    env.mdp.transition = Eigen::MatrixXd::Zero(n_states * n_actions,
                                               n_states);
    for (int s = 0; s < n_states; ++s)
      for (int a = 0; a < n_actions; ++a) {
        const int next = which == 0 ? s : 1 - s;  // freeze vs drift
        env.mdp.transition(env.mdp.sa_index(s, a), next) = 1.0;
      }
    env.label = which == 0 ? "frozen" : "drift";
    Policy uniform;
    uniform.probs = Eigen::MatrixXd::Constant(n_states, n_actions,
                                              1.0 / n_actions);
    env.expert_measure = occupation_from_policy(env.mdp, uniform);
    instance.envs.push_back(std::move(env));
  }
  return instance;
}

}  // namespace

TEST_CASE("relaxation program has the documented block sizes", "[cross]") {
  Rng rng(401);
  // S=2, A=2: variables S*A*(2N+1) + N*S + N*n_c with the identity basis
  // (n_c = 4), equalities S*(2N+1), inequalities 6*N*S*A + 2*N*n_c.
  SECTION("single environment") {
    const CalInstance instance = random_instance(2, 2, 1, 0.8, 0.3, rng);
    const LpProblem p = build_mccormick(instance);
    REQUIRE(p.num_variables() == 18);
    REQUIRE(p.num_eq() == 6);
    REQUIRE(p.num_ineq() == 32);
  }
  SECTION("two environments") {
    const CalInstance instance = random_instance(2, 2, 2, 0.8, 0.3, rng);
    const LpProblem p = build_mccormick(instance);
    REQUIRE(p.num_variables() == 32);
    REQUIRE(p.num_eq() == 10);
    REQUIRE(p.num_ineq() == 64);
  }
}

TEST_CASE("McCormick cuts contain every exact product on the box", "[cross]") {
  Rng rng(402);
  const double x_lo = 0.15;  // stand-ins for alpha(s) and |A|/(1-gamma)
  const double x_hi = 20.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const double x = x_lo + (x_hi - x_lo) * rng.uniform();
    const double y = rng.uniform();
    const double w = x * y;
    REQUIRE(w >= x_lo * y - 1e-7);
    REQUIRE(w >= x + x_hi * (y - 1.0) - 1e-7);
    REQUIRE(w <= x + x_lo * (y - 1.0) + 1e-7);
    REQUIRE(w <= x_hi * y + 1e-7);
  }
}

TEST_CASE("relaxation feasible set contains all exact policy products",
          "[cross]") {
  Rng rng(403);
  const CalInstance instance = random_instance(3, 2, 2, 0.85, 0.4, rng);
  const LpProblem p = build_mccormick(instance);
  const Mdp& shared = instance.envs.front().mdp;
  McCormickLayout idx{instance.n_envs(), shared.n_states, shared.n_actions};
  const int n_costs = instance.basis.n_costs();

  // Assemble (mu_i, pi_c, w_i = sigma_i * pi_c, sigma_i, t = |residual|)
  // from arbitrary feasible policies and check every constraint directly.
  // Containment of all exact products is what makes the optimum a lower
  // bound for CAL.
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x =
        Eigen::VectorXd::Zero(p.num_variables());
    const Policy pc = cal::testing::random_policy(shared.n_states,
                                                  shared.n_actions, rng);
    for (int sa = 0; sa < idx.pairs(); ++sa)
      x(idx.pi_c(sa)) = pc.probs(sa / shared.n_actions,
                                 sa % shared.n_actions);
    for (int i = 0; i < instance.n_envs(); ++i) {
      // Policies inside the epsilon-box of pc keep the proximity rows valid.
      Policy pi = cal::testing::random_policy(shared.n_states,
                                              shared.n_actions, rng);
      for (int s = 0; s < shared.n_states; ++s)
        pi.probs.row(s) = project_box_simplex(pi.probs.row(s).transpose(),
                                              pc.probs.row(s).transpose(),
                                              instance.epsilon)
                              .transpose();
      const OccupationMeasure mu =
          occupation_from_policy(instance.envs[i].mdp, pi);
      for (int sa = 0; sa < idx.pairs(); ++sa) x(idx.mu(i, sa)) = mu.mu(sa);
      for (int s = 0; s < shared.n_states; ++s) {
        x(idx.sigma(i, s)) = mu.state_mass(s);
        for (int a = 0; a < shared.n_actions; ++a) {
          const int sa = a + s * shared.n_actions;
          x(idx.w(i, sa)) = mu.state_mass(s) * x(idx.pi_c(sa));
        }
      }
      const Eigen::VectorXd residual =
          instance.basis.basis.transpose() *
          (mu.mu - instance.envs[i].expert_measure.mu);
      for (int j = 0; j < n_costs; ++j)
        x(idx.core_variables() + i * n_costs + j) = std::abs(residual(j));
    }
    REQUIRE(p.feasibility_residual(x) <= 1e-9);
  }
}

TEST_CASE("relaxation optimum lower-bounds sampled feasible tuples",
          "[cross]") {
  Rng rng(404);
  for (double epsilon : {0.1, 0.35}) {
    const CalInstance instance = random_instance(3, 2, 2, 0.85, epsilon, rng);
    const McCormickSolution sol = solve_mccormick(instance);
    for (int trial = 0; trial < 200; ++trial)
      REQUIRE(sol.lower_bound <=
              random_feasible_tuple_objective(instance, rng) + 1e-7);
  }
}

TEST_CASE("relaxation decouples at epsilon one", "[cross]") {
  Rng rng(405);
  CalInstance instance = random_instance(3, 2, 2, 0.85, 1.0, rng);
  const McCormickSolution sol = solve_mccormick(instance);
  double decoupled_total = 0.0;
  for (const EnvironmentBundle& env : instance.envs)
    decoupled_total += solve_decoupled(env, instance.basis).value;
  REQUIRE_THAT(sol.lower_bound,
               Catch::Matchers::WithinAbs(decoupled_total, 1e-6));
}

TEST_CASE("relaxation optimum is monotone non-increasing in epsilon",
          "[cross]") {
  Rng rng(406);
  CalInstance instance = random_instance(3, 2, 2, 0.85, 0.0, rng);
  double previous = std::numeric_limits<double>::infinity();
  for (double epsilon : {0.0, 0.05, 0.1, 0.25, 0.5, 1.0}) {
    instance.epsilon = epsilon;
    const double value = solve_mccormick(instance).lower_bound;
    REQUIRE(value <= previous + 1e-7);
    previous = value;
  }
}

TEST_CASE("relaxation solution satisfies its own coupling rows", "[cross]") {
  Rng rng(407);
  const CalInstance instance = random_instance(3, 2, 2, 0.8, 0.2, rng);
  const Mdp& shared = instance.envs.front().mdp;
  const double mass_cap = shared.n_actions / (1.0 - shared.discount);
  const McCormickSolution sol = solve_mccormick(instance);

  for (int i = 0; i < instance.n_envs(); ++i) {
    const OccupationMeasure& mu = sol.measures[i];
    mu.validate();
    for (int s = 0; s < shared.n_states; ++s) {
      const double sigma = sol.aux_state_mass[i](s);
      REQUIRE_THAT(sigma, Catch::Matchers::WithinAbs(mu.state_mass(s), 1e-7));
      REQUIRE(sigma >= shared.initial_dist(s) - 1e-7);
      REQUIRE(sigma <= mass_cap + 1e-7);
      for (int a = 0; a < shared.n_actions; ++a) {
        const int sa = mu.sa_index(s, a);
        const double w = sol.aux_w[i](sa);
        const double pc = sol.cross_policy.probs(s, a);
        REQUIRE(std::abs(mu.mu(sa) - w) <= instance.epsilon * sigma + 1e-7);
        REQUIRE(w >= shared.initial_dist(s) * pc - 1e-7);
        REQUIRE(w >= sigma + mass_cap * (pc - 1.0) - 1e-7);
        REQUIRE(w <= sigma + shared.initial_dist(s) * (pc - 1.0) + 1e-7);
        REQUIRE(w <= mass_cap * pc + 1e-7);
      }
    }
  }
  REQUIRE_NOTHROW(sol.cross_policy.validate());
}

TEST_CASE("simplex and interior point agree on a relaxation instance",
          "[cross]") {
  Rng rng(408);
  const CalInstance instance = random_instance(3, 2, 2, 0.85, 0.25, rng);
  LpOptions simplex_only;
  simplex_only.method = LpMethod::kSimplex;
  LpOptions ipm_only;
  ipm_only.method = LpMethod::kInteriorPoint;
  const double via_simplex = solve_mccormick(instance, simplex_only)
                                 .lower_bound;
  const double via_ipm = solve_mccormick(instance, ipm_only).lower_bound;
  REQUIRE_THAT(via_simplex, Catch::Matchers::WithinAbs(via_ipm, 1e-6));
}

TEST_CASE("recovered policies are feasible and sandwich the bound",
          "[cross]") {
  Rng rng(409);
  const CalInstance instance = random_instance(3, 2, 2, 0.85, 0.3, rng);
  const McCormickSolution sol = solve_mccormick(instance);
  for (ProjectionStrategy strategy : {ProjectionStrategy::kCrossCentered,
                                      ProjectionStrategy::kAverageCentered}) {
    const CalPolicies policies = recover_policies(sol, instance, strategy);
    REQUIRE(policies.feasible);
    REQUIRE_NOTHROW(policies.cross.validate());
    REQUIRE(static_cast<int>(policies.individual.size()) ==
            instance.n_envs());
    for (const Policy& p : policies.individual) {
      REQUIRE_NOTHROW(p.validate());
      REQUIRE(max_abs_diff(p.probs, policies.cross.probs) <=
              instance.epsilon + 1e-9);
    }
    // The relaxation bound must sit below any feasible tuple's objective,
    // in particular the recovered one.
    REQUIRE(sol.lower_bound <= policies.achieved_objective + 1e-7);
  }
}

TEST_CASE("epsilon zero forces identical recovered policies", "[cross]") {
  Rng rng(410);
  const CalInstance instance = random_instance(2, 2, 2, 0.8, 0.0, rng);
  const McCormickSolution sol = solve_mccormick(instance);
  const CalPolicies policies =
      recover_policies(sol, instance, ProjectionStrategy::kCrossCentered);
  REQUIRE(policies.feasible);
  for (const Policy& p : policies.individual)
    REQUIRE(max_abs_diff(p.probs, policies.cross.probs) <= 1e-9);

  // At epsilon zero CAL is the common-policy problem; the relaxation bound
  // sits below the grid-enumeration optimum, which in turn cannot beat the
  // recovered common policy by construction of the enumeration.
  std::vector<EnvironmentBundle> envs = instance.envs;
  const CentralizedSolution grid =
      solve_centralized_bruteforce(envs, instance.basis, 9);
  REQUIRE(sol.lower_bound <= grid.value + 1e-7);
  REQUIRE(policies.achieved_objective >= sol.lower_bound - 1e-7);
}

TEST_CASE("box-constrained simplex projection matches active-set oracle",
          "[cross]") {
  Rng rng(411);
  const int n = 4;
  for (int trial = 0; trial < 100; ++trial) {
    const double epsilon =
        std::vector<double>{0.0, 0.05, 0.2, 0.7}[trial % 4];
    const Eigen::VectorXd center =
        cal::testing::random_policy(1, n, rng).probs.row(0).transpose();
    Eigen::VectorXd v(n);
    for (int a = 0; a < n; ++a) v(a) = -0.5 + 2.0 * rng.uniform();

    Eigen::VectorXd lo(n), hi(n);
    for (int a = 0; a < n; ++a) {
      lo(a) = std::max(0.0, center(a) - epsilon);
      hi(a) = center(a) + epsilon;
    }

    // Enumerate all 3^n assignments of {lower, free, upper} per coordinate
    // and keep the KKT-consistent candidate with the smallest objective.
    double best_obj = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x;
    std::vector<int> pattern(n, 0);
    for (int code = 0; code < 81; ++code) {
      int rem = code;
      for (int a = 0; a < n; ++a) {
        pattern[a] = rem % 3;
        rem /= 3;
      }
      double fixed_sum = 0.0;
      double free_v = 0.0;
      int free_count = 0;
      for (int a = 0; a < n; ++a) {
        if (pattern[a] == 0) fixed_sum += lo(a);
        if (pattern[a] == 2) fixed_sum += hi(a);
        if (pattern[a] == 1) {
          free_v += v(a);
          ++free_count;
        }
      }
      double lambda;
      if (free_count > 0) {
        lambda = (free_v + fixed_sum - 1.0) / free_count;
      } else {
        if (std::abs(fixed_sum - 1.0) > 1e-9) continue;
        // Any multiplier between the boundary requirements works.
        double lambda_min = -std::numeric_limits<double>::infinity();
        double lambda_max = std::numeric_limits<double>::infinity();
        for (int a = 0; a < n; ++a) {
          if (pattern[a] == 0) lambda_min = std::max(lambda_min, v(a) - lo(a));
          if (pattern[a] == 2) lambda_max = std::min(lambda_max, v(a) - hi(a));
        }
        if (lambda_min > lambda_max + 1e-10) continue;
        lambda = 0.5 * (std::max(lambda_min, -1e6) +
                        std::min(lambda_max, 1e6));
      }
      Eigen::VectorXd x(n);
      bool valid = true;
      for (int a = 0; a < n; ++a) {
        if (pattern[a] == 0) {
          x(a) = lo(a);
          if (v(a) - lambda > lo(a) + 1e-10) valid = false;
        } else if (pattern[a] == 2) {
          x(a) = hi(a);
          if (v(a) - lambda < hi(a) - 1e-10) valid = false;
        } else {
          x(a) = v(a) - lambda;
          if (x(a) < lo(a) - 1e-10 || x(a) > hi(a) + 1e-10) valid = false;
        }
      }
      if (!valid) continue;
      const double obj = (x - v).squaredNorm();
      if (obj < best_obj) {
        best_obj = obj;
        best_x = x;
      }
    }
    REQUIRE(std::isfinite(best_obj));

    const Eigen::VectorXd projected = project_box_simplex(v, center, epsilon);
    REQUIRE(max_abs_diff(projected, best_x) <= 1e-8);
    REQUIRE(std::abs(projected.sum() - 1.0) <= 1e-10);
    for (int a = 0; a < n; ++a) {
      REQUIRE(projected(a) >= lo(a) - 1e-10);
      REQUIRE(projected(a) <= hi(a) + 1e-10);
    }
  }
}

TEST_CASE("projection returns the center at epsilon zero", "[cross]") {
  Rng rng(412);
  const Eigen::VectorXd center =
      cal::testing::random_policy(1, 5, rng).probs.row(0).transpose();
  Eigen::VectorXd v(5);
  for (int a = 0; a < 5; ++a) v(a) = rng.uniform();
  REQUIRE(max_abs_diff(project_box_simplex(v, center, 0.0), center) <= 1e-12);
}

TEST_CASE("inner approximation solves single-environment instances",
          "[cross]") {
  Rng rng(413);
  for (double epsilon : {0.0, 0.5}) {
    const CalInstance instance = random_instance(3, 2, 1, 0.85, epsilon, rng);
    const InnerSolution inner = solve_inner(instance);
    REQUIRE(inner.feasible);
    // With one environment the central measure can copy mu_1, so the inner
    // program matches unconstrained single-environment imitation.
    const double decoupled =
        solve_decoupled(instance.envs.front(), instance.basis).value;
    REQUIRE_THAT(inner.value, Catch::Matchers::WithinAbs(decoupled, 1e-6));
    inner.measures.front().validate();
    REQUIRE(max_abs_diff(inner.measures.front().mu,
                         inner.central_measure.mu) <=
            instance.envs.front().mdp.initial_dist.minCoeff() * epsilon /
                    (2.0 * 3 * 2) +
                1e-7);
  }
}

TEST_CASE("inner approximation achieves zero on identical twins", "[cross]") {
  Rng rng(414);
  CalInstance instance = random_instance(3, 2, 1, 0.85, 0.2, rng);
  EnvironmentBundle twin = instance.envs.front();
  twin.label = "twin";
  instance.envs.push_back(twin);
  const InnerSolution inner = solve_inner(instance);
  REQUIRE(inner.feasible);
  REQUIRE(inner.value <= 1e-6);
}

TEST_CASE("inner approximation reports structural infeasibility", "[cross]") {
  SECTION("positive radius, incompatible masses") {
    const CalInstance instance = frozen_vs_drift_instance(0.9, 1.0);
    const InnerSolution inner = solve_inner(instance);
    REQUIRE_FALSE(inner.feasible);
  }
  SECTION("radius collapses to zero when a state has no initial mass") {
    const CalInstance instance = frozen_vs_drift_instance(1.0, 1.0);
    const InnerSolution inner = solve_inner(instance);
    REQUIRE_FALSE(inner.feasible);
  }
}

TEST_CASE("instance validation rejects mismatched environments", "[cross]") {
  Rng rng(415);
  const CalInstance good = random_instance(3, 2, 2, 0.85, 0.3, rng);
  REQUIRE_NOTHROW(good.validate());

  CalInstance bad = good;
  bad.epsilon = 1.5;
  REQUIRE_THROWS_AS(bad.validate(), ModelError);
  bad = good;
  bad.epsilon = -0.1;
  REQUIRE_THROWS_AS(bad.validate(), ModelError);

  bad = good;
  bad.envs[1].mdp.discount = 0.5;
  REQUIRE_THROWS_AS(bad.validate(), ModelError);

  bad = good;
  bad.envs[1].mdp.initial_dist(0) += 0.25;
  bad.envs[1].mdp.initial_dist(1) -= 0.25;
  REQUIRE_THROWS_AS(bad.validate(), ModelError);

  bad = good;
  bad.envs.clear();
  REQUIRE_THROWS_AS(bad.validate(), ModelError);

  Eigen::VectorXd v(3), center(3);
  v << 0.2, 0.3, 0.5;
  center << 0.5, 0.5, 0.5;  // not on the simplex
  REQUIRE_THROWS_AS(project_box_simplex(v, center, 0.1), ModelError);
}
