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

#include <filesystem>
#include <string>

#include "cal/experiment.hpp"
#include "cal/gridworld.hpp"
#include "cal/io.hpp"
#include "cal/mdp.hpp"
#include "oracles.hpp"

using namespace cal;
using cal::testing::max_abs_diff;

namespace {

std::string smoke_config_text(const std::string& output_dir) {
  nlohmann::json j;
  j["worlds"] = nlohmann::json::array(
      {{{"label", "toy"},
        {"rows", 4},
        {"cols", 5},
        {"wind", {0, 1, 0, 1, 0}},
        {"goal", {2, 3}}}});
  j["epsilon_values"] = {1.0, 0.5};
  j["expert"] = {{"episodes", 1500},
                 {"max_episode_steps", 200},
                 {"n_trajectories", 60},
                 {"horizon", 50}};
  j["evaluation"] = {{"n_trajectories", 100}, {"max_steps", 20}};
  j["seed"] = 4242;
  j["output_dir"] = output_dir;
  return j.dump();
}

}  // namespace

TEST_CASE("minimal config document expands to the benchmark defaults",
          "[experiment]") {
  const ExperimentConfig config =
      validate_config(R"({"worlds": "benchmark_worlds"})");
  REQUIRE(config.worlds.size() == 4);
  REQUIRE(config.worlds[0].label == "world1");
  REQUIRE(config.worlds[3].label == "world4");
  REQUIRE(config.worlds[1].world.wind ==
          std::vector<int>{1, 1, 0, 0, 0, 2, 0, 0, 1, 0});
  REQUIRE(config.discount == 0.9);
  REQUIRE(config.epsilon_values == std::vector<double>{1.0, 0.6, 0.2, 0.0});
  REQUIRE(config.cost_basis.size() == 0);  // identity
  REQUIRE(config.expert.episodes == 8000);
  REQUIRE(config.expert.n_trajectories == 200);
  REQUIRE(config.expert.horizon == 100);
  REQUIRE(config.eval_trajectories == 200);
  REQUIRE(config.eval_max_steps == 20);
  REQUIRE(config.seed == 0);
  REQUIRE(config.strategy == ProjectionStrategy::kAverageCentered);
}

TEST_CASE("config validation names offending fields", "[experiment]") {
  SECTION("unknown top-level key") {
    REQUIRE_THROWS_WITH(
        validate_config(R"({"worlds": "benchmark_worlds", "epslon_values": []})"),
        Catch::Matchers::ContainsSubstring("epslon_values"));
  }
  SECTION("unknown expert key") {
    REQUIRE_THROWS_WITH(
        validate_config(
            R"({"worlds": "benchmark_worlds", "expert": {"alpha": 0.5}})"),
        Catch::Matchers::ContainsSubstring("alpha"));
  }
  SECTION("epsilon outside the unit interval") {
    REQUIRE_THROWS_WITH(
        validate_config(
            R"({"worlds": "benchmark_worlds", "epsilon_values": [1.5]})"),
        Catch::Matchers::ContainsSubstring("epsilon_values[0]"));
  }
  SECTION("cost basis column with excessive norm names the column") {
    REQUIRE_THROWS_WITH(
        validate_config(R"({"worlds": [{"rows": 2, "cols": 1, "wind": [0],)"
                        R"( "goal": [1, 0]}],)"
                        R"( "cost_basis": [[1.0, 0.0], [0.0, 2.0]]})"),
        Catch::Matchers::ContainsSubstring("column 1"));
  }
  SECTION("malformed document reports a parse error") {
    REQUIRE_THROWS_AS(validate_config("{not json"), IoError);
  }
  SECTION("bad strategy name") {
    REQUIRE_THROWS_WITH(
        validate_config(
            R"({"worlds": "benchmark_worlds", "strategy": "midpoint"})"),
        Catch::Matchers::ContainsSubstring("strategy"));
  }
  SECTION("missing worlds") {
    REQUIRE_THROWS_WITH(validate_config(R"({"discount": 0.9})"),
                        Catch::Matchers::ContainsSubstring("worlds"));
  }
}

TEST_CASE("documents round-trip exactly through serialization",
          "[experiment]") {
  Rng rng(601);
  SECTION("mdp") {
    const Mdp mdp = cal::testing::random_mdp(4, 3, 0.87, rng);
    const Mdp back = mdp_from_json(mdp_to_json(mdp));
    REQUIRE(back.n_states == mdp.n_states);
    REQUIRE(back.n_actions == mdp.n_actions);
    REQUIRE(back.discount == mdp.discount);
    REQUIRE(max_abs_diff(back.transition, mdp.transition) == 0.0);
    REQUIRE(max_abs_diff(back.initial_dist, mdp.initial_dist) == 0.0);
  }
  SECTION("mdp survives a textual dump and parse") {
    const Mdp mdp = cal::testing::random_mdp(3, 2, 0.9, rng);
    const std::string text = mdp_to_json(mdp).dump();
    const Mdp back = mdp_from_json(parse_document(text, "test"));
    REQUIRE(max_abs_diff(back.transition, mdp.transition) == 0.0);
  }
  SECTION("policy") {
    const Policy policy = cal::testing::random_policy(4, 3, rng);
    const Policy back = policy_from_json(policy_to_json(policy));
    REQUIRE(max_abs_diff(back.probs, policy.probs) == 0.0);
  }
  SECTION("measure") {
    const Mdp mdp = cal::testing::random_mdp(4, 3, 0.87, rng);
    const OccupationMeasure mu = occupation_from_policy(
        mdp, cal::testing::random_policy(4, 3, rng));
    const OccupationMeasure back = measure_from_json(measure_to_json(mu));
    REQUIRE(max_abs_diff(back.mu, mu.mu) == 0.0);
  }
  SECTION("world") {
    WindyGridworld world;
    world.wind = {0, 0, 0, 1, 1, 1, 2, 2, 1, 0};
    const WindyGridworld back = world_from_json(world_to_json(world));
    REQUIRE(back.rows == world.rows);
    REQUIRE(back.cols == world.cols);
    REQUIRE(back.wind == world.wind);
    REQUIRE(back.goal.row == world.goal.row);
    REQUIRE(back.goal.col == world.goal.col);
  }
  SECTION("bundle") {
    CalInstance instance;
    instance.epsilon = 0.4;
    for (int i = 0; i < 2; ++i) {
      EnvironmentBundle env;
      env.mdp = cal::testing::random_mdp(3, 2, 0.9, rng);
      if (i > 0)
        env.mdp.initial_dist = instance.envs.front().mdp.initial_dist;
      env.expert_measure = occupation_from_policy(
          env.mdp, cal::testing::random_policy(3, 2, rng));
      env.label = "env" + std::to_string(i);
      instance.envs.push_back(std::move(env));
    }
    instance.basis = CostBasis::identity(6);
    const CalInstance back = bundle_from_json(bundle_to_json(instance));
    REQUIRE(back.epsilon == instance.epsilon);
    REQUIRE(back.n_envs() == 2);
    REQUIRE(back.envs[1].label == "env1");
    REQUIRE(max_abs_diff(back.envs[1].mdp.transition,
                         instance.envs[1].mdp.transition) == 0.0);
    REQUIRE(max_abs_diff(back.envs[0].expert_measure.mu,
                         instance.envs[0].expert_measure.mu) == 0.0);
    REQUIRE(max_abs_diff(back.basis.basis, instance.basis.basis) == 0.0);
  }
  SECTION("bundle accepts the identity shorthand") {
    nlohmann::json j;
    j["schema"] = kSchemaBundle;
    j["epsilon"] = 1.0;
    j["cost_basis"] = "identity";
    Rng rng2(602);
    EnvironmentBundle env;
    env.mdp = cal::testing::random_mdp(2, 2, 0.8, rng2);
    env.expert_measure = occupation_from_policy(
        env.mdp, cal::testing::random_policy(2, 2, rng2));
    env.label = "only";
    nlohmann::json e;
    e["label"] = env.label;
    e["mdp"] = mdp_to_json(env.mdp);
    e["expert_measure"] = measure_to_json(env.expert_measure);
    j["envs"] = nlohmann::json::array({e});
    const CalInstance instance = bundle_from_json(j);
    REQUIRE(instance.basis.n_costs() == 4);
    REQUIRE(max_abs_diff(instance.basis.basis,
                         Eigen::MatrixXd::Identity(4, 4)) == 0.0);
  }
  SECTION("unknown document fields are rejected") {
    nlohmann::json j = policy_to_json(cal::testing::random_policy(2, 2, rng));
    j["extra"] = 1;
    REQUIRE_THROWS_WITH(policy_from_json(j),
                        Catch::Matchers::ContainsSubstring("extra"));
  }
}

TEST_CASE("config hash ignores the output directory", "[experiment]") {
  ExperimentConfig a = validate_config(R"({"worlds": "benchmark_worlds"})");
  ExperimentConfig b = a;
  b.output_dir = "elsewhere";
  REQUIRE(config_hash(a) == config_hash(b));
  b.seed = 99;
  REQUIRE(config_hash(a) != config_hash(b));
}

TEST_CASE("experiment pipeline runs end to end deterministically",
          "[experiment]") {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "cal_experiment_test";
  const std::string dir_a = (base / "a").string();
  const std::string dir_b = (base / "b").string();
  fs::remove_all(base);

  const ExperimentConfig config_a = validate_config(smoke_config_text(dir_a));
  const Report report = run_experiment(config_a);

  SECTION("report covers every policy, world and epsilon") {
    REQUIRE(report.sweeps.size() == 2);
    REQUIRE(report.world_labels == std::vector<std::string>{"toy"});
    for (const EpsilonReport& sweep : report.sweeps) {
      REQUIRE(sweep.success.rows() == 2);  // one individual + cross
      REQUIRE(sweep.success.cols() == 1);
      for (int r = 0; r < 2; ++r) {
        REQUIRE(sweep.success(r, 0) >= 0);
        REQUIRE(sweep.success(r, 0) <= 100);
      }
      REQUIRE(sweep.lower_bound <= sweep.achieved_objective + 1e-7);
    }
    REQUIRE(report.sweeps[0].epsilon == 1.0);
    // Larger coupling radius can only relax the program.
    REQUIRE(report.sweeps[0].lower_bound <=
            report.sweeps[1].lower_bound + 1e-7);
    // The decoupled policy imitates a gate-passing expert in its own world.
    REQUIRE(report.sweeps[0].success(0, 0) >= 95);
  }

  SECTION("artifacts land in the output directory") {
    REQUIRE(fs::exists(fs::path(dir_a) / "report.json"));
    REQUIRE(fs::exists(fs::path(dir_a) / "table.txt"));
    REQUIRE(fs::exists(fs::path(dir_a) / "timing.log"));
    REQUIRE(fs::exists(fs::path(dir_a) / "solutions" / "epsilon_0.json"));
    REQUIRE(fs::exists(fs::path(dir_a) / "solutions" / "epsilon_1.json"));
    int experts = 0;
    for (const auto& entry :
         fs::directory_iterator(fs::path(dir_a) / "experts"))
      if (entry.is_regular_file()) ++experts;
    REQUIRE(experts == 1);
    const nlohmann::json solution = parse_document(
        read_text_file((fs::path(dir_a) / "solutions" / "epsilon_0.json")
                           .string()),
        "solution");
    REQUIRE(solution.at("schema").get<std::string>() == kSchemaSolution);

    const std::string table =
        read_text_file((fs::path(dir_a) / "table.txt").string());
    REQUIRE_THAT(table, Catch::Matchers::ContainsSubstring("toy"));
    REQUIRE_THAT(table, Catch::Matchers::ContainsSubstring("individual 1"));
    REQUIRE_THAT(table, Catch::Matchers::ContainsSubstring("cross"));
  }

  SECTION("reports are byte-identical across reruns and cache hits") {
    const std::string report_a =
        read_text_file((fs::path(dir_a) / "report.json").string());
    const std::string table_a =
        read_text_file((fs::path(dir_a) / "table.txt").string());

    // Fresh directory: experts retrain from scratch.
    const ExperimentConfig config_b =
        validate_config(smoke_config_text(dir_b));
    run_experiment(config_b);
    REQUIRE(read_text_file((fs::path(dir_b) / "report.json").string()) ==
            report_a);
    REQUIRE(read_text_file((fs::path(dir_b) / "table.txt").string()) ==
            table_a);

    // Same directory: experts load from the cache.
    run_experiment(config_a);
    REQUIRE(read_text_file((fs::path(dir_a) / "report.json").string()) ==
            report_a);
    REQUIRE(read_text_file((fs::path(dir_a) / "table.txt").string()) ==
            table_a);
  }
}
