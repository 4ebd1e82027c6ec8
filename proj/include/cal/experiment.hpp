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

// Experiment orchestration: config ingestion, the end-to-end benchmark
// pipeline (worlds -> experts -> relaxation sweep -> evaluation), and
// report emission.
//
// Everything downstream of a (config, seed) pair is deterministic: the
// master seed fans out to per-stage sub-seeds through derive_seed with
// fixed stage names, and both report documents are byte-stable across
// reruns. Wall-clock timings go to a separate side log so they cannot
// perturb the stable outputs. Expert training is cached on disk keyed by
// (world, trainer config, per-world seed), making reruns cheap.

#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cal/apprenticeship.hpp"
#include "cal/cross_learning.hpp"
#include "cal/gridworld.hpp"
#include "cal/io.hpp"
#include "cal/mdp.hpp"
#include "cal/rng.hpp"
#include "cal/sarsa.hpp"
#include "cal/version.hpp"

namespace cal {

struct WorldSpec {
  WindyGridworld world;
  std::string label;
};

struct ExperimentConfig {
  std::vector<WorldSpec> worlds;
  double discount = 0.9;
  std::vector<double> epsilon_values = {1.0, 0.6, 0.2, 0.0};
  Eigen::MatrixXd cost_basis;  // 0x0 means the identity basis
  SarsaConfig expert;
  int eval_trajectories = 200;
  int eval_max_steps = 20;
  std::uint64_t seed = 0;
  ProjectionStrategy strategy = ProjectionStrategy::kAverageCentered;
  std::string output_dir = "cal_out";

  void validate() const {
    if (worlds.empty())
      throw ModelError("ExperimentConfig: worlds must be non-empty");
    for (const WorldSpec& spec : worlds) spec.world.validate();
    if (!(discount > 0.0 && discount < 1.0))
      throw ModelError("ExperimentConfig: discount must lie in (0, 1)");
    if (epsilon_values.empty())
      throw ModelError("ExperimentConfig: epsilon_values must be non-empty");
    for (double e : epsilon_values)
      if (!(e >= 0.0 && e <= 1.0))
        throw ModelError(
            "ExperimentConfig: epsilon_values entries must lie in [0, 1]");
    expert.validate();
    if (eval_trajectories < 1 || eval_max_steps < 1)
      throw ModelError("ExperimentConfig: evaluation counts must be >= 1");
  }
};

struct EpsilonReport {
  double epsilon = 0.0;
  // (N individual policies + the cross policy) x N worlds success counts.
  Eigen::MatrixXi success;
  double lower_bound = 0.0;
  double achieved_objective = 0.0;
};

struct Report {
  std::vector<std::string> world_labels;
  std::vector<EpsilonReport> sweeps;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  std::string strategy_name;
  double discount = 0.9;
};

inline const char* to_string(ProjectionStrategy strategy) {
  return strategy == ProjectionStrategy::kCrossCentered ? "cross_centered"
                                                        : "average_centered";
}

namespace experiment_detail {

inline nlohmann::json sarsa_to_json(const SarsaConfig& c) {
  nlohmann::json j;
  j["episodes"] = c.episodes;
  j["max_episode_steps"] = c.max_episode_steps;
  j["learning_rate"] = c.learning_rate;
  j["exploration"] = c.exploration;
  j["discount"] = c.discount;
  j["n_trajectories"] = c.n_trajectories;
  j["horizon"] = c.horizon;
  return j;
}

inline std::string hex64(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << value;
  return out.str();
}

template <typename F>
auto run_stage(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    throw std::runtime_error("stage '" + name + "': " + e.what());
  }
}

}  // namespace experiment_detail

// Canonical configuration document. The output directory is excluded: it
// changes where results land, not what they are, and the config hash (and
// therefore report bytes) must not depend on it.
inline nlohmann::json config_to_json(const ExperimentConfig& config) {
  nlohmann::json j;
  j["schema"] = kSchemaConfig;
  nlohmann::json worlds = nlohmann::json::array();
  for (const WorldSpec& spec : config.worlds) {
    nlohmann::json w;
    w["label"] = spec.label;
    w["rows"] = spec.world.rows;
    w["cols"] = spec.world.cols;
    w["wind"] = spec.world.wind;
    w["goal"] = {spec.world.goal.row, spec.world.goal.col};
    worlds.push_back(std::move(w));
  }
  j["worlds"] = std::move(worlds);
  j["discount"] = config.discount;
  j["epsilon_values"] = config.epsilon_values;
  if (config.cost_basis.size() == 0)
    j["cost_basis"] = "identity";
  else
    j["cost_basis"] = matrix_to_json(config.cost_basis);
  j["expert"] = experiment_detail::sarsa_to_json(config.expert);
  j["evaluation"] = {{"n_trajectories", config.eval_trajectories},
                     {"max_steps", config.eval_max_steps}};
  j["seed"] = config.seed;
  j["strategy"] = to_string(config.strategy);
  return j;
}

inline std::string config_hash(const ExperimentConfig& config) {
  return experiment_detail::hex64(fnv1a64(config_to_json(config).dump()));
}

// Parses and validates a configuration document. Only "worlds" is required;
// every other field falls back to the benchmark defaults (discount 0.9,
// four epsilon values, identity basis, 200x100 expert rollouts, 200
// evaluation rollouts capped at 20 steps). Unknown fields are rejected by
// name at every nesting level.
inline ExperimentConfig validate_config(const std::string& document) {
  const nlohmann::json j = parse_document(document, "config document");
  const std::string ctx = "config document";
  if (!j.is_object()) throw IoError(ctx + ": expected an object");
  io_detail::reject_unknown_keys(
      j,
      {"schema", "worlds", "discount", "epsilon_values", "cost_basis",
       "expert", "evaluation", "seed", "strategy", "output_dir"},
      ctx);
  if (j.contains("schema")) io_detail::expect_schema(j, kSchemaConfig, ctx);

  ExperimentConfig config;

  const nlohmann::json& worlds = io_detail::require_field(j, "worlds", ctx);
  if (worlds.is_string() && worlds.get<std::string>() == "benchmark_worlds") {
    int index = 0;
    for (const WindyGridworld& world : benchmark_worlds())
      config.worlds.push_back({world, "world" + std::to_string(++index)});
  } else if (worlds.is_array() && !worlds.empty()) {
    int index = 0;
    for (const nlohmann::json& w : worlds) {
      ++index;
      const std::string wctx = ctx + ": worlds[" + std::to_string(index - 1) +
                               "]";
      io_detail::reject_unknown_keys(
          w, {"label", "rows", "cols", "wind", "goal"}, wctx);
      WorldSpec spec;
      spec.label = w.contains("label")
                       ? io_detail::get_string(w, "label", wctx)
                       : "world" + std::to_string(index);
      if (w.contains("rows"))
        spec.world.rows =
            static_cast<int>(io_detail::get_integer(w, "rows", wctx));
      if (w.contains("cols"))
        spec.world.cols =
            static_cast<int>(io_detail::get_integer(w, "cols", wctx));
      const nlohmann::json& wind = io_detail::require_field(w, "wind", wctx);
      if (!wind.is_array())
        throw IoError(wctx + ": field 'wind' must be an array");
      spec.world.wind.clear();
      for (const nlohmann::json& entry : wind) {
        if (!entry.is_number_integer())
          throw IoError(wctx + ": wind entries must be integers");
        spec.world.wind.push_back(entry.get<int>());
      }
      if (w.contains("goal")) {
        const nlohmann::json& goal = w.at("goal");
        if (!goal.is_array() || goal.size() != 2 ||
            !goal[0].is_number_integer() || !goal[1].is_number_integer())
          throw IoError(wctx + ": field 'goal' must be [row, col]");
        spec.world.goal = {goal[0].get<int>(), goal[1].get<int>()};
      }
      try {
        spec.world.validate();
      } catch (const std::exception& e) {
        throw IoError(wctx + ": " + e.what());
      }
      config.worlds.push_back(std::move(spec));
    }
  } else {
    throw IoError(ctx +
                  ": field 'worlds' must be \"benchmark_worlds\" or a non-empty "
                  "array of world objects");
  }

  if (j.contains("discount")) {
    config.discount = io_detail::get_double(j, "discount", ctx);
    if (!(config.discount > 0.0 && config.discount < 1.0))
      throw IoError(ctx + ": field 'discount' must lie in (0, 1)");
  }
  if (j.contains("epsilon_values")) {
    const nlohmann::json& eps = j.at("epsilon_values");
    if (!eps.is_array() || eps.empty())
      throw IoError(ctx +
                    ": field 'epsilon_values' must be a non-empty array");
    config.epsilon_values.clear();
    int index = 0;
    for (const nlohmann::json& e : eps) {
      if (!e.is_number())
        throw IoError(ctx + ": epsilon_values entries must be numbers");
      const double value = e.get<double>();
      if (!(value >= 0.0 && value <= 1.0))
        throw IoError(ctx + ": epsilon_values[" + std::to_string(index) +
                      "] = " + std::to_string(value) +
                      " is outside [0, 1]");
      config.epsilon_values.push_back(value);
      ++index;
    }
  }
  if (j.contains("cost_basis")) {
    const nlohmann::json& basis = j.at("cost_basis");
    if (basis.is_string()) {
      if (basis.get<std::string>() != "identity")
        throw IoError(ctx +
                      ": field 'cost_basis' must be \"identity\" or a matrix");
    } else {
      config.cost_basis = matrix_from_json(basis, ctx + ": cost_basis");
      CostBasis check;
      check.basis = config.cost_basis;
      try {
        check.validate();
      } catch (const std::exception& e) {
        throw IoError(ctx + ": cost_basis: " + e.what());
      }
    }
  }
  if (j.contains("expert")) {
    const nlohmann::json& e = j.at("expert");
    const std::string ectx = ctx + ": expert";
    io_detail::reject_unknown_keys(
        e,
        {"episodes", "max_episode_steps", "learning_rate", "exploration",
         "discount", "n_trajectories", "horizon"},
        ectx);
    if (e.contains("episodes"))
      config.expert.episodes =
          static_cast<int>(io_detail::get_integer(e, "episodes", ectx));
    if (e.contains("max_episode_steps"))
      config.expert.max_episode_steps = static_cast<int>(
          io_detail::get_integer(e, "max_episode_steps", ectx));
    if (e.contains("learning_rate"))
      config.expert.learning_rate =
          io_detail::get_double(e, "learning_rate", ectx);
    if (e.contains("exploration"))
      config.expert.exploration =
          io_detail::get_double(e, "exploration", ectx);
    if (e.contains("discount"))
      config.expert.discount = io_detail::get_double(e, "discount", ectx);
    if (e.contains("n_trajectories"))
      config.expert.n_trajectories =
          static_cast<int>(io_detail::get_integer(e, "n_trajectories", ectx));
    if (e.contains("horizon"))
      config.expert.horizon =
          static_cast<int>(io_detail::get_integer(e, "horizon", ectx));
    try {
      config.expert.validate();
    } catch (const std::exception& ex) {
      throw IoError(ectx + ": " + ex.what());
    }
  }
  if (j.contains("evaluation")) {
    const nlohmann::json& e = j.at("evaluation");
    const std::string ectx = ctx + ": evaluation";
    io_detail::reject_unknown_keys(e, {"n_trajectories", "max_steps"}, ectx);
    if (e.contains("n_trajectories"))
      config.eval_trajectories =
          static_cast<int>(io_detail::get_integer(e, "n_trajectories", ectx));
    if (e.contains("max_steps"))
      config.eval_max_steps =
          static_cast<int>(io_detail::get_integer(e, "max_steps", ectx));
    if (config.eval_trajectories < 1 || config.eval_max_steps < 1)
      throw IoError(ectx + ": counts must be >= 1");
  }
  if (j.contains("seed")) {
    const nlohmann::json& s = j.at("seed");
    if (!s.is_number_integer() || s.get<long long>() < 0)
      throw IoError(ctx + ": field 'seed' must be a non-negative integer");
    config.seed = s.get<std::uint64_t>();
  }
  if (j.contains("strategy")) {
    const std::string name = io_detail::get_string(j, "strategy", ctx);
    if (name == "cross_centered")
      config.strategy = ProjectionStrategy::kCrossCentered;
    else if (name == "average_centered")
      config.strategy = ProjectionStrategy::kAverageCentered;
    else
      throw IoError(ctx + ": field 'strategy' must be 'cross_centered' or "
                          "'average_centered'");
  }
  if (j.contains("output_dir"))
    config.output_dir = io_detail::get_string(j, "output_dir", ctx);

  config.validate();
  return config;
}

inline nlohmann::json report_to_json(const Report& report) {
  nlohmann::json j;
  j["schema"] = kSchemaReport;
  j["config_hash"] = report.config_hash;
  j["seed"] = report.seed;
  j["version"] = report.version;
  j["strategy"] = report.strategy_name;
  j["discount"] = report.discount;
  j["world_labels"] = report.world_labels;
  nlohmann::json sweeps = nlohmann::json::array();
  for (const EpsilonReport& sweep : report.sweeps) {
    nlohmann::json s;
    s["epsilon"] = sweep.epsilon;
    s["lower_bound"] = sweep.lower_bound;
    s["achieved_objective"] = sweep.achieved_objective;
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < sweep.success.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < sweep.success.cols(); ++c)
        row.push_back(sweep.success(r, c));
      rows.push_back(std::move(row));
    }
    s["success"] = std::move(rows);
    sweeps.push_back(std::move(s));
  }
  j["sweeps"] = std::move(sweeps);
  return j;
}

// Fixed-width text table, one block per epsilon, for eyeballing against the
// published success-count layout. Deterministic for identical inputs.
inline std::string render_table(const Report& report) {
  const int n = static_cast<int>(report.world_labels.size());
  std::size_t label_width = 12;  // fits "individual N" and "cross"
  for (const std::string& label : report.world_labels)
    label_width = std::max(label_width, label.size());
  const int cell = static_cast<int>(std::max<std::size_t>(label_width + 2, 9));

  std::ostringstream out;
  out << "cross apprenticeship experiment (success counts out of "
      << "per-policy evaluation rollouts)\n";
  out << "config " << report.config_hash << "  seed " << report.seed
      << "  version " << report.version << "  strategy "
      << report.strategy_name << "  discount "
      << std::setprecision(17) << report.discount << "\n";
  for (const EpsilonReport& sweep : report.sweeps) {
    out << "\nepsilon " << std::setprecision(17) << sweep.epsilon
        << "  lower_bound " << std::setprecision(17) << sweep.lower_bound
        << "  achieved_objective " << std::setprecision(17)
        << sweep.achieved_objective << "\n";
    out << std::left << std::setw(16) << "  policy \\ world";
    for (const std::string& label : report.world_labels)
      out << std::right << std::setw(cell) << label;
    out << "\n";
    for (int r = 0; r < sweep.success.rows(); ++r) {
      std::string row_label =
          r < n ? "  individual " + std::to_string(r + 1) : "  cross";
      out << std::left << std::setw(16) << row_label;
      for (int c = 0; c < n; ++c)
        out << std::right << std::setw(cell) << sweep.success(r, c);
      out << "\n";
    }
  }
  return out.str();
}

// The end-to-end pipeline. Stages: build worlds, train (or load cached)
// experts, assemble the shared instance, solve and evaluate one sweep per
// epsilon, write the report pair. Any failure is rethrown tagged with its
// stage name; artifacts persisted before the failure stay on disk.
inline Report run_experiment(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  using Clock = std::chrono::steady_clock;
  config.validate();

  fs::create_directories(config.output_dir);
  fs::create_directories(config.output_dir + "/experts");
  fs::create_directories(config.output_dir + "/solutions");

  std::ostringstream timing;
  const auto t_start = Clock::now();
  const auto elapsed = [](Clock::time_point from) {
    return std::chrono::duration<double>(Clock::now() - from).count();
  };

  const int n = static_cast<int>(config.worlds.size());
  const std::string hash = config_hash(config);

  // Stage 1: worlds.
  std::vector<Mdp> mdps;
  std::vector<int> goals;
  experiment_detail::run_stage("build_worlds", [&] {
    for (const WorldSpec& spec : config.worlds) {
      mdps.push_back(make_windy_gridworld(spec.world, config.discount));
      goals.push_back(spec.world.goal_state());
    }
    return 0;
  });

  // Stage 2: experts (cached by world + trainer config + per-world seed).
  std::vector<ExpertArtifacts> experts(n);
  for (int i = 0; i < n; ++i) {
    const auto t_stage = Clock::now();
    const std::string stage = "train_expert_" + config.worlds[i].label;
    experiment_detail::run_stage(stage, [&] {
      const std::uint64_t expert_seed = derive_seed(config.seed, "expert", i);
      nlohmann::json key;
      key["world"] = world_to_json(config.worlds[i].world);
      key["world"].erase("schema");
      key["trainer"] = experiment_detail::sarsa_to_json(config.expert);
      key["discount"] = config.discount;
      key["seed"] = expert_seed;
      const std::string cache_path =
          config.output_dir + "/experts/" + config.worlds[i].label + "-" +
          experiment_detail::hex64(fnv1a64(key.dump())) + ".json";
      if (fs::exists(cache_path)) {
        experts[i] = expert_from_json(
            parse_document(read_text_file(cache_path), cache_path));
      } else {
        experts[i] = train_sarsa(mdps[i], goals[i], config.expert,
                                 expert_seed);
        write_text_file(cache_path, expert_to_json(experts[i]).dump(2) + "\n");
      }
      return 0;
    });
    timing << stage << " " << elapsed(t_stage) << "s\n";
  }

  // Stage 3: the shared instance.
  CalInstance instance;
  experiment_detail::run_stage("assemble_instance", [&] {
    for (int i = 0; i < n; ++i) {
      EnvironmentBundle env;
      env.mdp = mdps[i];
      env.expert_measure = experts[i].measure;
      env.label = config.worlds[i].label;
      instance.envs.push_back(std::move(env));
    }
    const int pairs = mdps.front().pair_count();
    if (config.cost_basis.size() == 0) {
      instance.basis = CostBasis::identity(pairs);
    } else {
      if (config.cost_basis.rows() != pairs)
        throw ModelError(
            "cost_basis has " + std::to_string(config.cost_basis.rows()) +
            " rows but the worlds have " + std::to_string(pairs) +
            " state-action pairs");
      instance.basis.basis = config.cost_basis;
    }
    instance.epsilon = config.epsilon_values.front();
    instance.validate();
    return 0;
  });

  Report report;
  report.world_labels.reserve(n);
  for (const WorldSpec& spec : config.worlds)
    report.world_labels.push_back(spec.label);
  report.config_hash = hash;
  report.seed = config.seed;
  report.version = kVersionString;
  report.strategy_name = to_string(config.strategy);
  report.discount = config.discount;

  // Stage 4: one sweep per epsilon.
  for (std::size_t k = 0; k < config.epsilon_values.size(); ++k) {
    const auto t_stage = Clock::now();
    const std::string stage = "solve_epsilon_" + std::to_string(k);
    experiment_detail::run_stage(stage, [&] {
      instance.epsilon = config.epsilon_values[k];
      const McCormickSolution sol = solve_mccormick(instance);
      const CalPolicies policies =
          recover_policies(sol, instance, config.strategy);

      EpsilonReport sweep;
      sweep.epsilon = instance.epsilon;
      sweep.lower_bound = sol.lower_bound;
      sweep.achieved_objective = policies.achieved_objective;
      sweep.success.resize(n + 1, n);
      for (int p = 0; p <= n; ++p) {
        const Policy& policy =
            p < n ? policies.individual[p] : policies.cross;
        for (int w = 0; w < n; ++w)
          sweep.success(p, w) = evaluate_success(
              mdps[w], policy, goals[w], config.eval_trajectories,
              config.eval_max_steps,
              derive_seed(config.seed, "evaluate_e" + std::to_string(k),
                          p * n + w));
      }
      report.sweeps.push_back(std::move(sweep));

      nlohmann::json solution;
      solution["schema"] = kSchemaSolution;
      solution["epsilon"] = instance.epsilon;
      solution["lower_bound"] = sol.lower_bound;
      solution["achieved_objective"] = policies.achieved_objective;
      solution["cross_policy"] = policy_to_json(policies.cross);
      nlohmann::json individual = nlohmann::json::array();
      for (const Policy& p2 : policies.individual)
        individual.push_back(policy_to_json(p2));
      solution["individual_policies"] = std::move(individual);
      write_text_file(config.output_dir + "/solutions/epsilon_" +
                          std::to_string(k) + ".json",
                      solution.dump(2) + "\n");
      return 0;
    });
    timing << stage << " " << elapsed(t_stage) << "s\n";
  }

  // Stage 5: reports. The side log carries wall-clock data and is the only
  // output allowed to differ between identical runs.
  experiment_detail::run_stage("write_report", [&] {
    write_text_file(config.output_dir + "/report.json",
                    report_to_json(report).dump(2) + "\n");
    write_text_file(config.output_dir + "/table.txt", render_table(report));
    timing << "total " << elapsed(t_start) << "s\n";
    write_text_file(config.output_dir + "/timing.log", timing.str());
    return 0;
  });
  return report;
}

}  // namespace cal
