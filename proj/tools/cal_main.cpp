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

// Command line front end for the cross apprenticeship learning library.
//
//   cal run    --config PATH [--seed N] [--out DIR]   full benchmark pipeline
//   cal worlds                                        print benchmark worlds
//   cal solve  --bundle PATH --epsilon E [...]        one-off CAL solve
//   cal eval   --policy PATH --world PATH [...]       success-count rollouts

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cal/cross_learning.hpp"
#include "cal/experiment.hpp"
#include "cal/gridworld.hpp"
#include "cal/io.hpp"
#include "cal/version.hpp"

namespace {

int cmd_run(const std::string& config_path, bool has_seed,
            std::uint64_t seed, const std::string& out_dir) {
  cal::ExperimentConfig config =
      cal::validate_config(cal::read_text_file(config_path));
  if (has_seed) config.seed = seed;
  if (!out_dir.empty()) config.output_dir = out_dir;
  const cal::Report report = cal::run_experiment(config);
  std::cout << cal::render_table(report);
  std::cout << "\nreport: " << config.output_dir << "/report.json\n"
            << "table:  " << config.output_dir << "/table.txt\n";
  return 0;
}

int cmd_worlds() {
  nlohmann::json out = nlohmann::json::array();
  int index = 0;
  for (const cal::WindyGridworld& world : cal::benchmark_worlds()) {
    nlohmann::json w = cal::world_to_json(world);
    w["label"] = "world" + std::to_string(++index);
    out.push_back(std::move(w));
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_solve(const std::string& bundle_path, double epsilon,
              const std::string& strategy_name, const std::string& out_path) {
  cal::CalInstance instance = cal::bundle_from_json(
      cal::parse_document(cal::read_text_file(bundle_path), bundle_path));
  if (epsilon >= 0.0) instance.epsilon = epsilon;
  const cal::ProjectionStrategy strategy =
      strategy_name == "cross_centered"
          ? cal::ProjectionStrategy::kCrossCentered
          : cal::ProjectionStrategy::kAverageCentered;

  const cal::McCormickSolution sol = cal::solve_mccormick(instance);
  const cal::CalPolicies policies =
      cal::recover_policies(sol, instance, strategy);

  nlohmann::json solution;
  solution["schema"] = cal::kSchemaSolution;
  solution["epsilon"] = instance.epsilon;
  solution["lower_bound"] = sol.lower_bound;
  solution["achieved_objective"] = policies.achieved_objective;
  solution["strategy"] = strategy_name;
  solution["cross_policy"] = cal::policy_to_json(policies.cross);
  nlohmann::json individual = nlohmann::json::array();
  for (const cal::Policy& p : policies.individual)
    individual.push_back(cal::policy_to_json(p));
  solution["individual_policies"] = std::move(individual);
  cal::write_text_file(out_path, solution.dump(2) + "\n");

  std::cout << "epsilon " << instance.epsilon << "\n"
            << "lower_bound " << sol.lower_bound << "\n"
            << "achieved_objective " << policies.achieved_objective << "\n"
            << "solution: " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& policy_path, const std::string& world_path,
             double discount, int n_traj, int max_steps, std::uint64_t seed) {
  const cal::Policy policy = cal::policy_from_json(
      cal::parse_document(cal::read_text_file(policy_path), policy_path));
  const cal::WindyGridworld world = cal::world_from_json(
      cal::parse_document(cal::read_text_file(world_path), world_path));
  const cal::Mdp mdp = cal::make_windy_gridworld(world, discount);
  const int successes = cal::evaluate_success(
      mdp, policy, world.goal_state(), n_traj, max_steps, seed);
  std::cout << successes << " / " << n_traj << " rollouts reached the goal "
            << "within " << max_steps << " steps\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross apprenticeship learning on tabular models"};
  app.set_version_flag("--version", std::string("cal ") + cal::kVersionString);
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the full benchmark pipeline");
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  run->add_option("--config", config_path, "experiment configuration file")
      ->required();
  CLI::Option* seed_opt =
      run->add_option("--seed", seed, "override the master seed");
  run->add_option("--out", out_dir, "override the output directory");

  auto* worlds =
      app.add_subcommand("worlds", "print the benchmark world definitions");

  auto* solve = app.add_subcommand("solve", "solve one serialized instance");
  std::string bundle_path;
  double epsilon = -1.0;
  std::string strategy_name = "average_centered";
  std::string solution_path = "solution.json";
  solve->add_option("--bundle", bundle_path, "serialized instance bundle")
      ->required();
  solve->add_option("--epsilon", epsilon, "coupling radius in [0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  solve->add_option("--strategy", strategy_name, "policy recovery strategy")
      ->check(CLI::IsMember({"cross_centered", "average_centered"}));
  solve->add_option("--out", solution_path, "solution output file");

  auto* eval = app.add_subcommand("eval", "evaluate a policy in a world");
  std::string policy_path;
  std::string world_path;
  double discount = 0.9;
  int n_traj = 200;
  int max_steps = 20;
  std::uint64_t eval_seed = 0;
  eval->add_option("--policy", policy_path, "policy document")->required();
  eval->add_option("--world", world_path, "world document")->required();
  eval->add_option("--discount", discount, "model discount factor");
  eval->add_option("--n-traj", n_traj, "number of evaluation rollouts");
  eval->add_option("--max-steps", max_steps, "success step budget");
  eval->add_option("--seed", eval_seed, "evaluation seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, seed_opt->count() > 0, seed, out_dir);
    if (worlds->parsed()) return cmd_worlds();
    if (solve->parsed())
      return cmd_solve(bundle_path, epsilon, strategy_name, solution_path);
    if (eval->parsed())
      return cmd_eval(policy_path, world_path, discount, n_traj, max_steps,
                      eval_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
