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

// JSON documents for models, policies, measures and experts.
//
// Every document is self-describing through a "schema" field of the form
// "cal/<kind>@<version>". Readers reject unknown fields and name the
// offending field in errors so configuration typos fail loudly instead of
// silently falling back to defaults. Doubles are emitted with the shortest
// representation that round-trips exactly, which keeps documents both
// full-precision and byte-stable for identical inputs.

#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cal/cross_learning.hpp"
#include "cal/gridworld.hpp"
#include "cal/mdp.hpp"
#include "cal/sarsa.hpp"

namespace cal {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr const char* kSchemaMdp = "cal/mdp@1";
inline constexpr const char* kSchemaPolicy = "cal/policy@1";
inline constexpr const char* kSchemaMeasure = "cal/measure@1";
inline constexpr const char* kSchemaWorld = "cal/world@1";
inline constexpr const char* kSchemaExpert = "cal/expert@1";
inline constexpr const char* kSchemaBundle = "cal/bundle@1";
inline constexpr const char* kSchemaConfig = "cal/config@1";
inline constexpr const char* kSchemaReport = "cal/report@1";
inline constexpr const char* kSchemaSolution = "cal/solution@1";

namespace io_detail {

inline void reject_unknown_keys(const nlohmann::json& j,
                                std::initializer_list<const char*> allowed,
                                const std::string& context) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw IoError(context + ": unknown field '" + it.key() + "'");
  }
}

inline const nlohmann::json& require_field(const nlohmann::json& j,
                                           const char* key,
                                           const std::string& context) {
  if (!j.is_object())
    throw IoError(context + ": expected an object");
  auto it = j.find(key);
  if (it == j.end())
    throw IoError(context + ": missing field '" + std::string(key) + "'");
  return *it;
}

inline double get_double(const nlohmann::json& j, const char* key,
                         const std::string& context) {
  const nlohmann::json& v = require_field(j, key, context);
  if (!v.is_number())
    throw IoError(context + ": field '" + std::string(key) +
                  "' must be a number");
  return v.get<double>();
}

inline long long get_integer(const nlohmann::json& j, const char* key,
                             const std::string& context) {
  const nlohmann::json& v = require_field(j, key, context);
  if (!v.is_number_integer())
    throw IoError(context + ": field '" + std::string(key) +
                  "' must be an integer");
  return v.get<long long>();
}

inline std::string get_string(const nlohmann::json& j, const char* key,
                              const std::string& context) {
  const nlohmann::json& v = require_field(j, key, context);
  if (!v.is_string())
    throw IoError(context + ": field '" + std::string(key) +
                  "' must be a string");
  return v.get<std::string>();
}

inline void expect_schema(const nlohmann::json& j, const char* schema,
                          const std::string& context) {
  if (get_string(j, "schema", context) != schema)
    throw IoError(context + ": expected schema '" + std::string(schema) +
                  "', got '" + get_string(j, "schema", context) + "'");
}

}  // namespace io_detail

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j,
                                        const std::string& context) {
  if (!j.is_array()) throw IoError(context + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const nlohmann::json& e : j) {
    if (!e.is_number()) throw IoError(context + ": expected numbers");
    v(i++) = e.get<double>();
  }
  return v;
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    out.push_back(vector_to_json(m.row(r).transpose()));
  return out;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j,
                                        const std::string& context) {
  if (!j.is_array() || j.empty())
    throw IoError(context + ": expected a non-empty array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Eigen::MatrixXd m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::VectorXd row =
        vector_from_json(j[r], context + " row " + std::to_string(r));
    if (cols < 0) {
      cols = row.size();
      m.resize(rows, cols);
    } else if (row.size() != cols) {
      throw IoError(context + ": ragged rows");
    }
    m.row(r) = row.transpose();
  }
  return m;
}

// Transition rows are serialized in pair order (s, a) with the action index
// varying fastest, matching Mdp::sa_index.
inline nlohmann::json mdp_to_json(const Mdp& mdp) {
  nlohmann::json j;
  j["schema"] = kSchemaMdp;
  j["n_states"] = mdp.n_states;
  j["n_actions"] = mdp.n_actions;
  j["discount"] = mdp.discount;
  j["transition"] = matrix_to_json(mdp.transition);
  j["initial_dist"] = vector_to_json(mdp.initial_dist);
  return j;
}

inline Mdp mdp_from_json(const nlohmann::json& j) {
  const std::string ctx = "mdp document";
  io_detail::expect_schema(j, kSchemaMdp, ctx);
  io_detail::reject_unknown_keys(
      j, {"schema", "n_states", "n_actions", "discount", "transition",
          "initial_dist"},
      ctx);
  Mdp mdp;
  mdp.n_states = static_cast<int>(io_detail::get_integer(j, "n_states", ctx));
  mdp.n_actions =
      static_cast<int>(io_detail::get_integer(j, "n_actions", ctx));
  mdp.discount = io_detail::get_double(j, "discount", ctx);
  mdp.transition = matrix_from_json(
      io_detail::require_field(j, "transition", ctx), ctx + " transition");
  mdp.initial_dist = vector_from_json(
      io_detail::require_field(j, "initial_dist", ctx),
      ctx + " initial_dist");
  mdp.validate();
  return mdp;
}

inline nlohmann::json policy_to_json(const Policy& policy) {
  nlohmann::json j;
  j["schema"] = kSchemaPolicy;
  j["probs"] = matrix_to_json(policy.probs);
  return j;
}

inline Policy policy_from_json(const nlohmann::json& j) {
  const std::string ctx = "policy document";
  io_detail::expect_schema(j, kSchemaPolicy, ctx);
  io_detail::reject_unknown_keys(j, {"schema", "probs"}, ctx);
  Policy policy;
  policy.probs = matrix_from_json(io_detail::require_field(j, "probs", ctx),
                                  ctx + " probs");
  policy.validate();
  return policy;
}

inline nlohmann::json measure_to_json(const OccupationMeasure& measure) {
  nlohmann::json j;
  j["schema"] = kSchemaMeasure;
  j["n_states"] = measure.n_states;
  j["n_actions"] = measure.n_actions;
  j["mu"] = vector_to_json(measure.mu);
  return j;
}

inline OccupationMeasure measure_from_json(const nlohmann::json& j) {
  const std::string ctx = "measure document";
  io_detail::expect_schema(j, kSchemaMeasure, ctx);
  io_detail::reject_unknown_keys(j, {"schema", "n_states", "n_actions", "mu"},
                                 ctx);
  OccupationMeasure measure;
  measure.n_states =
      static_cast<int>(io_detail::get_integer(j, "n_states", ctx));
  measure.n_actions =
      static_cast<int>(io_detail::get_integer(j, "n_actions", ctx));
  measure.mu = vector_from_json(io_detail::require_field(j, "mu", ctx),
                                ctx + " mu");
  measure.validate();
  return measure;
}

inline nlohmann::json world_to_json(const WindyGridworld& world) {
  nlohmann::json j;
  j["schema"] = kSchemaWorld;
  j["rows"] = world.rows;
  j["cols"] = world.cols;
  j["wind"] = world.wind;
  j["goal"] = {world.goal.row, world.goal.col};
  return j;
}

inline WindyGridworld world_from_json(const nlohmann::json& j) {
  const std::string ctx = "world document";
  io_detail::expect_schema(j, kSchemaWorld, ctx);
  io_detail::reject_unknown_keys(j, {"schema", "rows", "cols", "wind", "goal"},
                                 ctx);
  WindyGridworld world;
  world.rows = static_cast<int>(io_detail::get_integer(j, "rows", ctx));
  world.cols = static_cast<int>(io_detail::get_integer(j, "cols", ctx));
  const nlohmann::json& wind = io_detail::require_field(j, "wind", ctx);
  if (!wind.is_array()) throw IoError(ctx + ": field 'wind' must be an array");
  world.wind.clear();
  for (const nlohmann::json& w : wind) {
    if (!w.is_number_integer())
      throw IoError(ctx + ": wind entries must be integers");
    world.wind.push_back(w.get<int>());
  }
  const nlohmann::json& goal = io_detail::require_field(j, "goal", ctx);
  if (!goal.is_array() || goal.size() != 2 || !goal[0].is_number_integer() ||
      !goal[1].is_number_integer())
    throw IoError(ctx + ": field 'goal' must be [row, col]");
  world.goal = {goal[0].get<int>(), goal[1].get<int>()};
  world.validate();
  return world;
}

inline nlohmann::json expert_to_json(const ExpertArtifacts& expert) {
  nlohmann::json j;
  j["schema"] = kSchemaExpert;
  j["policy"] = policy_to_json(expert.policy);
  j["measure"] = measure_to_json(expert.measure);
  j["training_log"] = expert.training_log;
  return j;
}

inline ExpertArtifacts expert_from_json(const nlohmann::json& j) {
  const std::string ctx = "expert document";
  io_detail::expect_schema(j, kSchemaExpert, ctx);
  io_detail::reject_unknown_keys(
      j, {"schema", "policy", "measure", "training_log"}, ctx);
  ExpertArtifacts expert;
  expert.policy =
      policy_from_json(io_detail::require_field(j, "policy", ctx));
  expert.measure =
      measure_from_json(io_detail::require_field(j, "measure", ctx));
  const nlohmann::json& log = io_detail::require_field(j, "training_log", ctx);
  if (!log.is_array())
    throw IoError(ctx + ": field 'training_log' must be an array");
  expert.training_log.clear();
  for (const nlohmann::json& e : log) {
    if (!e.is_number())
      throw IoError(ctx + ": training_log entries must be numbers");
    expert.training_log.push_back(e.get<double>());
  }
  return expert;
}

// A bundle packages a complete CAL instance: shared-shape environments with
// their expert measures, the cost basis, and a default coupling radius.
inline nlohmann::json bundle_to_json(const CalInstance& instance) {
  nlohmann::json j;
  j["schema"] = kSchemaBundle;
  j["epsilon"] = instance.epsilon;
  j["cost_basis"] = matrix_to_json(instance.basis.basis);
  nlohmann::json envs = nlohmann::json::array();
  for (const EnvironmentBundle& env : instance.envs) {
    nlohmann::json e;
    e["label"] = env.label;
    e["mdp"] = mdp_to_json(env.mdp);
    e["expert_measure"] = measure_to_json(env.expert_measure);
    envs.push_back(std::move(e));
  }
  j["envs"] = std::move(envs);
  return j;
}

inline CalInstance bundle_from_json(const nlohmann::json& j) {
  const std::string ctx = "bundle document";
  io_detail::expect_schema(j, kSchemaBundle, ctx);
  io_detail::reject_unknown_keys(
      j, {"schema", "epsilon", "cost_basis", "envs"}, ctx);
  CalInstance instance;
  instance.epsilon = io_detail::get_double(j, "epsilon", ctx);
  const nlohmann::json& envs = io_detail::require_field(j, "envs", ctx);
  if (!envs.is_array() || envs.empty())
    throw IoError(ctx + ": field 'envs' must be a non-empty array");
  for (const nlohmann::json& e : envs) {
    const std::string ectx = ctx + ": envs[" +
                             std::to_string(instance.envs.size()) + "]";
    io_detail::reject_unknown_keys(e, {"label", "mdp", "expert_measure"},
                                   ectx);
    EnvironmentBundle env;
    env.label = io_detail::get_string(e, "label", ectx);
    env.mdp = mdp_from_json(io_detail::require_field(e, "mdp", ectx));
    env.expert_measure = measure_from_json(
        io_detail::require_field(e, "expert_measure", ectx));
    instance.envs.push_back(std::move(env));
  }
  const nlohmann::json& basis = io_detail::require_field(j, "cost_basis", ctx);
  if (basis.is_string() && basis.get<std::string>() == "identity")
    instance.basis =
        CostBasis::identity(instance.envs.front().mdp.pair_count());
  else
    instance.basis.basis = matrix_from_json(basis, ctx + ": cost_basis");
  instance.validate();
  return instance;
}

inline nlohmann::json parse_document(const std::string& text,
                                     const std::string& context) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(context + ": " + e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace cal
