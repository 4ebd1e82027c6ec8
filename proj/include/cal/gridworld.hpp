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

// Windy gridworld environments.
//
// A rows x cols grid with a per-column upward crosswind. The agent picks one
// of four moves (left, right, up, down); the wind of the departure column
// adds an upward displacement, and each axis is clamped to the grid
// independently after summing. The goal cell is absorbing, embedding the
// episodic reach-the-goal task into the discounted infinite-horizon setting
// the occupation-measure machinery requires. States are indexed
// row * cols + col with row 0 at the top; the initial distribution is
// uniform over non-goal cells.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cal/mdp.hpp"
#include "cal/rng.hpp"

namespace cal {

struct Cell {
  int row = 0;
  int col = 0;
};

// Action indices of the four moves.
inline constexpr int kActLeft = 0;
inline constexpr int kActRight = 1;
inline constexpr int kActUp = 2;
inline constexpr int kActDown = 3;
inline constexpr int kGridActions = 4;

struct WindyGridworld {
  int rows = 7;
  int cols = 10;
  std::vector<int> wind;  // upward push per column
  Cell goal{3, 7};

  int n_cells() const { return rows * cols; }
  int state_of(int row, int col) const { return row * cols + col; }
  int goal_state() const { return state_of(goal.row, goal.col); }

  void validate() const {
    if (rows < 1 || cols < 1 || n_cells() < 2)
      throw ModelError("WindyGridworld: grid needs at least two cells");
    if (static_cast<int>(wind.size()) != cols)
      throw ModelError("WindyGridworld: wind length must equal cols");
    for (int w : wind)
      if (w < 0) throw ModelError("WindyGridworld: wind must be >= 0");
    if (goal.row < 0 || goal.row >= rows || goal.col < 0 || goal.col >= cols)
      throw ModelError("WindyGridworld: goal outside the grid");
  }
};

// Destination of one move: displacements are summed first (action plus
// upward wind of the departure column), then each axis clamps to the grid.
inline Cell gridworld_step(const WindyGridworld& world, int row, int col,
                           int action) {
  int dr = 0;
  int dc = 0;
  switch (action) {
    case kActLeft: dc = -1; break;
    case kActRight: dc = 1; break;
    case kActUp: dr = -1; break;
    case kActDown: dr = 1; break;
    default: throw ModelError("gridworld_step: unknown action");
  }
  dr -= world.wind[col];  // wind pushes toward row 0
  Cell next;
  next.row = std::min(std::max(row + dr, 0), world.rows - 1);
  next.col = std::min(std::max(col + dc, 0), world.cols - 1);
  return next;
}

inline Mdp make_windy_gridworld(const WindyGridworld& world, double discount) {
  world.validate();
  Mdp mdp;
  mdp.n_states = world.n_cells();
  mdp.n_actions = kGridActions;
  mdp.discount = discount;
  mdp.transition =
      Eigen::MatrixXd::Zero(mdp.pair_count(), mdp.n_states);
  const int goal = world.goal_state();
  for (int row = 0; row < world.rows; ++row)
    for (int col = 0; col < world.cols; ++col) {
      const int s = world.state_of(row, col);
      for (int a = 0; a < kGridActions; ++a) {
        int next;
        if (s == goal) {
          next = goal;  // absorbing
        } else {
          const Cell c = gridworld_step(world, row, col, a);
          next = world.state_of(c.row, c.col);
        }
        mdp.transition(mdp.sa_index(s, a), next) = 1.0;
      }
    }
  mdp.initial_dist = Eigen::VectorXd::Constant(
      mdp.n_states, 1.0 / (mdp.n_states - 1));
  mdp.initial_dist(goal) = 0.0;
  mdp.validate();
  return mdp;
}

// The four benchmark environments: a 7x10 grid, goal at (row 3, column 7)
// counted from zero, differing only in their wind vectors.
inline std::vector<WindyGridworld> benchmark_worlds() {
  std::vector<WindyGridworld> worlds(4);
  worlds[0].wind = {0, 0, 0, 1, 1, 1, 2, 2, 1, 0};
  worlds[1].wind = {1, 1, 0, 0, 0, 2, 0, 0, 1, 0};
  worlds[2].wind = {0, 1, 0, 1, 2, 0, 1, 1, 1, 0};
  worlds[3].wind = {0, 0, 1, 1, 2, 2, 0, 0, 1, 0};
  return worlds;
}

// Counts rollouts that enter the goal state within max_steps transitions.
// Starts follow the model's initial distribution (uniform over non-goal
// cells for gridworlds). The goal is passed explicitly because a generic
// Mdp does not designate one. Deterministic given the seed.
inline int evaluate_success(const Mdp& mdp, const Policy& policy,
                            int goal_state, int n_traj, int max_steps,
                            std::uint64_t seed) {
  mdp.validate();
  policy.validate();
  if (goal_state < 0 || goal_state >= mdp.n_states)
    throw ModelError("evaluate_success: goal state out of range");
  if (n_traj < 1 || max_steps < 1)
    throw ModelError("evaluate_success: counts must be >= 1");
  int successes = 0;
  for (int k = 0; k < n_traj; ++k) {
    const Trajectory traj = sample_trajectory(
        mdp, policy, max_steps + 1,
        derive_seed(seed, "evaluate_success", k));
    for (int t = 1; t <= max_steps; ++t)
      if (traj.steps[t].first == goal_state) {
        ++successes;
        break;
      }
  }
  return successes;
}

}  // namespace cal
