// Copyright 2026 The coop_mcts Authors
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

#ifndef COOP__MCTS_HPP_
#define COOP__MCTS_HPP_

#include "coop/game.hpp"
#include "coop/traffic_sim.hpp"

#include <memory>
#include <vector>

namespace coop::mcts
{

using game::ActionId;

/// What a finished descent pushes up the tree.
enum class ValueBackup : std::uint8_t {
  /// Every edge reward on the path is accumulated into its ancestors with
  /// its own depth discount; visit counts grow once per iteration.
  kPathReturn,
  /// Only the final edge reward is backed up.
  kLeafReward,
};

struct SearchConfig
{
  int n_rollout{200};
  double c_puct{21.0};
  double gamma{0.99};
  double gamma_p{0.01};
  bool use_parallel_update{false};
  bool use_action_preference{false};
  int max_descent_depth{90};
  int horizon{90};
  int snapshot_count{16};
  bool common_random_numbers{true};
  ValueBackup backup{ValueBackup::kPathReturn};
  game::ExclusionPolicy exclusion{game::ExclusionPolicy::kExcludeDecel};
  game::PreferenceScale preference_scale{game::PreferenceScale::kPerVehicle};
  game::RewardWeights weights;
  sim::SimParams sim;

  void validate() const;
};

/// Node record <P, p, C, n, u, Re, Rt, Q> plus the danger flag.
struct SearchNode
{
  SearchNode * parent{nullptr};
  ActionId action_id{0};
  double prior{1.0};
  std::vector<std::unique_ptr<SearchNode>> children;  // ascending action_id
  int visits{0};
  double ucb{0.0};
  double coeff_sum{0.0};   // Re
  double return_sum{0.0};  // Rt
  double q{0.0};
  bool dangerous{false};

  bool expanded() const noexcept { return !children.empty(); }
  SearchNode * child(ActionId id) const;
};

struct QSnapshot
{
  int iteration{0};
  std::vector<double> q;  // one entry per joint id; NaN where no child exists
  ActionId argmax{0};
};

struct SearchDiagnostics
{
  std::vector<int> leaf_depths;
  std::vector<QSnapshot> snapshots;
  ActionId chosen_id{0};
};

struct SearchTree
{
  std::unique_ptr<SearchNode> root;
};

struct LeafEvaluation
{
  double reward{0.0};
  sim::StepOutcome outcome;
  /// Agents whose own maneuver drew negative feedback (collision while
  /// changing lanes or accelerating).
  std::vector<int> offending_agents;
};

enum class UpdateKind : std::uint8_t {
  kDirect,      // counts a visit
  kParallel,    // gamma_p-weighted, no visit
  kAccumulate,  // path reward, no visit
};

/// u = Q + c_puct * p * sqrt(ln(n_p) / (1 + n)); n_p below 1 is treated as 1.
double puct_value(const SearchNode & child, int parent_visits, double c_puct);

/// Highest PUCT child; ties go to the lowest action id. Stores u on each child.
SearchNode & select_child(SearchNode & node, double c_puct);

void expand_node(SearchNode & node, const sim::TrafficState & state, const SearchConfig & config);

/// Step the sandbox with `action_id` and score the transition.
LeafEvaluation evaluate_leaf(
  sim::TrafficState & sandbox, ActionId action_id, const SearchConfig & config);

/// Recursive node update. The parent receives the same kind with layer + 1.
void update(
  SearchNode & node, double value, UpdateKind kind, int layer, double gamma, double gamma_p);

/// Back up one iteration. `path` runs from the first edge below the root to
/// the leaf; `rewards` holds the matching edge rewards.
void backpropagate(
  const std::vector<SearchNode *> & path, const std::vector<double> & rewards,
  const std::vector<int> & offending_agents, int n_agents, const SearchConfig & config);

/// Argmax-Q child among children that hold an estimate; ties to the lowest id.
ActionId best_action(const SearchNode & root);

struct SearchResult
{
  ActionId best_id{0};
  SearchDiagnostics diagnostics;
};

/// Run `n_rollout` iterations from `root_state`, reusing `tree` when it
/// already holds statistics for this state.
SearchResult run_search(
  const sim::TrafficState & root_state, SearchTree & tree, const SearchConfig & config);

/// Promote the child for `executed_id` to root. Returns false (and leaves a
/// fresh root) when that edge was never expanded.
bool advance_root(SearchTree & tree, ActionId executed_id);

}  // namespace coop::mcts

#endif  // COOP__MCTS_HPP_
