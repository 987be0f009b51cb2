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

#include "coop/mcts.hpp"

#include "coop/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace coop::mcts
{

namespace
{

constexpr std::uint64_t kSandboxNoiseSalt = 0x5eedba5eULL;

std::vector<AgentAction> decode_for(const sim::TrafficState & state, ActionId id)
{
  return game::decode_action(id, state.cav_count());
}

}  // namespace

void SearchConfig::validate() const
{
  if (n_rollout < 1) {
    throw std::invalid_argument("n_rollout must be at least 1");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1]");
  }
  if (gamma_p < 0.0) {
    throw std::invalid_argument("gamma_p must be non-negative");
  }
  if (c_puct < 0.0) {
    throw std::invalid_argument("c_puct must be non-negative");
  }
  if (max_descent_depth < 1) {
    throw std::invalid_argument("max_descent_depth must be at least 1");
  }
  if (snapshot_count < 0) {
    throw std::invalid_argument("snapshot_count must be non-negative");
  }
  weights.validate();
  sim.validate();
}

SearchNode * SearchNode::child(ActionId id) const
{
  const auto it = std::lower_bound(
    children.begin(), children.end(), id,
    [](const std::unique_ptr<SearchNode> & c, ActionId key) { return c->action_id < key; });
  if (it == children.end() || (*it)->action_id != id) {
    return nullptr;
  }
  return it->get();
}

double puct_value(const SearchNode & child, int parent_visits, double c_puct)
{
  const double n_p = std::max(1, parent_visits);
  return child.q + c_puct * child.prior * std::sqrt(std::log(n_p) / (1.0 + child.visits));
}

SearchNode & select_child(SearchNode & node, double c_puct)
{
  if (node.children.empty()) {
    throw std::logic_error("select_child: node has no children");
  }
  SearchNode * best = nullptr;
  for (auto & c : node.children) {
    c->ucb = puct_value(*c, node.visits, c_puct);
    if (best == nullptr || c->ucb > best->ucb) {
      best = c.get();
    }
  }
  return *best;
}

void expand_node(SearchNode & node, const sim::TrafficState & state, const SearchConfig & config)
{
  if (node.expanded()) {
    throw std::logic_error("expand_node: node already expanded");
  }
  if (game::is_terminal(state, config.horizon) != game::TerminalKind::kRunning) {
    throw std::logic_error("expand_node: terminal state");
  }
  const std::vector<bool> mask = game::legal_joint_actions(state, config.sim);
  std::vector<double> priors;
  if (config.use_action_preference) {
    priors = game::prior_probabilities(mask, state, config.weights, config.preference_scale);
  }
  for (ActionId id = 0; id < mask.size(); ++id) {
    if (!mask[id]) {
      continue;
    }
    auto child = std::make_unique<SearchNode>();
    child->parent = &node;
    child->action_id = id;
    if (config.use_action_preference) {
      child->prior = priors[id];
      child->q = game::preference_score(id, state, config.weights, config.preference_scale);
    } else {
      child->prior = 1.0;
      child->q = 1.0;
    }
    node.children.push_back(std::move(child));
  }
}

LeafEvaluation evaluate_leaf(
  sim::TrafficState & sandbox, ActionId action_id, const SearchConfig & config)
{
  const std::vector<AgentAction> actions = decode_for(sandbox, action_id);
  const std::vector<std::size_t> cavs = sandbox.cav_indices();
  std::vector<sim::CavCommand> commands(actions.begin(), actions.end());

  LeafEvaluation eval;
  eval.outcome = sim::step_in_place(sandbox, commands, config.sim);
  eval.reward = game::compute_reward(
    eval.outcome, config.weights, static_cast<int>(sandbox.vehicles.size()));

  const auto & hit = eval.outcome.collided_vehicles;
  for (std::size_t k = 0; k < cavs.size(); ++k) {
    const int vid = sandbox.vehicles[cavs[k]].id;
    if (std::find(hit.begin(), hit.end(), vid) == hit.end()) {
      continue;
    }
    const AgentAction & a = actions[k];
    if (a.lat != Lat::kKeep || a.lon == Lon::kAccelerate) {
      eval.offending_agents.push_back(static_cast<int>(k));
    }
  }
  return eval;
}

void update(
  SearchNode & node, double value, UpdateKind kind, int layer, double gamma, double gamma_p)
{
  double eff = std::pow(gamma, layer);
  if (kind == UpdateKind::kParallel) {
    eff *= gamma_p;
  }
  for (SearchNode * cur = &node; cur != nullptr; cur = cur->parent) {
    if (kind == UpdateKind::kDirect) {
      ++cur->visits;
    }
    cur->coeff_sum += eff;
    cur->return_sum += eff * value;
    cur->q = cur->return_sum / cur->coeff_sum;
    eff *= gamma;
  }
}

void backpropagate(
  const std::vector<SearchNode *> & path, const std::vector<double> & rewards,
  const std::vector<int> & offending_agents, int n_agents, const SearchConfig & config)
{
  if (path.empty() || path.size() != rewards.size()) {
    throw std::invalid_argument("backpropagate: path and rewards must match");
  }
  const std::size_t last = path.size() - 1;
  if (config.backup == ValueBackup::kPathReturn) {
    for (std::size_t m = 0; m < last; ++m) {
      update(*path[m], rewards[m], UpdateKind::kAccumulate, 0, config.gamma, config.gamma_p);
    }
  }
  SearchNode & leaf = *path[last];
  const double leaf_value = rewards[last];
  update(leaf, leaf_value, UpdateKind::kDirect, 0, config.gamma, config.gamma_p);

  if (!config.use_parallel_update || offending_agents.empty() || leaf.parent == nullptr) {
    return;
  }
  leaf.dangerous = true;
  std::vector<bool> similar(game::joint_action_count(n_agents), false);
  for (const int agent : offending_agents) {
    for (const ActionId id : game::parallel_set(leaf.action_id, agent, n_agents, config.exclusion)) {
      similar[id] = true;
    }
  }
  for (auto & sibling : leaf.parent->children) {
    if (sibling.get() != &leaf && similar[sibling->action_id]) {
      update(*sibling, leaf_value, UpdateKind::kParallel, 0, config.gamma, config.gamma_p);
    }
  }
}

ActionId best_action(const SearchNode & root)
{
  if (root.children.empty()) {
    throw std::logic_error("best_action: root has no children");
  }
  const SearchNode * best = nullptr;
  for (const auto & c : root.children) {
    if (c->coeff_sum > 0.0 && (best == nullptr || c->q > best->q)) {
      best = c.get();
    }
  }
  if (best == nullptr) {
    for (const auto & c : root.children) {
      if (best == nullptr || c->q > best->q) {
        best = c.get();
      }
    }
  }
  return best->action_id;
}

SearchResult run_search(
  const sim::TrafficState & root_state, SearchTree & tree, const SearchConfig & config)
{
  config.validate();
  if (game::is_terminal(root_state, config.horizon) != game::TerminalKind::kRunning) {
    throw std::logic_error("run_search: root state is terminal");
  }
  if (!tree.root) {
    tree.root = std::make_unique<SearchNode>();
  }
  SearchNode & root = *tree.root;
  const int n_agents = root_state.cav_count();
  const ActionId n_ids = game::joint_action_count(n_agents);

  std::vector<int> schedule;
  for (int k = 1; k <= config.snapshot_count; ++k) {
    const long num = static_cast<long>(k) * config.n_rollout;
    schedule.push_back(static_cast<int>((num + config.snapshot_count - 1) / config.snapshot_count));
  }

  SearchResult result;
  result.diagnostics.leaf_depths.reserve(static_cast<std::size_t>(config.n_rollout));
  std::vector<SearchNode *> path;
  std::vector<double> rewards;
  std::size_t next_snapshot = 0;

  for (int iteration = 1; iteration <= config.n_rollout; ++iteration) {
    sim::TrafficState sandbox = root_state;
    if (!config.common_random_numbers) {
      sandbox.noise_seed = derive_seed(
        root_state.noise_seed ^ kSandboxNoiseSalt, static_cast<std::uint64_t>(iteration));
    }
    path.clear();
    rewards.clear();

    SearchNode * node = &root;
    std::vector<int> offending;
    while (true) {
      if (!node->expanded()) {
        expand_node(*node, sandbox, config);
      }
      SearchNode & child = select_child(*node, config.c_puct);
      LeafEvaluation eval = evaluate_leaf(sandbox, child.action_id, config);
      path.push_back(&child);
      rewards.push_back(eval.reward);
      const bool stop = child.visits == 0 ||
                        game::is_terminal(sandbox, config.horizon) != game::TerminalKind::kRunning ||
                        static_cast<int>(path.size()) >= config.max_descent_depth;
      if (stop) {
        offending = std::move(eval.offending_agents);
        break;
      }
      node = &child;
    }

    backpropagate(path, rewards, offending, n_agents, config);
    result.diagnostics.leaf_depths.push_back(static_cast<int>(path.size()));

    while (next_snapshot < schedule.size() && schedule[next_snapshot] == iteration) {
      QSnapshot snap;
      snap.iteration = iteration;
      snap.q.assign(n_ids, std::numeric_limits<double>::quiet_NaN());
      for (const auto & c : root.children) {
        snap.q[c->action_id] = c->q;
      }
      snap.argmax = best_action(root);
      result.diagnostics.snapshots.push_back(std::move(snap));
      ++next_snapshot;
    }
  }

  result.best_id = best_action(root);
  result.diagnostics.chosen_id = result.best_id;
  return result;
}

bool advance_root(SearchTree & tree, ActionId executed_id)
{
  if (tree.root) {
    auto & kids = tree.root->children;
    for (auto & c : kids) {
      if (c && c->action_id == executed_id) {
        std::unique_ptr<SearchNode> next = std::move(c);
        next->parent = nullptr;
        tree.root = std::move(next);
        return true;
      }
    }
  }
  tree.root = std::make_unique<SearchNode>();
  return false;
}

}  // namespace coop::mcts
