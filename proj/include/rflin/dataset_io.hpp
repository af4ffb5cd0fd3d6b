#pragma once

#include <string>

#include "rflin/linear_mdp.hpp"
#include "rflin/oracle.hpp"
#include "rflin/planner.hpp"

namespace rflin {

// Dataset documents hold the feature map, the planner scalars and, per step,
// each level's tolerance, episode count and (s, a, s') records. Covariances
// and level snapshots are rebuilt on load by replaying the records, which
// reproduces them bit for bit.
std::string serialize_dataset(const ExplorationDataset& dataset);
ExplorationDataset deserialize_dataset(const std::string& text);
void save_dataset(const ExplorationDataset& dataset, const std::string& path);
ExplorationDataset load_dataset(const std::string& path);

/// Reward documents: {"theta": [[d numbers] x H]} for linear rewards or
/// {"table": [[|S||A| numbers] x H]} for an explicit table.
RewardTable parse_reward(const std::string& text, int horizon, int num_states, int num_actions,
                         const RowMatrix& features);
RewardTable load_reward(const std::string& path, int horizon, int num_states, int num_actions,
                        const RowMatrix& features);

/// CSV with header h,state,action,probability and one row per nonzero entry.
std::string policy_csv(const PolicyTable& policy);
void save_policy_csv(const PolicyTable& policy, const std::string& path);

}  // namespace rflin
