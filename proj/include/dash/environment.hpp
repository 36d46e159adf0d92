#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dash/belief.hpp"
#include "dash/rng.hpp"

namespace dash {

enum class RewardKind { kBernoulli, kGaussian };

std::string to_string(RewardKind kind);
RewardKind reward_kind_from_string(const std::string& text);

/// One selectable dataset: its true expected reward (the ground-truth utility
/// the simulator scores against) and its representative-point budget.
struct DatasetSpec {
  std::string name;
  double utility = 0.0;
  std::int64_t n_points = 1;

  bool operator==(const DatasetSpec&) const = default;
};

struct GroupSpec {
  std::string name;
  std::vector<DatasetSpec> datasets;

  bool operator==(const GroupSpec&) const = default;
};

/// Declarative pool description. The trailing fields are per-scenario policy
/// hyperparameters carried in the config file (percentile threshold, default
/// step budget where 0 means unlimited, observation variance and the shared
/// priors).
struct Scenario {
  std::string name;
  RewardKind reward_kind = RewardKind::kBernoulli;
  bool stop_on_first_exhaustion = false;
  std::uint64_t seed = 0;
  std::vector<GroupSpec> groups;
  double percentile_x = 80.0;
  std::int64_t default_budget = 0;
  double sigma_r_sq = 1.0;
  double prior_mean = 0.0;
  double prior_group_var = 2.0;
  double prior_dataset_var = 2.0;

  bool operator==(const Scenario&) const = default;

  int group_count() const { return static_cast<int>(groups.size()); }
  int dataset_count(int group) const {
    return static_cast<int>(groups[static_cast<std::size_t>(group)].datasets.size());
  }
  int total_datasets() const;
  std::int64_t total_points() const;
};

/// Throws std::invalid_argument when structural invariants are violated
/// (empty pool, out-of-range Bernoulli utility, duplicate names, ...).
void validate(const Scenario& scenario);

/// One reward observation for a dataset. Bernoulli pools return 0/1 with
/// P(1) = utility; Gaussian pools return an N(utility, sigma_r_sq) draw.
double draw_reward(const DatasetSpec& spec, RewardKind kind, const RewardModel& reward,
                   SeededRandomSource& rng);

enum class ScenarioTag {
  kDigit5Perfect,
  kDigit5Mixed,
  kDigit5Cross,
  kDigit5Scaled51,
  kNoRelevant,
  kBudget15,
  kDomainNetPerfect,
};

ScenarioTag scenario_tag_from_string(const std::string& text);
std::string to_string(ScenarioTag tag);

/// Ready-made pools mirroring the benchmark shapes. Utilities are config
/// data (documented defaults), not ground truth recovered from any source.
Scenario builtin_scenario(ScenarioTag tag);

/// JSON round trip. Schema:
///   {name, reward_kind, stop_on_first_exhaustion, seed,
///    groups: [{name, datasets: [{name, utility, n_points}]}],
///    percentile_x?, default_budget?, sigma_r_sq?}
std::string emit_scenario(const Scenario& scenario);
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario_file(const std::filesystem::path& path);
void save_scenario_file(const Scenario& scenario, const std::filesystem::path& path);

/// Resolves a CLI --scenario argument: a builtin tag name or a JSON file path.
Scenario resolve_scenario(const std::string& tag_or_path);

}  // namespace dash
