#include "dash/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dash {

namespace {

int argmax_lowest(const std::vector<double>& values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

double interpolated_percentile(std::vector<double> sorted, double x) {
  const auto n = sorted.size();
  const double h = static_cast<double>(n - 1) * x / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string to_string(PolicyKind kind) {
  return kind == PolicyKind::kHierarchical ? "hierarchical" : "flat";
}

PolicyKind policy_kind_from_string(const std::string& text) {
  if (text == "hierarchical" || text == "hier") return PolicyKind::kHierarchical;
  if (text == "flat") return PolicyKind::kFlat;
  throw std::invalid_argument("unknown policy: " + text + " (expected hier|flat)");
}

void validate(const PolicyConfig& config) {
  if (!(config.prior_group_var > 0.0) || !(config.prior_dataset_var > 0.0) ||
      !(config.sigma_r_sq > 0.0)) {
    throw std::invalid_argument("policy variances must be positive");
  }
  if (!std::isfinite(config.prior_mean)) throw std::invalid_argument("prior mean must be finite");
  if (!(config.percentile_x > 0.0) || !(config.percentile_x < 100.0)) {
    throw std::invalid_argument("percentile_x must lie in (0, 100)");
  }
  if (config.selection_mode == SelectionMode::kTopK && config.top_k < 1) {
    throw std::invalid_argument("top_k must be >= 1");
  }
}

PolicyConfig config_for(const Scenario& scenario) {
  PolicyConfig config;
  config.percentile_x = scenario.percentile_x;
  config.sigma_r_sq = scenario.sigma_r_sq;
  config.prior_mean = scenario.prior_mean;
  config.prior_group_var = scenario.prior_group_var;
  config.prior_dataset_var = scenario.prior_dataset_var;
  return config;
}

RewardSource::RewardSource(const Scenario& scenario, const RewardModel& reward)
    : scenario_(&scenario), reward_(reward) {
  theta_star_ = -std::numeric_limits<double>::infinity();
  for (const auto& group : scenario.groups) {
    for (const auto& dataset : group.datasets) theta_star_ = std::max(theta_star_, dataset.utility);
  }
}

const DatasetSpec& RewardSource::spec(ArmId arm) const {
  const auto& groups = scenario_->groups;
  if (arm.group < 0 || arm.group >= static_cast<int>(groups.size())) {
    throw std::invalid_argument("arm group index out of range");
  }
  const auto& datasets = groups[static_cast<std::size_t>(arm.group)].datasets;
  if (arm.dataset < 0 || arm.dataset >= static_cast<int>(datasets.size())) {
    throw std::invalid_argument("arm dataset index out of range");
  }
  return datasets[static_cast<std::size_t>(arm.dataset)];
}

SelectorState::SelectorState(const Scenario& scenario, const PolicyConfig& config,
                             PolicyKind kind)
    : scenario_(scenario), config_(config), kind_(kind) {
  validate(scenario_);
  validate(config_);
  const auto n_groups = scenario_.groups.size();
  group_stats_.resize(n_groups);
  group_beliefs_.assign(n_groups, {config_.prior_mean, config_.prior_group_var});
  dataset_stats_.resize(n_groups);
  remaining_.resize(n_groups);
  for (std::size_t i = 0; i < n_groups; ++i) {
    const auto& datasets = scenario_.groups[i].datasets;
    dataset_stats_[i].resize(datasets.size());
    remaining_[i].reserve(datasets.size());
    for (const auto& dataset : datasets) remaining_[i].push_back(dataset.n_points);
  }
}

std::int64_t SelectorState::remaining_points(int group, int dataset) const {
  return remaining_[static_cast<std::size_t>(group)][static_cast<std::size_t>(dataset)];
}

bool SelectorState::group_active(int group) const {
  for (std::int64_t left : remaining_[static_cast<std::size_t>(group)]) {
    if (left > 0) return true;
  }
  return false;
}

int SelectorState::active_group_count() const {
  int count = 0;
  for (int g = 0; g < scenario_.group_count(); ++g) count += group_active(g) ? 1 : 0;
  return count;
}

int SelectorState::active_dataset_count(int group) const {
  int count = 0;
  for (std::int64_t left : remaining_[static_cast<std::size_t>(group)]) count += left > 0 ? 1 : 0;
  return count;
}

int SelectorState::active_dataset_count() const {
  int count = 0;
  for (int g = 0; g < scenario_.group_count(); ++g) count += active_dataset_count(g);
  return count;
}

const GroupStats& SelectorState::group_stats(int group) const {
  return group_stats_[static_cast<std::size_t>(group)];
}

const DatasetStats& SelectorState::dataset_stats(int group, int dataset) const {
  return dataset_stats_[static_cast<std::size_t>(group)][static_cast<std::size_t>(dataset)];
}

GaussianBelief SelectorState::group_belief(int group) const {
  return group_beliefs_[static_cast<std::size_t>(group)];
}

GaussianBelief SelectorState::dataset_belief(int group, int dataset) const {
  const RewardModel reward{config_.sigma_r_sq};
  const auto& stats = dataset_stats(group, dataset);
  const double bias = kind_ == PolicyKind::kHierarchical ? group_belief(group).mean
                                                         : config_.prior_mean;
  return dataset_posterior(bias, config_.prior_dataset_var, reward, stats);
}

std::vector<double> SelectorState::group_means() const {
  std::vector<double> means;
  means.reserve(group_beliefs_.size());
  for (const auto& belief : group_beliefs_) means.push_back(belief.mean);
  return means;
}

std::vector<double> SelectorState::dataset_means() const {
  std::vector<double> means;
  for (int g = 0; g < scenario_.group_count(); ++g) {
    for (int j = 0; j < scenario_.dataset_count(g); ++j) {
      means.push_back(dataset_belief(g, j).mean);
    }
  }
  return means;
}

void SelectorState::record_reward(ArmId arm, double reward_value) {
  if (arm.group < 0 || arm.group >= scenario_.group_count() || arm.dataset < 0 ||
      arm.dataset >= scenario_.dataset_count(arm.group)) {
    throw std::invalid_argument("reward recorded for an arm outside the pool");
  }
  if (!dataset_active(arm.group, arm.dataset)) {
    throw std::invalid_argument("reward recorded for an exhausted dataset");
  }
  auto& stats = dataset_stats_[static_cast<std::size_t>(arm.group)]
                              [static_cast<std::size_t>(arm.dataset)];
  stats.pulls += 1;
  stats.reward_sum += reward_value;

  auto& left = remaining_[static_cast<std::size_t>(arm.group)]
                         [static_cast<std::size_t>(arm.dataset)];
  left -= 1;
  if (left == 0 && first_exhaustion_step_ == 0) first_exhaustion_step_ = step_count_ + 1;

  if (kind_ == PolicyKind::kHierarchical) {
    auto& gstats = group_stats_[static_cast<std::size_t>(arm.group)];
    gstats.pulls += 1;
    gstats.reward_sum += reward_value;
    group_beliefs_[static_cast<std::size_t>(arm.group)] =
        group_posterior({config_.prior_mean, config_.prior_group_var},
                        config_.prior_dataset_var, RewardModel{config_.sigma_r_sq}, gstats);
  }
}

StepRecord SelectorState::finish_step(ArmId arm, double reward_value, int draws,
                                      const RewardSource& env) {
  step_count_ += 1;
  total_draws_ += static_cast<std::uint64_t>(draws);
  const double inst_regret = env.theta_star() - env.utility(arm);
  cum_regret_ += inst_regret;
  return StepRecord{step_count_, arm.group, arm.dataset, reward_value,
                    inst_regret, cum_regret_, draws};
}

StepRecord step_hierarchical(SelectorState& state, const RewardSource& env,
                             SeededRandomSource& rng) {
  if (state.pool_exhausted()) throw ExhaustedPoolError("all representative points consumed");

  std::vector<int> active_groups;
  for (int g = 0; g < state.scenario_.group_count(); ++g) {
    if (state.group_active(g)) active_groups.push_back(g);
  }

  int draws = 0;
  int chosen_group = active_groups.front();
  if (active_groups.size() > 1) {
    std::vector<double> group_draws;
    group_draws.reserve(active_groups.size());
    for (int g : active_groups) {
      group_draws.push_back(sample(state.group_belief(g), rng));
      ++draws;
    }
    chosen_group = active_groups[static_cast<std::size_t>(argmax_lowest(group_draws))];
  }

  std::vector<int> active_datasets;
  for (int j = 0; j < state.scenario_.dataset_count(chosen_group); ++j) {
    if (state.dataset_active(chosen_group, j)) active_datasets.push_back(j);
  }
  std::vector<double> dataset_draws;
  dataset_draws.reserve(active_datasets.size());
  for (int j : active_datasets) {
    dataset_draws.push_back(sample(state.dataset_belief(chosen_group, j), rng));
    ++draws;
  }
  const int chosen_dataset =
      active_datasets[static_cast<std::size_t>(argmax_lowest(dataset_draws))];

  const ArmId arm{chosen_group, chosen_dataset};
  const double reward_value = env.draw(arm, rng);
  state.record_reward(arm, reward_value);
  return state.finish_step(arm, reward_value, draws, env);
}

StepRecord step_flat(SelectorState& state, const RewardSource& env, SeededRandomSource& rng) {
  if (state.pool_exhausted()) throw ExhaustedPoolError("all representative points consumed");

  std::vector<ArmId> active;
  for (int g = 0; g < state.scenario_.group_count(); ++g) {
    for (int j = 0; j < state.scenario_.dataset_count(g); ++j) {
      if (state.dataset_active(g, j)) active.push_back({g, j});
    }
  }
  std::vector<double> arm_draws;
  arm_draws.reserve(active.size());
  for (ArmId arm : active) {
    arm_draws.push_back(sample(state.dataset_belief(arm.group, arm.dataset), rng));
  }
  const ArmId arm = active[static_cast<std::size_t>(argmax_lowest(arm_draws))];
  const int draws = static_cast<int>(active.size());

  const double reward_value = env.draw(arm, rng);
  state.record_reward(arm, reward_value);
  return state.finish_step(arm, reward_value, draws, env);
}

std::vector<int> select_final(const std::vector<double>& means, const PolicyConfig& config) {
  if (means.empty()) throw std::invalid_argument("select_final: empty mean list");
  std::vector<int> selected;
  if (config.selection_mode == SelectionMode::kPercentile) {
    std::vector<double> sorted = means;
    std::sort(sorted.begin(), sorted.end());
    const double threshold = interpolated_percentile(std::move(sorted), config.percentile_x);
    for (int i = 0; i < static_cast<int>(means.size()); ++i) {
      if (means[static_cast<std::size_t>(i)] > threshold) selected.push_back(i);
    }
  } else {
    std::vector<int> order(means.size());
    for (int i = 0; i < static_cast<int>(order.size()); ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return means[static_cast<std::size_t>(a)] > means[static_cast<std::size_t>(b)];
    });
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(config.top_k), order.size());
    selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(selected.begin(), selected.end());
  }
  return selected;
}

SelectionResult current_selection(const SelectorState& state) {
  const auto& scenario = state.scenario();
  const auto& config = state.config();
  SelectionResult result;

  const std::vector<double> dataset_means = state.dataset_means();

  if (state.kind() == PolicyKind::kFlat) {
    const std::vector<int> flat = select_final(dataset_means, config);
    std::vector<bool> group_hit(static_cast<std::size_t>(scenario.group_count()), false);
    for (int idx : flat) {
      int g = 0, offset = idx;
      while (offset >= scenario.dataset_count(g)) {
        offset -= scenario.dataset_count(g);
        ++g;
      }
      result.datasets.push_back({g, offset});
      group_hit[static_cast<std::size_t>(g)] = true;
    }
    for (int g = 0; g < scenario.group_count(); ++g) {
      if (group_hit[static_cast<std::size_t>(g)]) result.groups.push_back(g);
    }
    return result;
  }

  result.groups = select_final(state.group_means(), config);
  std::vector<bool> group_selected(static_cast<std::size_t>(scenario.group_count()), false);
  for (int g : result.groups) group_selected[static_cast<std::size_t>(g)] = true;

  if (config.selection_mode == SelectionMode::kPercentile) {
    // Threshold over the full pool; selected groups gate eligibility.
    const std::vector<int> above = select_final(dataset_means, config);
    for (int idx : above) {
      int g = 0, offset = idx;
      while (offset >= scenario.dataset_count(g)) {
        offset -= scenario.dataset_count(g);
        ++g;
      }
      if (group_selected[static_cast<std::size_t>(g)]) result.datasets.push_back({g, offset});
    }
  } else {
    std::vector<std::pair<double, ArmId>> eligible;
    int idx = 0;
    for (int g = 0; g < scenario.group_count(); ++g) {
      for (int j = 0; j < scenario.dataset_count(g); ++j, ++idx) {
        if (group_selected[static_cast<std::size_t>(g)]) {
          eligible.push_back({dataset_means[static_cast<std::size_t>(idx)], ArmId{g, j}});
        }
      }
    }
    std::stable_sort(eligible.begin(), eligible.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(config.top_k), eligible.size());
    for (std::size_t i = 0; i < k; ++i) result.datasets.push_back(eligible[i].second);
    std::sort(result.datasets.begin(), result.datasets.end());
  }
  return result;
}

std::vector<ArmId> optimal_arms(const Scenario& scenario) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& group : scenario.groups) {
    for (const auto& dataset : group.datasets) best = std::max(best, dataset.utility);
  }
  std::vector<ArmId> arms;
  for (int g = 0; g < scenario.group_count(); ++g) {
    for (int j = 0; j < scenario.dataset_count(g); ++j) {
      if (scenario.groups[static_cast<std::size_t>(g)].datasets[static_cast<std::size_t>(j)]
              .utility == best) {
        arms.push_back({g, j});
      }
    }
  }
  return arms;
}

RunResult run(const PolicyConfig& config, const Scenario& scenario, std::int64_t budget,
              std::uint64_t rng_seed, PolicyKind policy) {
  validate(scenario);
  validate(config);
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");

  SelectorState state(scenario, config, policy);
  const RewardSource env(scenario, RewardModel{config.sigma_r_sq});
  SeededRandomSource rng(rng_seed);

  RunResult result;
  bool stopped_early = false;
  while (state.step_count() < budget && !state.pool_exhausted()) {
    const StepRecord record = policy == PolicyKind::kHierarchical
                                  ? step_hierarchical(state, env, rng)
                                  : step_flat(state, env, rng);
    result.trace.push_back(record);
    if (scenario.stop_on_first_exhaustion && state.first_exhaustion_step() != 0) {
      stopped_early = state.step_count() < budget && !state.pool_exhausted();
      break;
    }
  }

  RunSummary& summary = result.summary;
  summary.scenario = scenario.name;
  summary.policy = to_string(policy);
  summary.seed = rng_seed;
  summary.budget = budget;
  summary.steps = state.step_count();
  summary.pool_exhausted = state.pool_exhausted();
  summary.stopped_early = stopped_early;
  summary.first_exhaustion_step = state.first_exhaustion_step();
  summary.total_draws = state.total_draws();
  summary.final_cum_regret = state.cum_regret();
  if (policy == PolicyKind::kHierarchical) {
    for (int g = 0; g < scenario.group_count(); ++g) {
      const GaussianBelief belief = state.group_belief(g);
      summary.group_means.push_back(belief.mean);
      summary.group_vars.push_back(belief.variance);
    }
  }
  for (int g = 0; g < scenario.group_count(); ++g) {
    for (int j = 0; j < scenario.dataset_count(g); ++j) {
      const GaussianBelief belief = state.dataset_belief(g, j);
      summary.dataset_means.push_back(belief.mean);
      summary.dataset_vars.push_back(belief.variance);
      summary.dataset_pulls.push_back(state.dataset_stats(g, j).pulls);
    }
  }
  summary.selected = current_selection(state);
  const std::vector<ArmId> optimal = optimal_arms(scenario);
  summary.all_optimal_selected =
      std::all_of(optimal.begin(), optimal.end(), [&](ArmId arm) {
        return std::find(summary.selected.datasets.begin(), summary.selected.datasets.end(),
                         arm) != summary.selected.datasets.end();
      });
  return result;
}

}  // namespace dash
