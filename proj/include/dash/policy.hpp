#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dash/belief.hpp"
#include "dash/environment.hpp"
#include "dash/rng.hpp"

namespace dash {

struct ArmId {
  int group = 0;
  int dataset = 0;  // index within the group

  bool operator==(const ArmId&) const = default;
  auto operator<=>(const ArmId&) const = default;
};

enum class SelectionMode { kPercentile, kTopK };
enum class PolicyKind { kHierarchical, kFlat };

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& text);

struct PolicyConfig {
  double prior_mean = 0.0;        // mu_0
  double prior_group_var = 2.0;   // sigma_0^2
  double prior_dataset_var = 2.0; // sigma_hat_0^2
  double sigma_r_sq = 1.0;
  double percentile_x = 80.0;
  SelectionMode selection_mode = SelectionMode::kPercentile;
  int top_k = 1;
};

void validate(const PolicyConfig& config);

/// Per-scenario defaults folded into a policy config.
PolicyConfig config_for(const Scenario& scenario);

/// One row of the selection trace.
struct StepRecord {
  std::int64_t t = 0;  // 1-based step index
  int group = 0;
  int dataset = 0;
  double reward = 0.0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
  int draws = 0;  // Gaussian draws spent on this step

  bool operator==(const StepRecord&) const = default;
};

struct ExhaustedPoolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ground-truth reward source over a scenario.
class RewardSource {
 public:
  RewardSource(const Scenario& scenario, const RewardModel& reward);

  double draw(ArmId arm, SeededRandomSource& rng) const {
    return draw_reward(spec(arm), scenario_->reward_kind, reward_, rng);
  }
  double utility(ArmId arm) const { return spec(arm).utility; }
  double theta_star() const { return theta_star_; }
  const Scenario& scenario() const { return *scenario_; }

 private:
  const DatasetSpec& spec(ArmId arm) const;

  const Scenario* scenario_;
  RewardModel reward_;
  double theta_star_ = 0.0;
};

/// Mutable selection state for one run: sufficient statistics, cached group
/// posteriors, remaining representative-point budgets and cost counters.
/// Confined to a single run; posteriors are recomputed through the belief
/// module after every update.
class SelectorState {
 public:
  SelectorState(const Scenario& scenario, const PolicyConfig& config, PolicyKind kind);

  const Scenario& scenario() const { return scenario_; }
  const PolicyConfig& config() const { return config_; }
  PolicyKind kind() const { return kind_; }

  std::int64_t step_count() const { return step_count_; }
  std::uint64_t total_draws() const { return total_draws_; }
  double cum_regret() const { return cum_regret_; }
  std::int64_t first_exhaustion_step() const { return first_exhaustion_step_; }

  std::int64_t remaining_points(int group, int dataset) const;
  bool dataset_active(int group, int dataset) const { return remaining_points(group, dataset) > 0; }
  bool group_active(int group) const;
  int active_group_count() const;
  int active_dataset_count(int group) const;
  int active_dataset_count() const;
  bool pool_exhausted() const { return active_dataset_count() == 0; }

  const GroupStats& group_stats(int group) const;
  const DatasetStats& dataset_stats(int group, int dataset) const;

  /// Current group posterior (hierarchical model).
  GaussianBelief group_belief(int group) const;
  /// Current dataset posterior. Hierarchical: biased by the group posterior
  /// mean. Flat: independent prior N(mu_0, sigma_hat_0^2) updated by the
  /// dataset's own rewards.
  GaussianBelief dataset_belief(int group, int dataset) const;

  std::vector<double> group_means() const;
  std::vector<double> dataset_means() const;  // flattened in scenario order

  /// Folds one observed reward into the chosen dataset's statistics (and,
  /// for the hierarchical model, its group's), consuming one representative
  /// point. The dataset must still be active.
  void record_reward(ArmId arm, double reward);

 private:
  friend StepRecord step_hierarchical(SelectorState&, const RewardSource&, SeededRandomSource&);
  friend StepRecord step_flat(SelectorState&, const RewardSource&, SeededRandomSource&);

  StepRecord finish_step(ArmId arm, double reward, int draws, const RewardSource& env);

  Scenario scenario_;
  PolicyConfig config_;
  PolicyKind kind_;
  std::vector<GroupStats> group_stats_;
  std::vector<GaussianBelief> group_beliefs_;
  std::vector<std::vector<DatasetStats>> dataset_stats_;
  std::vector<std::vector<std::int64_t>> remaining_;
  std::int64_t step_count_ = 0;
  std::uint64_t total_draws_ = 0;
  double cum_regret_ = 0.0;
  std::int64_t first_exhaustion_step_ = 0;  // 0 = no dataset exhausted yet
};

/// One step of the two-level Thompson policy: sample every active group
/// (skipped when only one group is active), argmax, sample every active
/// dataset inside the winner, argmax, observe a reward and refresh both
/// posteriors. Ties break toward the lowest index.
StepRecord step_hierarchical(SelectorState& state, const RewardSource& env,
                             SeededRandomSource& rng);

/// One step of the flat baseline: a single Thompson draw per active dataset
/// across the whole pool, no group level.
StepRecord step_flat(SelectorState& state, const RewardSource& env, SeededRandomSource& rng);

/// Terminal selection over a list of posterior means. Percentile mode keeps
/// indices whose mean strictly exceeds the interpolated x-th percentile of
/// the list (rank h = (N-1)*x/100, linear interpolation between order
/// statistics). Top-k mode keeps the k largest, ties toward lowest index.
std::vector<int> select_final(const std::vector<double>& means, const PolicyConfig& config);

struct SelectionResult {
  std::vector<int> groups;
  std::vector<ArmId> datasets;
};

/// Two-level selection. Hierarchical: the rule runs on group means first;
/// the dataset-level percentile threshold is computed over the full pool of
/// dataset means and membership in a selected group acts as the eligibility
/// filter (top-k picks the k best eligible). Flat: the rule runs on dataset
/// means directly and groups are reported as those containing a selection.
SelectionResult current_selection(const SelectorState& state);

struct RunSummary {
  std::string scenario;
  std::string policy;
  std::uint64_t seed = 0;
  std::int64_t budget = 0;
  std::int64_t steps = 0;
  bool pool_exhausted = false;
  bool stopped_early = false;             // by stop_on_first_exhaustion
  std::int64_t first_exhaustion_step = 0; // 0 = never
  std::uint64_t total_draws = 0;
  double final_cum_regret = 0.0;
  std::vector<double> group_means;        // empty for the flat policy
  std::vector<double> group_vars;
  std::vector<double> dataset_means;      // flattened in scenario order
  std::vector<double> dataset_vars;
  std::vector<std::int64_t> dataset_pulls;
  SelectionResult selected;
  bool all_optimal_selected = false;      // identification flag vs. argmax-utility set
};

struct RunResult {
  std::vector<StepRecord> trace;
  RunSummary summary;
};

/// Executes min(budget, steps-until-pool-exhaustion) steps; stops after the
/// first dataset exhausts when the scenario asks for it. budget must be
/// >= 1 (pass a huge budget for "unlimited").
RunResult run(const PolicyConfig& config, const Scenario& scenario, std::int64_t budget,
              std::uint64_t rng_seed, PolicyKind policy);

/// Datasets whose true utility attains the pool maximum.
std::vector<ArmId> optimal_arms(const Scenario& scenario);

}  // namespace dash
