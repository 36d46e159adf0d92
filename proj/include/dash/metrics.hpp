#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dash/environment.hpp"
#include "dash/policy.hpp"

namespace dash {

/// Regret accounting recomputed from a trace and the scenario's true
/// utilities. Depends only on the chosen-arm sequence, never on observed
/// rewards.
struct RegretTrace {
  double theta_star = 0.0;
  std::vector<double> gaps;           // per dataset, flattened in scenario order
  std::vector<double> instantaneous;  // per step
  std::vector<double> cumulative;     // per step, non-decreasing
};

RegretTrace cumulative_regret(const std::vector<StepRecord>& trace, const Scenario& scenario);

struct IdentificationReport {
  std::vector<ArmId> optimal;
  double precision = 1.0;  // 1.0 when nothing is selected (no false positives)
  double recall = 0.0;
  bool all_optimal_selected = false;
  std::int64_t steps = 0;
  std::uint64_t total_draws = 0;
};

IdentificationReport identification_report(const RunSummary& summary, const Scenario& scenario);

/// Least-squares fit of y_t ~ intercept + slope * ln(t) over steps
/// t >= t_min (1-based). r_squared is 0 when the window is degenerate.
struct LogFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
};

LogFit fit_log_curve(const std::vector<double>& cumulative, std::int64_t t_min);

/// Shortest round-trip decimal form of a double (exact on re-parse).
std::string format_double(double value);

/// Per-step CSV: t,group,dataset,reward,inst_regret,cum_regret,draws_this_step.
void write_trace_csv(const std::filesystem::path& path, const std::vector<StepRecord>& trace);
std::vector<StepRecord> read_trace_csv(const std::filesystem::path& path);

std::string summary_to_json(const RunSummary& summary, const Scenario& scenario);
void write_summary_json(const std::filesystem::path& path, const RunSummary& summary,
                        const Scenario& scenario);

}  // namespace dash
