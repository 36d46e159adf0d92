#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dash/environment.hpp"
#include "dash/policy.hpp"

namespace dash {

/// A seeded multi-run experiment: every (policy x budget x seed) cell is one
/// independent run.
struct ExperimentPlan {
  Scenario scenario;
  std::vector<PolicyKind> policies;
  std::vector<std::int64_t> budgets;  // 0 entries mean "until exhaustion"
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir;
  PolicyConfig base_config;  // percentile/priors shared by every cell
  int workers = 0;           // 0 = DASH_WORKERS env or hardware default
};

ExperimentPlan parse_plan(const std::string& json_text);
ExperimentPlan load_plan_file(const std::filesystem::path& path);

/// The RNG seed actually used by one cell. Mixes intrinsic cell identity
/// (never an enumeration index) so growing a plan cannot perturb the seeds
/// of cells that already existed.
std::uint64_t cell_seed(const ExperimentPlan& plan, PolicyKind policy, std::int64_t budget,
                        std::uint64_t seed);

struct ManifestCell {
  std::string policy;
  std::int64_t budget = 0;
  std::uint64_t seed = 0;
  std::uint64_t rng_seed = 0;
  std::string trace_path;    // relative to the scenario directory
  std::string summary_path;
  std::uint64_t config_hash = 0;
};

struct AggregateStat {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 when n == 1
};

struct AggregateRow {
  std::string policy;
  std::int64_t budget = 0;
  int n_seeds = 0;
  std::map<std::string, AggregateStat> metrics;
};

struct Manifest {
  std::string scenario;
  std::filesystem::path scenario_dir;
  std::vector<ManifestCell> cells;
  std::vector<AggregateRow> aggregate;
};

/// Runs every cell (in parallel up to the worker cap), writing one trace CSV
/// and one summary JSON per cell plus manifest.json and aggregate.json under
/// <output_dir>/<scenario>/. Any failing cell aborts the whole plan.
Manifest execute(const ExperimentPlan& plan);

/// Recomputes the per-(policy, budget) aggregate rows from written summary
/// files, accumulating seeds in the given order. Used both by execute and by
/// consistency checks / the report command.
std::vector<AggregateRow> aggregate_from_files(const std::filesystem::path& scenario_dir,
                                               const std::vector<ManifestCell>& cells);

Manifest read_manifest(const std::filesystem::path& scenario_dir);
std::string aggregate_to_json(const Manifest& manifest);

/// FNV-1a 64-bit over a canonical (scenario, config, budget) description.
std::uint64_t config_hash(const Scenario& scenario, const PolicyConfig& config,
                          std::int64_t budget);

/// Worker cap: explicit value, else DASH_WORKERS, else hardware concurrency.
int resolve_workers(int requested);

}  // namespace dash
