#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dash/belief.hpp"
#include "dash/environment.hpp"
#include "dash/harness.hpp"
#include "dash/kmeans.hpp"
#include "dash/metrics.hpp"
#include "dash/policy.hpp"

namespace {

using dash::PolicyKind;

std::string join_names(const dash::Scenario& scenario, const std::vector<dash::ArmId>& arms) {
  std::string out;
  for (const auto& arm : arms) {
    if (!out.empty()) out += ",";
    out += scenario.groups[static_cast<std::size_t>(arm.group)]
               .datasets[static_cast<std::size_t>(arm.dataset)]
               .name;
  }
  return out.empty() ? "-" : out;
}

void print_aggregate_table(const dash::Manifest& manifest) {
  std::printf("%-14s %10s %7s %12s %14s %10s %10s %14s\n", "policy", "budget", "seeds",
              "steps", "first_exhaust", "recall", "acc_proxy", "cum_regret");
  for (const auto& row : manifest.aggregate) {
    const auto metric = [&](const char* key) -> dash::AggregateStat {
      auto it = row.metrics.find(key);
      return it == row.metrics.end() ? dash::AggregateStat{} : it->second;
    };
    std::printf("%-14s %10" PRId64 " %7d %7.1f±%-5.1f %9.1f±%-5.1f %10.3f %10.3f %9.2f±%-5.2f\n",
                row.policy.c_str(), row.budget, row.n_seeds, metric("steps").mean,
                metric("steps").stddev, metric("first_exhaustion_step").mean,
                metric("first_exhaustion_step").stddev, metric("recall").mean,
                metric("accuracy_proxy").mean, metric("final_cum_regret").mean,
                metric("final_cum_regret").stddev);
  }
}

int cmd_run(const std::string& scenario_arg, const std::string& policy_arg, std::int64_t budget,
            std::int64_t seed_arg, const std::string& out_dir, double percentile,
            bool has_percentile) {
  dash::Scenario scenario = dash::resolve_scenario(scenario_arg);
  const PolicyKind policy = dash::policy_kind_from_string(policy_arg);
  dash::PolicyConfig config = dash::config_for(scenario);
  if (has_percentile) config.percentile_x = percentile;

  const std::uint64_t seed = seed_arg >= 0 ? static_cast<std::uint64_t>(seed_arg) : scenario.seed;
  std::int64_t effective = budget;
  if (effective <= 0) {
    effective = scenario.default_budget > 0 ? scenario.default_budget : scenario.total_points();
  }

  const dash::RunResult result = dash::run(config, scenario, effective, seed, policy);

  const auto dir = std::filesystem::path(out_dir) / scenario.name / dash::to_string(policy);
  std::filesystem::create_directories(dir);
  const std::string stem = "seed" + std::to_string(seed);
  dash::write_trace_csv(dir / (stem + ".csv"), result.trace);
  dash::write_summary_json(dir / (stem + ".json"), result.summary, scenario);

  const auto report = dash::identification_report(result.summary, scenario);
  std::printf("scenario=%s policy=%s seed=%" PRIu64 " steps=%" PRId64
              " first_exhaustion=%" PRId64 " draws=%" PRIu64
              " cum_regret=%s recall=%.3f selected=[%s]\n",
              scenario.name.c_str(), dash::to_string(policy).c_str(), seed,
              result.summary.steps, result.summary.first_exhaustion_step,
              result.summary.total_draws,
              dash::format_double(result.summary.final_cum_regret).c_str(), report.recall,
              join_names(scenario, result.summary.selected.datasets).c_str());
  std::printf("trace=%s\nsummary=%s\n", (dir / (stem + ".csv")).c_str(),
              (dir / (stem + ".json")).c_str());
  return 0;
}

int cmd_compare(const std::string& scenario_arg, std::int64_t budget, int n_seeds,
                const std::string& out_dir, double percentile, bool has_percentile) {
  dash::ExperimentPlan plan;
  plan.scenario = dash::resolve_scenario(scenario_arg);
  plan.policies = {PolicyKind::kHierarchical, PolicyKind::kFlat};
  plan.budgets = {budget};
  for (int i = 1; i <= n_seeds; ++i) plan.seeds.push_back(static_cast<std::uint64_t>(i));
  plan.output_dir = out_dir;
  plan.base_config = dash::config_for(plan.scenario);
  if (has_percentile) plan.base_config.percentile_x = percentile;

  const dash::Manifest manifest = dash::execute(plan);
  print_aggregate_table(manifest);
  std::printf("artifacts=%s\n", manifest.scenario_dir.c_str());
  return 0;
}

int cmd_sweep(const std::string& plan_path) {
  const dash::ExperimentPlan plan = dash::load_plan_file(plan_path);
  const dash::Manifest manifest = dash::execute(plan);
  print_aggregate_table(manifest);
  std::printf("manifest=%s\n", (manifest.scenario_dir / "manifest.json").c_str());
  return 0;
}

int cmd_oracle_check(int trials, std::uint64_t seed, double tol) {
  dash::SeededRandomSource rng(seed);
  auto draw_in = [&](double lo, double hi) { return lo + rng.uniform01() * (hi - lo); };

  double max_dev = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const dash::GaussianBelief prior{draw_in(-2.0, 2.0), draw_in(0.1, 5.0)};
    const double dataset_var = draw_in(0.1, 5.0);
    const dash::RewardModel reward{draw_in(0.1, 5.0)};
    const auto pulls = static_cast<std::int64_t>(draw_in(1.0, 50.999));
    const double mean_reward = draw_in(-1.0, 2.0);
    const dash::GroupStats stats{pulls, mean_reward * static_cast<double>(pulls)};

    const dash::GaussianBelief closed =
        dash::group_posterior(prior, dataset_var, reward, stats);
    const double sd = std::sqrt(closed.variance);
    dash::QuadratureOptions opts;
    opts.lo = closed.mean - std::max(12.0 * sd, 2.0);
    opts.hi = closed.mean + std::max(12.0 * sd, 2.0);
    const dash::GaussianBelief numeric = dash::numeric_group_posterior_oracle(
        prior, dataset_var, reward, {dash::DatasetStats{stats.pulls, stats.reward_sum}}, opts);

    max_dev = std::max({max_dev, std::abs(closed.mean - numeric.mean),
                        std::abs(closed.variance - numeric.variance)});
  }
  std::printf("oracle-check: trials=%d max_deviation=%s tolerance=%s -> %s\n", trials,
              dash::format_double(max_dev).c_str(), dash::format_double(tol).c_str(),
              max_dev <= tol ? "ok" : "FAIL");
  return max_dev <= tol ? 0 : 1;
}

int cmd_kmeans(const std::string& csv_path, int k, int per_cluster, const std::string& out_path,
               std::uint64_t seed, int max_iters, double tol) {
  const dash::FeaturePool pool = dash::load_feature_csv(csv_path, k, per_cluster);
  dash::SeededRandomSource rng(seed);
  const dash::KMeansResult result = dash::kmeans_representatives(pool, max_iters, tol, rng);

  nlohmann::ordered_json j;
  j["k"] = k;
  j["per_cluster"] = per_cluster;
  j["iterations"] = result.iterations;
  j["objective"] = result.objective_history.back();
  j["clusters"] = nlohmann::ordered_json::array();
  for (int c = 0; c < k; ++c) {
    nlohmann::ordered_json jc;
    std::vector<double> centroid(static_cast<std::size_t>(result.centroids.cols()));
    for (Eigen::Index d = 0; d < result.centroids.cols(); ++d) {
      centroid[static_cast<std::size_t>(d)] = result.centroids(c, d);
    }
    jc["centroid"] = centroid;
    jc["indices"] = result.representatives[static_cast<std::size_t>(c)];
    j["clusters"].push_back(std::move(jc));
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << j.dump(2) << "\n";
  std::printf("kmeans: samples=%lld k=%d per_cluster=%d iterations=%d objective=%s out=%s\n",
              static_cast<long long>(pool.points.rows()), k, per_cluster, result.iterations,
              dash::format_double(result.objective_history.back()).c_str(), out_path.c_str());
  return 0;
}

int cmd_report(const std::string& dir) {
  std::vector<std::filesystem::path> scenario_dirs;
  if (std::filesystem::exists(std::filesystem::path(dir) / "manifest.json")) {
    scenario_dirs.push_back(dir);
  } else {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.is_directory() && std::filesystem::exists(entry.path() / "manifest.json")) {
        scenario_dirs.push_back(entry.path());
      }
    }
    std::sort(scenario_dirs.begin(), scenario_dirs.end());
  }
  if (scenario_dirs.empty()) {
    throw std::runtime_error("no manifest.json found under " + dir);
  }

  nlohmann::ordered_json combined = nlohmann::ordered_json::array();
  for (const auto& scenario_dir : scenario_dirs) {
    const dash::Manifest manifest = dash::read_manifest(scenario_dir);
    std::printf("== %s (%zu cells)\n", manifest.scenario.c_str(), manifest.cells.size());
    print_aggregate_table(manifest);
    combined.push_back(nlohmann::ordered_json::parse(dash::aggregate_to_json(manifest)));
  }
  const auto report_path = std::filesystem::path(dir) / "report.json";
  std::ofstream out(report_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + report_path.string());
  out << combined.dump(2) << "\n";
  std::printf("report=%s\n", report_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical Thompson-sampling dataset selection simulator"};
  app.require_subcommand(1);

  // run
  std::string run_scenario, run_policy, run_out;
  std::int64_t run_budget = 0, run_seed = -1;
  double run_percentile = 80.0;
  auto* run_cmd = app.add_subcommand("run", "Execute one policy run and write its trace");
  run_cmd->add_option("--scenario", run_scenario, "builtin tag or scenario JSON file")->required();
  run_cmd->add_option("--policy", run_policy, "hier|flat")->required();
  run_cmd->add_option("--budget", run_budget, "step budget (0 = scenario default / exhaustion)");
  run_cmd->add_option("--seed", run_seed, "RNG seed (default: scenario seed)");
  run_cmd->add_option("--out", run_out, "output directory")->required();
  auto* run_pct = run_cmd->add_option("--percentile", run_percentile, "selection percentile");

  // compare
  std::string cmp_scenario, cmp_out;
  std::int64_t cmp_budget = 0;
  int cmp_seeds = 5;
  double cmp_percentile = 80.0;
  auto* cmp_cmd = app.add_subcommand("compare", "Run both policies over seeds and tabulate");
  cmp_cmd->add_option("--scenario", cmp_scenario, "builtin tag or scenario JSON file")->required();
  cmp_cmd->add_option("--budget", cmp_budget, "step budget (0 = scenario default / exhaustion)");
  cmp_cmd->add_option("--seeds", cmp_seeds, "number of seeds (1..K)");
  cmp_cmd->add_option("--out", cmp_out, "output directory")->required();
  auto* cmp_pct = cmp_cmd->add_option("--percentile", cmp_percentile, "selection percentile");

  // sweep
  std::string sweep_plan;
  auto* sweep_cmd = app.add_subcommand("sweep", "Execute an experiment plan JSON");
  sweep_cmd->add_option("--plan", sweep_plan, "plan JSON file")->required();

  // oracle-check
  int oc_trials = 100;
  std::uint64_t oc_seed = 7;
  double oc_tol = 1e-6;
  auto* oc_cmd = app.add_subcommand("oracle-check",
                                    "Compare closed-form posteriors to the quadrature oracle");
  oc_cmd->add_option("--trials", oc_trials, "number of randomized configurations");
  oc_cmd->add_option("--seed", oc_seed, "RNG seed");
  oc_cmd->add_option("--tol", oc_tol, "max allowed deviation");

  // kmeans
  std::string km_csv, km_out;
  int km_k = 10, km_per = 5, km_iters = 100;
  std::uint64_t km_seed = 0;
  double km_tol = 1e-6;
  auto* km_cmd = app.add_subcommand("kmeans", "Representative points via k-means++/Lloyd");
  km_cmd->add_option("--csv", km_csv, "feature CSV (header row, 'label' column)")->required();
  km_cmd->add_option("--k", km_k, "number of clusters");
  km_cmd->add_option("--per-cluster", km_per, "representatives per cluster");
  km_cmd->add_option("--out", km_out, "output JSON file")->required();
  km_cmd->add_option("--seed", km_seed, "RNG seed");
  km_cmd->add_option("--max-iters", km_iters, "Lloyd iteration cap");
  km_cmd->add_option("--tol", km_tol, "centroid-shift stopping tolerance");

  // report
  std::string rep_dir;
  auto* rep_cmd = app.add_subcommand("report", "Aggregate written artifacts into a table");
  rep_cmd->add_option("--dir", rep_dir, "output directory of earlier runs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (*run_cmd) {
      return cmd_run(run_scenario, run_policy, run_budget, run_seed, run_out, run_percentile,
                     run_pct->count() > 0);
    }
    if (*cmp_cmd) {
      return cmd_compare(cmp_scenario, cmp_budget, cmp_seeds, cmp_out, cmp_percentile,
                         cmp_pct->count() > 0);
    }
    if (*sweep_cmd) return cmd_sweep(sweep_plan);
    if (*oc_cmd) return cmd_oracle_check(oc_trials, oc_seed, oc_tol);
    if (*km_cmd) return cmd_kmeans(km_csv, km_k, km_per, km_out, km_seed, km_iters, km_tol);
    if (*rep_cmd) return cmd_report(rep_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
