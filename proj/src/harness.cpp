#include "dash/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "dash/metrics.hpp"
#include "dash/rng.hpp"

namespace dash {

namespace {

using ordered_json = nlohmann::ordered_json;

struct Cell {
  PolicyKind policy;
  std::int64_t budget;
  std::uint64_t seed;
};

std::int64_t effective_budget(const ExperimentPlan& plan, std::int64_t budget) {
  if (budget > 0) return budget;
  if (plan.scenario.default_budget > 0) return plan.scenario.default_budget;
  return plan.scenario.total_points();  // until exhaustion
}

std::filesystem::path cell_dir(const std::filesystem::path& scenario_dir, const Cell& cell,
                               bool multi_budget) {
  auto dir = scenario_dir / to_string(cell.policy);
  if (multi_budget) dir /= "budget" + std::to_string(cell.budget);
  return dir;
}

void validate_plan(const ExperimentPlan& plan) {
  validate(plan.scenario);
  validate(plan.base_config);
  if (plan.policies.empty()) throw std::invalid_argument("plan has no policies");
  if (plan.budgets.empty()) throw std::invalid_argument("plan has no budgets");
  if (plan.seeds.empty()) throw std::invalid_argument("plan has no seeds");
  if (plan.output_dir.empty()) throw std::invalid_argument("plan has no output_dir");
  std::set<std::uint64_t> unique_seeds(plan.seeds.begin(), plan.seeds.end());
  if (unique_seeds.size() != plan.seeds.size()) {
    throw std::invalid_argument("plan seeds must be unique");
  }
  for (std::int64_t budget : plan.budgets) {
    if (budget < 0) throw std::invalid_argument("budgets must be >= 0");
  }
}

AggregateStat stat_of(const std::vector<double>& values) {
  AggregateStat stat;
  const double n = static_cast<double>(values.size());
  if (values.empty()) return stat;
  double sum = 0.0;
  for (double v : values) sum += v;
  stat.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - stat.mean) * (v - stat.mean);
    stat.stddev = std::sqrt(ss / (n - 1.0));
  }
  return stat;
}

std::map<std::string, double> metrics_of_summary(const ordered_json& j) {
  std::map<std::string, double> m;
  m["steps"] = j.at("steps").get<double>();
  m["first_exhaustion_step"] = j.at("first_exhaustion_step").get<double>();
  m["total_draws"] = j.at("total_draws").get<double>();
  m["final_cum_regret"] = j.at("final_cum_regret").get<double>();
  m["precision"] = j.at("identification").at("precision").get<double>();
  m["recall"] = j.at("identification").at("recall").get<double>();
  double selected = 0.0, selected_utility = 0.0;
  for (const auto& d : j.at("datasets")) {
    if (d.at("selected").get<bool>()) {
      selected += 1.0;
      selected_utility += d.at("utility").get<double>();
    }
  }
  m["selected_count"] = selected;
  // mean true utility of the selected datasets; 0 when nothing is selected
  m["accuracy_proxy"] = selected > 0.0 ? selected_utility / selected : 0.0;
  return m;
}

}  // namespace

std::uint64_t config_hash(const Scenario& scenario, const PolicyConfig& config,
                          std::int64_t budget) {
  std::ostringstream canon;
  canon << emit_scenario(scenario) << '|' << format_double(config.prior_mean) << '|'
        << format_double(config.prior_group_var) << '|'
        << format_double(config.prior_dataset_var) << '|' << format_double(config.sigma_r_sq)
        << '|' << format_double(config.percentile_x) << '|'
        << (config.selection_mode == SelectionMode::kPercentile ? "percentile" : "top_k") << '|'
        << config.top_k << '|' << budget;
  const std::string text = canon.str();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t cell_seed(const ExperimentPlan& plan, PolicyKind policy, std::int64_t budget,
                        std::uint64_t seed) {
  const std::uint64_t policy_code = policy == PolicyKind::kHierarchical ? 1 : 2;
  std::uint64_t h = mix64(plan.scenario.seed, policy_code);
  h = mix64(h, static_cast<std::uint64_t>(budget));
  h = mix64(h, seed);
  return h;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DASH_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

ExperimentPlan parse_plan(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("plan JSON parse error: ") + e.what());
  }
  ExperimentPlan plan;
  try {
    const auto& js = j.at("scenario");
    if (js.is_string()) {
      plan.scenario = resolve_scenario(js.get<std::string>());
    } else {
      plan.scenario = parse_scenario(js.dump());
    }
    for (const auto& p : j.at("policies")) {
      plan.policies.push_back(policy_kind_from_string(p.get<std::string>()));
    }
    for (const auto& b : j.at("budgets")) plan.budgets.push_back(b.get<std::int64_t>());
    for (const auto& s : j.at("seeds")) plan.seeds.push_back(s.get<std::uint64_t>());
    plan.output_dir = j.at("output_dir").get<std::string>();
    plan.base_config = config_for(plan.scenario);
    if (j.contains("percentile_x")) plan.base_config.percentile_x = j["percentile_x"].get<double>();
    if (j.contains("workers")) plan.workers = j["workers"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("plan JSON schema error: ") + e.what());
  }
  validate_plan(plan);
  return plan;
}

ExperimentPlan load_plan_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open plan file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_plan(buffer.str());
}

std::vector<AggregateRow> aggregate_from_files(const std::filesystem::path& scenario_dir,
                                               const std::vector<ManifestCell>& cells) {
  // Group cells by (policy, budget), preserving first-appearance order.
  std::vector<AggregateRow> rows;
  std::vector<std::map<std::string, std::vector<double>>> samples;
  auto row_index = [&](const std::string& policy, std::int64_t budget) -> std::size_t {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].policy == policy && rows[i].budget == budget) return i;
    }
    rows.push_back({policy, budget, 0, {}});
    samples.emplace_back();
    return rows.size() - 1;
  };

  for (const auto& cell : cells) {
    std::ifstream in(scenario_dir / cell.summary_path);
    if (!in) {
      throw std::runtime_error("missing summary file: " + (scenario_dir / cell.summary_path).string());
    }
    ordered_json j = ordered_json::parse(in);
    const std::size_t idx = row_index(cell.policy, cell.budget);
    rows[idx].n_seeds += 1;
    for (const auto& [key, value] : metrics_of_summary(j)) {
      samples[idx][key].push_back(value);
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [key, values] : samples[i]) {
      rows[i].metrics[key] = stat_of(values);
    }
  }
  return rows;
}

namespace {

ordered_json manifest_to_json(const Manifest& manifest, const ExperimentPlan& plan) {
  ordered_json j;
  j["scenario"] = manifest.scenario;
  ordered_json policies = ordered_json::array();
  for (PolicyKind p : plan.policies) policies.push_back(to_string(p));
  ordered_json budgets = ordered_json::array();
  for (std::int64_t b : plan.budgets) budgets.push_back(b);
  ordered_json seeds = ordered_json::array();
  for (std::uint64_t s : plan.seeds) seeds.push_back(s);
  j["plan"] = {{"policies", policies}, {"budgets", budgets}, {"seeds", seeds}};
  j["cells"] = ordered_json::array();
  for (const auto& cell : manifest.cells) {
    j["cells"].push_back({{"policy", cell.policy},
                          {"budget", cell.budget},
                          {"seed", cell.seed},
                          {"rng_seed", cell.rng_seed},
                          {"trace", cell.trace_path},
                          {"summary", cell.summary_path},
                          {"config_hash", cell.config_hash}});
  }
  j["aggregate"] = "aggregate.json";
  return j;
}

ordered_json aggregate_rows_to_json(const std::string& scenario,
                                    const std::vector<AggregateRow>& rows) {
  ordered_json j;
  j["scenario"] = scenario;
  j["rows"] = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json jr;
    jr["policy"] = row.policy;
    jr["budget"] = row.budget;
    jr["n_seeds"] = row.n_seeds;
    jr["metrics"] = ordered_json::object();
    for (const auto& [key, stat] : row.metrics) {
      jr["metrics"][key] = {{"mean", stat.mean}, {"stddev", stat.stddev}};
    }
    j["rows"].push_back(std::move(jr));
  }
  return j;
}

}  // namespace

std::string aggregate_to_json(const Manifest& manifest) {
  return aggregate_rows_to_json(manifest.scenario, manifest.aggregate).dump(2) + "\n";
}

Manifest execute(const ExperimentPlan& plan) {
  validate_plan(plan);

  const bool multi_budget = plan.budgets.size() > 1;
  const auto scenario_dir = plan.output_dir / plan.scenario.name;

  std::vector<Cell> cells;
  for (PolicyKind policy : plan.policies) {
    for (std::int64_t budget : plan.budgets) {
      for (std::uint64_t seed : plan.seeds) cells.push_back({policy, budget, seed});
    }
  }

  std::error_code ec;
  std::filesystem::create_directories(scenario_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " + scenario_dir.string() + ": " +
                             ec.message());
  }
  for (const auto& cell : cells) {
    std::filesystem::create_directories(cell_dir(scenario_dir, cell, multi_budget), ec);
    if (ec) {
      throw std::runtime_error("cannot create output directory for cell " +
                               to_string(cell.policy) + "/seed" + std::to_string(cell.seed) +
                               ": " + ec.message());
    }
  }

  Manifest manifest;
  manifest.scenario = plan.scenario.name;
  manifest.scenario_dir = scenario_dir;
  manifest.cells.resize(cells.size());

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::string first_error;

  auto worker = [&]() {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& cell = cells[i];
      try {
        const std::uint64_t rng_seed = cell_seed(plan, cell.policy, cell.budget, cell.seed);
        const std::int64_t budget = effective_budget(plan, cell.budget);
        const RunResult result = run(plan.base_config, plan.scenario, budget, rng_seed,
                                     cell.policy);

        const auto dir = cell_dir(scenario_dir, cell, multi_budget);
        const std::string stem = "seed" + std::to_string(cell.seed);
        write_trace_csv(dir / (stem + ".csv"), result.trace);
        write_summary_json(dir / (stem + ".json"), result.summary, plan.scenario);

        ManifestCell& out = manifest.cells[i];
        out.policy = to_string(cell.policy);
        out.budget = cell.budget;
        out.seed = cell.seed;
        out.rng_seed = rng_seed;
        const auto rel = std::filesystem::relative(dir, scenario_dir) / stem;
        out.trace_path = (rel.string() + ".csv");
        out.summary_path = (rel.string() + ".json");
        out.config_hash = config_hash(plan.scenario, plan.base_config, cell.budget);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) {
          first_error = "cell " + plan.scenario.name + "/" + to_string(cell.policy) +
                        "/budget" + std::to_string(cell.budget) + "/seed" +
                        std::to_string(cell.seed) + " failed: " + e.what();
        }
        return;
      }
    }
  };

  const int n_workers = std::min<int>(resolve_workers(plan.workers),
                                      static_cast<int>(cells.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (auto& thread : threads) thread.join();
  }
  if (failed.load()) throw std::runtime_error(first_error);

  manifest.aggregate = aggregate_from_files(scenario_dir, manifest.cells);

  {
    std::ofstream out(scenario_dir / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest.json");
    out << manifest_to_json(manifest, plan).dump(2) << "\n";
  }
  {
    std::ofstream out(scenario_dir / "aggregate.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write aggregate.json");
    out << aggregate_to_json(manifest);
  }
  return manifest;
}

Manifest read_manifest(const std::filesystem::path& scenario_dir) {
  std::ifstream in(scenario_dir / "manifest.json");
  if (!in) {
    throw std::runtime_error("cannot open manifest: " + (scenario_dir / "manifest.json").string());
  }
  ordered_json j = ordered_json::parse(in);
  Manifest manifest;
  manifest.scenario = j.at("scenario").get<std::string>();
  manifest.scenario_dir = scenario_dir;
  for (const auto& jc : j.at("cells")) {
    ManifestCell cell;
    cell.policy = jc.at("policy").get<std::string>();
    cell.budget = jc.at("budget").get<std::int64_t>();
    cell.seed = jc.at("seed").get<std::uint64_t>();
    cell.rng_seed = jc.at("rng_seed").get<std::uint64_t>();
    cell.trace_path = jc.at("trace").get<std::string>();
    cell.summary_path = jc.at("summary").get<std::string>();
    cell.config_hash = jc.at("config_hash").get<std::uint64_t>();
    manifest.cells.push_back(std::move(cell));
  }
  manifest.aggregate = aggregate_from_files(scenario_dir, manifest.cells);
  return manifest;
}

}  // namespace dash
