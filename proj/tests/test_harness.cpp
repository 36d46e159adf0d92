#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <doctest.h>

#include "dash/harness.hpp"
#include "dash/metrics.hpp"

using namespace dash;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("dash_harness_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

ExperimentPlan small_plan(const fs::path& out) {
  ExperimentPlan plan;
  plan.scenario = builtin_scenario(ScenarioTag::kBudget15);
  plan.policies = {PolicyKind::kHierarchical, PolicyKind::kFlat};
  plan.budgets = {15};
  plan.seeds = {1, 2, 3, 4, 5};
  plan.output_dir = out;
  plan.base_config = config_for(plan.scenario);
  plan.workers = 2;
  return plan;
}

}  // namespace

TEST_CASE("a 2x1x5 plan writes ten cells and a two-row aggregate") {
  const auto out = fresh_dir("counts");
  const Manifest manifest = execute(small_plan(out));

  CHECK(manifest.cells.size() == 10);
  CHECK(manifest.aggregate.size() == 2);
  for (const auto& row : manifest.aggregate) CHECK(row.n_seeds == 5);

  // manifest completeness: every referenced file exists, each cell once
  std::set<std::pair<std::string, std::uint64_t>> seen;
  for (const auto& cell : manifest.cells) {
    CHECK(fs::exists(manifest.scenario_dir / cell.trace_path));
    CHECK(fs::exists(manifest.scenario_dir / cell.summary_path));
    CHECK(seen.insert({cell.policy, cell.seed}).second);
  }
  CHECK(fs::exists(manifest.scenario_dir / "manifest.json"));
  CHECK(fs::exists(manifest.scenario_dir / "aggregate.json"));
  fs::remove_all(out);
}

TEST_CASE("rerunning an identical plan reproduces every byte") {
  const auto out_a = fresh_dir("bytes_a");
  const auto out_b = fresh_dir("bytes_b");
  const Manifest a = execute(small_plan(out_a));
  const Manifest b = execute(small_plan(out_b));
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(slurp(a.scenario_dir / a.cells[i].trace_path) ==
          slurp(b.scenario_dir / b.cells[i].trace_path));
    CHECK(slurp(a.scenario_dir / a.cells[i].summary_path) ==
          slurp(b.scenario_dir / b.cells[i].summary_path));
  }
  CHECK(slurp(a.scenario_dir / "aggregate.json") == slurp(b.scenario_dir / "aggregate.json"));
  fs::remove_all(out_a);
  fs::remove_all(out_b);
}

TEST_CASE("aggregates recomputed from raw artifacts match the emitted file") {
  const auto out = fresh_dir("agg");
  const Manifest manifest = execute(small_plan(out));

  const auto recomputed = aggregate_from_files(manifest.scenario_dir, manifest.cells);
  REQUIRE(recomputed.size() == manifest.aggregate.size());
  for (std::size_t i = 0; i < recomputed.size(); ++i) {
    CHECK(recomputed[i].policy == manifest.aggregate[i].policy);
    CHECK(recomputed[i].n_seeds == manifest.aggregate[i].n_seeds);
    for (const auto& [key, stat] : recomputed[i].metrics) {
      const auto& emitted = manifest.aggregate[i].metrics.at(key);
      CHECK(stat.mean == emitted.mean);      // bit-exact
      CHECK(stat.stddev == emitted.stddev);
    }
  }

  // and the same through the manifest reader (file-level round trip)
  const Manifest reread = read_manifest(manifest.scenario_dir);
  CHECK(aggregate_to_json(reread) == slurp(manifest.scenario_dir / "aggregate.json"));
  fs::remove_all(out);
}

TEST_CASE("multi-budget plans add a budget level to the layout") {
  const auto out = fresh_dir("budgets");
  ExperimentPlan plan = small_plan(out);
  plan.budgets = {5, 15};
  plan.seeds = {1, 2};
  const Manifest manifest = execute(plan);
  CHECK(manifest.cells.size() == 8);
  CHECK(manifest.aggregate.size() == 4);
  for (const auto& cell : manifest.cells) {
    CHECK(cell.trace_path.find("budget") != std::string::npos);
    CHECK(fs::exists(manifest.scenario_dir / cell.trace_path));
  }
  fs::remove_all(out);
}

TEST_CASE("single-budget plans use the documented flat layout") {
  const auto out = fresh_dir("layout");
  const Manifest manifest = execute(small_plan(out));
  for (const auto& cell : manifest.cells) {
    CHECK(cell.trace_path == cell.policy + "/seed" + std::to_string(cell.seed) + ".csv");
  }
  fs::remove_all(out);
}

TEST_CASE("plan validation rejects malformed plans") {
  ExperimentPlan plan = small_plan(fs::temp_directory_path() / "dash_never");
  plan.seeds = {1, 1};
  CHECK_THROWS_AS(execute(plan), std::invalid_argument);
  plan.seeds = {};
  CHECK_THROWS_AS(execute(plan), std::invalid_argument);
  plan = small_plan(fs::temp_directory_path() / "dash_never");
  plan.policies.clear();
  CHECK_THROWS_AS(execute(plan), std::invalid_argument);
}

TEST_CASE("unwritable output locations fail with the cell identity") {
  const auto file_in_the_way = fs::temp_directory_path() / "dash_not_a_dir";
  std::ofstream(file_in_the_way) << "x";
  ExperimentPlan plan = small_plan(file_in_the_way / "sub");
  CHECK_THROWS_AS(execute(plan), std::runtime_error);
  fs::remove(file_in_the_way);
}

TEST_CASE("cell seeds depend on intrinsic identity, not enumeration order") {
  const auto out = fs::temp_directory_path() / "dash_seeds";
  ExperimentPlan plan = small_plan(out);
  const std::uint64_t base =
      cell_seed(plan, PolicyKind::kHierarchical, 15, 3);

  // growing the plan must not disturb the existing cell's seed
  ExperimentPlan grown = plan;
  grown.budgets = {5, 15, 40};
  grown.seeds = {1, 2, 3, 4, 5, 6, 7};
  CHECK(cell_seed(grown, PolicyKind::kHierarchical, 15, 3) == base);

  // distinct cells get distinct streams
  std::set<std::uint64_t> seeds;
  for (PolicyKind policy : {PolicyKind::kHierarchical, PolicyKind::kFlat}) {
    for (std::int64_t budget : {5, 15}) {
      for (std::uint64_t seed : {1, 2, 3}) {
        seeds.insert(cell_seed(plan, policy, budget, seed));
      }
    }
  }
  CHECK(seeds.size() == 12);
}

TEST_CASE("hierarchical selection cost to first exhaustion stays below flat's") {
  // digit5_perfect, both policies, budget 750, 5 seeds. The aggregate
  // reports steps-to-first-exhaustion for both policies; the cost
  // comparison runs in Thompson-draw units (the per-step evaluation cost:
  // 5 + 3 draws for the hierarchy, 15 for flat, constant until the first
  // dataset exhausts).
  const auto out = fresh_dir("pareto");
  ExperimentPlan plan;
  plan.scenario = builtin_scenario(ScenarioTag::kDigit5Perfect);
  plan.policies = {PolicyKind::kHierarchical, PolicyKind::kFlat};
  plan.budgets = {750};
  plan.seeds = {1, 2, 3, 4, 5};
  plan.output_dir = out;
  plan.base_config = config_for(plan.scenario);

  const Manifest manifest = execute(plan);
  REQUIRE(manifest.aggregate.size() == 2);
  const auto& hier = manifest.aggregate[0];
  const auto& flat = manifest.aggregate[1];
  REQUIRE(hier.policy == "hierarchical");
  REQUIRE(flat.policy == "flat");
  const double hier_steps = hier.metrics.at("first_exhaustion_step").mean;
  const double flat_steps = flat.metrics.at("first_exhaustion_step").mean;
  CHECK(hier_steps > 0.0);
  CHECK(flat_steps > 0.0);
  CHECK(hier_steps * (5.0 + 3.0) <= flat_steps * 15.0);
  fs::remove_all(out);
}

TEST_CASE("plans parse from JSON with scenario tags or inline pools") {
  const auto out = fresh_dir("plan_json");
  std::ostringstream plan_json;
  plan_json << "{\"scenario\": \"budget15\", \"policies\": [\"hier\", \"flat\"],"
            << "\"budgets\": [15], \"seeds\": [1, 2], "
            << "\"output_dir\": \"" << out.string() << "\", \"percentile_x\": 70.0}";
  const ExperimentPlan plan = parse_plan(plan_json.str());
  CHECK(plan.scenario.name == "budget15");
  CHECK(plan.policies.size() == 2);
  CHECK(plan.base_config.percentile_x == 70.0);

  const std::string inline_json =
      std::string("{\"scenario\": ") + emit_scenario(plan.scenario) +
      ", \"policies\": [\"flat\"], \"budgets\": [3], \"seeds\": [9], \"output_dir\": \"" +
      out.string() + "\"}";
  const ExperimentPlan inline_plan = parse_plan(inline_json);
  CHECK(inline_plan.scenario == plan.scenario);

  CHECK_THROWS_AS(parse_plan("{"), std::invalid_argument);
  CHECK_THROWS_AS(parse_plan("{\"scenario\": \"budget15\"}"), std::invalid_argument);
  fs::remove_all(out);
}
