#include <cmath>
#include <cstdio>
#include <filesystem>

#include <doctest.h>

#include "dash/environment.hpp"

using namespace dash;

TEST_CASE("degenerate bernoulli utilities are deterministic") {
  DatasetSpec always{"always", 1.0, 1};
  DatasetSpec never{"never", 0.0, 1};
  SeededRandomSource rng(3);
  for (int i = 0; i < 1000; ++i) {
    CHECK(draw_reward(always, RewardKind::kBernoulli, RewardModel{1.0}, rng) == 1.0);
    CHECK(draw_reward(never, RewardKind::kBernoulli, RewardModel{1.0}, rng) == 0.0);
  }
}

TEST_CASE("bernoulli draws converge to the utility") {
  DatasetSpec spec{"mnist_local", 0.527, 1};
  SeededRandomSource rng(17);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += draw_reward(spec, RewardKind::kBernoulli, RewardModel{1.0}, rng);
  }
  const double mean = sum / n;
  CHECK(std::abs(mean - 0.527) < 0.01);
  // i.i.d. given a seed stream: 3/sqrt(N) envelope at N = 1e5
  CHECK(std::abs(mean - 0.527) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("gaussian rewards are centred on the utility") {
  DatasetSpec spec{"g", 0.4, 1};
  SeededRandomSource rng(23);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    sum += draw_reward(spec, RewardKind::kGaussian, RewardModel{0.25}, rng);
  }
  CHECK(std::abs(sum / n - 0.4) < 0.01);
}

TEST_CASE("digit5_perfect has 15 datasets and a 750-point budget") {
  const Scenario s = builtin_scenario(ScenarioTag::kDigit5Perfect);
  CHECK(s.group_count() == 5);
  CHECK(s.total_datasets() == 15);
  CHECK(s.total_points() == 750);
  CHECK(s.percentile_x == 80.0);
  // relevant domain high, everything else low
  for (const auto& dataset : s.groups[0].datasets) CHECK(dataset.utility >= 0.85);
  for (int g = 1; g < s.group_count(); ++g) {
    for (const auto& dataset : s.groups[static_cast<std::size_t>(g)].datasets) {
      CHECK(dataset.utility <= 0.55);
    }
  }
}

TEST_CASE("digit5_scaled51 has the enlarged group sizes") {
  const Scenario s = builtin_scenario(ScenarioTag::kDigit5Scaled51);
  REQUIRE(s.group_count() == 5);
  CHECK(s.dataset_count(0) == 10);
  CHECK(s.dataset_count(1) == 12);
  CHECK(s.dataset_count(2) == 11);
  CHECK(s.dataset_count(3) == 9);
  CHECK(s.dataset_count(4) == 9);
  CHECK(s.total_datasets() == 51);
}

TEST_CASE("no_relevant pools every utility at 0.1 with a 600-step default") {
  const Scenario s = builtin_scenario(ScenarioTag::kNoRelevant);
  CHECK(s.default_budget == 600);
  for (const auto& group : s.groups) {
    for (const auto& dataset : group.datasets) CHECK(dataset.utility == 0.1);
  }
}

TEST_CASE("budget15 gives one representative point per dataset") {
  const Scenario s = builtin_scenario(ScenarioTag::kBudget15);
  CHECK(s.total_datasets() == 15);
  CHECK(s.total_points() == 15);
  CHECK(s.default_budget == 15);
}

TEST_CASE("domainnet-shaped pool exhausts at 1125") {
  const Scenario s = builtin_scenario(ScenarioTag::kDomainNetPerfect);
  CHECK(s.total_datasets() == 15);
  CHECK(s.total_points() == 1125);
}

TEST_CASE("digit5_mixed regroups the same datasets under percentile 60") {
  const Scenario mixed = builtin_scenario(ScenarioTag::kDigit5Mixed);
  CHECK(mixed.percentile_x == 60.0);
  CHECK(mixed.total_datasets() == 15);
  CHECK(mixed.groups[0].datasets[0].name == "mn1");
  CHECK(mixed.groups[4].datasets[2].name == "mn0");
  // utilities travel with the dataset, not the group
  const Scenario perfect = builtin_scenario(ScenarioTag::kDigit5Perfect);
  CHECK(mixed.groups[4].datasets[2].utility == perfect.groups[0].datasets[0].utility);
}

TEST_CASE("scenario JSON round-trips exactly") {
  for (ScenarioTag tag : {ScenarioTag::kDigit5Perfect, ScenarioTag::kDigit5Mixed,
                          ScenarioTag::kDigit5Cross, ScenarioTag::kDigit5Scaled51,
                          ScenarioTag::kNoRelevant, ScenarioTag::kBudget15,
                          ScenarioTag::kDomainNetPerfect}) {
    const Scenario s = builtin_scenario(tag);
    CHECK(parse_scenario(emit_scenario(s)) == s);
  }
}

TEST_CASE("scenario file round-trips through disk") {
  Scenario s = builtin_scenario(ScenarioTag::kBudget15);
  s.seed = 99;
  s.stop_on_first_exhaustion = true;
  s.prior_dataset_var = 0.05;
  s.sigma_r_sq = 0.25;
  const auto path = std::filesystem::temp_directory_path() / "dash_scenario_roundtrip.json";
  save_scenario_file(s, path);
  CHECK(load_scenario_file(path) == s);
  std::filesystem::remove(path);
}

TEST_CASE("scenario validation rejects structural problems") {
  Scenario s = builtin_scenario(ScenarioTag::kDigit5Perfect);

  Scenario empty = s;
  empty.groups.clear();
  CHECK_THROWS_AS(validate(empty), std::invalid_argument);

  Scenario bad_utility = s;
  bad_utility.groups[0].datasets[0].utility = 1.5;
  CHECK_THROWS_AS(validate(bad_utility), std::invalid_argument);

  Scenario dup = s;
  dup.groups[1].name = dup.groups[0].name;
  CHECK_THROWS_AS(validate(dup), std::invalid_argument);

  Scenario dup_ds = s;
  dup_ds.groups[1].datasets[0].name = "mn0";
  CHECK_THROWS_AS(validate(dup_ds), std::invalid_argument);

  Scenario no_points = s;
  no_points.groups[0].datasets[0].n_points = 0;
  CHECK_THROWS_AS(validate(no_points), std::invalid_argument);

  // gaussian pools may use utilities outside [0,1]
  Scenario gaussian = bad_utility;
  gaussian.reward_kind = RewardKind::kGaussian;
  CHECK_NOTHROW(validate(gaussian));
}

TEST_CASE("unknown scenario tags are rejected") {
  CHECK_THROWS_AS(scenario_tag_from_string("digit6"), std::invalid_argument);
  CHECK_THROWS_AS(resolve_scenario("no_such_tag_or_file"), std::invalid_argument);
}
