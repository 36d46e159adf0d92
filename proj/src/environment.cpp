#include "dash/environment.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dash {

namespace {

using ordered_json = nlohmann::ordered_json;

DatasetSpec ds(std::string name, double utility, std::int64_t n_points) {
  return DatasetSpec{std::move(name), utility, n_points};
}

// Digit-Five roster. Utilities are documented defaults: the relevant domain
// (mnist) sits at >= 0.85 and every other domain at <= 0.55.
std::vector<GroupSpec> digit5_roster(std::int64_t n_points) {
  return {
      {"mnist", {ds("mn0", 0.893, n_points), ds("mn1", 0.885, n_points), ds("mn2", 0.878, n_points)}},
      {"mnist_m", {ds("mm0", 0.49, n_points), ds("mm1", 0.47, n_points), ds("mm2", 0.45, n_points)}},
      {"usps", {ds("us0", 0.52, n_points), ds("us1", 0.50, n_points), ds("us2", 0.48, n_points)}},
      {"svhn", {ds("sv0", 0.51, n_points), ds("sv1", 0.46, n_points), ds("sv2", 0.44, n_points)}},
      {"syn", {ds("sy0", 0.50, n_points), ds("sy1", 0.42, n_points), ds("sy2", 0.40, n_points)}},
  };
}

const DatasetSpec& find_dataset(const std::vector<GroupSpec>& groups, const std::string& name) {
  for (const auto& group : groups) {
    for (const auto& dataset : group.datasets) {
      if (dataset.name == name) return dataset;
    }
  }
  throw std::logic_error("unknown dataset in builtin roster: " + name);
}

std::vector<GroupSpec> regroup(const std::vector<GroupSpec>& roster,
                               const std::vector<std::pair<std::string, std::vector<std::string>>>& plan) {
  std::vector<GroupSpec> groups;
  groups.reserve(plan.size());
  for (const auto& [group_name, dataset_names] : plan) {
    GroupSpec group{group_name, {}};
    for (const auto& dataset_name : dataset_names) {
      group.datasets.push_back(find_dataset(roster, dataset_name));
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

Scenario make_scenario(std::string name, std::vector<GroupSpec> groups, double percentile_x,
                       std::int64_t default_budget) {
  Scenario scenario;
  scenario.name = std::move(name);
  scenario.groups = std::move(groups);
  scenario.percentile_x = percentile_x;
  scenario.default_budget = default_budget;
  validate(scenario);
  return scenario;
}

}  // namespace

std::string to_string(RewardKind kind) {
  return kind == RewardKind::kBernoulli ? "bernoulli" : "gaussian";
}

RewardKind reward_kind_from_string(const std::string& text) {
  if (text == "bernoulli") return RewardKind::kBernoulli;
  if (text == "gaussian") return RewardKind::kGaussian;
  throw std::invalid_argument("unknown reward_kind: " + text);
}

int Scenario::total_datasets() const {
  int count = 0;
  for (const auto& group : groups) count += static_cast<int>(group.datasets.size());
  return count;
}

std::int64_t Scenario::total_points() const {
  std::int64_t total = 0;
  for (const auto& group : groups) {
    for (const auto& dataset : group.datasets) total += dataset.n_points;
  }
  return total;
}

void validate(const Scenario& scenario) {
  if (scenario.name.empty()) throw std::invalid_argument("scenario name is empty");
  if (scenario.groups.empty()) throw std::invalid_argument("scenario has no groups");
  if (!(scenario.percentile_x > 0.0) || !(scenario.percentile_x < 100.0)) {
    throw std::invalid_argument("percentile_x must lie in (0, 100)");
  }
  if (!(scenario.sigma_r_sq > 0.0)) throw std::invalid_argument("sigma_r_sq must be positive");
  if (scenario.default_budget < 0) throw std::invalid_argument("default_budget must be >= 0");
  if (!(scenario.prior_group_var > 0.0) || !(scenario.prior_dataset_var > 0.0)) {
    throw std::invalid_argument("scenario priors must have positive variance");
  }
  if (!std::isfinite(scenario.prior_mean)) {
    throw std::invalid_argument("scenario prior mean must be finite");
  }

  std::set<std::string> group_names;
  std::set<std::string> dataset_names;
  for (const auto& group : scenario.groups) {
    if (group.name.empty()) throw std::invalid_argument("group name is empty");
    if (!group_names.insert(group.name).second) {
      throw std::invalid_argument("duplicate group name: " + group.name);
    }
    if (group.datasets.empty()) {
      throw std::invalid_argument("group has no datasets: " + group.name);
    }
    for (const auto& dataset : group.datasets) {
      if (dataset.name.empty()) throw std::invalid_argument("dataset name is empty");
      if (!dataset_names.insert(dataset.name).second) {
        throw std::invalid_argument("duplicate dataset name: " + dataset.name);
      }
      if (dataset.n_points < 1) {
        throw std::invalid_argument("n_points must be >= 1 for " + dataset.name);
      }
      if (!std::isfinite(dataset.utility)) {
        throw std::invalid_argument("utility must be finite for " + dataset.name);
      }
      if (scenario.reward_kind == RewardKind::kBernoulli &&
          (dataset.utility < 0.0 || dataset.utility > 1.0)) {
        throw std::invalid_argument("bernoulli utility outside [0,1] for " + dataset.name);
      }
    }
  }
}

double draw_reward(const DatasetSpec& spec, RewardKind kind, const RewardModel& reward,
                   SeededRandomSource& rng) {
  if (kind == RewardKind::kBernoulli) {
    return rng.bernoulli(spec.utility) ? 1.0 : 0.0;
  }
  return rng.normal(spec.utility, std::sqrt(reward.sigma_r_sq));
}

ScenarioTag scenario_tag_from_string(const std::string& text) {
  if (text == "digit5_perfect") return ScenarioTag::kDigit5Perfect;
  if (text == "digit5_mixed") return ScenarioTag::kDigit5Mixed;
  if (text == "digit5_cross") return ScenarioTag::kDigit5Cross;
  if (text == "digit5_scaled51") return ScenarioTag::kDigit5Scaled51;
  if (text == "no_relevant") return ScenarioTag::kNoRelevant;
  if (text == "budget15") return ScenarioTag::kBudget15;
  if (text == "domainnet_perfect") return ScenarioTag::kDomainNetPerfect;
  throw std::invalid_argument("unknown scenario tag: " + text);
}

std::string to_string(ScenarioTag tag) {
  switch (tag) {
    case ScenarioTag::kDigit5Perfect: return "digit5_perfect";
    case ScenarioTag::kDigit5Mixed: return "digit5_mixed";
    case ScenarioTag::kDigit5Cross: return "digit5_cross";
    case ScenarioTag::kDigit5Scaled51: return "digit5_scaled51";
    case ScenarioTag::kNoRelevant: return "no_relevant";
    case ScenarioTag::kBudget15: return "budget15";
    case ScenarioTag::kDomainNetPerfect: return "domainnet_perfect";
  }
  throw std::invalid_argument("unknown scenario tag");
}

Scenario builtin_scenario(ScenarioTag tag) {
  switch (tag) {
    case ScenarioTag::kDigit5Perfect:
      // 15 datasets x 10 clusters x 5 near-centroid points = 750 total.
      return make_scenario("digit5_perfect", digit5_roster(50), 80.0, 0);

    case ScenarioTag::kDigit5Mixed:
      return make_scenario("digit5_mixed",
                           regroup(digit5_roster(50),
                                   {{"mix0", {"mn1", "mn2", "mm0"}},
                                    {"mix1", {"mm1", "mm2", "us0"}},
                                    {"mix2", {"us1", "us2", "sv0"}},
                                    {"mix3", {"sv1", "sv2", "sy0"}},
                                    {"mix4", {"sy1", "sy2", "mn0"}}}),
                           60.0, 0);

    case ScenarioTag::kDigit5Cross:
      return make_scenario("digit5_cross",
                           regroup(digit5_roster(50),
                                   {{"cross0", {"mn0", "sv0", "mm0"}},
                                    {"cross1", {"sv1", "mm1", "us0"}},
                                    {"cross2", {"mm2", "us1", "sy0"}},
                                    {"cross3", {"us2", "sy1", "mn1"}},
                                    {"cross4", {"sy2", "mn2", "sv2"}}}),
                           80.0, 0);

    case ScenarioTag::kDigit5Scaled51: {
      // Enlarged pool: group sizes 10 / 12 / 11 / 9 / 9 = 51 datasets.
      struct GroupPlan {
        const char* group;
        const char* prefix;
        int size;
        double base;
        double step;
      };
      const GroupPlan plans[] = {
          {"mnist", "mn", 10, 0.860, +0.006},  // relevant domain, >= 0.85 throughout
          {"svhn", "sv", 12, 0.520, -0.010},
          {"usps", "us", 11, 0.500, -0.010},
          {"mnist_m", "mm", 9, 0.480, -0.010},
          {"syn", "sy", 9, 0.460, -0.010},
      };
      std::vector<GroupSpec> groups;
      for (const auto& plan : plans) {
        GroupSpec group{plan.group, {}};
        for (int i = 0; i < plan.size; ++i) {
          group.datasets.push_back(
              ds(plan.prefix + std::to_string(i), plan.base + plan.step * i, 50));
        }
        groups.push_back(std::move(group));
      }
      return make_scenario("digit5_scaled51", std::move(groups), 80.0, 0);
    }

    case ScenarioTag::kNoRelevant: {
      auto groups = digit5_roster(50);
      for (auto& group : groups) {
        for (auto& dataset : group.datasets) dataset.utility = 0.1;
      }
      return make_scenario("no_relevant", std::move(groups), 80.0, 600);
    }

    case ScenarioTag::kBudget15: {
      // One representative point per dataset; the optimal set is the 3-way
      // tie at 0.9 so identification recall is a set-level quantity.
      auto groups = digit5_roster(1);
      for (auto& group : groups) {
        for (auto& dataset : group.datasets) {
          dataset.utility = group.name == "mnist" ? 0.9 : 0.3;
        }
      }
      return make_scenario("budget15", std::move(groups), 80.0, 15);
    }

    case ScenarioTag::kDomainNetPerfect: {
      // 15 datasets x 15 clusters x 5 points = 1125 total.
      std::vector<GroupSpec> groups = {
          {"clipart", {ds("cp0", 0.66, 75), ds("cp1", 0.64, 75), ds("cp2", 0.62, 75)}},
          {"quickdraw", {ds("qd0", 0.60, 75), ds("qd1", 0.58, 75), ds("qd2", 0.56, 75)}},
          {"real", {ds("rl0", 0.884, 75), ds("rl1", 0.876, 75), ds("rl2", 0.868, 75)}},
          {"sketch", {ds("sk0", 0.65, 75), ds("sk1", 0.63, 75), ds("sk2", 0.61, 75)}},
          {"painting", {ds("pt0", 0.58, 75), ds("pt1", 0.55, 75), ds("pt2", 0.52, 75)}},
      };
      return make_scenario("domainnet_perfect", std::move(groups), 80.0, 0);
    }
  }
  throw std::invalid_argument("unknown scenario tag");
}

std::string emit_scenario(const Scenario& scenario) {
  ordered_json j;
  j["name"] = scenario.name;
  j["reward_kind"] = to_string(scenario.reward_kind);
  j["stop_on_first_exhaustion"] = scenario.stop_on_first_exhaustion;
  j["seed"] = scenario.seed;
  j["groups"] = ordered_json::array();
  for (const auto& group : scenario.groups) {
    ordered_json jg;
    jg["name"] = group.name;
    jg["datasets"] = ordered_json::array();
    for (const auto& dataset : group.datasets) {
      jg["datasets"].push_back({{"name", dataset.name},
                                {"utility", dataset.utility},
                                {"n_points", dataset.n_points}});
    }
    j["groups"].push_back(std::move(jg));
  }
  j["percentile_x"] = scenario.percentile_x;
  j["default_budget"] = scenario.default_budget;
  j["sigma_r_sq"] = scenario.sigma_r_sq;
  j["prior_mean"] = scenario.prior_mean;
  j["prior_group_var"] = scenario.prior_group_var;
  j["prior_dataset_var"] = scenario.prior_dataset_var;
  return j.dump(2) + "\n";
}

Scenario parse_scenario(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("scenario JSON parse error: ") + e.what());
  }
  Scenario scenario;
  try {
    scenario.name = j.at("name").get<std::string>();
    scenario.reward_kind = reward_kind_from_string(j.at("reward_kind").get<std::string>());
    scenario.stop_on_first_exhaustion = j.at("stop_on_first_exhaustion").get<bool>();
    scenario.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& jg : j.at("groups")) {
      GroupSpec group;
      group.name = jg.at("name").get<std::string>();
      for (const auto& jd : jg.at("datasets")) {
        group.datasets.push_back(ds(jd.at("name").get<std::string>(),
                                    jd.at("utility").get<double>(),
                                    jd.at("n_points").get<std::int64_t>()));
      }
      scenario.groups.push_back(std::move(group));
    }
    scenario.percentile_x = j.value("percentile_x", 80.0);
    scenario.default_budget = j.value("default_budget", std::int64_t{0});
    scenario.sigma_r_sq = j.value("sigma_r_sq", 1.0);
    scenario.prior_mean = j.value("prior_mean", 0.0);
    scenario.prior_group_var = j.value("prior_group_var", 2.0);
    scenario.prior_dataset_var = j.value("prior_dataset_var", 2.0);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("scenario JSON schema error: ") + e.what());
  }
  validate(scenario);
  return scenario;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

void save_scenario_file(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file: " + path.string());
  out << emit_scenario(scenario);
}

Scenario resolve_scenario(const std::string& tag_or_path) {
  try {
    return builtin_scenario(scenario_tag_from_string(tag_or_path));
  } catch (const std::invalid_argument&) {
    if (std::filesystem::exists(tag_or_path)) return load_scenario_file(tag_or_path);
    throw std::invalid_argument(
        "--scenario '" + tag_or_path +
        "' is neither a builtin tag (digit5_perfect, digit5_mixed, digit5_cross, "
        "digit5_scaled51, no_relevant, budget15, domainnet_perfect) nor a file");
  }
}

}  // namespace dash
