#include "dash/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dash {

namespace {

double parse_double(const std::string& token) {
  double value = 0.0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end) {
    throw std::runtime_error("bad numeric field in trace: " + token);
  }
  return value;
}

}  // namespace

RegretTrace cumulative_regret(const std::vector<StepRecord>& trace, const Scenario& scenario) {
  validate(scenario);
  RegretTrace result;
  result.theta_star = -std::numeric_limits<double>::infinity();
  for (const auto& group : scenario.groups) {
    for (const auto& dataset : group.datasets) {
      result.theta_star = std::max(result.theta_star, dataset.utility);
    }
  }
  for (const auto& group : scenario.groups) {
    for (const auto& dataset : group.datasets) {
      result.gaps.push_back(result.theta_star - dataset.utility);
    }
  }

  double cum = 0.0;
  result.instantaneous.reserve(trace.size());
  result.cumulative.reserve(trace.size());
  for (const auto& record : trace) {
    if (record.group < 0 || record.group >= scenario.group_count() ||
        record.dataset < 0 || record.dataset >= scenario.dataset_count(record.group)) {
      throw std::invalid_argument("trace references an arm outside the scenario");
    }
    const double utility = scenario.groups[static_cast<std::size_t>(record.group)]
                               .datasets[static_cast<std::size_t>(record.dataset)]
                               .utility;
    const double inst = result.theta_star - utility;
    cum += inst;
    result.instantaneous.push_back(inst);
    result.cumulative.push_back(cum);
  }
  return result;
}

IdentificationReport identification_report(const RunSummary& summary, const Scenario& scenario) {
  IdentificationReport report;
  report.optimal = optimal_arms(scenario);
  report.steps = summary.steps;
  report.total_draws = summary.total_draws;

  const auto& selected = summary.selected.datasets;
  std::size_t hits = 0;
  for (const ArmId& arm : report.optimal) {
    if (std::find(selected.begin(), selected.end(), arm) != selected.end()) ++hits;
  }
  report.recall = report.optimal.empty()
                      ? 1.0
                      : static_cast<double>(hits) / static_cast<double>(report.optimal.size());
  report.precision =
      selected.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(selected.size());
  report.all_optimal_selected = hits == report.optimal.size();
  return report;
}

LogFit fit_log_curve(const std::vector<double>& cumulative, std::int64_t t_min) {
  LogFit fit;
  if (t_min < 1) t_min = 1;
  const auto n_total = static_cast<std::int64_t>(cumulative.size());
  if (n_total < t_min + 1) return fit;

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(n_total - t_min + 1);
  for (std::int64_t t = t_min; t <= n_total; ++t) {
    const double x = std::log(static_cast<double>(t));
    const double y = cumulative[static_cast<std::size_t>(t - 1)];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;

  const double y_mean = sy / n;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::int64_t t = t_min; t <= n_total; ++t) {
    const double x = std::log(static_cast<double>(t));
    const double y = cumulative[static_cast<std::size_t>(t - 1)];
    const double e = y - (fit.intercept + fit.slope * x);
    ss_res += e * e;
    ss_tot += (y - y_mean) * (y - y_mean);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  return fit;
}

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<StepRecord>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace file: " + path.string());
  out << "t,group,dataset,reward,inst_regret,cum_regret,draws_this_step\n";
  for (const auto& record : trace) {
    out << record.t << ',' << record.group << ',' << record.dataset << ','
        << format_double(record.reward) << ',' << format_double(record.inst_regret) << ','
        << format_double(record.cum_regret) << ',' << record.draws << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<StepRecord> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace file: " + path.string());
  std::vector<StepRecord> trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string token;
    std::vector<std::string> fields;
    while (std::getline(row, token, ',')) fields.push_back(token);
    if (fields.size() != 7) throw std::runtime_error("malformed trace row: " + line);
    StepRecord record;
    record.t = std::stoll(fields[0]);
    record.group = std::stoi(fields[1]);
    record.dataset = std::stoi(fields[2]);
    record.reward = parse_double(fields[3]);
    record.inst_regret = parse_double(fields[4]);
    record.cum_regret = parse_double(fields[5]);
    record.draws = std::stoi(fields[6]);
    trace.push_back(record);
  }
  return trace;
}

std::string summary_to_json(const RunSummary& summary, const Scenario& scenario) {
  using ordered_json = nlohmann::ordered_json;
  ordered_json j;
  j["scenario"] = summary.scenario;
  j["policy"] = summary.policy;
  j["seed"] = summary.seed;
  j["budget"] = summary.budget;
  j["steps"] = summary.steps;
  j["pool_exhausted"] = summary.pool_exhausted;
  j["stopped_early"] = summary.stopped_early;
  j["first_exhaustion_step"] = summary.first_exhaustion_step;
  j["total_draws"] = summary.total_draws;
  j["final_cum_regret"] = summary.final_cum_regret;

  const IdentificationReport report = identification_report(summary, scenario);
  j["identification"] = {{"all_optimal_selected", report.all_optimal_selected},
                         {"precision", report.precision},
                         {"recall", report.recall}};

  j["groups"] = ordered_json::array();
  const bool hierarchical = !summary.group_means.empty();
  for (int g = 0; g < scenario.group_count(); ++g) {
    ordered_json jg;
    jg["name"] = scenario.groups[static_cast<std::size_t>(g)].name;
    if (hierarchical) {
      jg["posterior_mean"] = summary.group_means[static_cast<std::size_t>(g)];
      jg["posterior_variance"] = summary.group_vars[static_cast<std::size_t>(g)];
    } else {
      jg["posterior_mean"] = nullptr;
      jg["posterior_variance"] = nullptr;
    }
    jg["selected"] = std::find(summary.selected.groups.begin(), summary.selected.groups.end(),
                               g) != summary.selected.groups.end();
    j["groups"].push_back(std::move(jg));
  }

  j["datasets"] = ordered_json::array();
  std::size_t idx = 0;
  for (int g = 0; g < scenario.group_count(); ++g) {
    for (int d = 0; d < scenario.dataset_count(g); ++d, ++idx) {
      const auto& spec =
          scenario.groups[static_cast<std::size_t>(g)].datasets[static_cast<std::size_t>(d)];
      ordered_json jd;
      jd["group"] = scenario.groups[static_cast<std::size_t>(g)].name;
      jd["name"] = spec.name;
      jd["utility"] = spec.utility;
      jd["pulls"] = summary.dataset_pulls[idx];
      jd["posterior_mean"] = summary.dataset_means[idx];
      jd["posterior_variance"] = summary.dataset_vars[idx];
      jd["selected"] = std::find(summary.selected.datasets.begin(),
                                 summary.selected.datasets.end(),
                                 ArmId{g, d}) != summary.selected.datasets.end();
      j["datasets"].push_back(std::move(jd));
    }
  }
  return j.dump(2) + "\n";
}

void write_summary_json(const std::filesystem::path& path, const RunSummary& summary,
                        const Scenario& scenario) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write summary file: " + path.string());
  out << summary_to_json(summary, scenario);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace dash
