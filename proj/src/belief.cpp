#include "dash/belief.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dash {

namespace {

constexpr double kMinSampleVariance = 1e-12;

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
  }
}

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument(std::string(what) + " must be finite");
  }
}

void require_stats(std::int64_t pulls, double reward_sum, const char* what) {
  if (pulls < 0) throw std::invalid_argument(std::string(what) + ": negative pull count");
  require_finite(reward_sum, what);
  if (pulls == 0 && reward_sum != 0.0) {
    throw std::invalid_argument(std::string(what) + ": reward_sum without pulls");
  }
}

double log_normal_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (d * d / variance + std::log(2.0 * M_PI * variance));
}

}  // namespace

GaussianBelief group_posterior(const GaussianBelief& prior, double dataset_prior_var,
                               const RewardModel& reward, const GroupStats& stats) {
  require_positive(prior.variance, "prior variance");
  require_finite(prior.mean, "prior mean");
  require_positive(dataset_prior_var, "dataset prior variance");
  require_positive(reward.sigma_r_sq, "reward variance");
  require_stats(stats.pulls, stats.reward_sum, "group stats");

  if (stats.pulls == 0) return prior;

  const double n = static_cast<double>(stats.pulls);
  const double s_bar = stats.reward_sum / n;
  const double effective_var = dataset_prior_var + reward.sigma_r_sq / n;
  const double lambda_sq = 1.0 / (1.0 / prior.variance + 1.0 / effective_var);
  const double mean = lambda_sq * (prior.mean / prior.variance + s_bar / effective_var);
  return {mean, lambda_sq};
}

GaussianBelief dataset_posterior(double group_mean, double dataset_prior_var,
                                 const RewardModel& reward, const DatasetStats& stats) {
  require_finite(group_mean, "group mean");
  require_positive(dataset_prior_var, "dataset prior variance");
  require_positive(reward.sigma_r_sq, "reward variance");
  require_stats(stats.pulls, stats.reward_sum, "dataset stats");

  if (stats.pulls == 0) return {group_mean, dataset_prior_var};

  const double n = static_cast<double>(stats.pulls);
  const double lambda_sq = 1.0 / (1.0 / dataset_prior_var + n / reward.sigma_r_sq);
  const double mean =
      lambda_sq * (group_mean / dataset_prior_var + stats.reward_sum / reward.sigma_r_sq);
  return {mean, lambda_sq};
}

double sample(const GaussianBelief& belief, SeededRandomSource& rng) {
  require_finite(belief.mean, "belief mean");
  require_positive(belief.variance, "belief variance");
  const double variance = std::max(belief.variance, kMinSampleVariance);
  return rng.normal(belief.mean, std::sqrt(variance));
}

GaussianBelief numeric_group_posterior_oracle(const GaussianBelief& prior,
                                              double dataset_prior_var,
                                              const RewardModel& reward,
                                              const std::vector<DatasetStats>& per_dataset,
                                              const QuadratureOptions& opts) {
  require_positive(prior.variance, "prior variance");
  require_positive(dataset_prior_var, "dataset prior variance");
  require_positive(reward.sigma_r_sq, "reward variance");
  if (!(opts.step > 0.0) || !(opts.hi > opts.lo)) {
    throw std::invalid_argument("quadrature grid is empty");
  }

  bool any_observed = false;
  for (const auto& stats : per_dataset) {
    require_stats(stats.pulls, stats.reward_sum, "dataset stats");
    any_observed = any_observed || stats.pulls > 0;
  }
  if (!any_observed) {
    throw std::invalid_argument("oracle requires at least one dataset with observations");
  }

  const auto n_points =
      static_cast<std::size_t>(std::floor((opts.hi - opts.lo) / opts.step)) + 1;
  std::vector<double> log_density(n_points);
  double log_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_points; ++i) {
    const double theta = opts.lo + static_cast<double>(i) * opts.step;
    double ld = log_normal_pdf(theta, prior.mean, prior.variance);
    for (const auto& stats : per_dataset) {
      if (stats.pulls == 0) continue;
      const double n = static_cast<double>(stats.pulls);
      // theta_ij integrated out: s_bar ~ N(theta, dataset_prior_var + sigma_r_sq/n)
      ld += log_normal_pdf(stats.reward_sum / n, theta,
                           dataset_prior_var + reward.sigma_r_sq / n);
    }
    log_density[i] = ld;
    log_max = std::max(log_max, ld);
  }

  // Trapezoid moments of the unnormalized density, stabilized at the mode.
  double mass = 0.0, first = 0.0, second = 0.0, edge = 0.0;
  for (std::size_t i = 0; i < n_points; ++i) {
    const double theta = opts.lo + static_cast<double>(i) * opts.step;
    const double w = (i == 0 || i + 1 == n_points) ? 0.5 : 1.0;
    const double f = w * std::exp(log_density[i] - log_max);
    mass += f;
    first += f * theta;
    second += f * theta * theta;
    if (i == 0 || i + 1 == n_points) edge += f;
  }
  if (!(mass > 0.0) || edge / mass > 1e-9) {
    throw OracleFailure("quadrature mass touches the boundary; widen the grid");
  }

  const double mean = first / mass;
  const double variance = second / mass - mean * mean;
  const double sd = std::sqrt(variance);
  if (opts.hi - mean < 8.0 * sd || mean - opts.lo < 8.0 * sd) {
    throw OracleFailure("quadrature bounds cover less than 8 posterior standard deviations");
  }
  return {mean, variance};
}

}  // namespace dash
