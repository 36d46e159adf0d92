#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dash/rng.hpp"

namespace dash {

/// Gaussian belief over a latent utility. Used for group and dataset priors
/// and their posteriors alike.
struct GaussianBelief {
  double mean = 0.0;
  double variance = 1.0;  // must stay > 0

  bool operator==(const GaussianBelief&) const = default;
};

/// Observation model: rewards are treated as N(theta, sigma_r_sq) draws.
struct RewardModel {
  double sigma_r_sq = 1.0;
};

/// Sufficient statistics for one group: total pulls across its datasets and
/// the sum of all rewards observed in the group.
struct GroupStats {
  std::int64_t pulls = 0;
  double reward_sum = 0.0;

  double mean() const { return pulls > 0 ? reward_sum / static_cast<double>(pulls) : 0.0; }
};

/// Sufficient statistics for one dataset.
struct DatasetStats {
  std::int64_t pulls = 0;
  double reward_sum = 0.0;

  double mean() const { return pulls > 0 ? reward_sum / static_cast<double>(pulls) : 0.0; }
};

/// Raised when the quadrature oracle cannot trust its own answer.
struct OracleFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Closed-form group posterior.
///
/// With n pulls and empirical group mean s, the group's evidence enters
/// through an effective variance v = dataset_prior_var + sigma_r_sq / n:
///
///   lambda_sq = 1 / (1/prior.variance + 1/v)
///   mean      = lambda_sq * (prior.mean/prior.variance + s/v)
///
/// Zero pulls return the prior unchanged (vacuous evidence).
GaussianBelief group_posterior(const GaussianBelief& prior, double dataset_prior_var,
                               const RewardModel& reward, const GroupStats& stats);

/// Closed-form dataset posterior. The group posterior mean acts as the bias
/// term of the dataset-level prior N(group_mean, dataset_prior_var):
///
///   lambda_sq = 1 / (1/dataset_prior_var + n/sigma_r_sq)
///   mean      = lambda_sq * (group_mean/dataset_prior_var + reward_sum/sigma_r_sq)
///
/// Zero pulls return N(group_mean, dataset_prior_var).
GaussianBelief dataset_posterior(double group_mean, double dataset_prior_var,
                                 const RewardModel& reward, const DatasetStats& stats);

/// Thompson draw from a belief. Variance is clamped below at 1e-12 so
/// degenerate posteriors still sample.
double sample(const GaussianBelief& belief, SeededRandomSource& rng);

struct QuadratureOptions {
  double lo = -10.0;
  double hi = 10.0;
  double step = 1e-3;
};

/// Brute-force group posterior by 1-D trapezoid quadrature over the group
/// latent, after integrating each dataset latent analytically (Gaussian
/// convolution: a dataset with n pulls contributes a factor
/// N(s_bar; theta, dataset_prior_var + sigma_r_sq/n)). Test oracle for
/// group_posterior; also behind the `oracle-check` CLI command.
///
/// Requires at least one dataset with pulls > 0 and quadrature bounds that
/// cover >= 8 posterior standard deviations on both sides; throws
/// OracleFailure when boundary mass exceeds 1e-9 of the total.
GaussianBelief numeric_group_posterior_oracle(const GaussianBelief& prior,
                                              double dataset_prior_var,
                                              const RewardModel& reward,
                                              const std::vector<DatasetStats>& per_dataset,
                                              const QuadratureOptions& opts = {});

}  // namespace dash
