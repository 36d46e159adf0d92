#include "dash/kmeans.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dash {

namespace {

void validate_pool(const FeaturePool& pool) {
  const auto n = pool.points.rows();
  if (n == 0) throw std::invalid_argument("feature pool is empty");
  if (pool.k < 1) throw std::invalid_argument("k must be >= 1");
  if (pool.k > n) throw std::invalid_argument("k exceeds the number of samples");
  if (pool.points_per_cluster < 1) {
    throw std::invalid_argument("points_per_cluster must be >= 1");
  }
  if (!pool.labels.empty() && static_cast<Eigen::Index>(pool.labels.size()) != n) {
    throw std::invalid_argument("label count does not match sample count");
  }
}

// Squared distances from every sample to one centroid.
Eigen::VectorXd sq_dist_to(const Eigen::MatrixXd& points, const Eigen::RowVectorXd& centroid) {
  return (points.rowwise() - centroid).rowwise().squaredNorm();
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, int k, SeededRandomSource& rng) {
  const auto n = points.rows();
  Eigen::MatrixXd centroids(k, points.cols());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);

  auto first = static_cast<Eigen::Index>(rng.uniform01() * static_cast<double>(n));
  first = std::min(first, n - 1);
  centroids.row(0) = points.row(first);
  chosen[static_cast<std::size_t>(first)] = true;

  Eigen::VectorXd best_sq = sq_dist_to(points, centroids.row(0));
  for (int c = 1; c < k; ++c) {
    const double total = best_sq.sum();
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += best_sq(i);
        if (acc >= target) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = n - 1;
    } else {
      // All remaining mass is zero (duplicated points); take the lowest
      // index not yet chosen so the init stays deterministic.
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = 0;
    }
    centroids.row(c) = points.row(pick);
    chosen[static_cast<std::size_t>(pick)] = true;
    best_sq = best_sq.cwiseMin(sq_dist_to(points, centroids.row(c)));
  }
  return centroids;
}

// Nearest centroid per sample; ties toward the lowest centroid index.
void assign(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
            std::vector<int>& assignment, Eigen::VectorXd& nearest_sq) {
  const auto n = points.rows();
  const auto k = centroids.rows();
  nearest_sq.setConstant(n, std::numeric_limits<double>::infinity());
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::VectorXd d = sq_dist_to(points, centroids.row(c));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d(i) < nearest_sq(i)) {
        nearest_sq(i) = d(i);
        assignment[static_cast<std::size_t>(i)] = static_cast<int>(c);
      }
    }
  }
}

}  // namespace

FeaturePool load_feature_csv(const std::filesystem::path& path, int k, int points_per_cluster) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open feature CSV: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("feature CSV has no header");
  std::vector<std::string> header;
  {
    std::stringstream row(line);
    std::string token;
    while (std::getline(row, token, ',')) header.push_back(token);
  }
  int label_col = -1;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (header[static_cast<std::size_t>(i)] == "label") label_col = i;
  }
  if (label_col < 0) throw std::runtime_error("feature CSV has no 'label' column");
  const int dims = static_cast<int>(header.size()) - 1;
  if (dims < 1) throw std::runtime_error("feature CSV has no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string token;
    int col = 0;
    while (std::getline(row, token, ',')) {
      if (col == label_col) {
        labels.push_back(std::stoi(token));
      } else {
        double value = 0.0;
        const auto result = std::from_chars(token.data(), token.data() + token.size(), value);
        if (result.ec != std::errc{}) {
          throw std::runtime_error("bad feature value '" + token + "' in " + path.string());
        }
        values.push_back(value);
      }
      ++col;
    }
    if (col != static_cast<int>(header.size())) {
      throw std::runtime_error("ragged row in feature CSV: " + line);
    }
    ++rows;
  }

  FeaturePool pool;
  pool.points.resize(static_cast<Eigen::Index>(rows), dims);
  for (std::size_t i = 0; i < rows; ++i) {
    for (int d = 0; d < dims; ++d) {
      pool.points(static_cast<Eigen::Index>(i), d) = values[i * static_cast<std::size_t>(dims) +
                                                            static_cast<std::size_t>(d)];
    }
  }
  pool.labels = std::move(labels);
  pool.k = k;
  pool.points_per_cluster = points_per_cluster;
  validate_pool(pool);
  return pool;
}

KMeansResult kmeans_representatives(const FeaturePool& pool, int max_iters, double tol,
                                    SeededRandomSource& rng) {
  validate_pool(pool);
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");

  const auto& points = pool.points;
  const auto n = points.rows();
  const int k = pool.k;

  KMeansResult result;
  result.centroids = kmeanspp_init(points, k, rng);
  result.assignment.assign(static_cast<std::size_t>(n), 0);

  Eigen::VectorXd nearest_sq(n);
  for (int iter = 0; iter < max_iters; ++iter) {
    assign(points, result.centroids, result.assignment, nearest_sq);

    // Re-seed empty clusters at the point farthest from its own centroid.
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (int a : result.assignment) ++counts[static_cast<std::size_t>(a)];
    bool reseeded = false;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] != 0) continue;
      Eigen::Index farthest = 0;
      nearest_sq.maxCoeff(&farthest);
      result.centroids.row(c) = points.row(farthest);
      result.assignment[static_cast<std::size_t>(farthest)] = c;
      nearest_sq(farthest) = 0.0;
      reseeded = true;
    }
    if (reseeded) assign(points, result.centroids, result.assignment, nearest_sq);

    result.objective_history.push_back(nearest_sq.sum());
    result.iterations = iter + 1;

    Eigen::MatrixXd updated = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<Eigen::Index> sizes(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = result.assignment[static_cast<std::size_t>(i)];
      updated.row(c) += points.row(i);
      ++sizes[static_cast<std::size_t>(c)];
    }
    double max_shift_sq = 0.0;
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] == 0) continue;  // handled next pass
      updated.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
      max_shift_sq =
          std::max(max_shift_sq, (updated.row(c) - result.centroids.row(c)).squaredNorm());
    }
    result.centroids = updated;
    if (std::sqrt(max_shift_sq) < tol) break;
  }
  assign(points, result.centroids, result.assignment, nearest_sq);

  // points_per_cluster nearest members per cluster, ties toward lowest index.
  result.representatives.assign(static_cast<std::size_t>(k), {});
  std::vector<std::vector<std::pair<double, int>>> members(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = result.assignment[static_cast<std::size_t>(i)];
    members[static_cast<std::size_t>(c)].push_back({nearest_sq(i), static_cast<int>(i)});
  }
  for (int c = 0; c < k; ++c) {
    auto& cluster = members[static_cast<std::size_t>(c)];
    if (static_cast<int>(cluster.size()) < pool.points_per_cluster) {
      throw std::invalid_argument("cluster " + std::to_string(c) + " has " +
                                  std::to_string(cluster.size()) +
                                  " members, fewer than points_per_cluster");
    }
    std::sort(cluster.begin(), cluster.end());
    auto& reps = result.representatives[static_cast<std::size_t>(c)];
    for (int i = 0; i < pool.points_per_cluster; ++i) {
      reps.push_back(cluster[static_cast<std::size_t>(i)].second);
    }
  }
  return result;
}

}  // namespace dash
