#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "dash/rng.hpp"

namespace dash {

/// Feature vectors to compress into representative points: rows are samples,
/// columns are feature dimensions.
struct FeaturePool {
  Eigen::MatrixXd points;
  std::vector<int> labels;
  int k = 1;
  int points_per_cluster = 1;
};

/// CSV with a header row; the column named "label" carries integer class
/// ids, every other column is a numeric feature.
FeaturePool load_feature_csv(const std::filesystem::path& path, int k, int points_per_cluster);

struct KMeansResult {
  Eigen::MatrixXd centroids;  // k x dims
  std::vector<int> assignment;
  std::vector<std::vector<int>> representatives;  // per cluster, nearest-first
  std::vector<double> objective_history;          // after each assignment pass
  int iterations = 0;
};

/// Lloyd iterations from a k-means++ start until the largest centroid shift
/// drops below tol or max_iters passes run. An empty cluster is re-seeded at
/// the point farthest from its assigned centroid. Returns, per cluster, the
/// points_per_cluster member indices nearest the final centroid (distance
/// ties break toward the lowest index).
KMeansResult kmeans_representatives(const FeaturePool& pool, int max_iters, double tol,
                                    SeededRandomSource& rng);

}  // namespace dash
