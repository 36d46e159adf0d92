#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <doctest.h>

#include "dash/kmeans.hpp"

using namespace dash;

namespace {

FeaturePool blob_pool(SeededRandomSource& rng, int per_blob, double spread) {
  // Two blobs at +(10,10) and -(10,10).
  FeaturePool pool;
  pool.points.resize(2 * per_blob, 2);
  pool.labels.assign(static_cast<std::size_t>(2 * per_blob), 0);
  for (int i = 0; i < per_blob; ++i) {
    pool.points(i, 0) = 10.0 + rng.normal(0.0, spread);
    pool.points(i, 1) = 10.0 + rng.normal(0.0, spread);
    pool.points(per_blob + i, 0) = -10.0 + rng.normal(0.0, spread);
    pool.points(per_blob + i, 1) = -10.0 + rng.normal(0.0, spread);
    pool.labels[static_cast<std::size_t>(per_blob + i)] = 1;
  }
  pool.k = 2;
  pool.points_per_cluster = 5;
  return pool;
}

}  // namespace

TEST_CASE("k=1 converges to the coordinate-wise mean") {
  FeaturePool pool;
  pool.points.resize(4, 2);
  pool.points << 0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0;
  pool.k = 1;
  pool.points_per_cluster = 2;
  SeededRandomSource rng(3);
  const KMeansResult result = kmeans_representatives(pool, 100, 1e-9, rng);
  CHECK(result.centroids(0, 0) == doctest::Approx(1.0));
  CHECK(result.centroids(0, 1) == doctest::Approx(1.0));
  // all four points are equidistant; ties resolve to the lowest indices
  CHECK(result.representatives[0] == std::vector<int>{0, 1});
}

TEST_CASE("two separated blobs are recovered across seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SeededRandomSource rng(seed);
    const FeaturePool pool = blob_pool(rng, 50, 1.0);
    const KMeansResult result = kmeans_representatives(pool, 100, 1e-6, rng);

    // match each centroid to its blob
    const bool first_is_positive = result.centroids(0, 0) > 0.0;
    const Eigen::RowVector2d positive = result.centroids.row(first_is_positive ? 0 : 1);
    const Eigen::RowVector2d negative = result.centroids.row(first_is_positive ? 1 : 0);
    CHECK((positive - Eigen::RowVector2d(10.0, 10.0)).norm() < 0.5);
    CHECK((negative - Eigen::RowVector2d(-10.0, -10.0)).norm() < 0.5);

    // assignment purity: every point sits with its blob
    const int positive_cluster = first_is_positive ? 0 : 1;
    for (int i = 0; i < 100; ++i) {
      const bool in_positive_blob = i < 50;
      CHECK((result.assignment[static_cast<std::size_t>(i)] == positive_cluster) ==
            in_positive_blob);
    }
  }
}

TEST_CASE("k=10 with 5 points per cluster yields exactly 50 representatives") {
  SeededRandomSource rng(11);
  FeaturePool pool;
  pool.points.resize(400, 3);
  for (Eigen::Index i = 0; i < pool.points.rows(); ++i) {
    for (Eigen::Index d = 0; d < 3; ++d) pool.points(i, d) = rng.uniform01() * 20.0;
  }
  pool.k = 10;
  pool.points_per_cluster = 5;
  const KMeansResult result = kmeans_representatives(pool, 100, 1e-6, rng);
  std::set<int> all;
  std::size_t total = 0;
  for (const auto& reps : result.representatives) {
    CHECK(reps.size() == 5);
    total += reps.size();
    for (int idx : reps) {
      all.insert(idx);
      CHECK(result.assignment[static_cast<std::size_t>(idx)] ==
            static_cast<int>(&reps - result.representatives.data()));
    }
  }
  CHECK(total == 50);
  CHECK(all.size() == 50);  // representative sets are disjoint across clusters
}

TEST_CASE("the Lloyd objective never increases") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    SeededRandomSource rng(seed);
    FeaturePool pool;
    pool.points.resize(300, 4);
    for (Eigen::Index i = 0; i < pool.points.rows(); ++i) {
      for (Eigen::Index d = 0; d < 4; ++d) pool.points(i, d) = rng.normal(0.0, 5.0);
    }
    pool.k = 7;
    pool.points_per_cluster = 1;
    const KMeansResult result = kmeans_representatives(pool, 50, 0.0, rng);
    for (std::size_t i = 1; i < result.objective_history.size(); ++i) {
      CHECK(result.objective_history[i] <= result.objective_history[i - 1] + 1e-9);
    }
  }
}

TEST_CASE("clusters with duplicated points still come back non-empty") {
  FeaturePool pool;
  pool.points.resize(9, 2);
  pool.points << 0, 0, 0, 0, 0, 0, 5, 5, 5, 5, 5, 5, 9, 0, 9, 0, 9, 0;
  pool.k = 3;
  pool.points_per_cluster = 1;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SeededRandomSource rng(seed);
    const KMeansResult result = kmeans_representatives(pool, 50, 1e-9, rng);
    std::set<int> used(result.assignment.begin(), result.assignment.end());
    CHECK(used.size() == 3);
    for (const auto& reps : result.representatives) CHECK(reps.size() == 1);
  }
}

TEST_CASE("fewer distinct locations than clusters fails loudly") {
  FeaturePool pool;
  pool.points.resize(6, 2);
  pool.points << 0, 0, 0, 0, 0, 0, 7, 7, 7, 7, 7, 7;
  pool.k = 3;  // only two distinct locations; the third cluster cannot fill
  pool.points_per_cluster = 1;
  SeededRandomSource rng(4);
  CHECK_THROWS_AS(kmeans_representatives(pool, 20, 1e-9, rng), std::invalid_argument);
}

TEST_CASE("pool validation rejects impossible requests") {
  FeaturePool pool;
  pool.points.resize(3, 2);
  pool.points.setZero();
  pool.k = 5;
  pool.points_per_cluster = 1;
  SeededRandomSource rng(1);
  CHECK_THROWS_AS(kmeans_representatives(pool, 10, 1e-6, rng), std::invalid_argument);
  pool.k = 2;
  pool.points_per_cluster = 0;
  CHECK_THROWS_AS(kmeans_representatives(pool, 10, 1e-6, rng), std::invalid_argument);
}

TEST_CASE("feature CSV loads the label column and numeric features") {
  const auto path = std::filesystem::temp_directory_path() / "dash_features.csv";
  {
    std::ofstream out(path);
    out << "f0,label,f1\n";
    out << "1.5,0,2.5\n";
    out << "-1.0,1,0.25\n";
    out << "3.0,0,-4.0\n";
  }
  const FeaturePool pool = load_feature_csv(path, 2, 1);
  CHECK(pool.points.rows() == 3);
  CHECK(pool.points.cols() == 2);
  CHECK(pool.points(0, 0) == 1.5);
  CHECK(pool.points(0, 1) == 2.5);
  CHECK(pool.points(1, 0) == -1.0);
  CHECK(pool.labels == std::vector<int>{0, 1, 0});
  std::filesystem::remove(path);

  CHECK_THROWS(load_feature_csv(path, 2, 1));  // gone now
}
