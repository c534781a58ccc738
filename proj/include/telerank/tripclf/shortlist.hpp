#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "telerank/tripclf/feature_matrix.hpp"

namespace telerank::tripclf {

struct PcaResult {
  Eigen::VectorXd mean;
  Eigen::VectorXd eigenvalues;  // all of them, descending
  Eigen::MatrixXd components;   // cols x dims, unit columns
  Eigen::MatrixXd projected;    // rows x dims
};

// Principal components from the eigendecomposition of the sample covariance.
PcaResult pca(const FeatureMatrix& m, std::size_t dims);

// Mean squared reconstruction error of `m` from its projection.
double reconstruction_error(const FeatureMatrix& m, const PcaResult& p);

inline constexpr int kNoise = -1;

// Classical DBSCAN: core points have >= min_pts points (self included)
// within eps; clusters grow from core points in input order and border
// points join the first cluster that reaches them. Labels are 0-based.
std::vector<int> dbscan(const Eigen::MatrixXd& points, double eps, std::size_t min_pts);

// Sorted distance of every point to its k-th nearest other point.
std::vector<double> k_distances(const Eigen::MatrixXd& points, std::size_t k);

// Knee of the sorted k-distance curve (point farthest from the chord).
double suggest_eps(const Eigen::MatrixXd& points, std::size_t k);

// eps from the middle of the widest eps range (log scale, between the median
// and the largest k-distance) over which DBSCAN keeps the same number of
// clusters, at least two. Falls back to suggest_eps when no such range exists.
double stable_eps(const Eigen::MatrixXd& points, std::size_t min_pts, std::size_t candidates = 48);

struct ShortlistResult {
  std::vector<int> labels;
  PcaResult projection;
  double eps = 0.0;
  std::size_t cluster_count = 0;
};

// PCA to `pca_dims` then DBSCAN. eps <= 0 selects it with stable_eps.
ShortlistResult shortlist_clusters(const FeatureMatrix& standardized, std::size_t pca_dims, double eps,
                                   std::size_t min_pts);

// Cluster with the highest mean of `column` in `raw` (noise excluded), or
// kNoise when there is no cluster.
int select_review_cluster(const std::vector<int>& labels, const FeatureMatrix& raw,
                          std::size_t column = geo::kCommercialWaitsColumn);

}  // namespace telerank::tripclf
