#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "telerank/trip_features.hpp"
#include "telerank/tripclf/feature_matrix.hpp"

namespace telerank::tripclf {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;   // x[feature] < threshold
  int right = -1;  // x[feature] >= threshold
  double value = 0.0;  // positive fraction of training rows reaching the node
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  int depth() const;
};

struct ForestParams {
  std::size_t n_trees = 200;
  int max_depth = 8;
  std::size_t min_leaf = 5;
  std::size_t split_candidates = 8;
  std::uint64_t seed = 1;
  double holdout_fraction = 0.2;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ForestModel {
  static constexpr int kSchemaVersion = 1;

  std::vector<DecisionTree> trees;
  ForestParams params;
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;
  double decision_threshold = 0.5;
  Standardizer standardizer;

  double predict_proba(std::span<const double> x) const;

  // Hex FNV-1a digest of the trees and threshold.
  std::string digest() const;

  nlohmann::json to_json() const;
  static ForestModel from_json(const nlohmann::json& j);
};

// Extremely randomized trees on the labeled matrix. A deterministic
// per-row-id holdout picks the F1-maximizing decision threshold; trees are
// fit on the remaining rows.
ForestModel train_forest(const FeatureMatrix& labeled, const ForestParams& params = {});

// Threshold maximizing F1 of (score >= t); midpoints between consecutive
// distinct scores are the candidates.
double select_f1_threshold(std::span<const double> scores, std::span<const int> labels);

struct TripPrediction {
  double probability = 0.0;
  int label = 0;
};

TripPrediction predict_trip(const ForestModel& model, const geo::TripFeatures& features);
TripPrediction predict_row(const ForestModel& model, std::span<const double> x);

}  // namespace telerank::tripclf
