#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "telerank/tripclf/feature_matrix.hpp"
#include "telerank/tripclf/forest.hpp"

namespace telerank::tripclf {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct MetricsReport {
  ConfusionCounts confusion;
  double accuracy = 0.0;
  double precision = 0.0;  // 0 when nothing is predicted positive
  double recall = 0.0;     // 0 when there are no positives
  double f1 = 0.0;
  std::optional<double> roc_auc;  // absent for single-class labels
};

// Mann-Whitney rank statistic with average ranks for ties.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels);

MetricsReport compute_metrics(std::span<const double> scores, std::span<const int> predicted,
                              std::span<const int> labels);

MetricsReport evaluate_classifier(const ForestModel& model, const FeatureMatrix& labeled);

}  // namespace telerank::tripclf
