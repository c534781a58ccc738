#include "telerank/tripclf/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace telerank::tripclf {

std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels must align");
  const std::size_t n = scores.size();
  std::size_t pos = 0;
  for (int l : labels) pos += static_cast<std::size_t>(l);
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]]) rank_sum += avg_rank;
    }
    i = j + 1;
  }
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

MetricsReport compute_metrics(std::span<const double> scores, std::span<const int> predicted,
                              std::span<const int> labels) {
  if (predicted.size() != labels.size() || scores.size() != labels.size()) {
    throw std::invalid_argument("prediction and label counts differ");
  }
  MetricsReport r;
  auto& c = r.confusion;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predicted[i] && labels[i]) ++c.tp;
    else if (predicted[i] && !labels[i]) ++c.fp;
    else if (!predicted[i] && labels[i]) ++c.fn;
    else ++c.tn;
  }
  const auto n = static_cast<double>(labels.size());
  r.accuracy = n > 0 ? static_cast<double>(c.tp + c.tn) / n : 0.0;
  r.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  r.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  r.roc_auc = roc_auc(scores, labels);
  return r;
}

MetricsReport evaluate_classifier(const ForestModel& model, const FeatureMatrix& labeled) {
  if (!labeled.has_labels()) throw std::invalid_argument("evaluation matrix has no labels");
  std::vector<double> scores;
  std::vector<int> predicted;
  for (std::size_t i = 0; i < labeled.rows(); ++i) {
    const auto p = predict_row(model, labeled.row(i));
    scores.push_back(p.probability);
    predicted.push_back(p.label);
  }
  return compute_metrics(scores, predicted, labeled.labels());
}

}  // namespace telerank::tripclf
