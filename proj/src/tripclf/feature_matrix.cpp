#include "telerank/tripclf/feature_matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace telerank::tripclf {

void FeatureMatrix::add_row(std::span<const double> values, std::string id, std::optional<int> label) {
  if (values.size() != cols_) throw std::invalid_argument("row width does not match matrix columns");
  if (!ids_.empty() && label.has_value() != has_labels()) {
    throw std::invalid_argument("either every row is labeled or none is");
  }
  if (label && *label != 0 && *label != 1) throw std::invalid_argument("labels must be 0 or 1");
  data_.insert(data_.end(), values.begin(), values.end());
  ids_.push_back(std::move(id));
  if (label) labels_.push_back(*label);
}

bool FeatureMatrix::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

FeatureMatrix FeatureMatrix::from_feature_rows(const std::vector<geo::FeatureRow>& rows,
                                               const std::map<std::string, int>* labels) {
  FeatureMatrix m(geo::kFeatureCount);
  for (const auto& r : rows) {
    const auto values = r.features.as_array();
    std::optional<int> label;
    if (labels) {
      const auto it = labels->find(r.trip_id);
      if (it == labels->end()) throw std::invalid_argument("no label for trip " + r.trip_id);
      label = it->second;
    }
    m.add_row(values, r.trip_id, label);
  }
  return m;
}

std::vector<double> Standardizer::apply(std::span<const double> row) const {
  if (row.size() != mean.size()) throw std::invalid_argument("row width does not match standardizer");
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = stddev[j] > 0.0 ? (row[j] - mean[j]) / stddev[j] : 0.0;
  return out;
}

std::vector<double> Standardizer::invert(std::span<const double> row) const {
  if (row.size() != mean.size()) throw std::invalid_argument("row width does not match standardizer");
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = row[j] * stddev[j] + mean[j];
  return out;
}

FeatureMatrix Standardizer::apply(const FeatureMatrix& m) const {
  FeatureMatrix out(m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::optional<int> label;
    if (m.has_labels()) label = m.labels()[i];
    out.add_row(apply(m.row(i)), m.ids()[i], label);
  }
  return out;
}

Standardized standardize(const FeatureMatrix& m) {
  if (m.rows() < 2) throw std::invalid_argument("standardize needs at least two rows");
  const auto n = static_cast<double>(m.rows());
  Standardizer t;
  t.mean.assign(m.cols(), 0.0);
  t.stddev.assign(m.cols(), 0.0);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) sum += m.at(i, j);
    const double mu = sum / n;
    double ss = 0.0;
    bool constant = true;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double d = m.at(i, j) - mu;
      ss += d * d;
      constant = constant && m.at(i, j) == m.at(0, j);
    }
    t.mean[j] = mu;
    t.stddev[j] = constant ? 0.0 : std::sqrt(ss / n);
  }
  FeatureMatrix out = t.apply(m);
  if (!out.all_finite()) throw std::invalid_argument("non-finite value after standardization");
  return {std::move(out), std::move(t)};
}

}  // namespace telerank::tripclf
