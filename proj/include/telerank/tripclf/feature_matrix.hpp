#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "telerank/trip_features.hpp"

namespace telerank::tripclf {

// Row-major feature table with parallel trip ids and optional 0/1 labels.
// Either every row is labeled or none is.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(std::size_t cols = geo::kFeatureCount) : cols_(cols) {}

  void add_row(std::span<const double> values, std::string id, std::optional<int> label = std::nullopt);

  std::size_t rows() const noexcept { return ids_.size(); }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return ids_.empty(); }

  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
  double at(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  double& at(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  bool has_labels() const noexcept { return !ids_.empty() && labels_.size() == ids_.size(); }
  const std::vector<int>& labels() const noexcept { return labels_; }

  bool all_finite() const noexcept;

  // Feature rows in file order; when `labels` is given every trip must be
  // present in it.
  static FeatureMatrix from_feature_rows(const std::vector<geo::FeatureRow>& rows,
                                         const std::map<std::string, int>* labels = nullptr);

 private:
  std::size_t cols_;
  std::vector<double> data_;
  std::vector<std::string> ids_;
  std::vector<int> labels_;
};

// Per-column affine map to zero mean and unit (population) standard
// deviation. Constant columns record std = 0 and map to 0.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::vector<double> apply(std::span<const double> row) const;
  std::vector<double> invert(std::span<const double> row) const;
  FeatureMatrix apply(const FeatureMatrix& m) const;
};

struct Standardized {
  FeatureMatrix matrix;
  Standardizer transform;
};

Standardized standardize(const FeatureMatrix& m);

}  // namespace telerank::tripclf
