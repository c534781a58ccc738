#include "telerank/tripclf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <thread>

#include "telerank/util/random.hpp"

namespace telerank::tripclf {

using nlohmann::json;

double DecisionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace {

double gini(std::size_t pos, std::size_t n) {
  if (n == 0) return 0.0;
  const double p = static_cast<double>(pos) / static_cast<double>(n);
  return 2.0 * p * (1.0 - p);
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& m, const std::vector<int>& labels, const ForestParams& params, std::uint64_t seed)
      : m_(m), labels_(labels), params_(params), rng_(seed) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> rows, int depth) {
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::size_t pos = 0;
    for (std::size_t r : rows) pos += static_cast<std::size_t>(labels_[r]);
    const std::size_t n = rows.size();
    tree_.nodes[static_cast<std::size_t>(index)].value = n ? static_cast<double>(pos) / static_cast<double>(n) : 0.0;
    if (depth >= params_.max_depth || pos == 0 || pos == n || n < 2 * params_.min_leaf) return index;

    const double parent = gini(pos, n);
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::uniform_int_distribution<int> pick_feature(0, static_cast<int>(m_.cols()) - 1);
    for (std::size_t c = 0; c < params_.split_candidates; ++c) {
      const int f = pick_feature(rng_);
      double lo = m_.at(rows[0], static_cast<std::size_t>(f)), hi = lo;
      for (std::size_t r : rows) {
        lo = std::min(lo, m_.at(r, static_cast<std::size_t>(f)));
        hi = std::max(hi, m_.at(r, static_cast<std::size_t>(f)));
      }
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
      if (!(hi > lo)) continue;
      const double t = lo + u * (hi - lo);
      std::size_t nl = 0, pl = 0;
      for (std::size_t r : rows) {
        if (m_.at(r, static_cast<std::size_t>(f)) < t) {
          ++nl;
          pl += static_cast<std::size_t>(labels_[r]);
        }
      }
      const std::size_t nr = n - nl;
      if (nl < params_.min_leaf || nr < params_.min_leaf) continue;
      const double child = (static_cast<double>(nl) * gini(pl, nl) + static_cast<double>(nr) * gini(pos - pl, nr)) /
                           static_cast<double>(n);
      const double gain = parent - child;
      if (gain > best_gain) {
        best_gain = gain;
        best_feature = f;
        best_threshold = t;
      }
    }
    if (best_feature < 0) return index;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (m_.at(r, static_cast<std::size_t>(best_feature)) < best_threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int rr = grow(std::move(right), depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = rr;
    return index;
  }

  const FeatureMatrix& m_;
  const std::vector<int>& labels_;
  const ForestParams& params_;
  Rng rng_;
  DecisionTree tree_;
};

bool has_both_classes(const std::vector<int>& labels, const std::vector<std::size_t>& rows) {
  bool zero = false, one = false;
  for (std::size_t r : rows) (labels[r] ? one : zero) = true;
  return zero && one;
}

}  // namespace

double ForestModel::predict_proba(std::span<const double> x) const {
  if (x.size() != n_features) throw std::invalid_argument("feature vector width does not match model");
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
  }
  if (trees.empty()) throw ModelError("model has no trees");
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return sum / static_cast<double>(trees.size());
}

double select_f1_threshold(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty()) throw std::invalid_argument("scores and labels must align");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t positives = 0;
  for (int l : labels) positives += static_cast<std::size_t>(l);
  if (positives == 0) return 1.0;

  double best_f1 = -1.0;
  double best_t = 0.5;
  std::size_t tp = 0, predicted = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    tp += static_cast<std::size_t>(labels[order[k]]);
    ++predicted;
    const bool boundary = k + 1 == order.size() || scores[order[k + 1]] < scores[order[k]];
    if (!boundary) continue;
    const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(predicted + positives);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = k + 1 == order.size() ? scores[order[k]] : 0.5 * (scores[order[k]] + scores[order[k + 1]]);
    }
  }
  return best_t;
}

ForestModel train_forest(const FeatureMatrix& labeled, const ForestParams& params) {
  if (!labeled.has_labels()) throw std::invalid_argument("training matrix has no labels");
  if (!labeled.all_finite()) throw std::invalid_argument("training matrix has non-finite values");
  if (params.n_trees == 0 || params.max_depth < 0 || params.min_leaf == 0) throw std::invalid_argument("bad forest parameters");
  if (labeled.rows() < 2 * params.min_leaf) throw std::invalid_argument("fewer rows than 2 * min_leaf");
  const auto& labels = labeled.labels();
  std::vector<std::size_t> all(labeled.rows());
  std::iota(all.begin(), all.end(), 0);
  if (!has_both_classes(labels, all)) throw std::invalid_argument("training labels contain a single class");

  // Holdout membership is a function of (seed, row id) only, so the split
  // does not depend on row order.
  std::vector<std::size_t> fit_rows, holdout_rows;
  for (std::size_t i = 0; i < labeled.rows(); ++i) {
    const double u = static_cast<double>(derive_seed(params.seed, "holdout:" + labeled.ids()[i]) >> 11) * 0x1.0p-53;
    (u < params.holdout_fraction ? holdout_rows : fit_rows).push_back(i);
  }
  const bool use_holdout = has_both_classes(labels, holdout_rows) && has_both_classes(labels, fit_rows) &&
                           fit_rows.size() >= 2 * params.min_leaf;
  if (!use_holdout) {
    fit_rows = all;
    holdout_rows = all;
  }

  ForestModel model;
  model.params = params;
  model.n_features = labeled.cols();
  if (labeled.cols() == geo::kFeatureCount) {
    for (auto name : geo::kFeatureNames) model.feature_names.emplace_back(name);
  } else {
    for (std::size_t j = 0; j < labeled.cols(); ++j) model.feature_names.push_back("f" + std::to_string(j));
  }
  if (labeled.rows() >= 2) model.standardizer = standardize(labeled).transform;

  model.trees.resize(params.n_trees);
  const std::size_t workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 16u));
  auto train_range = [&](std::size_t worker) {
    for (std::size_t t = worker; t < params.n_trees; t += workers) {
      TreeBuilder builder(labeled, labels, params, derive_seed(params.seed, static_cast<std::uint64_t>(t)));
      model.trees[t] = builder.build(fit_rows);
    }
  };
  if (workers == 1) {
    train_range(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(train_range, w);
  }

  std::vector<double> scores;
  std::vector<int> holdout_labels;
  for (std::size_t r : holdout_rows) {
    scores.push_back(model.predict_proba(labeled.row(r)));
    holdout_labels.push_back(labels[r]);
  }
  model.decision_threshold = select_f1_threshold(scores, holdout_labels);
  return model;
}

TripPrediction predict_row(const ForestModel& model, std::span<const double> x) {
  TripPrediction p;
  p.probability = model.predict_proba(x);
  p.label = p.probability >= model.decision_threshold ? 1 : 0;
  return p;
}

TripPrediction predict_trip(const ForestModel& model, const geo::TripFeatures& features) {
  const auto x = features.as_array();
  return predict_row(model, x);
}

std::string ForestModel::digest() const {
  std::uint64_t h = hash_string("telerank.tripclf");
  auto mix = [&](double v) {
    std::uint64_t bits = 0;
    static_assert(sizeof bits == sizeof v);
    std::memcpy(&bits, &v, sizeof v);
    h = splitmix64(h ^ bits);
  };
  for (const auto& t : trees) {
    for (const auto& n : t.nodes) {
      mix(n.feature);
      mix(n.threshold);
      mix(n.left);
      mix(n.right);
      mix(n.value);
    }
  }
  mix(decision_threshold);
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json ForestModel::to_json() const {
  json trees_json = json::array();
  for (const auto& t : trees) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         value = json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    trees_json.push_back(
        {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}});
  }
  std::string names;
  for (const auto& n : feature_names) names += n + ";";
  char schema_hash[24];
  std::snprintf(schema_hash, sizeof schema_hash, "%016llx", static_cast<unsigned long long>(hash_string(names)));
  return json{{"schema", "telerank.tripclf"},
              {"version", kSchemaVersion},
              {"schema_hash", schema_hash},
              {"feature_names", feature_names},
              {"params",
               {{"n_trees", params.n_trees},
                {"max_depth", params.max_depth},
                {"min_leaf", params.min_leaf},
                {"split_candidates", params.split_candidates},
                {"seed", params.seed},
                {"holdout_fraction", params.holdout_fraction}}},
              {"decision_threshold", decision_threshold},
              {"standardizer", {{"mean", standardizer.mean}, {"std", standardizer.stddev}}},
              {"digest", digest()},
              {"trees", trees_json}};
}

ForestModel ForestModel::from_json(const json& j) {
  try {
    if (j.at("schema") != "telerank.tripclf") throw ModelError("not a trip classifier document");
    if (j.at("version").get<int>() != kSchemaVersion) throw ModelError("unsupported trip classifier version");
    ForestModel m;
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.n_features = m.feature_names.size();
    const auto& p = j.at("params");
    m.params.n_trees = p.at("n_trees").get<std::size_t>();
    m.params.max_depth = p.at("max_depth").get<int>();
    m.params.min_leaf = p.at("min_leaf").get<std::size_t>();
    m.params.split_candidates = p.at("split_candidates").get<std::size_t>();
    m.params.seed = p.at("seed").get<std::uint64_t>();
    m.params.holdout_fraction = p.at("holdout_fraction").get<double>();
    m.decision_threshold = j.at("decision_threshold").get<double>();
    m.standardizer.mean = j.at("standardizer").at("mean").get<std::vector<double>>();
    m.standardizer.stddev = j.at("standardizer").at("std").get<std::vector<double>>();
    for (const auto& tj : j.at("trees")) {
      DecisionTree t;
      const auto feature = tj.at("feature").get<std::vector<int>>();
      const auto threshold = tj.at("threshold").get<std::vector<double>>();
      const auto left = tj.at("left").get<std::vector<int>>();
      const auto right = tj.at("right").get<std::vector<int>>();
      const auto value = tj.at("value").get<std::vector<double>>();
      const std::size_t n = feature.size();
      if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n || n == 0) {
        throw ModelError("inconsistent tree arrays");
      }
      for (std::size_t i = 0; i < n; ++i) {
        const TreeNode node{feature[i], threshold[i], left[i], right[i], value[i]};
        if (node.value < 0.0 || node.value > 1.0) throw ModelError("leaf fraction outside [0, 1]");
        if (node.feature >= static_cast<int>(m.n_features)) throw ModelError("tree references unknown feature");
        if (node.feature >= 0 && (node.left <= static_cast<int>(i) || node.right <= static_cast<int>(i) ||
                                  node.left >= static_cast<int>(n) || node.right >= static_cast<int>(n))) {
          throw ModelError("tree child index out of range");
        }
        t.nodes.push_back(node);
      }
      m.trees.push_back(std::move(t));
    }
    if (j.contains("digest") && j.at("digest").get<std::string>() != m.digest()) {
      throw ModelError("model digest mismatch");
    }
    return m;
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed trip classifier document: ") + e.what());
  }
}

}  // namespace telerank::tripclf
