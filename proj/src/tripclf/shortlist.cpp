#include "telerank/tripclf/shortlist.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <stdexcept>

namespace telerank::tripclf {
namespace {

Eigen::MatrixXd to_eigen(const FeatureMatrix& m) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m.at(i, j);
  }
  return x;
}

}  // namespace

PcaResult pca(const FeatureMatrix& m, std::size_t dims) {
  if (dims == 0 || dims > m.cols()) throw std::invalid_argument("pca_dims must be in [1, feature count]");
  if (m.rows() < 2) throw std::invalid_argument("pca needs at least two rows");
  const Eigen::MatrixXd x = to_eigen(m);
  PcaResult r;
  r.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - r.mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(m.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("covariance eigendecomposition failed");
  // Eigen returns ascending eigenvalues.
  const Eigen::Index p = cov.rows();
  r.eigenvalues = solver.eigenvalues().reverse();
  r.components.resize(p, static_cast<Eigen::Index>(dims));
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(dims); ++k) {
    Eigen::VectorXd v = solver.eigenvectors().col(p - 1 - k);
    // Sign convention: largest-magnitude loading positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    r.components.col(k) = v;
  }
  r.projected = centered * r.components;
  return r;
}

double reconstruction_error(const FeatureMatrix& m, const PcaResult& p) {
  const Eigen::MatrixXd x = to_eigen(m);
  const Eigen::MatrixXd centered = x.rowwise() - p.mean.transpose();
  const Eigen::MatrixXd recon = p.projected * p.components.transpose();
  return (centered - recon).squaredNorm() / static_cast<double>(m.rows());
}

std::vector<int> dbscan(const Eigen::MatrixXd& points, double eps, std::size_t min_pts) {
  if (!(eps > 0.0)) throw std::invalid_argument("dbscan eps must be positive");
  if (min_pts == 0) throw std::invalid_argument("dbscan min_pts must be positive");
  const auto n = static_cast<std::size_t>(points.rows());
  const double eps2 = eps * eps;
  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if ((points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).squaredNorm() <= eps2) {
        neighbors[i].push_back(j);
      }
    }
  }
  constexpr int kUnvisited = -2;
  std::vector<int> labels(n, kUnvisited);
  int cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != kUnvisited) continue;
    if (neighbors[i].size() < min_pts) {
      labels[i] = kNoise;
      continue;
    }
    labels[i] = cluster;
    std::deque<std::size_t> frontier(neighbors[i].begin(), neighbors[i].end());
    while (!frontier.empty()) {
      const std::size_t q = frontier.front();
      frontier.pop_front();
      if (labels[q] == kNoise) labels[q] = cluster;  // border point
      if (labels[q] != kUnvisited) continue;
      labels[q] = cluster;
      if (neighbors[q].size() >= min_pts) {
        frontier.insert(frontier.end(), neighbors[q].begin(), neighbors[q].end());
      }
    }
    ++cluster;
  }
  return labels;
}

std::vector<double> k_distances(const Eigen::MatrixXd& points, std::size_t k) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0 || k >= n) throw std::invalid_argument("k must be in [1, n - 1]");
  std::vector<double> out;
  out.reserve(n);
  std::vector<double> d(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t w = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      d[w++] = (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).norm();
    }
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
    out.push_back(d[k - 1]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double suggest_eps(const Eigen::MatrixXd& points, std::size_t k) {
  const auto kd = k_distances(points, k);
  const std::size_t n = kd.size();
  const double x0 = 0.0, y0 = kd.front();
  const double x1 = static_cast<double>(n - 1), y1 = kd.back();
  const double len = std::hypot(x1 - x0, y1 - y0);
  if (len == 0.0 || y1 == y0) {
    // All k-distances equal (possibly zero): any positive eps covering them.
    return y1 > 0.0 ? y1 : 1e-9;
  }
  std::size_t best = n - 1;
  double best_dist = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    // Distance below the chord; the knee of a convex increasing curve.
    const double dist = ((y1 - y0) * (static_cast<double>(i) - x0) - (x1 - x0) * (kd[i] - y0)) / len;
    if (dist > best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return std::max(kd[best], 1e-9);
}

double stable_eps(const Eigen::MatrixXd& points, std::size_t min_pts, std::size_t candidates) {
  const std::size_t k = std::max<std::size_t>(1, min_pts - 1);
  const auto kd = k_distances(points, k);
  const double lo = std::max(kd[kd.size() / 2], 1e-9);
  const double hi = std::max(kd.back(), lo);
  if (hi <= lo * (1 + 1e-12) || candidates < 2) return suggest_eps(points, k);

  // Geometric grid over the upper half of the k-distance curve; the cluster
  // count is tracked along it and the longest constant stretch (in log eps)
  // with at least two clusters wins.
  std::vector<double> grid(candidates);
  std::vector<int> count(candidates);
  for (std::size_t i = 0; i < candidates; ++i) {
    grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(candidates - 1));
    const auto labels = dbscan(points, grid[i], min_pts);
    count[i] = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  }
  std::size_t best_begin = 0, best_end = 0;
  double best_span = -1.0;
  for (std::size_t a = 0; a < candidates;) {
    std::size_t b = a;
    while (b + 1 < candidates && count[b + 1] == count[a]) ++b;
    const double span = std::log(grid[b] / grid[a]);
    if (count[a] >= 2 && span > best_span) {
      best_span = span;
      best_begin = a;
      best_end = b;
    }
    a = b + 1;
  }
  if (best_span < 0.0) return suggest_eps(points, k);
  return std::sqrt(grid[best_begin] * grid[best_end]);
}

ShortlistResult shortlist_clusters(const FeatureMatrix& standardized, std::size_t pca_dims, double eps,
                                   std::size_t min_pts) {
  ShortlistResult r;
  r.projection = pca(standardized, pca_dims);
  r.eps = eps > 0.0 ? eps : stable_eps(r.projection.projected, min_pts);
  r.labels = dbscan(r.projection.projected, r.eps, min_pts);
  int max_label = kNoise;
  for (int l : r.labels) max_label = std::max(max_label, l);
  r.cluster_count = static_cast<std::size_t>(max_label + 1);
  return r;
}

int select_review_cluster(const std::vector<int>& labels, const FeatureMatrix& raw, std::size_t column) {
  if (labels.size() != raw.rows()) throw std::invalid_argument("label count does not match matrix rows");
  std::map<int, std::pair<double, std::size_t>> sums;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kNoise) continue;
    auto& s = sums[labels[i]];
    s.first += raw.at(i, column);
    s.second += 1;
  }
  int best = kNoise;
  double best_mean = -std::numeric_limits<double>::infinity();
  for (const auto& [label, s] : sums) {
    const double mean = s.first / static_cast<double>(s.second);
    if (mean > best_mean) {
      best_mean = mean;
      best = label;
    }
  }
  return best;
}

}  // namespace telerank::tripclf
