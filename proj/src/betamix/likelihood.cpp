#include "telerank/betamix/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "special.hpp"
#include "telerank/util/csv.hpp"

namespace telerank::betamix {
namespace {

constexpr int kRecurrenceLimit = 8;

void check_counts(int x, int y) {
  if (x < 0 || y < 0 || y > x) {
    throw std::invalid_argument("counts must satisfy 0 <= y <= x (got x=" + std::to_string(x) +
                                ", y=" + std::to_string(y) + ")");
  }
}

void check_shapes(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::invalid_argument("Beta shapes must be positive and finite");
  }
}

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

std::vector<PolicyCounts> read_counts_csv(std::istream& in) {
  const CsvTable t = CsvTable::read(in);
  const auto id = t.column("policy_id");
  const auto xc = t.column("x");
  const auto yc = t.column("y");
  std::vector<PolicyCounts> out;
  out.reserve(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    PolicyCounts c{t.cell(r, id), static_cast<int>(t.integer(r, xc)), static_cast<int>(t.integer(r, yc))};
    if (!c.valid()) throw CsvError("row " + std::to_string(r + 2) + ": counts must satisfy 0 <= y <= x");
    out.push_back(std::move(c));
  }
  return out;
}

void write_counts_csv(std::ostream& out, std::span<const PolicyCounts> counts) {
  out << "policy_id,x,y\n";
  for (const auto& c : counts) out << c.policy_id << ',' << c.x << ',' << c.y << '\n';
}

double log_rising(double a, int n) {
  if (n <= kRecurrenceLimit) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += std::log(a + j);
    return s;
  }
  return detail::lgamma_pos(a + n) - detail::lgamma_pos(a);
}

double digamma_rising(double a, int n) {
  if (n <= kRecurrenceLimit) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += 1.0 / (a + j);
    return s;
  }
  return detail::digamma(a + n) - detail::digamma(a);
}

double log_choose(int n, int k) {
  return detail::lgamma_pos(n + 1.0) - detail::lgamma_pos(k + 1.0) - detail::lgamma_pos(n - k + 1.0);
}

CountHistogram::CountHistogram(std::span<const PolicyCounts> counts) {
  for (const auto& c : counts) add(c.x, c.y);
}

void CountHistogram::add(int x, int y, double weight) {
  check_counts(x, y);
  auto it = std::find_if(cells_.begin(), cells_.end(), [&](const Cell& c) { return c.x == x && c.y == y; });
  if (it == cells_.end()) {
    // Keep cells sorted by (x, y) so evaluation order is canonical.
    const auto pos = std::lower_bound(cells_.begin(), cells_.end(), std::make_pair(x, y),
                                      [](const Cell& c, const std::pair<int, int>& k) {
                                        return std::make_pair(c.x, c.y) < k;
                                      });
    cells_.insert(pos, Cell{x, y, weight, log_choose(x, y)});
  } else {
    it->weight += weight;
  }
  total_ += weight;
}

double log_betabinomial(int y, int x, double alpha, double beta) {
  check_counts(x, y);
  check_shapes(alpha, beta);
  return log_choose(x, y) + log_rising(alpha, y) + log_rising(beta, x - y) - log_rising(alpha + beta, x);
}

BetaBinomialTerm log_betabinomial_with_grad(int y, int x, double alpha, double beta) {
  check_counts(x, y);
  check_shapes(alpha, beta);
  const double common = digamma_rising(alpha + beta, x);
  return {log_choose(x, y) + log_rising(alpha, y) + log_rising(beta, x - y) - log_rising(alpha + beta, x),
          digamma_rising(alpha, y) - common, digamma_rising(beta, x - y) - common};
}

double log_likelihood(const CountHistogram& h, const MixtureParams& p) {
  if (!p.valid()) throw std::invalid_argument("invalid mixture parameters");
  double total = 0.0;
  const double log_theta = std::log(p.theta);
  const double log_1m_theta = std::log1p(-p.theta);
  for (const auto& c : h.cells()) {
    double term;
    if (p.theta == 0.0) {
      term = log_betabinomial(c.y, c.x, p.alpha0, p.beta0);
    } else if (p.theta == 1.0) {
      term = log_betabinomial(c.y, c.x, p.alpha1, p.beta1);
    } else {
      term = log_add(log_theta + log_betabinomial(c.y, c.x, p.alpha1, p.beta1),
                     log_1m_theta + log_betabinomial(c.y, c.x, p.alpha0, p.beta0));
    }
    total += c.weight * term;
  }
  return total;
}

double log_likelihood(std::span<const PolicyCounts> counts, const MixtureParams& p) {
  if (!p.valid()) throw std::invalid_argument("invalid mixture parameters");
  double total = 0.0;
  for (const auto& c : counts) {
    check_counts(c.x, c.y);
    CountHistogram single;
    single.add(c.x, c.y);
    total += log_likelihood(single, p);
  }
  return total;
}

double responsibility(int x, int y, const MixtureParams& p) {
  if (!p.valid()) throw std::invalid_argument("invalid mixture parameters");
  if (p.theta == 0.0) return 0.0;
  if (p.theta == 1.0) return 1.0;
  const double l1 = std::log(p.theta) + log_betabinomial(y, x, p.alpha1, p.beta1);
  const double l0 = std::log1p(-p.theta) + log_betabinomial(y, x, p.alpha0, p.beta0);
  // 1 / (1 + exp(l0 - l1)), written to stay finite for extreme ratios.
  const double d = l0 - l1;
  return d > 0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
}

}  // namespace telerank::betamix
