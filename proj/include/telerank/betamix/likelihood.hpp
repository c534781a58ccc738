#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "telerank/betamix/params.hpp"

namespace telerank::betamix {

struct PolicyCounts {
  std::string policy_id;
  int x = 0;  // trips in the window
  int y = 0;  // positively classified trips

  bool valid() const noexcept { return x >= 0 && y >= 0 && y <= x; }
};

// CSV with header `policy_id,x,y`. Rows violating 0 <= y <= x throw.
std::vector<PolicyCounts> read_counts_csv(std::istream& in);
void write_counts_csv(std::ostream& out, std::span<const PolicyCounts> counts);

// Distinct (x, y) pairs with multiplicities; the mixture likelihood only
// depends on counts, so evaluating per cell is exact and much cheaper.
class CountHistogram {
 public:
  struct Cell {
    int x;
    int y;
    double weight;
    double log_choose;  // log C(x, y)
  };

  CountHistogram() = default;
  explicit CountHistogram(std::span<const PolicyCounts> counts);

  void add(int x, int y, double weight = 1.0);

  const std::vector<Cell>& cells() const noexcept { return cells_; }
  double total_weight() const noexcept { return total_; }
  bool empty() const noexcept { return cells_.empty(); }

 private:
  std::vector<Cell> cells_;
  double total_ = 0.0;
};

// log Gamma(a + n) - log Gamma(a)
double log_rising(double a, int n);
// digamma(a + n) - digamma(a)
double digamma_rising(double a, int n);
double log_choose(int n, int k);

// log of C(x, y) B(alpha + y, beta + x - y) / B(alpha, beta).
// Throws std::invalid_argument for y > x, negative counts or shapes <= 0.
double log_betabinomial(int y, int x, double alpha, double beta);

struct BetaBinomialTerm {
  double value;
  double d_alpha;
  double d_beta;
};

BetaBinomialTerm log_betabinomial_with_grad(int y, int x, double alpha, double beta);

// Sum over policies of log[theta BB(y; x, a1, b1) + (1 - theta) BB(y; x, a0, b0)].
// The trip-count term p(x) is omitted (constant in the parameters).
double log_likelihood(std::span<const PolicyCounts> counts, const MixtureParams& p);
double log_likelihood(const CountHistogram& h, const MixtureParams& p);

// Posterior probability of k = 1 for one policy under fixed parameters.
double responsibility(int x, int y, const MixtureParams& p);

}  // namespace telerank::betamix
