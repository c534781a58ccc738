#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "telerank/util/random.hpp"

namespace telerank::betamix {

// Log density with gradient: returns log p(q) and writes d log p / dq.
struct LogDensity {
  std::size_t dim = 0;
  std::function<double(std::span<const double>, std::span<double>)> eval;
};

struct HmcConfig {
  std::size_t chains = 4;
  std::size_t warmup = 1000;
  std::size_t draws_per_chain = 1250;
  std::size_t leapfrog_steps = 32;
  double target_accept = 0.8;
  std::uint64_t seed = 20240101;
  double max_divergence_rate = 0.10;
  double divergence_threshold = 1000.0;  // energy error marking a divergent transition
  std::size_t max_init_attempts = 100;
  double step_jitter = 0.1;  // post-warmup step size ~ eps * U(1 - j, 1 + j)
  bool parallel = true;
};

using InitFn = std::function<std::vector<double>(Rng&)>;

struct ChainResult {
  std::vector<std::vector<double>> draws;
  double step_size = 0.0;
  double accept_rate = 0.0;  // mean Metropolis acceptance probability after warmup
  std::size_t divergences = 0;
};

struct HmcRun {
  std::vector<ChainResult> chains;
  std::size_t divergences() const noexcept;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One trajectory of `steps` leapfrog steps from (q, p). `grad` and `logp` hold
// the gradient and density at q on entry and at the end point on exit.
// Returns false if a non-finite density or gradient was met.
bool leapfrog(const LogDensity& target, std::vector<double>& q, std::vector<double>& p, std::vector<double>& grad,
              double& logp, double step_size, std::size_t steps);

// Identity-mass HMC with dual-averaging step-size adaptation during warmup.
// Chains use independent RNG streams derived from the seed, so results do
// not depend on `parallel`. Throws FitError when the post-warmup divergence
// rate exceeds the configured maximum or no finite initial point is found.
HmcRun run_hmc(const LogDensity& target, const HmcConfig& config, const InitFn& init);

// Split-R-hat over chains of one scalar quantity.
double split_rhat(const std::vector<std::vector<double>>& chains);

// Multi-chain effective sample size (split chains, Geyer initial monotone
// sequence).
double effective_sample_size(const std::vector<std::vector<double>>& chains);

}  // namespace telerank::betamix
