#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "telerank/betamix/hmc.hpp"
#include "telerank/betamix/likelihood.hpp"
#include "telerank/betamix/params.hpp"
#include "telerank/betamix/posterior.hpp"

namespace telerank::betamix {

struct ChainDiagnostics {
  double accept_rate = 0.0;
  double step_size = 0.0;
  std::size_t divergences = 0;
};

struct PosteriorSamples {
  static constexpr int kSchemaVersion = 1;

  std::vector<MixtureParams> draws;   // pooled, chain-major
  std::vector<NaturalParams> natural;  // same order
  std::size_t chains = 0;
  std::size_t draws_per_chain = 0;
  std::vector<ChainDiagnostics> chain_diagnostics;
  std::array<double, kParamCount> rhat{};
  std::array<double, kParamCount> ess{};
  Hyperpriors priors;
  HmcConfig config;
  std::size_t policies = 0;

  std::array<double, kParamCount> posterior_mean() const;
  double max_rhat() const;

  nlohmann::json to_json() const;
  static PosteriorSamples from_json(const nlohmann::json& j);
};

// Fits the collapsed two-component Beta-Binomial mixture with HMC.
PosteriorSamples hmc_sample(std::span<const PolicyCounts> counts, const Hyperpriors& priors = {},
                            const HmcConfig& config = {});

// Mean responsibility over the posterior draws.
double posterior_predictive(int x, int y, std::span<const MixtureParams> draws);
double posterior_predictive(int x, int y, const PosteriorSamples& samples);

// Probability at which the score is zero: predictive membership with no trips.
double score_anchor(const PosteriorSamples& samples);

// Logit-linear display score: 0 at `anchor`, 3 at p = 0.99, clipped to
// [0, 10]. Requires 0 < anchor < 0.99.
double priority_score(double p, double anchor);

struct ScoreTable {
  int x_max = 0;
  int y_max = 0;
  double anchor = 0.0;
  // probability[x][y] and score[x][y] for y <= min(x, y_max).
  std::vector<std::vector<double>> probability;
  std::vector<std::vector<double>> score;

  std::optional<double> score_at(int x, int y) const;
  std::optional<double> probability_at(int x, int y) const;

  // `x,y,probability,score` lines with fixed six-decimal formatting.
  std::string render_csv() const;
  nlohmann::json to_json() const;
  static ScoreTable from_json(const nlohmann::json& j);
};

ScoreTable score_table(const PosteriorSamples& samples, int x_max, int y_max);

}  // namespace telerank::betamix
