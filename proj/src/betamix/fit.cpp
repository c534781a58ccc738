#include "telerank/betamix/fit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace telerank::betamix {
namespace {

double logit(double p) { return std::log(p) - std::log1p(-p); }

// kept out of reach of constant folding: gcc folds log() with correctly rounded
// arithmetic, libm can be an ulp away, and score(0.99) has to come out as 3 exactly
[[gnu::noipa]] double runtime_logit(double p) { return logit(p); }

nlohmann::json priors_to_json(const Hyperpriors& h) {
  return {{"mu0", {h.mu0.a, h.mu0.b}},
          {"mu1", {h.mu1.a, h.mu1.b}},
          {"r0", {h.r0.shape, h.r0.rate}},
          {"r1", {h.r1.shape, h.r1.rate}},
          {"theta", {h.theta.a, h.theta.b}}};
}

Hyperpriors priors_from_json(const nlohmann::json& j) {
  Hyperpriors h;
  h.mu0 = {j.at("mu0").at(0).get<double>(), j.at("mu0").at(1).get<double>()};
  h.mu1 = {j.at("mu1").at(0).get<double>(), j.at("mu1").at(1).get<double>()};
  h.r0 = {j.at("r0").at(0).get<double>(), j.at("r0").at(1).get<double>()};
  h.r1 = {j.at("r1").at(0).get<double>(), j.at("r1").at(1).get<double>()};
  h.theta = {j.at("theta").at(0).get<double>(), j.at("theta").at(1).get<double>()};
  return h;
}

nlohmann::json config_to_json(const HmcConfig& c) {
  return {{"chains", c.chains},
          {"warmup", c.warmup},
          {"draws_per_chain", c.draws_per_chain},
          {"leapfrog_steps", c.leapfrog_steps},
          {"target_accept", c.target_accept},
          {"seed", c.seed},
          {"max_divergence_rate", c.max_divergence_rate},
          {"divergence_threshold", c.divergence_threshold},
          {"step_jitter", c.step_jitter}};
}

HmcConfig config_from_json(const nlohmann::json& j) {
  HmcConfig c;
  c.chains = j.at("chains").get<std::size_t>();
  c.warmup = j.at("warmup").get<std::size_t>();
  c.draws_per_chain = j.at("draws_per_chain").get<std::size_t>();
  c.leapfrog_steps = j.at("leapfrog_steps").get<std::size_t>();
  c.target_accept = j.at("target_accept").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.max_divergence_rate = j.value("max_divergence_rate", c.max_divergence_rate);
  c.divergence_threshold = j.value("divergence_threshold", c.divergence_threshold);
  c.step_jitter = j.value("step_jitter", c.step_jitter);
  return c;
}

}  // namespace

std::array<double, kParamCount> PosteriorSamples::posterior_mean() const {
  std::array<double, kParamCount> m{};
  if (natural.empty()) return m;
  for (const auto& n : natural) {
    for (std::size_t i = 0; i < kParamCount; ++i) m[i] += get(n, i);
  }
  for (auto& v : m) v /= static_cast<double>(natural.size());
  return m;
}

double PosteriorSamples::max_rhat() const {
  double r = 0.0;
  for (double v : rhat) r = std::isnan(v) ? r : std::max(r, v);
  return r;
}

nlohmann::json PosteriorSamples::to_json() const {
  nlohmann::json j;
  j["schema"] = "telerank.betamix";
  j["version"] = kSchemaVersion;
  j["chains"] = chains;
  j["draws_per_chain"] = draws_per_chain;
  j["policies"] = policies;
  j["priors"] = priors_to_json(priors);
  j["config"] = config_to_json(config);
  auto& diag = j["diagnostics"];
  diag["rhat"] = nlohmann::json::object();
  diag["ess"] = nlohmann::json::object();
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const std::string name(kParamNames[i]);
    diag["rhat"][name] = std::isfinite(rhat[i]) ? nlohmann::json(rhat[i]) : nlohmann::json(nullptr);
    diag["ess"][name] = std::isfinite(ess[i]) ? nlohmann::json(ess[i]) : nlohmann::json(nullptr);
  }
  diag["chains"] = nlohmann::json::array();
  for (const auto& c : chain_diagnostics) {
    diag["chains"].push_back({{"accept_rate", c.accept_rate}, {"step_size", c.step_size}, {"divergences", c.divergences}});
  }
  auto& d = j["draws"];
  d = nlohmann::json::array();
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto& p = draws[i];
    const auto& n = natural[i];
    d.push_back({{"mixture", {p.alpha0, p.beta0, p.alpha1, p.beta1, p.theta}},
                 {"natural", {n.mu0, n.mu1, n.r0, n.r1, n.theta}}});
  }
  return j;
}

PosteriorSamples PosteriorSamples::from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "telerank.betamix") throw std::runtime_error("not a betamix artifact");
  if (j.value("version", 0) != kSchemaVersion) {
    throw std::runtime_error("unsupported betamix artifact version " + std::to_string(j.value("version", 0)));
  }
  PosteriorSamples s;
  s.chains = j.at("chains").get<std::size_t>();
  s.draws_per_chain = j.at("draws_per_chain").get<std::size_t>();
  s.policies = j.value("policies", std::size_t{0});
  s.priors = priors_from_json(j.at("priors"));
  s.config = config_from_json(j.at("config"));
  const auto& diag = j.at("diagnostics");
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const std::string name(kParamNames[i]);
    const auto& r = diag.at("rhat").at(name);
    const auto& e = diag.at("ess").at(name);
    s.rhat[i] = r.is_null() ? std::numeric_limits<double>::quiet_NaN() : r.get<double>();
    s.ess[i] = e.is_null() ? std::numeric_limits<double>::quiet_NaN() : e.get<double>();
  }
  for (const auto& c : diag.at("chains")) {
    s.chain_diagnostics.push_back(
        {c.at("accept_rate").get<double>(), c.at("step_size").get<double>(), c.at("divergences").get<std::size_t>()});
  }
  for (const auto& d : j.at("draws")) {
    const auto& m = d.at("mixture");
    const auto& n = d.at("natural");
    MixtureParams p{m.at(0).get<double>(), m.at(1).get<double>(), m.at(2).get<double>(), m.at(3).get<double>(),
                    m.at(4).get<double>()};
    if (!p.valid()) throw std::runtime_error("artifact contains an invalid draw");
    s.draws.push_back(p);
    s.natural.push_back({n.at(0).get<double>(), n.at(1).get<double>(), n.at(2).get<double>(), n.at(3).get<double>(),
                         n.at(4).get<double>()});
  }
  if (s.draws.size() != s.chains * s.draws_per_chain) throw std::runtime_error("artifact draw count mismatch");
  return s;
}

PosteriorSamples hmc_sample(std::span<const PolicyCounts> counts, const Hyperpriors& priors, const HmcConfig& config) {
  if (counts.empty()) throw std::invalid_argument("hmc_sample needs at least one policy");
  if (!priors.valid()) throw std::invalid_argument("invalid hyperpriors");
  const CountHistogram hist(counts);

  LogDensity target;
  target.dim = kParamCount;
  target.eval = [&](std::span<const double> q, std::span<double> grad) {
    Unconstrained z;
    std::copy(q.begin(), q.end(), z.begin());
    return log_posterior_unconstrained(z, hist, priors, grad);
  };
  const Unconstrained center = to_unconstrained(
      {priors.mu0.mean(), priors.mu1.mean(), priors.r0.mean(), priors.r1.mean(), priors.theta.mean()});
  InitFn init = [center](Rng& rng) {
    std::vector<double> q(center.begin(), center.end());
    for (auto& v : q) v += uniform(rng, -0.5, 0.5);
    return q;
  };

  const HmcRun run = run_hmc(target, config, init);

  PosteriorSamples s;
  s.chains = config.chains;
  s.draws_per_chain = config.draws_per_chain;
  s.priors = priors;
  s.config = config;
  s.policies = counts.size();
  std::array<std::vector<std::vector<double>>, kParamCount> traces;
  for (auto& t : traces) t.resize(config.chains);
  for (std::size_t c = 0; c < run.chains.size(); ++c) {
    const auto& chain = run.chains[c];
    s.chain_diagnostics.push_back({chain.accept_rate, chain.step_size, chain.divergences});
    for (const auto& q : chain.draws) {
      Unconstrained z;
      std::copy(q.begin(), q.end(), z.begin());
      const NaturalParams n = from_unconstrained(z);
      s.natural.push_back(n);
      s.draws.push_back(from_natural(n));
      for (std::size_t i = 0; i < kParamCount; ++i) traces[i][c].push_back(get(n, i));
    }
  }
  for (std::size_t i = 0; i < kParamCount; ++i) {
    s.rhat[i] = split_rhat(traces[i]);
    s.ess[i] = effective_sample_size(traces[i]);
  }
  return s;
}

double posterior_predictive(int x, int y, std::span<const MixtureParams> draws) {
  if (draws.empty()) throw std::invalid_argument("posterior_predictive needs at least one draw");
  double sum = 0.0;
  for (const auto& p : draws) sum += responsibility(x, y, p);
  return sum / static_cast<double>(draws.size());
}

double posterior_predictive(int x, int y, const PosteriorSamples& samples) {
  return posterior_predictive(x, y, samples.draws);
}

double score_anchor(const PosteriorSamples& samples) { return posterior_predictive(0, 0, samples); }

double priority_score(double p, double anchor) {
  if (!(anchor > 0.0 && anchor < 0.99)) throw std::invalid_argument("score anchor must lie in (0, 0.99)");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability must lie in [0, 1]");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 10.0;
  const double la = runtime_logit(anchor);
  const double s = 3.0 * ((runtime_logit(p) - la) / (runtime_logit(0.99) - la));
  return std::clamp(s, 0.0, 10.0);
}

std::optional<double> ScoreTable::score_at(int x, int y) const {
  if (x < 0 || y < 0 || y > x || x > x_max || y > y_max) return std::nullopt;
  return score[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
}

std::optional<double> ScoreTable::probability_at(int x, int y) const {
  if (x < 0 || y < 0 || y > x || x > x_max || y > y_max) return std::nullopt;
  return probability[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
}

std::string ScoreTable::render_csv() const {
  std::string out = "x,y,probability,score\n";
  char buf[96];
  for (int x = 0; x <= x_max; ++x) {
    for (int y = 0; y <= std::min(x, y_max); ++y) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.6f\n", x, y, probability[x][y], score[x][y]);
      out += buf;
    }
  }
  return out;
}

nlohmann::json ScoreTable::to_json() const {
  return {{"x_max", x_max}, {"y_max", y_max}, {"anchor", anchor}, {"probability", probability}, {"score", score}};
}

ScoreTable ScoreTable::from_json(const nlohmann::json& j) {
  ScoreTable t;
  t.x_max = j.at("x_max").get<int>();
  t.y_max = j.at("y_max").get<int>();
  t.anchor = j.at("anchor").get<double>();
  t.probability = j.at("probability").get<std::vector<std::vector<double>>>();
  t.score = j.at("score").get<std::vector<std::vector<double>>>();
  if (t.probability.size() != static_cast<std::size_t>(t.x_max + 1) || t.score.size() != t.probability.size()) {
    throw std::runtime_error("score table shape mismatch");
  }
  return t;
}

ScoreTable score_table(const PosteriorSamples& samples, int x_max, int y_max) {
  if (x_max < 0 || y_max < 0) throw std::invalid_argument("score table bounds must be non-negative");
  ScoreTable t;
  t.x_max = x_max;
  t.y_max = y_max;
  t.anchor = score_anchor(samples);
  t.probability.resize(static_cast<std::size_t>(x_max) + 1);
  t.score.resize(static_cast<std::size_t>(x_max) + 1);
  for (int x = 0; x <= x_max; ++x) {
    for (int y = 0; y <= std::min(x, y_max); ++y) {
      const double p = posterior_predictive(x, y, samples);
      t.probability[x].push_back(p);
      t.score[x].push_back(x == 0 ? 0.0 : priority_score(p, t.anchor));
    }
  }
  return t;
}

}  // namespace telerank::betamix
