#include "telerank/betamix/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

namespace telerank::betamix {
namespace {

struct State {
  std::vector<double> q;
  std::vector<double> grad;
  double logp = 0.0;
};

double kinetic(const std::vector<double>& p) {
  double k = 0.0;
  for (double v : p) k += v * v;
  return 0.5 * k;
}

struct Transition {
  double accept_prob = 0.0;
  bool divergent = false;
};

// One HMC step from `state` (updated in place on acceptance).
Transition hmc_step(const LogDensity& target, State& state, double eps, std::size_t steps, double threshold,
                    Rng& rng) {
  std::vector<double> p(target.dim);
  for (auto& v : p) v = normal(rng);
  const double h0 = -state.logp + kinetic(p);

  State next = state;
  const bool finite = leapfrog(target, next.q, p, next.grad, next.logp, eps, steps);
  const double h1 = finite ? -next.logp + kinetic(p) : std::numeric_limits<double>::infinity();
  const double err = h1 - h0;

  Transition t;
  if (!std::isfinite(err) || err > threshold) {
    t.divergent = true;
    t.accept_prob = 0.0;
  } else {
    t.accept_prob = std::min(1.0, std::exp(-err));
  }
  // Always draw the uniform so the stream does not depend on the branch.
  const double u = uniform(rng, 0.0, 1.0);
  if (!t.divergent && u < t.accept_prob) state = std::move(next);
  return t;
}

double find_reasonable_epsilon(const LogDensity& target, const State& state, Rng& rng) {
  double eps = 1.0;
  auto accept_at = [&](double e) {
    std::vector<double> p(target.dim);
    for (auto& v : p) v = normal(rng);
    const double h0 = -state.logp + kinetic(p);
    State s = state;
    if (!leapfrog(target, s.q, p, s.grad, s.logp, e, 1)) return 0.0;
    const double h1 = -s.logp + kinetic(p);
    return std::isfinite(h1) ? std::exp(std::min(0.0, h0 - h1)) : 0.0;
  };
  double a = accept_at(eps);
  const double dir = a > 0.5 ? 1.0 : -1.0;
  for (int i = 0; i < 100; ++i) {
    if (dir > 0 ? !(a > 0.5) : !(a < 0.5)) break;
    eps *= std::pow(2.0, dir);
    a = accept_at(eps);
  }
  return std::clamp(eps, 1e-8, 1e3);
}

ChainResult run_chain(const LogDensity& target, const HmcConfig& cfg, const InitFn& init, std::size_t chain) {
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(chain)));

  State state;
  bool ok = false;
  for (std::size_t attempt = 0; attempt < std::max<std::size_t>(1, cfg.max_init_attempts); ++attempt) {
    state.q = init(rng);
    if (state.q.size() != target.dim) throw std::invalid_argument("init returned a point of the wrong dimension");
    state.grad.assign(target.dim, 0.0);
    state.logp = target.eval(state.q, state.grad);
    ok = std::isfinite(state.logp) &&
         std::all_of(state.grad.begin(), state.grad.end(), [](double g) { return std::isfinite(g); });
    if (ok) break;
  }
  if (!ok) {
    throw FitError("chain " + std::to_string(chain) + ": no finite initial point after " +
                   std::to_string(cfg.max_init_attempts) + " attempts");
  }

  double eps = find_reasonable_epsilon(target, state, rng);

  // Dual averaging of log step size.
  constexpr double kGamma = 0.05, kT0 = 10.0, kKappa = 0.75;
  const double mu = std::log(10.0 * eps);
  double h_bar = 0.0;
  double log_eps_bar = std::log(eps);
  for (std::size_t m = 1; m <= cfg.warmup; ++m) {
    const Transition t = hmc_step(target, state, eps, cfg.leapfrog_steps, cfg.divergence_threshold, rng);
    const double md = static_cast<double>(m);
    h_bar = (1.0 - 1.0 / (md + kT0)) * h_bar + (cfg.target_accept - t.accept_prob) / (md + kT0);
    const double log_eps = mu - std::sqrt(md) / kGamma * h_bar;
    const double eta = std::pow(md, -kKappa);
    log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar;
    eps = std::exp(log_eps);
  }
  if (cfg.warmup > 0) eps = std::exp(log_eps_bar);

  ChainResult result;
  result.step_size = eps;
  result.draws.reserve(cfg.draws_per_chain);
  double accept_sum = 0.0;
  for (std::size_t i = 0; i < cfg.draws_per_chain; ++i) {
    const double jitter = cfg.step_jitter > 0 ? uniform(rng, 1.0 - cfg.step_jitter, 1.0 + cfg.step_jitter) : 1.0;
    const Transition t = hmc_step(target, state, eps * jitter, cfg.leapfrog_steps, cfg.divergence_threshold, rng);
    accept_sum += t.accept_prob;
    if (t.divergent) ++result.divergences;
    result.draws.push_back(state.q);
  }
  result.accept_rate = cfg.draws_per_chain ? accept_sum / static_cast<double>(cfg.draws_per_chain) : 0.0;
  return result;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

std::vector<std::vector<double>> split_chains(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    if (half == 0) continue;
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

}  // namespace

std::size_t HmcRun::divergences() const noexcept {
  std::size_t d = 0;
  for (const auto& c : chains) d += c.divergences;
  return d;
}

bool leapfrog(const LogDensity& target, std::vector<double>& q, std::vector<double>& p, std::vector<double>& grad,
              double& logp, double step_size, std::size_t steps) {
  const std::size_t d = target.dim;
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < d; ++i) p[i] += 0.5 * step_size * grad[i];
    for (std::size_t i = 0; i < d; ++i) q[i] += step_size * p[i];
    logp = target.eval(q, grad);
    if (!std::isfinite(logp)) return false;
    for (std::size_t i = 0; i < d; ++i) {
      if (!std::isfinite(grad[i])) return false;
      p[i] += 0.5 * step_size * grad[i];
    }
  }
  return true;
}

HmcRun run_hmc(const LogDensity& target, const HmcConfig& config, const InitFn& init) {
  if (target.dim == 0 || !target.eval) throw std::invalid_argument("empty target density");
  if (config.chains == 0) throw std::invalid_argument("at least one chain is required");
  if (config.leapfrog_steps == 0) throw std::invalid_argument("leapfrog_steps must be positive");
  if (!(config.target_accept > 0.0 && config.target_accept < 1.0)) {
    throw std::invalid_argument("target_accept must lie in (0, 1)");
  }

  HmcRun run;
  run.chains.resize(config.chains);
  std::vector<std::exception_ptr> errors(config.chains);
  auto work = [&](std::size_t c) {
    try {
      run.chains[c] = run_chain(target, config, init, c);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (config.parallel && config.chains > 1 && std::thread::hardware_concurrency() > 1) {
    std::vector<std::jthread> workers;
    for (std::size_t c = 0; c < config.chains; ++c) workers.emplace_back(work, c);
  } else {
    for (std::size_t c = 0; c < config.chains; ++c) work(c);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const std::size_t total = config.chains * config.draws_per_chain;
  const std::size_t div = run.divergences();
  if (total > 0 && static_cast<double>(div) > config.max_divergence_rate * static_cast<double>(total)) {
    std::string report = "divergence rate " + std::to_string(static_cast<double>(div) / static_cast<double>(total)) +
                         " exceeds " + std::to_string(config.max_divergence_rate) + "; per chain:";
    for (std::size_t c = 0; c < run.chains.size(); ++c) {
      report += " [" + std::to_string(c) + ": divergences=" + std::to_string(run.chains[c].divergences) +
                " step=" + std::to_string(run.chains[c].step_size) +
                " accept=" + std::to_string(run.chains[c].accept_rate) + "]";
    }
    throw FitError(report);
  }
  return run;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  const auto split = split_chains(chains);
  if (split.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(split.front().size());
  std::vector<double> means, vars;
  for (const auto& c : split) {
    means.push_back(mean_of(c));
    vars.push_back(variance_of(c));
  }
  const double w = mean_of(vars);
  const double b_over_n = variance_of(means);
  if (w <= 0.0) return b_over_n <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * w + b_over_n;
  return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  const auto split = split_chains(chains);
  if (split.empty()) return 0.0;
  const std::size_t m = split.size();
  const std::size_t n = split.front().size();
  if (n < 4) return static_cast<double>(m * n);

  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(split[c]);
    vars[c] = variance_of(split[c]);
  }
  const double w = mean_of(vars);
  double var_plus = w * (static_cast<double>(n) - 1.0) / static_cast<double>(n);
  if (m > 1) var_plus += variance_of(means);
  if (!(var_plus > 0.0)) return static_cast<double>(m * n);

  // Mean over chains of the biased autocovariance at `lag`.
  auto acov = [&](std::size_t lag) {
    double total = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) s += (split[c][i] - means[c]) * (split[c][i + lag] - means[c]);
      total += s / static_cast<double>(n);
    }
    return total / static_cast<double>(m);
  };
  auto rho_at = [&](std::size_t lag) { return 1.0 - (w - acov(lag)) / var_plus; };

  std::vector<double> rho(n, 0.0);
  rho[0] = 1.0;
  double even = 1.0;
  double odd = rho_at(1);
  rho[1] = odd;
  std::size_t t = 1;
  while (t + 5 < n && even + odd > 0.0) {
    even = rho_at(t + 1);
    odd = rho_at(t + 2);
    if (even + odd >= 0.0) {
      rho[t + 1] = even;
      rho[t + 2] = odd;
    }
    t += 2;
  }
  const std::size_t max_t = t;
  if (even > 0.0 && max_t + 1 < n) rho[max_t + 1] = even;

  // Initial monotone sequence on the pair sums.
  for (t = 1; t + 4 <= max_t; t += 2) {
    if (rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]) {
      rho[t + 1] = 0.5 * (rho[t - 1] + rho[t]);
      rho[t + 2] = rho[t + 1];
    }
  }
  const double draws = static_cast<double>(m * n);
  double tau = -1.0;
  for (std::size_t i = 0; i <= max_t; ++i) tau += 2.0 * rho[i];
  if (max_t + 1 < n) tau += rho[max_t + 1];
  tau = std::max(tau, 1.0 / std::log10(draws));
  return draws / tau;
}

}  // namespace telerank::betamix
