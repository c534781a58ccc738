#include "telerank/betamix/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "special.hpp"

namespace telerank::betamix {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

double logit(double p) { return std::log(p) - std::log1p(-p); }

// Derivatives of (alpha, beta) = (mu s, (1 - mu) s), s = r + tau(mu).
struct ShapeMap {
  double alpha, beta, da_dmu, db_dmu, da_dr, db_dr;
};

ShapeMap shape_map(double mu, double r) {
  const double tau = concentration_offset(mu);
  const double dtau = mu < 0.5 ? -1.0 / (mu * mu) : 1.0 / ((1.0 - mu) * (1.0 - mu));
  const double s = r + tau;
  return {mu * s, (1.0 - mu) * s, s + mu * dtau, -s + (1.0 - mu) * dtau, mu, 1.0 - mu};
}

// Prior on the logit scale with the Jacobian folded in: a log mu + b log(1 - mu).
double logit_beta_term(double z, const BetaPrior& p) {
  return p.a * log_sigmoid(z) + p.b * log_sigmoid(-z) - detail::log_beta_fn(p.a, p.b);
}

double log_gamma_term(double z, const GammaPrior& p) {
  return p.shape * std::log(p.rate) - detail::lgamma_pos(p.shape) + p.shape * z - p.rate * std::exp(z);
}

}  // namespace

NaturalParams from_unconstrained(const Unconstrained& z) {
  return {sigmoid(z[kMu0]), sigmoid(z[kMu1]), std::exp(z[kR0]), std::exp(z[kR1]), sigmoid(z[kTheta])};
}

Unconstrained to_unconstrained(const NaturalParams& n) {
  return {logit(n.mu0), logit(n.mu1), std::log(n.r0), std::log(n.r1), logit(n.theta)};
}

double log_jacobian(const Unconstrained& z) {
  double j = 0.0;
  for (auto i : {kMu0, kMu1, kTheta}) j += log_sigmoid(z[i]) + log_sigmoid(-z[i]);
  return j + z[kR0] + z[kR1];
}

double log_prior(const NaturalParams& n, const Hyperpriors& priors) {
  return priors.mu0.log_pdf(n.mu0) + priors.mu1.log_pdf(n.mu1) + priors.r0.log_pdf(n.r0) +
         priors.r1.log_pdf(n.r1) + priors.theta.log_pdf(n.theta);
}

double log_posterior_density(const NaturalParams& n, const CountHistogram& counts, const Hyperpriors& priors) {
  const double lp = log_prior(n, priors);
  if (!std::isfinite(lp)) return kNegInf;
  return lp + log_likelihood(counts, from_natural(n));
}

double log_posterior_density(const NaturalParams& n, std::span<const PolicyCounts> counts,
                             const Hyperpriors& priors) {
  return log_posterior_density(n, CountHistogram(counts), priors);
}

double log_posterior_unconstrained(const Unconstrained& z, const CountHistogram& counts, const Hyperpriors& priors,
                                   std::span<double> grad) {
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  for (double v : z) {
    if (!std::isfinite(v)) return kNegInf;
  }
  const NaturalParams n = from_unconstrained(z);
  // Saturated logits or overflowing concentrations are outside the region we
  // can evaluate reliably.
  if (!(n.mu0 > 0.0 && n.mu0 < 1.0 && n.mu1 > 0.0 && n.mu1 < 1.0) || !std::isfinite(n.r0) ||
      !std::isfinite(n.r1) || n.r0 <= 0.0 || n.r1 <= 0.0) {
    return kNegInf;
  }

  double value = logit_beta_term(z[kMu0], priors.mu0) + logit_beta_term(z[kMu1], priors.mu1) +
                 log_gamma_term(z[kR0], priors.r0) + log_gamma_term(z[kR1], priors.r1) +
                 logit_beta_term(z[kTheta], priors.theta);

  const ShapeMap m0 = shape_map(n.mu0, n.r0);
  const ShapeMap m1 = shape_map(n.mu1, n.r1);
  constexpr double kMaxShape = 1e12;
  for (double v : {m0.alpha, m0.beta, m1.alpha, m1.beta}) {
    if (!(v < kMaxShape)) return kNegInf;
  }
  const double log_theta = log_sigmoid(z[kTheta]);
  const double log_1m_theta = log_sigmoid(-z[kTheta]);

  double ga0 = 0, gb0 = 0, ga1 = 0, gb1 = 0, gtheta = 0;
  for (const auto& c : counts.cells()) {
    const double common0 = log_rising(m0.alpha + m0.beta, c.x);
    const double common1 = log_rising(m1.alpha + m1.beta, c.x);
    const double l0 = log_1m_theta + log_rising(m0.alpha, c.y) + log_rising(m0.beta, c.x - c.y) - common0;
    const double l1 = log_theta + log_rising(m1.alpha, c.y) + log_rising(m1.beta, c.x - c.y) - common1;
    const double hi = std::max(l0, l1);
    const double lse = hi + std::log1p(std::exp(-std::abs(l0 - l1)));
    value += c.weight * (c.log_choose + lse);
    if (!want_grad) continue;
    const double rho = std::exp(l1 - lse);
    const double w1 = c.weight * rho;
    const double w0 = c.weight * (1.0 - rho);
    const double dc0 = digamma_rising(m0.alpha + m0.beta, c.x);
    const double dc1 = digamma_rising(m1.alpha + m1.beta, c.x);
    ga0 += w0 * (digamma_rising(m0.alpha, c.y) - dc0);
    gb0 += w0 * (digamma_rising(m0.beta, c.x - c.y) - dc0);
    ga1 += w1 * (digamma_rising(m1.alpha, c.y) - dc1);
    gb1 += w1 * (digamma_rising(m1.beta, c.x - c.y) - dc1);
    gtheta += c.weight * (rho - n.theta);
  }
  if (!std::isfinite(value)) return kNegInf;

  if (want_grad) {
    const double dmu0 = n.mu0 * (1.0 - n.mu0);
    const double dmu1 = n.mu1 * (1.0 - n.mu1);
    grad[kMu0] = priors.mu0.a * (1.0 - n.mu0) - priors.mu0.b * n.mu0 + dmu0 * (ga0 * m0.da_dmu + gb0 * m0.db_dmu);
    grad[kMu1] = priors.mu1.a * (1.0 - n.mu1) - priors.mu1.b * n.mu1 + dmu1 * (ga1 * m1.da_dmu + gb1 * m1.db_dmu);
    grad[kR0] = priors.r0.shape - priors.r0.rate * n.r0 + n.r0 * (ga0 * m0.da_dr + gb0 * m0.db_dr);
    grad[kR1] = priors.r1.shape - priors.r1.rate * n.r1 + n.r1 * (ga1 * m1.da_dr + gb1 * m1.db_dr);
    grad[kTheta] = priors.theta.a * (1.0 - n.theta) - priors.theta.b * n.theta + gtheta;
  }
  return value;
}

}  // namespace telerank::betamix
