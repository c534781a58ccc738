#pragma once

#include <array>
#include <span>

#include "telerank/betamix/likelihood.hpp"
#include "telerank/betamix/params.hpp"

namespace telerank::betamix {

// Sampling coordinates: (logit mu0, logit mu1, log r0, log r1, logit theta).
using Unconstrained = std::array<double, kParamCount>;

NaturalParams from_unconstrained(const Unconstrained& z);
Unconstrained to_unconstrained(const NaturalParams& n);

// log |d natural / d z| of the coordinate map above.
double log_jacobian(const Unconstrained& z);

// Sum of the five independent hyperprior log densities.
double log_prior(const NaturalParams& n, const Hyperpriors& priors);

// Log posterior (up to a constant) in natural coordinates, no Jacobian.
double log_posterior_density(const NaturalParams& n, std::span<const PolicyCounts> counts,
                             const Hyperpriors& priors);
double log_posterior_density(const NaturalParams& n, const CountHistogram& counts, const Hyperpriors& priors);

// Log posterior in sampling coordinates, including the log-Jacobian. Fills
// `grad` with the analytic gradient when given. Returns -inf outside the
// numerically representable region.
double log_posterior_unconstrained(const Unconstrained& z, const CountHistogram& counts, const Hyperpriors& priors,
                                   std::span<double> grad = {});

}  // namespace telerank::betamix
