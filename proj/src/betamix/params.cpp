#include "telerank/betamix/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "special.hpp"

namespace telerank::betamix {

bool MixtureParams::valid() const noexcept {
  auto shape_ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  return shape_ok(alpha0) && shape_ok(beta0) && shape_ok(alpha1) && shape_ok(beta1) && theta >= 0.0 && theta <= 1.0;
}

double concentration_offset(double mu) { return std::max(1.0 / mu, 1.0 / (1.0 - mu)); }

NaturalParams to_natural(const MixtureParams& p) {
  if (!p.valid()) throw std::domain_error("mixture parameters out of domain");
  auto convert = [](double a, double b, double& mu, double& r) {
    const double s = a + b;
    mu = a / s;
    const double tau = std::max(s / a, s / b);
    r = s - tau;
    if (r < 0.0) {
      if (r > -1e-12 * s) {
        r = 0.0;
      } else {
        throw std::domain_error("Beta shapes below 1 have no excess-concentration representation");
      }
    }
  };
  NaturalParams n;
  convert(p.alpha0, p.beta0, n.mu0, n.r0);
  convert(p.alpha1, p.beta1, n.mu1, n.r1);
  n.theta = p.theta;
  return n;
}

MixtureParams from_natural(const NaturalParams& n) {
  auto convert = [](double mu, double r, double& a, double& b) {
    if (!(mu > 0.0 && mu < 1.0)) throw std::domain_error("mu must lie in (0, 1)");
    if (!(r >= 0.0) || !std::isfinite(r)) throw std::domain_error("r must be a finite non-negative number");
    const double s = r + concentration_offset(mu);
    a = mu * s;
    b = (1.0 - mu) * s;
  };
  if (!(n.theta >= 0.0 && n.theta <= 1.0)) throw std::domain_error("theta must lie in [0, 1]");
  MixtureParams p;
  convert(n.mu0, n.r0, p.alpha0, p.beta0);
  convert(n.mu1, n.r1, p.alpha1, p.beta1);
  p.theta = n.theta;
  return p;
}

double BetaPrior::log_pdf(double x) const {
  if (!(x > 0.0 && x < 1.0)) return -std::numeric_limits<double>::infinity();
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - detail::log_beta_fn(a, b);
}

double GammaPrior::log_pdf(double x) const {
  if (!(x > 0.0) || !std::isfinite(x)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - detail::lgamma_pos(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

bool Hyperpriors::valid() const noexcept {
  auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
  return pos(mu0.a) && pos(mu0.b) && pos(mu1.a) && pos(mu1.b) && pos(theta.a) && pos(theta.b) && pos(r0.shape) &&
         pos(r0.rate) && pos(r1.shape) && pos(r1.rate);
}

Hyperpriors Hyperpriors::literal_theta_prior() {
  Hyperpriors h;
  h.theta = {30.0, 1.0};
  return h;
}

}  // namespace telerank::betamix
