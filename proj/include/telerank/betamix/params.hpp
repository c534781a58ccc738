#pragma once

#include <array>
#include <string_view>

namespace telerank::betamix {

// Beta shapes of the two classes and the minority weight theta = P(k = 1).
struct MixtureParams {
  double alpha0 = 1.0;
  double beta0 = 1.0;
  double alpha1 = 1.0;
  double beta1 = 1.0;
  double theta = 0.5;

  // Shapes positive and finite, theta in [0, 1]. The degenerate weights 0
  // and 1 are accepted by the likelihood functions.
  bool valid() const noexcept;
};

// Mean / excess-concentration coordinates of each Beta component:
//   mu = alpha / (alpha + beta), s = alpha + beta = r + tau(mu),
//   tau(mu) = max(1/mu, 1/(1 - mu)).
// The offset tau keeps both shapes >= 1 whenever r >= 0.
struct NaturalParams {
  double mu0 = 0.25;
  double mu1 = 0.8;
  double r0 = 4.0;
  double r1 = 8.0;
  double theta = 0.03;
};

double concentration_offset(double mu);

// Throws std::domain_error when a shape pair has min(alpha, beta) < 1 (which
// would need r < 0) or theta is outside [0, 1].
NaturalParams to_natural(const MixtureParams& p);

// Throws std::domain_error for mu outside (0, 1), r < 0 or theta outside [0, 1].
MixtureParams from_natural(const NaturalParams& n);

struct BetaPrior {
  double a = 1.0;
  double b = 1.0;
  double log_pdf(double x) const;
  double mean() const noexcept { return a / (a + b); }
};

// Shape-rate parameterization.
struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;
  double log_pdf(double x) const;
  double mean() const noexcept { return shape / rate; }
};

struct Hyperpriors {
  BetaPrior mu0{1.0, 3.0};
  BetaPrior mu1{4.0, 1.0};
  GammaPrior r0{4.0, 1.0};
  GammaPrior r1{8.0, 1.0};
  // Minority weight concentrated near zero (mean ~3%).
  BetaPrior theta{1.0, 30.0};

  bool valid() const noexcept;

  // theta ~ Beta(30, 1), the shape order swapped;
  // kept for comparison runs only, it puts the mass near theta = 1.
  static Hyperpriors literal_theta_prior();
};

inline constexpr std::size_t kParamCount = 5;
enum ParamIndex : std::size_t { kMu0 = 0, kMu1 = 1, kR0 = 2, kR1 = 3, kTheta = 4 };
inline constexpr std::array<std::string_view, kParamCount> kParamNames = {"mu0", "mu1", "r0", "r1", "theta"};

inline double get(const NaturalParams& n, std::size_t i) {
  switch (i) {
    case kMu0: return n.mu0;
    case kMu1: return n.mu1;
    case kR0: return n.r0;
    case kR1: return n.r1;
    default: return n.theta;
  }
}

}  // namespace telerank::betamix
