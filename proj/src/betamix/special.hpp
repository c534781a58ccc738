#pragma once

#include <cmath>

#include <boost/math/special_functions/digamma.hpp>

namespace telerank::betamix::detail {

// Reentrant log-gamma for positive arguments.
inline double lgamma_pos(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

// Overflow and poles come back as inf/nan instead of exceptions; callers
// treat non-finite values as leaving the usable region.
using QuietPolicy = boost::math::policies::policy<
    boost::math::policies::overflow_error<boost::math::policies::ignore_error>,
    boost::math::policies::domain_error<boost::math::policies::ignore_error>,
    boost::math::policies::pole_error<boost::math::policies::ignore_error>,
    boost::math::policies::evaluation_error<boost::math::policies::ignore_error>>;

inline double digamma(double x) { return boost::math::digamma(x, QuietPolicy()); }

inline double log_beta_fn(double a, double b) { return lgamma_pos(a) + lgamma_pos(b) - lgamma_pos(a + b); }

}  // namespace telerank::betamix::detail
