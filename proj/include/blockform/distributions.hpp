#pragma once

// Closed-form CDFs and inverse CDFs needed by the annealing tests. No
// external statistics dependency; targets ~1e-10 relative accuracy or better.

#include <cstddef>

namespace blockform::stats {

double normal_cdf(double x);

/// Inverse standard normal CDF: rational approximation refined by one Newton step.
double normal_quantile(double p);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);

double chi_squared_cdf(double x, double dof);

/// Wilson-Hilferty starting point, then bisection on chi_squared_cdf.
double chi_squared_quantile(double p, double dof);

/// P(X = k) for X ~ Binomial(trials, p).
double binomial_pmf(std::size_t k, std::size_t trials, double p);

/// P(X <= k), by exact summation of the pmf.
double binomial_cdf(std::size_t k, std::size_t trials, double p);

}  // namespace blockform::stats
