#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace tmsv::numeric {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// log(n!) from a cached table for small n and lgamma beyond.
double log_factorial(unsigned n);

double log_binomial(unsigned n, unsigned k);

/// k*log(x) with the convention 0*log(0) = 0; returns -inf for x = 0, k > 0.
double log_power(double x, unsigned k);

/// n (n-1) ... (n-r+1); equals 1 for r = 0 and 0 for r > n.
double falling_factorial(unsigned n, unsigned r);

/// Poisson pmf e^{-mean} mean^k / k! evaluated in log-space.
double poisson_pmf(unsigned k, double mean);

/// Binomial pmf C(n,k) p^k (1-p)^{n-k} evaluated in log-space.
double binomial_pmf(unsigned k, unsigned n, double p);

/// log(sum exp(x_i)), stable for large magnitudes.
double log_sum_exp(std::span<const double> xs);

/// SplitMix64 mixing step; derives independent stream seeds from (seed, index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

} // namespace tmsv::numeric
