#include "tmsv/numeric.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace tmsv::numeric {

namespace {

constexpr unsigned kTableSize = 256;

const std::array<double, kTableSize>& log_factorial_table()
{
  static const auto table = [] {
    std::array<double, kTableSize> t{};
    t[0] = 0.0;
    for (unsigned i = 1; i < kTableSize; ++i)
      t[i] = t[i - 1] + std::log(static_cast<double>(i));
    return t;
  }();
  return table;
}

} // namespace

double log_factorial(unsigned n)
{
  if (n < kTableSize)
    return log_factorial_table()[n];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

double log_binomial(unsigned n, unsigned k)
{
  if (k > n)
    return neg_inf;
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double log_power(double x, unsigned k)
{
  if (k == 0)
    return 0.0;
  if (x <= 0.0)
    return neg_inf;
  return k * std::log(x);
}

double falling_factorial(unsigned n, unsigned r)
{
  if (r > n)
    return 0.0;
  double out = 1.0;
  for (unsigned i = 0; i < r; ++i)
    out *= static_cast<double>(n - i);
  return out;
}

double poisson_pmf(unsigned k, double mean)
{
  const double lp = -mean + log_power(mean, k) - log_factorial(k);
  return std::exp(lp);
}

double binomial_pmf(unsigned k, unsigned n, double p)
{
  if (k > n)
    return 0.0;
  const double lp = log_binomial(n, k) + log_power(p, k) + log_power(1.0 - p, n - k);
  return std::exp(lp);
}

double log_sum_exp(std::span<const double> xs)
{
  if (xs.empty())
    return neg_inf;
  const double top = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(top))
    return top;
  double acc = 0.0;
  for (double x : xs)
    acc += std::exp(x - top);
  return top + std::log(acc);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index)
{
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

} // namespace tmsv::numeric
