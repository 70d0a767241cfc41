#include <cmath>
#include <string>
#include <vector>

#include "tmsv/errors.hpp"
#include "tmsv/numeric.hpp"
#include "tmsv/state.hpp"

namespace tmsv {

namespace {

// Power series sum_{p,q <= order} c[p][q] a^p (a*)^q with both degrees truncated.
class BivariateSeries
{
public:
  explicit BivariateSeries(unsigned order)
      : order_(order), coeff_((order + 1) * (order + 1), 0.0)
  {
  }

  double& at(unsigned p, unsigned q) { return coeff_[p * (order_ + 1) + q]; }
  double at(unsigned p, unsigned q) const { return coeff_[p * (order_ + 1) + q]; }

  BivariateSeries operator*(const BivariateSeries& rhs) const
  {
    BivariateSeries out(order_);
    for (unsigned p1 = 0; p1 <= order_; ++p1)
      for (unsigned q1 = 0; q1 <= order_; ++q1) {
        const double a = at(p1, q1);
        if (a == 0.0)
          continue;
        for (unsigned p2 = 0; p1 + p2 <= order_; ++p2)
          for (unsigned q2 = 0; q1 + q2 <= order_; ++q2)
            out.at(p1 + p2, q1 + q2) += a * rhs.at(p2, q2);
      }
    return out;
  }

  /// d^p/da^p d^q/da*^q at a = a* = 0.
  double derivative_at_origin(unsigned p, unsigned q) const
  {
    return std::exp(numeric::log_factorial(p) + numeric::log_factorial(q)) * at(p, q);
  }

private:
  unsigned order_;
  std::vector<double> coeff_;
};

// (eta a a* + nu)^count * exp(-[(eta - 1) a a* + nu]) truncated at the given order.
BivariateSeries detection_kernel(const DetectorModel& det, unsigned count, unsigned order)
{
  BivariateSeries linear(order);
  linear.at(0, 0) = det.nu;
  if (order >= 1)
    linear.at(1, 1) = det.eta;

  BivariateSeries power(order);
  power.at(0, 0) = 1.0;
  for (unsigned i = 0; i < count; ++i)
    power = power * linear;

  BivariateSeries exponential(order);
  const double gain = 1.0 - det.eta;
  for (unsigned k = 0; k <= order; ++k)
    exponential.at(k, k) = std::exp(-det.nu - numeric::log_factorial(k)) * std::pow(gain, k);

  return power * exponential;
}

} // namespace

double derivative_formula_pnd(const FockAmplitudes& state, const DetectorModel& det_s,
                              const DetectorModel& det_i, unsigned n, unsigned m)
{
  if (state.j_max > oracle_max_pair_index || n > oracle_max_count || m > oracle_max_count)
    throw OracleCapError("derivative oracle limited to j_max <= " +
                         std::to_string(oracle_max_pair_index) + " and n, m <= " +
                         std::to_string(oracle_max_count));
  det_s.validate();
  det_i.validate();

  const unsigned l1 = state.sub.signal;
  const unsigned l2 = state.sub.idler;
  const BivariateSeries alpha = detection_kernel(det_s, n, state.j_max - l1);
  const BivariateSeries beta = detection_kernel(det_i, m, state.j_max - l2);

  double acc = 0.0;
  for (unsigned j = state.j_min; j <= state.j_max; ++j) {
    const double bj = state.amplitudes[j - state.j_min];
    for (unsigned k = state.j_min; k <= state.j_max; ++k) {
      const double bk = state.amplitudes[k - state.j_min];
      const double log_scale =
          -0.5 * (numeric::log_factorial(j - l1) + numeric::log_factorial(k - l1) +
                  numeric::log_factorial(j - l2) + numeric::log_factorial(k - l2));
      acc += bj * bk * std::exp(log_scale) * alpha.derivative_at_origin(j - l1, k - l1) *
             beta.derivative_at_origin(j - l2, k - l2);
    }
  }
  return acc * std::exp(-numeric::log_factorial(n) - numeric::log_factorial(m));
}

} // namespace tmsv
