#include "tmsv/state.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tmsv/errors.hpp"
#include "tmsv/numeric.hpp"

namespace tmsv {

namespace {

void check_squeezing(double z)
{
  if (!(z >= 0.0 && z < 1.0))
    throw DomainError("squeezing parameter z must lie in [0, 1), got " + std::to_string(z));
}

// log of z^{2j} (j!)^2 / ((j - l1)! (j - l2)!), the unnormalized |B_j|^2.
double log_pair_weight(double log_z2, unsigned j, SubtractionSpec sub)
{
  return j * log_z2 + 2.0 * numeric::log_factorial(j) - numeric::log_factorial(j - sub.signal) -
         numeric::log_factorial(j - sub.idler);
}

FockAmplitudes limiting_state(double z, SubtractionSpec sub)
{
  FockAmplitudes s;
  s.z = z;
  s.sub = sub;
  s.j_min = std::max(sub.signal, sub.idler);
  s.j_max = s.j_min;
  s.amplitudes = {1.0};
  s.tail_mass = 0.0;
  s.limiting_state = s.j_min > 0;
  return s;
}

FockAmplitudes from_log_weights(double z, SubtractionSpec sub, unsigned j_min,
                                const std::vector<double>& log_w, double tail_mass)
{
  FockAmplitudes s;
  s.z = z;
  s.sub = sub;
  s.j_min = j_min;
  s.j_max = j_min + static_cast<unsigned>(log_w.size()) - 1;
  const double log_norm = numeric::log_sum_exp(log_w);
  s.amplitudes.reserve(log_w.size());
  for (double lw : log_w)
    s.amplitudes.push_back(std::exp(0.5 * (lw - log_norm)));
  s.tail_mass = tail_mass;
  return s;
}

} // namespace

double FockAmplitudes::weight(unsigned j) const
{
  if (j < j_min || j > j_max)
    return 0.0;
  const double b = amplitudes[j - j_min];
  return b * b;
}

double FockAmplitudes::mean_photons(Mode mode) const
{
  const unsigned l = sub.of(mode);
  double acc = 0.0;
  for (unsigned j = j_min; j <= j_max; ++j)
    acc += weight(j) * static_cast<double>(j - l);
  return acc;
}

double FockAmplitudes::norm_squared() const
{
  double acc = 0.0;
  for (double b : amplitudes)
    acc += b * b;
  return acc;
}

void DetectorModel::validate() const
{
  if (!(eta > 0.0 && eta <= 1.0))
    throw DomainError("detector efficiency must lie in (0, 1], got " + std::to_string(eta));
  if (!(nu >= 0.0) || !std::isfinite(nu))
    throw DomainError("dark-count mean must be non-negative, got " + std::to_string(nu));
}

JointPND::JointPND(Eigen::MatrixXd probs) : probs_(std::move(probs))
{
  if (probs_.rows() == 0 || probs_.rows() != probs_.cols())
    throw InputError("joint distribution must be a non-empty square matrix");
  if (!probs_.allFinite() || (probs_.array() < 0.0).any())
    throw InputError("joint distribution entries must be finite and non-negative");
  total_ = probs_.sum();
}

JointPND JointPND::zeros(unsigned n_max)
{
  return JointPND(Eigen::MatrixXd::Zero(n_max + 1, n_max + 1));
}

JointPND JointPND::resized(unsigned n_max) const
{
  const Eigen::Index size = static_cast<Eigen::Index>(n_max) + 1;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(size, size);
  const Eigen::Index keep = std::min(size, probs_.rows());
  out.topLeftCorner(keep, keep) = probs_.topLeftCorner(keep, keep);
  return JointPND(std::move(out));
}

JointPND JointPND::normalized() const
{
  if (!(total_ > 0.0))
    throw InputError("cannot normalize an empty joint distribution");
  return JointPND(probs_ / total_);
}

SqueezingSpec SqueezingSpec::from_pump(const PumpParameters& pump)
{
  return {squeezing_from_pump(pump), pump};
}

double squeezing_from_pump(const PumpParameters& p)
{
  if (!(p.chi_eff > 0.0) || !(p.omega_p > 0.0) || !(p.length > 0.0))
    throw DomainError("chi_eff, omega_p and length must be positive");
  if (!(p.intensity >= 0.0) || !std::isfinite(p.intensity))
    throw DomainError("pump intensity must be non-negative");
  if (!(p.refractive_index >= 1.0))
    throw DomainError("refractive index must be at least 1");
  const double r =
      p.chi_eff * p.omega_p * p.length * std::sqrt(p.intensity) / (2.0 * p.refractive_index * speed_of_light);
  return std::tanh(r);
}

FockAmplitudes build_subtracted_state(double z, SubtractionSpec sub, double tail_tol,
                                      unsigned max_pair_index)
{
  check_squeezing(z);
  if (!(tail_tol > 0.0 && tail_tol <= 1e-3))
    throw DomainError("tail_tol must lie in (0, 1e-3]");
  if (z == 0.0)
    return limiting_state(z, sub);

  const unsigned j_min = std::max(sub.signal, sub.idler);
  if (j_min > max_pair_index)
    throw TruncationError("subtraction order exceeds the pair-index cap");
  const double log_z2 = 2.0 * std::log(z);

  std::vector<double> log_w{log_pair_weight(log_z2, j_min, sub)};
  double log_sum = log_w.front();
  for (unsigned j = j_min;; ++j) {
    // Successive ratios w_{j+1}/w_j decrease monotonically towards z^2, so once the
    // ratio drops below one the remaining tail is bounded by a geometric series.
    const double next = log_pair_weight(log_z2, j + 1, sub);
    const double log_ratio = log_pair_weight(log_z2, j + 2, sub) - next;
    if (log_ratio < 0.0) {
      const double log_tail = next - std::log1p(-std::exp(log_ratio));
      if (log_tail - log_sum < std::log(tail_tol)) {
        const double tail = std::exp(log_tail - log_sum);
        return from_log_weights(z, sub, j_min, log_w, tail / (1.0 + tail));
      }
    }
    if (j + 1 > max_pair_index)
      throw TruncationError("state truncation exceeds the pair-index cap of " +
                            std::to_string(max_pair_index) + " at z = " + std::to_string(z));
    log_w.push_back(next);
    const double pair[2] = {log_sum, next};
    log_sum = numeric::log_sum_exp(pair);
  }
}

FockAmplitudes build_truncated_state(double z, SubtractionSpec sub, unsigned j_max)
{
  check_squeezing(z);
  const unsigned j_min = std::max(sub.signal, sub.idler);
  if (j_max < j_min)
    throw DomainError("truncation index below the first populated pair index");
  if (z == 0.0)
    return limiting_state(z, sub);

  const double log_z2 = 2.0 * std::log(z);
  std::vector<double> log_w;
  for (unsigned j = j_min; j <= j_max; ++j)
    log_w.push_back(log_pair_weight(log_z2, j, sub));
  const double log_kept = numeric::log_sum_exp(log_w);

  // Sum the discarded terms directly until they stop contributing.
  double tail = 0.0;
  for (unsigned j = j_max + 1; j < j_max + 20000; ++j) {
    const double term = std::exp(log_pair_weight(log_z2, j, sub) - log_kept);
    tail += term;
    if (term < 1e-18 * std::max(tail, 1e-300) && j > 2 * j_max + 10)
      break;
  }
  return from_log_weights(z, sub, j_min, log_w, tail / (1.0 + tail));
}

JointPND ideal_joint_pnd(const FockAmplitudes& state)
{
  const unsigned n_max = state.j_max - std::min(state.sub.signal, state.sub.idler);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
  for (unsigned j = state.j_min; j <= state.j_max; ++j)
    p(j - state.sub.signal, j - state.sub.idler) = state.weight(j);
  return JointPND(std::move(p));
}

Eigen::MatrixXd detector_povm(const DetectorModel& det, unsigned k_max, unsigned n_max)
{
  det.validate();
  std::vector<double> dark(n_max + 1);
  for (unsigned i = 0; i <= n_max; ++i)
    dark[i] = numeric::poisson_pmf(i, det.nu);

  Eigen::MatrixXd povm = Eigen::MatrixXd::Zero(n_max + 1, k_max + 1);
  std::vector<double> kept(n_max + 1);
  for (unsigned k = 0; k <= k_max; ++k) {
    const unsigned top = std::min(k, n_max);
    for (unsigned j = 0; j <= top; ++j)
      kept[j] = numeric::binomial_pmf(j, k, det.eta);
    for (unsigned n = 0; n <= n_max; ++n) {
      double acc = 0.0;
      for (unsigned j = 0; j <= std::min(n, top); ++j)
        acc += kept[j] * dark[n - j];
      povm(n, k) = acc;
    }
  }
  return povm;
}

JointPND detected_joint_pnd(const FockAmplitudes& state, const DetectorModel& det_s,
                            const DetectorModel& det_i, unsigned n_max)
{
  const unsigned k_max = state.j_max - std::min(state.sub.signal, state.sub.idler);
  const Eigen::MatrixXd povm_s = detector_povm(det_s, k_max, n_max);
  const Eigen::MatrixXd povm_i = det_i.eta == det_s.eta && det_i.nu == det_s.nu
                                     ? povm_s
                                     : detector_povm(det_i, k_max, n_max);

  const Eigen::Index terms = static_cast<Eigen::Index>(state.amplitudes.size());
  Eigen::MatrixXd cols_s(n_max + 1, terms);
  Eigen::MatrixXd cols_i(n_max + 1, terms);
  Eigen::VectorXd w(terms);
  for (Eigen::Index t = 0; t < terms; ++t) {
    const unsigned j = state.j_min + static_cast<unsigned>(t);
    cols_s.col(t) = povm_s.col(j - state.sub.signal);
    cols_i.col(t) = povm_i.col(j - state.sub.idler);
    w(t) = state.weight(j);
  }
  Eigen::MatrixXd p = cols_s * w.asDiagonal() * cols_i.transpose();
  return JointPND(std::move(p));
}

JointPND detected_joint_pnd(const FockAmplitudes& state, const DetectorModel& det_s,
                            const DetectorModel& det_i, const Config& cfg)
{
  // Dark counts can push detections above the largest true photon number.
  const double nu = std::max(det_s.nu, det_i.nu);
  unsigned dark_extra = 0;
  double dark_cdf = numeric::poisson_pmf(0, nu);
  while (1.0 - dark_cdf > 0.25 * cfg.tail_tol && dark_extra < 400) {
    ++dark_extra;
    dark_cdf += numeric::poisson_pmf(dark_extra, nu);
  }
  const unsigned full = state.j_max - std::min(state.sub.signal, state.sub.idler) + dark_extra;
  const JointPND wide = detected_joint_pnd(state, det_s, det_i, full);

  // Smallest square block holding 1 - tail_tol of the (renormalized) state.
  const Eigen::MatrixXd& p = wide.probs();
  const double target = 1.0 - cfg.tail_tol;
  double block = 0.0;
  for (unsigned n = 0; n <= full; ++n) {
    block += p.row(n).head(n + 1).sum() + p.col(n).head(n).sum();
    if (block >= target)
      return wide.resized(n);
  }
  return wide;
}

} // namespace tmsv
