#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <utility>

#include "tmsv/counts.hpp"
#include "tmsv/state.hpp"

namespace tmsv::mc {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t default_seed = 20190411;

enum class SamplingMode {
  /// Literal per-pulse simulation; rejected pulses are simulated and discarded.
  rejection,
  /// Exact fast-forward: accepted pulses are drawn from the heralded conditional law
  /// and the number of pulses in between from the matching negative binomial.
  conditioned,
};

/// Conditional-measurement protocol: pair source, tap couplers with heralding
/// detectors on the reflected arms, main detectors on the transmitted arms.
struct ProtocolConfig
{
  double z = 0.0;
  double tap_transmission = 0.9;
  DetectorModel tap_detector = DetectorModel::ideal();
  DetectorModel main_detector = DetectorModel::ideal();
  SubtractionSpec condition;
  std::uint64_t shots = 1'000'000;     // pump pulses (rejection mode)
  std::uint64_t target_accepted = 0;   // accepted pulses (conditioned mode)
  std::uint64_t seed = default_seed;
  SamplingMode mode = SamplingMode::rejection;
  unsigned workers = 1;

  void validate() const;
};

struct McResult
{
  CountMatrix counts;
  std::uint64_t shots = 0;
  std::uint64_t accepted = 0;
  double acceptance_rate = 0.0;
  JointPND empirical;
  bool empty = true;
  /// Exact heralding probability per pulse (conditioned mode only).
  std::optional<double> heralding_probability;
};

/// Pair number j with probability (1 - z^2) z^{2j}, by inverse CDF.
unsigned sample_pair_number(double z, Rng& rng);

/// Binomial partition of k photons: (transmitted, reflected).
std::pair<unsigned, unsigned> beamsplitter_split(unsigned k, double transmission, Rng& rng);

/// Detected count for k incident photons: Binomial(k, eta) + Poisson(nu).
unsigned sample_detection(unsigned k, const DetectorModel& det, Rng& rng);

/// Exact probability that one pulse produces tap counts equal to the condition.
double heralding_probability(const ProtocolConfig& cfg);

/// Deterministic given cfg.seed, independent of cfg.workers.
McResult simulate_run(const ProtocolConfig& cfg);

/// 1/2 sum |p - q|; throws InputError if the grids differ.
double tv_distance(const JointPND& p, const JointPND& q);

} // namespace tmsv::mc
