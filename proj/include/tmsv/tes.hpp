#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tmsv/mc.hpp"

namespace tmsv::tes {

struct Trace
{
  std::vector<double> samples;
  double sample_period = 1e-8; // seconds
};

/// Unit-energy pulse shape with a white-noise variance estimate.
struct PulseTemplate
{
  std::vector<double> shape; // sum of squares == 1
  double noise_power = 0.0;

  /// Normalizes an arbitrary waveform to unit energy.
  static PulseTemplate from_waveform(std::span<const double> waveform, double noise_power = 0.0);
  /// Rise/decay double-exponential pulse, the usual TES response.
  static PulseTemplate double_exponential(std::size_t length, double rise_samples, double decay_samples,
                                          std::size_t onset = 0);
};

struct MixtureComponent
{
  double weight = 0.0;
  double mean = 0.0;
  double sigma = 0.0;
};

/// Gaussian mixture over pulse energies; component k corresponds to k photons.
struct GaussianMixture
{
  std::vector<MixtureComponent> components;
  double log_likelihood = 0.0;
  unsigned iterations = 0;
  bool converged = false;
};

struct Assignment
{
  std::vector<unsigned> photon_numbers;
  std::vector<double> distribution; // normalized histogram over k = 0..K
};

Trace synth_trace(unsigned n_photons, const PulseTemplate& tmpl, double amplitude_per_photon,
                  double noise_sigma, mc::Rng& rng, double sample_period = 1e-8);

/// White-noise optimum filter: <trace, template> / <template, template> over the
/// template's support.
double wiener_project(const Trace& trace, const PulseTemplate& tmpl);

/// Expectation-maximization with k_max + 1 components initialized on an equally
/// spaced ladder through the first two histogram peaks.
GaussianMixture fit_mixture(std::span<const double> energies, unsigned k_max);

/// Maximum-posterior photon number per pulse; ties go to the lower photon number.
Assignment assign_photon_numbers(std::span<const double> energies, const GaussianMixture& mix);

} // namespace tmsv::tes
