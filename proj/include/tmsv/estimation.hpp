#pragma once

#include <cstdint>
#include <optional>

#include "tmsv/config.hpp"
#include "tmsv/counts.hpp"
#include "tmsv/mc.hpp"
#include "tmsv/state.hpp"

namespace tmsv::estimation {

struct Bounds
{
  double lo = 0.0;
  double hi = 1.0;

  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
};

struct FitConfig
{
  Bounds z{0.0, 0.95};
  Bounds eta{1e-3, 1.0};
  Bounds nu{0.0, 0.5};
  unsigned grid_z = 12;
  unsigned grid_eta = 12;
  unsigned grid_nu = 4;
  double tolerance = 1e-6; // simplex diameter in parameter space
  unsigned max_iterations = 4000;
  unsigned bootstrap = 0;  // resamples B; 0 disables error estimation
  std::uint64_t seed = mc::default_seed;
  unsigned workers = 1;
  /// One (eta, nu) pair for both detectors; false fits each mode separately.
  bool shared_detectors = true;
  double tail_tol = 1e-9;
  unsigned max_pair_index = 600;

  void validate() const;
};

/// Source and detector parameters of the forward model.
struct ModelParameters
{
  double z = 0.0;
  DetectorModel signal;
  DetectorModel idler;

  static ModelParameters shared(double z, double eta, double nu) { return {z, {eta, nu}, {eta, nu}}; }
};

struct NllResult
{
  double value = 0.0;
  /// Some observed cell had model probability below 1e-300 and was floored.
  bool floored = false;
};

struct StdErrors
{
  double z = 0.0;
  double eta = 0.0;
  double nu = 0.0;
  double eta_idler = 0.0; // only when detectors are fitted per mode
  double nu_idler = 0.0;
};

struct FitResult
{
  ModelParameters params;
  double nll = 0.0;
  bool converged = false;
  /// Data occupy at most one cell; the estimate is not informative.
  bool degenerate = false;
  bool nu_at_lower_bound = false;
  bool floored = false;
  unsigned iterations = 0;
  unsigned evaluations = 0;
  std::optional<StdErrors> std_errors;

  double z_hat() const { return params.z; }
  double eta_hat() const { return params.signal.eta; }
  double nu_hat() const { return params.signal.nu; }
};

/// Model distribution on the grid needed by `counts`.
JointPND model_distribution(const ModelParameters& p, SubtractionSpec sub, unsigned n_max,
                            double tail_tol = 1e-9, unsigned max_pair_index = 600);

/// -sum c[n][m] log p_model(n, m). Throws InputError for empty counts.
NllResult negative_log_likelihood(const CountMatrix& counts, double z, double eta, double nu,
                                  SubtractionSpec sub);
NllResult negative_log_likelihood(const CountMatrix& counts, const ModelParameters& p,
                                  SubtractionSpec sub, double tail_tol = 1e-9,
                                  unsigned max_pair_index = 600);

/// Coarse grid search followed by Nelder-Mead refinement (maximum likelihood).
FitResult fit_parameters(const CountMatrix& counts, SubtractionSpec sub, const FitConfig& cfg);

/// Standard deviation of refits over cfg.bootstrap multinomial resamples.
/// Refits start from `start` (or a fresh fit when absent). Throws InputError for B < 10.
StdErrors bootstrap_errors(const CountMatrix& counts, SubtractionSpec sub, const FitConfig& cfg,
                           const std::optional<FitResult>& start = std::nullopt);

/// fit_parameters plus bootstrap errors when cfg.bootstrap > 0.
FitResult fit_with_errors(const CountMatrix& counts, SubtractionSpec sub, const FitConfig& cfg);

/// Multinomial sample of `total` events from a (possibly unnormalized) distribution.
CountMatrix sample_counts(const JointPND& dist, std::uint64_t total, mc::Rng& rng);

} // namespace tmsv::estimation
