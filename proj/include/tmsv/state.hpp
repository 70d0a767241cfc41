#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "tmsv/config.hpp"

namespace tmsv {

inline constexpr double speed_of_light = 299792458.0; // m/s

enum class Mode { signal, idler };

/// Waveguide and pump parameters that fix the squeezing of the source.
struct PumpParameters
{
  double chi_eff = 0.0;          // effective nonlinearity
  double omega_p = 0.0;          // pump angular frequency [rad/s]
  double length = 0.0;           // waveguide length [m]
  double intensity = 0.0;        // pump intensity [W/m^2]
  double refractive_index = 1.0; // n0
};

/// Squeezing parameter z = tanh(r) of the two-mode squeezed vacuum.
struct SqueezingSpec
{
  double z = 0.0;
  std::optional<PumpParameters> pump;

  static SqueezingSpec from_pump(const PumpParameters& pump);
};

/// Number of photons removed from each mode. The symmetric case has signal == idler.
struct SubtractionSpec
{
  unsigned signal = 0;
  unsigned idler = 0;

  static constexpr SubtractionSpec symmetric(unsigned l) { return {l, l}; }
  constexpr unsigned of(Mode mode) const { return mode == Mode::signal ? signal : idler; }
  constexpr bool operator==(const SubtractionSpec&) const = default;
};

/// Truncated amplitudes B_j, j = j_min..j_max, of a photon-subtracted TMSVS.
///
/// The pair index j labels the term |j - l_signal>_s |j - l_idler>_i. Amplitudes are
/// real and non-negative and are renormalized over the retained range; the
/// estimated probability that was cut off is kept in tail_mass.
struct FockAmplitudes
{
  double z = 0.0;
  SubtractionSpec sub;
  unsigned j_min = 0;
  unsigned j_max = 0;
  std::vector<double> amplitudes;
  double tail_mass = 0.0;
  /// Set when z = 0 with a non-zero subtraction: the state is the z -> 0 limit.
  bool limiting_state = false;

  /// |B_j|^2, zero outside the retained range.
  double weight(unsigned j) const;
  /// Sum of |B_j|^2 (j - l_mode), the ideal mean photon number of one mode.
  double mean_photons(Mode mode) const;
  double norm_squared() const;
};

/// One photon-number-resolving detector: efficiency and mean dark counts per pulse.
struct DetectorModel
{
  double eta = 1.0;
  double nu = 0.0;

  static constexpr DetectorModel ideal() { return {1.0, 0.0}; }
  void validate() const;
};

/// Joint photon-number distribution p(n, m) over n, m = 0..n_max.
/// Rows index the signal count n and columns the idler count m.
class JointPND
{
public:
  JointPND() = default;
  explicit JointPND(Eigen::MatrixXd probs);

  static JointPND zeros(unsigned n_max);

  const Eigen::MatrixXd& probs() const { return probs_; }
  unsigned n_max() const { return static_cast<unsigned>(probs_.rows()) - 1; }
  double total() const { return total_; }
  double operator()(unsigned n, unsigned m) const { return probs_(n, m); }

  /// Zero-pads or crops to a new cutoff; cropping drops the outside mass.
  JointPND resized(unsigned n_max) const;
  /// Divides by total so the entries sum to one.
  JointPND normalized() const;

private:
  Eigen::MatrixXd probs_ = Eigen::MatrixXd::Zero(1, 1);
  double total_ = 0.0;
};

/// z = tanh(chi_eff omega_p L sqrt(I_p) / (2 n0 c)).
double squeezing_from_pump(const PumpParameters& pump);

/// Builds the normalized photon-subtracted state, extending the truncation until the
/// bounded tail mass is below tail_tol. Throws TruncationError past max_pair_index.
FockAmplitudes build_subtracted_state(double z, SubtractionSpec sub, double tail_tol,
                                      unsigned max_pair_index = 200);

/// Same state with a fixed truncation j_max (used when comparing against the oracle).
FockAmplitudes build_truncated_state(double z, SubtractionSpec sub, unsigned j_max);

/// p(n,m) = |B_j|^2 when n = j - l_signal and m = j - l_idler.
JointPND ideal_joint_pnd(const FockAmplitudes& state);

/// Matrix P(n|k), n = 0..n_max (rows), k = 0..k_max (columns): binomial loss followed
/// by Poissonian dark counts.
Eigen::MatrixXd detector_povm(const DetectorModel& det, unsigned k_max, unsigned n_max);

/// Detected joint distribution with an explicit cutoff. A cutoff that is too small
/// shows up as total() < 1.
JointPND detected_joint_pnd(const FockAmplitudes& state, const DetectorModel& det_s,
                            const DetectorModel& det_i, unsigned n_max);

/// Detected joint distribution with the smallest cutoff that keeps 1 - tail_tol of the mass.
JointPND detected_joint_pnd(const FockAmplitudes& state, const DetectorModel& det_s,
                            const DetectorModel& det_i, const Config& cfg = {});

/// Literal evaluation of the P-function derivative expression for a single cell.
///
/// Expands (eta a a* + nu)^n exp(-[(eta - 1) a a* + nu]) as a truncated bivariate
/// power series in (a, a*) and reads off mixed derivatives for every pair of
/// amplitudes (j, k), including j != k. Intended as an independent check of
/// detected_joint_pnd on small instances: throws OracleCapError when
/// state.j_max > 12 or n, m > 8.
double derivative_formula_pnd(const FockAmplitudes& state, const DetectorModel& det_s,
                              const DetectorModel& det_i, unsigned n, unsigned m);

inline constexpr unsigned oracle_max_pair_index = 12;
inline constexpr unsigned oracle_max_count = 8;

} // namespace tmsv
