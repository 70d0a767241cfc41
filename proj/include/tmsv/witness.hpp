#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tmsv/config.hpp"
#include "tmsv/state.hpp"

namespace tmsv {

/// Normally-ordered joint factorial moments F(u, v), u, v in {0, 1, 2}.
struct FactorialMoments
{
  std::array<std::array<double, 3>, 3> table{};

  double operator()(unsigned u, unsigned v) const { return table[u][v]; }
};

/// Second-order matrix of moments
///   [ F00 F10 F01 ]
///   [ F10 F20 F11 ]
///   [ F01 F11 F02 ]
struct MomentMatrix
{
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
};

enum class MarginalModel { thermal, poisson };

struct MarginalFit
{
  MarginalModel model = MarginalModel::thermal;
  double mean = 0.0;
  double r_squared = 0.0;
  bool r_squared_defined = true; // false for a point mass at zero
};

struct ModeFits
{
  MarginalFit thermal;
  MarginalFit poisson;
};

struct WitnessReport
{
  std::optional<double> agarwal; // empty when F(1,1) = 0
  double det_m = 0.0;
  double min_eigenvalue = 0.0;
  MomentMatrix matrix;
  ModeFits signal_fits;
  ModeFits idler_fits;
  double signal_mean = 0.0;
  double idler_mean = 0.0;

  bool cauchy_schwarz_violated = false;
  bool determinant_negative = false;
  bool eigenvalue_negative = false;
};

std::vector<double> marginal(const JointPND& pnd, Mode mode);

/// sum p(n,m) n(n-1)..(n-u+1) m(m-1)..(m-v+1).
double joint_factorial_moment(const JointPND& pnd, unsigned u, unsigned v);

FactorialMoments factorial_moments(const JointPND& pnd);

/// I = sqrt(F(2,0) F(0,2)) / F(1,1) - 1. Throws UndefinedWitnessError if F(1,1) = 0.
double agarwal_parameter(const JointPND& pnd);

MomentMatrix moment_matrix(const JointPND& pnd);
MomentMatrix moment_matrix(const FactorialMoments& f);

double det_moment_matrix(const MomentMatrix& m);

/// Smallest eigenvalue of the symmetric 3x3 moment matrix from the trigonometric
/// solution of the characteristic cubic. Throws InputError when the matrix is
/// asymmetric beyond 1e-12 and NumericError when the eigenpair residual check fails.
double min_eigenvalue(const MomentMatrix& m);

/// All three eigenvalues in ascending order (same closed form).
std::array<double, 3> symmetric_eigenvalues(const Eigen::Matrix3d& a);

double thermal_pmf(unsigned n, double mean);
double poisson_model_pmf(unsigned n, double mean);

/// Least-squares fit of the mean of a thermal or Poissonian law to a marginal.
MarginalFit fit_marginal(std::span<const double> marginal, MarginalModel model);

WitnessReport compute_witnesses(const JointPND& pnd, const Config& cfg = {});

} // namespace tmsv
