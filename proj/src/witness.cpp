#include "tmsv/witness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "tmsv/errors.hpp"
#include "tmsv/numeric.hpp"

namespace tmsv {

std::vector<double> marginal(const JointPND& pnd, Mode mode)
{
  const Eigen::VectorXd sums =
      mode == Mode::signal ? pnd.probs().rowwise().sum().eval() : pnd.probs().colwise().sum().transpose().eval();
  return {sums.data(), sums.data() + sums.size()};
}

double joint_factorial_moment(const JointPND& pnd, unsigned u, unsigned v)
{
  const Eigen::MatrixXd& p = pnd.probs();
  double acc = 0.0;
  for (Eigen::Index n = 0; n < p.rows(); ++n) {
    const double fs = numeric::falling_factorial(static_cast<unsigned>(n), u);
    if (fs == 0.0)
      continue;
    for (Eigen::Index m = 0; m < p.cols(); ++m)
      acc += p(n, m) * fs * numeric::falling_factorial(static_cast<unsigned>(m), v);
  }
  return acc;
}

FactorialMoments factorial_moments(const JointPND& pnd)
{
  FactorialMoments f;
  for (unsigned u = 0; u < 3; ++u)
    for (unsigned v = 0; v < 3; ++v)
      f.table[u][v] = joint_factorial_moment(pnd, u, v);
  return f;
}

double agarwal_parameter(const JointPND& pnd)
{
  const double f11 = joint_factorial_moment(pnd, 1, 1);
  if (!(f11 > 0.0))
    throw UndefinedWitnessError("Agarwal parameter undefined: F(1,1) = 0");
  const double f20 = joint_factorial_moment(pnd, 2, 0);
  const double f02 = joint_factorial_moment(pnd, 0, 2);
  return std::sqrt(f20 * f02) / f11 - 1.0;
}

MomentMatrix moment_matrix(const FactorialMoments& f)
{
  MomentMatrix out;
  auto& m = out.m;
  m << f(0, 0), f(1, 0), f(0, 1),
       f(1, 0), f(2, 0), f(1, 1),
       f(0, 1), f(1, 1), f(0, 2);
  return out;
}

MomentMatrix moment_matrix(const JointPND& pnd) { return moment_matrix(factorial_moments(pnd)); }

double det_moment_matrix(const MomentMatrix& mm)
{
  const auto& a = mm.m;
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
         a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

std::array<double, 3> symmetric_eigenvalues(const Eigen::Matrix3d& a)
{
  const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  std::array<double, 3> ev{};
  if (off == 0.0) {
    ev = {a(0, 0), a(1, 1), a(2, 2)};
    std::sort(ev.begin(), ev.end());
    return ev;
  }
  const double q = a.trace() / 3.0;
  const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) +
                    (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * off;
  const double p = std::sqrt(p2 / 6.0);
  const Eigen::Matrix3d b = (a - q * Eigen::Matrix3d::Identity()) / p;
  const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double largest = q + 2.0 * p * std::cos(phi);
  const double smallest = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  ev = {smallest, 3.0 * q - largest - smallest, largest};
  std::sort(ev.begin(), ev.end());
  return ev;
}

namespace {

// Unit vector spanning (approximately) the null space of a - lambda I.
Eigen::Vector3d null_vector(const Eigen::Matrix3d& shifted)
{
  const Eigen::Vector3d r0 = shifted.row(0), r1 = shifted.row(1), r2 = shifted.row(2);
  const std::array<Eigen::Vector3d, 3> crosses = {r0.cross(r1), r0.cross(r2), r1.cross(r2)};
  const auto best = std::max_element(crosses.begin(), crosses.end(),
                                     [](const auto& x, const auto& y) { return x.norm() < y.norm(); });
  const double scale = std::max(shifted.norm(), 1e-300);
  if (best->norm() > 1e-10 * scale * scale)
    return best->normalized();

  // Rank <= 1: any vector orthogonal to the dominant row works.
  const std::array<Eigen::Vector3d, 3> rows = {r0, r1, r2};
  const auto dom = std::max_element(rows.begin(), rows.end(),
                                    [](const auto& x, const auto& y) { return x.norm() < y.norm(); });
  if (dom->norm() <= 1e-14 * std::max(scale, 1.0))
    return Eigen::Vector3d::UnitX();
  const Eigen::Vector3d d = dom->normalized();
  Eigen::Index axis = 0;
  d.cwiseAbs().minCoeff(&axis);
  Eigen::Vector3d e = Eigen::Vector3d::Unit(axis);
  return (e - e.dot(d) * d).normalized();
}

} // namespace

double min_eigenvalue(const MomentMatrix& mm)
{
  const Eigen::Matrix3d& a = mm.m;
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw InputError("moment matrix is not symmetric");
  if (!a.allFinite())
    throw InputError("moment matrix has non-finite entries");

  const double lambda = symmetric_eigenvalues(a)[0];
  const double scale = std::max(1.0, a.norm());
  Eigen::Vector3d v = null_vector(a - lambda * Eigen::Matrix3d::Identity());
  // Inverse iteration polishes the vector; the closed form loses digits near repeated roots.
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(a - (lambda - 1e-9 * scale) * Eigen::Matrix3d::Identity());
  for (int it = 0; it < 3; ++it) {
    const Eigen::Vector3d w = lu.solve(v);
    if (!w.allFinite() || w.norm() == 0.0)
      break;
    v = w.normalized();
  }
  const double refined = v.dot(a * v);
  const double residual = (a * v - refined * v).norm();
  if (residual > 1e-10 * scale)
    throw NumericError("eigenpair residual check failed (" + std::to_string(residual) + ")");
  return refined;
}

double thermal_pmf(unsigned n, double mean)
{
  if (mean <= 0.0)
    return n == 0 ? 1.0 : 0.0;
  return std::exp(numeric::log_power(mean, n) - (n + 1.0) * std::log1p(mean));
}

double poisson_model_pmf(unsigned n, double mean) { return numeric::poisson_pmf(n, mean); }

MarginalFit fit_marginal(std::span<const double> q, MarginalModel model)
{
  MarginalFit fit;
  fit.model = model;
  if (q.empty())
    throw InputError("cannot fit an empty marginal");

  double mass = 0.0, first = 0.0, excited = 0.0;
  for (std::size_t n = 0; n < q.size(); ++n) {
    mass += q[n];
    first += n * q[n];
    if (n > 0)
      excited += q[n];
  }
  if (excited <= 0.0 || q.size() < 2) {
    fit.mean = 0.0;
    fit.r_squared = 0.0;
    fit.r_squared_defined = false;
    return fit;
  }

  auto pmf = [model](unsigned n, double mean) {
    return model == MarginalModel::thermal ? thermal_pmf(n, mean) : poisson_model_pmf(n, mean);
  };
  auto residual = [&](double mean) {
    double ss = 0.0;
    for (std::size_t n = 0; n < q.size(); ++n) {
      const double d = pmf(static_cast<unsigned>(n), mean) - q[n];
      ss += d * d;
    }
    return ss;
  };

  // Coarse scan brackets the global minimum, Brent polishes it.
  const double upper = std::max(10.0, 4.0 * first / mass + 4.0);
  constexpr int steps = 400;
  int best = 0;
  double best_ss = residual(0.0);
  for (int i = 1; i <= steps; ++i) {
    const double ss = residual(upper * i / steps);
    if (ss < best_ss) {
      best_ss = ss;
      best = i;
    }
  }
  const double lo = upper * std::max(best - 1, 0) / steps;
  const double hi = upper * std::min(best + 1, steps) / steps;
  auto [mean, ss] = boost::math::tools::brent_find_minima(residual, lo, hi, 52);
  if (best_ss < ss) {
    mean = upper * best / steps;
    ss = best_ss;
  }
  fit.mean = mean;

  const double avg = mass / static_cast<double>(q.size());
  double ss_tot = 0.0;
  for (double x : q)
    ss_tot += (x - avg) * (x - avg);
  fit.r_squared = 1.0 - ss / ss_tot;
  return fit;
}

WitnessReport compute_witnesses(const JointPND& pnd, const Config& cfg)
{
  WitnessReport rep;
  const FactorialMoments f = factorial_moments(pnd);
  if (f(1, 1) > 0.0)
    rep.agarwal = std::sqrt(f(2, 0) * f(0, 2)) / f(1, 1) - 1.0;
  rep.matrix = moment_matrix(f);
  rep.det_m = det_moment_matrix(rep.matrix);
  rep.min_eigenvalue = min_eigenvalue(rep.matrix);

  const auto sig = marginal(pnd, Mode::signal);
  const auto idl = marginal(pnd, Mode::idler);
  rep.signal_fits = {fit_marginal(sig, MarginalModel::thermal), fit_marginal(sig, MarginalModel::poisson)};
  rep.idler_fits = {fit_marginal(idl, MarginalModel::thermal), fit_marginal(idl, MarginalModel::poisson)};
  if (f(0, 0) > 0.0) {
    rep.signal_mean = f(1, 0) / f(0, 0);
    rep.idler_mean = f(0, 1) / f(0, 0);
  }

  rep.cauchy_schwarz_violated = rep.agarwal && *rep.agarwal < -cfg.zero_band;
  rep.determinant_negative = rep.det_m < -cfg.zero_band;
  rep.eigenvalue_negative = rep.min_eigenvalue < -cfg.zero_band;
  return rep;
}

} // namespace tmsv
