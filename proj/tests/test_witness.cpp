#include <doctest.h>

#include <algorithm>
#include <random>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "tmsv/errors.hpp"
#include "tmsv/state.hpp"
#include "tmsv/witness.hpp"

using namespace tmsv;

namespace {

JointPND point_mass(unsigned n, unsigned m, unsigned n_max)
{
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
  p(n, m) = 1.0;
  return JointPND(p);
}

JointPND ideal_tmsv(double z) { return ideal_joint_pnd(build_subtracted_state(z, {}, 1e-20, 1000)); }

JointPND poisson_mixture(const std::vector<std::array<double, 3>>& parts, unsigned n_max = 40)
{
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
  for (const auto& [w, a, b] : parts)
    p += w * oracle::poisson_product(a, b, n_max);
  return JointPND(p);
}

} // namespace

TEST_CASE("marginals")
{
  CHECK(marginal(point_mass(2, 3, 4), Mode::signal)[2] == 1.0);
  CHECK(marginal(point_mass(2, 3, 4), Mode::idler)[3] == 1.0);

  Eigen::MatrixXd u = Eigen::MatrixXd::Constant(2, 2, 0.25);
  const auto mu = marginal(JointPND(u), Mode::signal);
  CHECK(mu[0] == 0.5);
  CHECK(mu[1] == 0.5);

  const auto g = marginal(ideal_tmsv(0.7), Mode::idler);
  for (unsigned n = 0; n < 12; ++n)
    CHECK(g[n] == doctest::Approx(0.51 * std::pow(0.49, n)).epsilon(1e-10));
}

TEST_CASE("factorial moments")
{
  const auto p = point_mass(3, 2, 5);
  CHECK(joint_factorial_moment(p, 0, 0) == p.total());
  CHECK(joint_factorial_moment(p, 2, 1) == 12.0);

  for (double z : {0.2, 0.5, 0.8}) {
    const double nb = oracle::mean_pairs(z);
    const auto t = ideal_tmsv(z);
    CHECK(joint_factorial_moment(t, 1, 1) == doctest::Approx(2 * nb * nb + nb).epsilon(1e-11));
    for (unsigned u = 0; u <= 2; ++u)
      for (unsigned v = 0; v <= 2; ++v)
        CHECK(std::abs(joint_factorial_moment(t, u, v) - oracle::factorial_moment(t.probs(), u, v)) < 1e-12);
  }
}

TEST_CASE("moment matrix of point masses")
{
  const auto m0 = moment_matrix(point_mass(0, 0, 2)).m;
  CHECK(m0(0, 0) == 1.0);
  CHECK(m0.cwiseAbs().sum() == 1.0);

  const auto m1 = moment_matrix(point_mass(1, 1, 2)).m;
  Eigen::Matrix3d expect;
  expect << 1, 1, 1, 1, 0, 1, 1, 1, 0;
  CHECK(m1 == expect);
  CHECK(det_moment_matrix(MomentMatrix{expect}) == doctest::Approx(expect.determinant()).epsilon(1e-15));
}

TEST_CASE("ideal two-mode squeezed vacuum closed forms")
{
  CHECK(agarwal_parameter(ideal_tmsv(0.1)) == doctest::Approx(-0.98).epsilon(1e-3));
  const auto m = moment_matrix(ideal_tmsv(0.5));
  CHECK(det_moment_matrix(m) == doctest::Approx(-2.0 / 27.0 - 1.0 / 9.0).epsilon(1e-11));
  for (int i = 1; i <= 9; ++i) {
    const double z = 0.1 * i;
    const auto t = ideal_tmsv(z);
    CHECK(std::abs(agarwal_parameter(t) - oracle::agarwal_tmsv(z)) < 1e-10);
    CHECK(std::abs(det_moment_matrix(moment_matrix(t)) - oracle::det_tmsv(z)) < 1e-10);
    CHECK(min_eigenvalue(moment_matrix(t)) < 0.0);
  }
  // I tends to 0 from below as z approaches 1.
  CHECK(agarwal_parameter(ideal_joint_pnd(build_subtracted_state(0.97, {}, 1e-9, 1000))) > -0.05);
}

TEST_CASE("undefined Agarwal parameter")
{
  CHECK_THROWS_AS(agarwal_parameter(point_mass(0, 0, 1)), UndefinedWitnessError);
  CHECK_THROWS_AS(agarwal_parameter(point_mass(3, 0, 3)), UndefinedWitnessError);
  const auto rep = compute_witnesses(point_mass(0, 0, 1));
  CHECK_FALSE(rep.agarwal.has_value());
  CHECK_FALSE(rep.cauchy_schwarz_violated);
}

TEST_CASE("eigenvalues")
{
  CHECK(min_eigenvalue(MomentMatrix{Eigen::Matrix3d::Identity()}) == doctest::Approx(1.0));
  CHECK(min_eigenvalue(MomentMatrix{Eigen::Vector3d(1, 2, -3).asDiagonal().toDenseMatrix()}) ==
        doctest::Approx(-3.0));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::Matrix3d a;
    for (int r = 0; r < 3; ++r)
      for (int c = r; c < 3; ++c)
        a(r, c) = a(c, r) = u(rng);
    if (trial % 5 == 0)
      a(1, 1) = a(0, 0); // near-degenerate spectra
    auto mine = symmetric_eigenvalues(a);
    std::sort(mine.begin(), mine.end());
    const Eigen::Vector3d ref = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(a).eigenvalues();
    for (int k = 0; k < 3; ++k)
      CHECK(std::abs(mine[k] - ref(k)) < 1e-11 * std::max(1.0, a.norm()));
  }

  Eigen::Matrix3d asym = Eigen::Matrix3d::Identity();
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(min_eigenvalue(MomentMatrix{asym}), InputError);
}

TEST_CASE("determinant equals the normally ordered variance identity")
{
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd p(6, 6);
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c)
        p(r, c) = u(rng) < 0.3 ? 0.0 : u(rng);
    p /= p.sum();
    const JointPND pnd(p);
    const auto f = factorial_moments(pnd);
    const double var_s = f(2, 0) - f(1, 0) * f(1, 0);
    const double var_i = f(0, 2) - f(0, 1) * f(0, 1);
    const double cov = f(1, 1) - f(1, 0) * f(0, 1);
    const double det = det_moment_matrix(moment_matrix(pnd));
    CHECK(std::abs(det - (var_s * var_i - cov * cov)) < 1e-12 * std::max(1.0, std::abs(det)));
    CHECK(det == doctest::Approx(moment_matrix(pnd).m.determinant()).epsilon(1e-10));
  }
}

TEST_CASE("classical distributions are never flagged")
{
  for (double a : {0.1, 1.0, 3.0})
    for (double b : {0.2, 2.0}) {
      const auto rep = compute_witnesses(poisson_mixture({{1.0, a, b}}));
      REQUIRE(rep.agarwal.has_value());
      CHECK(std::abs(*rep.agarwal) < 1e-10);
      CHECK(std::abs(rep.det_m) < 1e-10);
      CHECK(rep.min_eigenvalue >= -1e-10);
      CHECK_FALSE(rep.cauchy_schwarz_violated);
      CHECK_FALSE(rep.determinant_negative);
      CHECK_FALSE(rep.eigenvalue_negative);
    }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::array<double, 3>> parts;
    double wsum = 0.0;
    for (int c = 0; c < 1 + trial % 4; ++c) {
      parts.push_back({u(rng) + 0.01, u(rng), u(rng)});
      wsum += parts.back()[0];
    }
    for (auto& p : parts)
      p[0] /= wsum;
    const auto rep = compute_witnesses(poisson_mixture(parts));
    CHECK(*rep.agarwal >= -1e-10);
    CHECK(rep.det_m >= -1e-10);
    CHECK(rep.min_eigenvalue >= -1e-10);
  }
}

TEST_CASE("subtracted states are nonclassical for ideal and lossy detection")
{
  for (int i = 1; i <= 9; ++i)
    for (unsigned l = 0; l <= 3; ++l)
      for (double eta : {1.0, 0.1625})
        for (double nu : {0.0, 0.001}) {
          const auto s = build_subtracted_state(0.1 * i, SubtractionSpec::symmetric(l), 1e-9);
          const auto rep = compute_witnesses(detected_joint_pnd(s, {eta, nu}, {eta, nu}));
          CHECK(*rep.agarwal < 0.0);
          CHECK(rep.det_m < 0.0);
          CHECK(rep.min_eigenvalue < 0.0);
        }
}

TEST_CASE("loss scales factorial moments by eta^(u+v)")
{
  const auto s = build_subtracted_state(0.6, {2, 1}, 1e-14);
  const auto ideal = factorial_moments(detected_joint_pnd(s, DetectorModel::ideal(), DetectorModel::ideal(), 80));
  const auto lossy = factorial_moments(detected_joint_pnd(s, {0.5, 0.0}, {0.5, 0.0}, 80));
  for (unsigned u = 0; u <= 2; ++u)
    for (unsigned v = 0; v <= 2; ++v)
      CHECK(lossy(u, v) == doctest::Approx(std::pow(0.5, u + v) * ideal(u, v)).epsilon(1e-10));
}

TEST_CASE("marginal fits")
{
  std::vector<double> pois(40), therm(60);
  for (unsigned n = 0; n < pois.size(); ++n)
    pois[n] = oracle::poisson(n, 1.0);
  for (unsigned n = 0; n < therm.size(); ++n)
    therm[n] = std::pow(0.7, n) / std::pow(1.7, n + 1);

  const auto fp = fit_marginal(pois, MarginalModel::poisson);
  CHECK(fp.mean == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(fp.r_squared == doctest::Approx(1.0).epsilon(1e-10));

  const auto ft = fit_marginal(therm, MarginalModel::thermal);
  CHECK(ft.mean == doctest::Approx(0.7).epsilon(1e-6));
  CHECK(ft.r_squared == doctest::Approx(1.0).epsilon(1e-10));

  // Independent brute-force scan for the best Poisson fit of the thermal data.
  double ss_tot = 0.0, mean = 0.0;
  for (double x : therm)
    mean += x / therm.size();
  for (double x : therm)
    ss_tot += (x - mean) * (x - mean);
  double best = 1e300;
  for (int i = 1; i <= 20000; ++i) {
    const double mu = 3.0 * i / 20000.0;
    double ss = 0.0;
    for (unsigned n = 0; n < therm.size(); ++n)
      ss += std::pow(therm[n] - oracle::poisson(n, mu), 2);
    best = std::min(best, ss);
  }
  const auto fpt = fit_marginal(therm, MarginalModel::poisson);
  CHECK(fpt.r_squared < 1.0);
  CHECK(fpt.r_squared == doctest::Approx(1.0 - best / ss_tot).epsilon(1e-6));

  const auto delta = fit_marginal(std::vector<double>{1.0, 0.0, 0.0}, MarginalModel::thermal);
  CHECK_FALSE(delta.r_squared_defined);
}

TEST_CASE("detected heavily subtracted marginals look Poissonian")
{
  const auto s = build_subtracted_state(0.66, SubtractionSpec::symmetric(3), 1e-9);
  const auto rep = compute_witnesses(detected_joint_pnd(s, {0.1625, 0.0}, {0.1625, 0.0}));
  CHECK(rep.signal_fits.poisson.r_squared > rep.signal_fits.thermal.r_squared);
  CHECK(rep.idler_fits.poisson.r_squared > rep.idler_fits.thermal.r_squared);
}
