#include <doctest.h>

#include "oracles.hpp"
#include "tmsv/errors.hpp"
#include "tmsv/mc.hpp"

using namespace tmsv;

TEST_CASE("pair number sampling")
{
  mc::Rng rng(1);
  for (int i = 0; i < 1000; ++i)
    REQUIRE(mc::sample_pair_number(0.0, rng) == 0);

  const double nb = oracle::mean_pairs(0.66);
  const int draws = 1'000'000;
  double sum = 0.0;
  for (int i = 0; i < draws; ++i)
    sum += mc::sample_pair_number(0.66, rng);
  const double sigma = std::sqrt(nb * (1.0 + nb) / draws);
  CHECK(std::abs(sum / draws - nb) < 3.0 * sigma);

  // Chi-square goodness of fit at z = 0.9 over bins 0..39 plus a tail bin.
  const int bins = 40;
  std::vector<double> observed(bins + 1, 0.0);
  for (int i = 0; i < 200'000; ++i)
    observed[std::min(mc::sample_pair_number(0.9, rng), static_cast<unsigned>(bins))] += 1.0;
  double chi2 = 0.0, tail = 1.0;
  for (int j = 0; j <= bins; ++j) {
    const double p = j < bins ? 0.19 * std::pow(0.81, j) : tail;
    tail -= p;
    const double e = 200'000 * p;
    chi2 += (observed[j] - e) * (observed[j] - e) / e;
  }
  // 40 degrees of freedom; 99.9% quantile is about 73.4.
  CHECK(chi2 < 73.4);
}

TEST_CASE("beam splitter")
{
  mc::Rng rng(2);
  CHECK(mc::beamsplitter_split(0, 0.9, rng) == std::pair<unsigned, unsigned>{0, 0});

  int kept = 0;
  const double t = 1.0 - 1e-3;
  for (int i = 0; i < 200'000; ++i)
    kept += mc::beamsplitter_split(5, t, rng).first == 5;
  const double p = std::pow(t, 5);
  CHECK(std::abs(kept / 200'000.0 - p) < 4.0 * std::sqrt(p * (1 - p) / 200'000.0));

  double sum = 0.0;
  for (int i = 0; i < 1'000'000; ++i) {
    const auto [tr, rf] = mc::beamsplitter_split(10, 0.9, rng);
    REQUIRE(tr + rf == 10);
    sum += tr;
  }
  CHECK(std::abs(sum / 1e6 - 9.0) < 3.0 * std::sqrt(0.9 / 1e6));
}

TEST_CASE("vacuum run accepts everything at (0,0)")
{
  mc::ProtocolConfig cfg;
  cfg.z = 0.0;
  cfg.shots = 10'000;
  const auto res = mc::simulate_run(cfg);
  CHECK(res.acceptance_rate == 1.0);
  CHECK(res.counts.at(0, 0) == 10'000);
  CHECK(res.counts.total() == res.accepted);
}

TEST_CASE("results do not depend on worker count")
{
  mc::ProtocolConfig cfg;
  cfg.z = 0.6;
  cfg.condition = {1, 0};
  cfg.main_detector = {0.5, 0.01};
  cfg.tap_detector = {0.9, 0.001};
  cfg.shots = 300'000;
  const auto a = mc::simulate_run(cfg);
  cfg.workers = 3;
  const auto b = mc::simulate_run(cfg);
  CHECK(a.counts == b.counts);
  CHECK(a.accepted == b.accepted);

  cfg.mode = mc::SamplingMode::conditioned;
  cfg.target_accepted = 200'000;
  const auto c = mc::simulate_run(cfg);
  cfg.workers = 1;
  const auto d = mc::simulate_run(cfg);
  CHECK(c.counts == d.counts);
  CHECK(c.shots == d.shots);

  cfg.seed += 1;
  CHECK_FALSE(mc::simulate_run(cfg).counts == d.counts);
}

TEST_CASE("rejection and conditioned sampling agree")
{
  mc::ProtocolConfig cfg;
  cfg.z = 0.6;
  cfg.condition = {1, 1};
  cfg.tap_transmission = 0.8;
  cfg.tap_detector = {0.8, 0.002};
  cfg.main_detector = {0.6, 0.01};
  cfg.shots = 3'000'000;
  const auto rej = mc::simulate_run(cfg);
  cfg.mode = mc::SamplingMode::conditioned;
  cfg.target_accepted = rej.accepted;
  const auto con = mc::simulate_run(cfg);
  const double herald = *con.heralding_probability;
  CHECK(std::abs(rej.acceptance_rate - herald) < 4.0 * std::sqrt(herald / cfg.shots));
  CHECK(con.acceptance_rate == doctest::Approx(herald).epsilon(0.05));
  const unsigned grid = std::max(rej.empirical.n_max(), con.empirical.n_max());
  CHECK(mc::tv_distance(rej.empirical.resized(grid), con.empirical.resized(grid)) < 0.02);
}

TEST_CASE("acceptance of the (0,0) condition falls with z")
{
  double previous = 1.1;
  for (double z : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    mc::ProtocolConfig cfg;
    cfg.z = z;
    cfg.shots = 200'000;
    const auto res = mc::simulate_run(cfg);
    CHECK(res.acceptance_rate < previous);
    previous = res.acceptance_rate;
  }
}

TEST_CASE("conditioning on more tap clicks brightens the main arms")
{
  double previous = -1.0;
  for (unsigned l = 0; l <= 3; ++l) {
    mc::ProtocolConfig cfg;
    cfg.z = 0.5;
    cfg.condition = SubtractionSpec::symmetric(l);
    cfg.mode = mc::SamplingMode::conditioned;
    cfg.target_accepted = 100'000;
    cfg.main_detector = {0.5, 0.0};
    const auto res = mc::simulate_run(cfg);
    double mean = 0.0;
    for (unsigned n = 0; n <= res.empirical.n_max(); ++n)
      for (unsigned m = 0; m <= res.empirical.n_max(); ++m)
        mean += n * res.empirical(n, m);
    CHECK(mean >= previous);
    previous = mean;
  }
}

TEST_CASE("empirical distribution converges at the 1/sqrt(N) rate")
{
  mc::ProtocolConfig cfg;
  cfg.z = 0.5;
  cfg.tap_transmission = 0.999;
  cfg.condition = SubtractionSpec::symmetric(1);
  cfg.mode = mc::SamplingMode::conditioned;
  const auto exact = oracle::detected_pnd(0.5, 1, 1, 0.999, 0.0, 0.999, 0.0, 40);
  auto tv_at = [&](std::uint64_t n) {
    cfg.target_accepted = n;
    const auto res = mc::simulate_run(cfg);
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(41, 41);
    e.topLeftCorner(res.empirical.n_max() + 1, res.empirical.n_max() + 1) = res.empirical.probs();
    return oracle::tv(e, exact);
  };
  const double coarse = tv_at(10'000);
  const double fine = tv_at(1'000'000);
  CHECK(fine < 0.01);
  CHECK(coarse / fine > 3.0);
}

TEST_CASE("zero acceptance yields an empty result")
{
  mc::ProtocolConfig cfg;
  cfg.z = 0.0;
  cfg.condition = {1, 0};
  cfg.shots = 1000;
  auto res = mc::simulate_run(cfg);
  CHECK(res.empty);
  CHECK(res.accepted == 0);
  cfg.mode = mc::SamplingMode::conditioned;
  cfg.target_accepted = 10;
  res = mc::simulate_run(cfg);
  CHECK(res.empty);
  CHECK(*res.heralding_probability == 0.0);
}

TEST_CASE("total variation distance")
{
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2), b = a;
  a(0, 0) = 1.0;
  b(1, 1) = 1.0;
  CHECK(mc::tv_distance(JointPND(a), JointPND(a)) == 0.0);
  CHECK(mc::tv_distance(JointPND(a), JointPND(b)) == 1.0);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2, 2), q = p;
  p(0, 0) = 0.6;
  p(0, 1) = 0.4;
  q(0, 0) = 0.5;
  q(0, 1) = 0.5;
  CHECK(mc::tv_distance(JointPND(p), JointPND(q)) == doctest::Approx(0.1));
  CHECK_THROWS_AS(mc::tv_distance(JointPND(p), JointPND::zeros(3)), InputError);
}

TEST_CASE("protocol validation")
{
  mc::ProtocolConfig cfg;
  cfg.tap_transmission = 1.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg.tap_transmission = 0.9;
  cfg.shots = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}
