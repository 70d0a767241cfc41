#include "tmsv/mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "tmsv/errors.hpp"
#include "tmsv/numeric.hpp"

namespace tmsv::mc {

namespace {

constexpr std::uint64_t kChunk = 1 << 16;
constexpr unsigned kMaxPairIndex = 4000;

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// P(count | r photons) for one detector.
double detection_probability(unsigned count, unsigned r, const DetectorModel& det)
{
  double acc = 0.0;
  for (unsigned i = 0; i <= std::min(count, r); ++i)
    acc += numeric::binomial_pmf(i, r, det.eta) * numeric::poisson_pmf(count - i, det.nu);
  return acc;
}

std::size_t sample_cdf(const std::vector<double>& cdf, Rng& rng)
{
  const double u = uniform01(rng) * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

// Joint law of (j, reflected_s, reflected_i) given that both tap detectors report the
// conditioned counts.
struct HeraldedLaw
{
  double probability = 0.0;
  std::vector<double> pair_cdf;
  std::vector<std::vector<double>> reflected_cdf_s;
  std::vector<std::vector<double>> reflected_cdf_i;

  explicit HeraldedLaw(const ProtocolConfig& cfg)
  {
    const double z2 = cfg.z * cfg.z;
    const double loss = 1.0 - cfg.tap_transmission;
    std::vector<double> herald_s, herald_i;
    double running = 0.0;
    double previous = 0.0;
    unsigned falling = 0;
    for (unsigned j = 0;; ++j) {
      if (j > kMaxPairIndex)
        throw TruncationError("heralded pair distribution does not converge below j = " +
                              std::to_string(kMaxPairIndex));
      const double prior = (1.0 - z2) * (j == 0 ? 1.0 : std::pow(z2, j));
      auto arm = [&](unsigned l, std::vector<double>& cdf) {
        cdf.assign(j + 1, 0.0);
        double acc = 0.0;
        for (unsigned r = 0; r <= j; ++r) {
          acc += numeric::binomial_pmf(r, j, loss) * detection_probability(l, r, cfg.tap_detector);
          cdf[r] = acc;
        }
        return acc;
      };
      std::vector<double> cdf_s, cdf_i;
      const double a_s = arm(cfg.condition.signal, cdf_s);
      const double a_i = arm(cfg.condition.idler, cdf_i);
      const double w = prior * a_s * a_i;
      running += w;
      pair_cdf.push_back(running);
      reflected_cdf_s.push_back(std::move(cdf_s));
      reflected_cdf_i.push_back(std::move(cdf_i));

      falling = (w <= previous) ? falling + 1 : 0;
      previous = w;
      const bool negligible = running > 0.0 ? w < 1e-17 * running : prior < 1e-300;
      if ((negligible && falling >= 3) || z2 == 0.0 || prior == 0.0)
        break;
    }
    probability = running;
  }
};

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b)
{
  return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max() : a + b;
}

// Number of rejected pulses before `accepted` successes, each with probability p.
std::uint64_t sample_failures(std::uint64_t accepted, double p, Rng& rng)
{
  if (p >= 1.0 || accepted == 0)
    return 0;
  const double scale = (1.0 - p) / p;
  const double rate = std::gamma_distribution<double>(static_cast<double>(accepted), scale)(rng);
  if (rate < 1e12)
    return std::poisson_distribution<std::uint64_t>(rate)(rng);
  if (rate >= 1.8e19)
    return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::llround(rate));
}

struct ChunkResult
{
  CountMatrix counts;
  std::uint64_t shots = 0;
  std::uint64_t accepted = 0;
};

ChunkResult run_rejection_chunk(const ProtocolConfig& cfg, std::uint64_t index, std::uint64_t shots)
{
  Rng rng(numeric::mix_seed(cfg.seed, index));
  ChunkResult out;
  out.shots = shots;
  for (std::uint64_t s = 0; s < shots; ++s) {
    const unsigned j = sample_pair_number(cfg.z, rng);
    const auto [sig_main, sig_tap] = beamsplitter_split(j, cfg.tap_transmission, rng);
    const auto [idl_main, idl_tap] = beamsplitter_split(j, cfg.tap_transmission, rng);
    const unsigned click_s = sample_detection(sig_tap, cfg.tap_detector, rng);
    const unsigned click_i = sample_detection(idl_tap, cfg.tap_detector, rng);
    if (click_s != cfg.condition.signal || click_i != cfg.condition.idler)
      continue;
    const unsigned n = sample_detection(sig_main, cfg.main_detector, rng);
    const unsigned m = sample_detection(idl_main, cfg.main_detector, rng);
    out.counts.add(n, m);
    ++out.accepted;
  }
  return out;
}

ChunkResult run_conditioned_chunk(const ProtocolConfig& cfg, const HeraldedLaw& law, std::uint64_t index,
                                  std::uint64_t accepted)
{
  Rng rng(numeric::mix_seed(cfg.seed, index));
  ChunkResult out;
  out.accepted = accepted;
  for (std::uint64_t s = 0; s < accepted; ++s) {
    const auto j = static_cast<unsigned>(sample_cdf(law.pair_cdf, rng));
    const auto r_s = static_cast<unsigned>(sample_cdf(law.reflected_cdf_s[j], rng));
    const auto r_i = static_cast<unsigned>(sample_cdf(law.reflected_cdf_i[j], rng));
    const unsigned n = sample_detection(j - r_s, cfg.main_detector, rng);
    const unsigned m = sample_detection(j - r_i, cfg.main_detector, rng);
    out.counts.add(n, m);
  }
  out.shots = saturating_add(accepted, sample_failures(accepted, law.probability, rng));
  return out;
}

template <class Job>
std::vector<ChunkResult> run_chunks(std::uint64_t chunks, unsigned workers, Job job)
{
  std::vector<ChunkResult> results(chunks);
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::uint64_t>(chunks, 1))));
  if (workers == 1) {
    for (std::uint64_t c = 0; c < chunks; ++c)
      results[c] = job(c);
    return results;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::uint64_t c = w; c < chunks; c += workers)
        results[c] = job(c);
    });
  for (auto& t : pool)
    t.join();
  return results;
}

} // namespace

void ProtocolConfig::validate() const
{
  if (!(z >= 0.0 && z < 1.0))
    throw DomainError("squeezing parameter z must lie in [0, 1)");
  if (!(tap_transmission > 0.0 && tap_transmission < 1.0))
    throw DomainError("tap transmission must lie in (0, 1)");
  tap_detector.validate();
  main_detector.validate();
  if (mode == SamplingMode::rejection && shots < 1)
    throw DomainError("shots must be at least 1");
  if (mode == SamplingMode::conditioned && target_accepted < 1)
    throw DomainError("conditioned sampling needs target_accepted >= 1");
}

unsigned sample_pair_number(double z, Rng& rng)
{
  if (!(z >= 0.0 && z < 1.0))
    throw DomainError("squeezing parameter z must lie in [0, 1)");
  if (z == 0.0)
    return 0;
  // P(J >= j) = z^{2j}; u in (0, 1].
  const double u = 1.0 - uniform01(rng);
  const double j = std::floor(std::log(u) / (2.0 * std::log(z)));
  return j >= 4e9 ? 4'000'000'000u : static_cast<unsigned>(j);
}

std::pair<unsigned, unsigned> beamsplitter_split(unsigned k, double transmission, Rng& rng)
{
  if (k == 0)
    return {0, 0};
  const unsigned t = std::binomial_distribution<unsigned>(k, transmission)(rng);
  return {t, k - t};
}

unsigned sample_detection(unsigned k, const DetectorModel& det, Rng& rng)
{
  unsigned n = 0;
  if (k > 0)
    n = det.eta >= 1.0 ? k : std::binomial_distribution<unsigned>(k, det.eta)(rng);
  if (det.nu > 0.0)
    n += std::poisson_distribution<unsigned>(det.nu)(rng);
  return n;
}

double heralding_probability(const ProtocolConfig& cfg)
{
  cfg.validate();
  return HeraldedLaw(cfg).probability;
}

McResult simulate_run(const ProtocolConfig& cfg)
{
  cfg.validate();
  std::vector<ChunkResult> chunks;
  std::optional<double> herald;

  if (cfg.mode == SamplingMode::rejection) {
    const std::uint64_t n_chunks = (cfg.shots + kChunk - 1) / kChunk;
    chunks = run_chunks(n_chunks, cfg.workers, [&](std::uint64_t c) {
      const std::uint64_t shots = std::min(kChunk, cfg.shots - c * kChunk);
      return run_rejection_chunk(cfg, c, shots);
    });
  } else {
    const HeraldedLaw law(cfg);
    herald = law.probability;
    if (law.probability > 0.0) {
      const std::uint64_t n_chunks = (cfg.target_accepted + kChunk - 1) / kChunk;
      chunks = run_chunks(n_chunks, cfg.workers, [&](std::uint64_t c) {
        const std::uint64_t acc = std::min(kChunk, cfg.target_accepted - c * kChunk);
        return run_conditioned_chunk(cfg, law, c, acc);
      });
    }
  }

  McResult res;
  res.heralding_probability = herald;
  for (const auto& c : chunks) {
    res.counts.merge(c.counts);
    res.shots = saturating_add(res.shots, c.shots);
    res.accepted += c.accepted;
  }
  res.empty = res.accepted == 0;
  res.acceptance_rate = res.shots > 0 ? static_cast<double>(res.accepted) / static_cast<double>(res.shots) : 0.0;
  res.empirical = res.counts.frequencies();
  return res;
}

double tv_distance(const JointPND& p, const JointPND& q)
{
  if (p.n_max() != q.n_max())
    throw InputError("total-variation distance needs matching grids (" + std::to_string(p.n_max()) +
                     " vs " + std::to_string(q.n_max()) + ")");
  return 0.5 * (p.probs() - q.probs()).cwiseAbs().sum();
}

} // namespace tmsv::mc
