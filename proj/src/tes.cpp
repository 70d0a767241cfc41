#include "tmsv/tes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "tmsv/errors.hpp"

namespace tmsv::tes {

namespace {

constexpr unsigned kMaxEmIterations = 5000;

double median_of(std::vector<double> xs)
{
  const auto mid = xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  return *mid;
}

double robust_sd(std::span<const double> xs)
{
  const double med = median_of({xs.begin(), xs.end()});
  std::vector<double> dev;
  dev.reserve(xs.size());
  for (double x : xs)
    dev.push_back(std::abs(x - med));
  return 1.4826 * median_of(std::move(dev));
}

// Peak positions (ascending) of a lightly smoothed histogram. A peak must reach 5% of
// the tallest bin and be separated from the previous peak by a valley below 80% of
// the smaller of the two, with a dip that stands out of the counting noise.
std::vector<double> histogram_peaks(std::span<const double> xs)
{
  const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo))
    return {lo};
  const auto bins = static_cast<std::size_t>(std::clamp(2.0 * std::sqrt(static_cast<double>(xs.size())), 30.0, 400.0));
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<double> h(bins, 0.0);
  for (double x : xs)
    h[std::min(bins - 1, static_cast<std::size_t>((x - lo) / width))] += 1.0;
  std::vector<double> s(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    const double left = i > 0 ? h[i - 1] : 0.0;
    const double right = i + 1 < bins ? h[i + 1] : 0.0;
    s[i] = 0.25 * left + 0.5 * h[i] + 0.25 * right;
  }
  const double top = *std::max_element(s.begin(), s.end());

  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < bins; ++i) {
    const double left = i > 0 ? s[i - 1] : -1.0;
    const double right = i + 1 < bins ? s[i + 1] : -1.0;
    if (!(s[i] > left && s[i] >= right && s[i] >= 0.05 * top))
      continue;
    if (!peaks.empty()) {
      const std::size_t prev = peaks.back();
      const double valley = *std::min_element(s.begin() + static_cast<std::ptrdiff_t>(prev),
                                              s.begin() + static_cast<std::ptrdiff_t>(i) + 1);
      const double lower = std::min(s[prev], s[i]);
      if (valley >= 0.8 * lower || lower - valley < 3.0 * std::sqrt(lower)) {
        if (s[i] > s[prev])
          peaks.back() = i;
        continue;
      }
    }
    peaks.push_back(i);
  }
  std::vector<double> out;
  for (auto i : peaks)
    out.push_back(lo + (static_cast<double>(i) + 0.5) * width);
  return out;
}

double log_gauss(double x, const MixtureComponent& c)
{
  const double d = (x - c.mean) / c.sigma;
  return -0.5 * d * d - std::log(c.sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

} // namespace

PulseTemplate PulseTemplate::from_waveform(std::span<const double> waveform, double noise_power)
{
  double energy = 0.0;
  for (double x : waveform)
    energy += x * x;
  if (!(energy > 0.0) || !std::isfinite(energy))
    throw InputError("pulse template must have positive finite energy");
  PulseTemplate t;
  const double scale = 1.0 / std::sqrt(energy);
  for (double x : waveform)
    t.shape.push_back(x * scale);
  t.noise_power = noise_power;
  return t;
}

PulseTemplate PulseTemplate::double_exponential(std::size_t length, double rise_samples, double decay_samples,
                                                std::size_t onset)
{
  if (!(rise_samples > 0.0 && decay_samples > rise_samples))
    throw DomainError("pulse template needs 0 < rise < decay");
  std::vector<double> w(length, 0.0);
  for (std::size_t i = onset; i < length; ++i) {
    const double t = static_cast<double>(i - onset);
    w[i] = std::exp(-t / decay_samples) - std::exp(-t / rise_samples);
  }
  return from_waveform(w);
}

Trace synth_trace(unsigned n_photons, const PulseTemplate& tmpl, double amplitude_per_photon, double noise_sigma,
                  mc::Rng& rng, double sample_period)
{
  Trace tr;
  tr.sample_period = sample_period;
  tr.samples.resize(tmpl.shape.size());
  std::normal_distribution<double> noise(0.0, 1.0);
  const double height = n_photons * amplitude_per_photon;
  for (std::size_t i = 0; i < tmpl.shape.size(); ++i) {
    tr.samples[i] = height * tmpl.shape[i];
    if (noise_sigma > 0.0)
      tr.samples[i] += noise_sigma * noise(rng);
  }
  return tr;
}

double wiener_project(const Trace& trace, const PulseTemplate& tmpl)
{
  if (trace.samples.size() < tmpl.shape.size())
    throw InputError("trace shorter than pulse template");
  double dot = 0.0, energy = 0.0;
  for (std::size_t i = 0; i < tmpl.shape.size(); ++i) {
    dot += trace.samples[i] * tmpl.shape[i];
    energy += tmpl.shape[i] * tmpl.shape[i];
  }
  return dot / energy;
}

GaussianMixture fit_mixture(std::span<const double> energies, unsigned k_max)
{
  const std::size_t n = energies.size();
  if (n < 50)
    throw InputError("mixture fit needs at least 50 energies");
  for (double e : energies)
    if (!std::isfinite(e))
      throw InputError("non-finite pulse energy");

  const auto peaks = histogram_peaks(energies);
  const double spread = std::max(robust_sd(energies), 1e-12);
  const double first = peaks.front();
  // Baseline-subtracted traces put the zero-photon level at zero energy. The ladder
  // index of the first peak is fixed from that anchor, so data without a vacuum
  // peak still get the right photon labels.
  double spacing = 0.0;
  if (peaks.size() >= 2)
    spacing = peaks[1] - peaks[0];
  else if (std::abs(first) > 5.0 * spread)
    spacing = std::abs(first);
  else
    spacing = 8.0 * spread;
  const double first_index = std::clamp(std::round(first / spacing), 0.0, static_cast<double>(k_max));
  const std::size_t k_count = k_max + 1;

  GaussianMixture mix;
  const double sigma0 = peaks.size() >= 2 ? spacing / 6.0 : std::min(spacing / 6.0, spread);
  // Initial weights count the pulses nearest each rung, plus half a pulse so no rung starts empty.
  std::vector<double> occupancy(k_count, 0.5);
  for (double e : energies) {
    const double rung = std::round((e - first) / spacing + first_index);
    if (rung >= 0.0 && rung < static_cast<double>(k_count))
      occupancy[static_cast<std::size_t>(rung)] += 1.0;
  }
  const double occupied = std::accumulate(occupancy.begin(), occupancy.end(), 0.0);
  for (std::size_t k = 0; k < k_count; ++k)
    mix.components.push_back(
        {occupancy[k] / occupied, first + (static_cast<double>(k) - first_index) * spacing, sigma0});
  const double sigma_floor = 1e-6 * spacing;

  std::vector<double> resp(n * k_count);
  std::vector<double> logs(k_count);
  double previous = -std::numeric_limits<double>::infinity();
  for (unsigned it = 0; it < kMaxEmIterations; ++it) {
    // E step.
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < k_count; ++k) {
        const auto& c = mix.components[k];
        logs[k] = c.weight > 0.0 ? std::log(c.weight) + log_gauss(energies[i], c)
                                 : -std::numeric_limits<double>::infinity();
        top = std::max(top, logs[k]);
      }
      double sum = 0.0;
      for (std::size_t k = 0; k < k_count; ++k)
        sum += (resp[i * k_count + k] = std::exp(logs[k] - top));
      for (std::size_t k = 0; k < k_count; ++k)
        resp[i * k_count + k] /= sum;
      ll += top + std::log(sum);
    }
    mix.log_likelihood = ll;
    mix.iterations = it + 1;
    // Converged when the mean per-pulse log-likelihood moves by less than 1e-9.
    if (std::abs(ll - previous) < 1e-9 * static_cast<double>(n)) {
      mix.converged = true;
      break;
    }
    previous = ll;

    // M step.
    for (std::size_t k = 0; k < k_count; ++k) {
      double r = 0.0, mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        r += resp[i * k_count + k];
        mean += resp[i * k_count + k] * energies[i];
      }
      auto& c = mix.components[k];
      c.weight = r / static_cast<double>(n);
      // Rungs holding less than one pulse keep their ladder position and width.
      if (r < 1.0)
        continue;
      mean /= r;
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        var += resp[i * k_count + k] * (energies[i] - mean) * (energies[i] - mean);
      c.mean = mean;
      c.sigma = std::max(std::sqrt(var / r), sigma_floor);
    }
  }

  std::sort(mix.components.begin(), mix.components.end(),
            [](const auto& a, const auto& b) { return a.mean < b.mean; });
  double wsum = 0.0;
  for (const auto& c : mix.components)
    wsum += c.weight;
  for (auto& c : mix.components)
    c.weight /= wsum;
  return mix;
}

Assignment assign_photon_numbers(std::span<const double> energies, const GaussianMixture& mix)
{
  if (mix.components.empty())
    throw InputError("empty mixture");
  Assignment out;
  out.distribution.assign(mix.components.size(), 0.0);
  out.photon_numbers.reserve(energies.size());
  for (double e : energies) {
    unsigned best = 0;
    bool found = false;
    double best_lp = 0.0;
    for (unsigned k = 0; k < mix.components.size(); ++k) {
      const auto& c = mix.components[k];
      if (!(c.weight > 0.0))
        continue;
      const double lp = std::log(c.weight) + log_gauss(e, c);
      // Ties within rounding go to the lower photon number.
      if (!found || lp > best_lp + 1e-12 * std::max(1.0, std::abs(best_lp))) {
        found = true;
        best_lp = lp;
        best = k;
      }
    }
    out.photon_numbers.push_back(best);
    out.distribution[best] += 1.0;
  }
  if (!energies.empty())
    for (auto& d : out.distribution)
      d /= static_cast<double>(energies.size());
  return out;
}

} // namespace tmsv::tes
