#include "tmsv/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <thread>
#include <vector>

#include "tmsv/errors.hpp"
#include "tmsv/numeric.hpp"

namespace tmsv::estimation {

namespace {

constexpr double kProbabilityFloor = 1e-300;
constexpr std::size_t kMaxStarts = 3;

using Point = std::vector<double>;

struct SimplexOutcome
{
  Point best;
  double value = 0.0;
  unsigned iterations = 0;
  unsigned evaluations = 0;
  bool converged = false;
};

// Nelder-Mead on a box: every trial point is clamped into the bounds before evaluation.
SimplexOutcome nelder_mead(const std::function<double(const Point&)>& f, const Point& start,
                           const Point& step, const std::vector<Bounds>& box, double tolerance,
                           unsigned max_iterations)
{
  const std::size_t dim = start.size();
  auto clamp = [&](Point x) {
    for (std::size_t d = 0; d < dim; ++d)
      x[d] = box[d].clamp(x[d]);
    return x;
  };

  SimplexOutcome out;
  std::vector<Point> simplex{clamp(start)};
  for (std::size_t d = 0; d < dim; ++d) {
    Point v = simplex.front();
    v[d] = v[d] + step[d] <= box[d].hi ? v[d] + step[d] : v[d] - step[d];
    simplex.push_back(clamp(v));
  }
  std::vector<double> values;
  for (const auto& v : simplex)
    values.push_back(f(v));
  out.evaluations = static_cast<unsigned>(simplex.size());

  std::vector<std::size_t> order(simplex.size());
  for (;;) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];

    double diameter = 0.0;
    for (const auto& v : simplex)
      for (std::size_t d = 0; d < dim; ++d)
        diameter = std::max(diameter, std::abs(v[d] - simplex[best][d]));
    if (diameter < tolerance) {
      out.converged = true;
      break;
    }
    if (out.iterations >= max_iterations)
      break;
    ++out.iterations;

    Point centroid(dim, 0.0);
    for (std::size_t i = 0; i < simplex.size(); ++i)
      if (i != worst)
        for (std::size_t d = 0; d < dim; ++d)
          centroid[d] += simplex[i][d] / static_cast<double>(dim);

    auto along = [&](double t) {
      Point x(dim);
      for (std::size_t d = 0; d < dim; ++d)
        x[d] = centroid[d] + t * (simplex[worst][d] - centroid[d]);
      return clamp(x);
    };
    auto evaluate = [&](const Point& x) {
      ++out.evaluations;
      return f(x);
    };

    const Point reflected = along(-1.0);
    const double f_reflected = evaluate(reflected);
    if (f_reflected < values[best]) {
      const Point expanded = along(-2.0);
      const double f_expanded = evaluate(expanded);
      if (f_expanded < f_reflected) {
        simplex[worst] = expanded;
        values[worst] = f_expanded;
      } else {
        simplex[worst] = reflected;
        values[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[second]) {
      simplex[worst] = reflected;
      values[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < values[worst];
    const Point contracted = along(outside ? -0.5 : 0.5);
    const double f_contracted = evaluate(contracted);
    if (f_contracted < (outside ? f_reflected : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = f_contracted;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best)
        continue;
      Point x(dim);
      for (std::size_t d = 0; d < dim; ++d)
        x[d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
      simplex[i] = clamp(x);
      values[i] = evaluate(simplex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  out.best = simplex[best];
  out.value = values[best];
  return out;
}

ModelParameters unpack(const Point& x, bool shared)
{
  if (shared)
    return ModelParameters::shared(x[0], x[1], x[2]);
  return {x[0], {x[1], x[2]}, {x[3], x[4]}};
}

Point pack(const ModelParameters& p, bool shared)
{
  if (shared)
    return {p.z, p.signal.eta, p.signal.nu};
  return {p.z, p.signal.eta, p.signal.nu, p.idler.eta, p.idler.nu};
}

std::vector<Bounds> box_of(const FitConfig& cfg)
{
  if (cfg.shared_detectors)
    return {cfg.z, cfg.eta, cfg.nu};
  return {cfg.z, cfg.eta, cfg.nu, cfg.eta, cfg.nu};
}

std::vector<double> linear_grid(const Bounds& b, unsigned points)
{
  std::vector<double> g;
  for (unsigned i = 0; i < points; ++i)
    g.push_back(points == 1 ? 0.5 * (b.lo + b.hi) : b.lo + (b.hi - b.lo) * i / (points - 1));
  return g;
}

// Geometric spacing resolves small efficiencies and dark-count rates; the lower
// bound itself is kept so a zero rate can be reached.
std::vector<double> log_grid(const Bounds& b, unsigned points, double floor)
{
  std::vector<double> g;
  const double lo = std::max(b.lo, floor);
  if (points == 0)
    return g;
  if (b.lo < floor) {
    g.push_back(b.lo);
    --points;
  }
  for (unsigned i = 0; i < points; ++i)
    g.push_back(points == 1 ? lo : lo * std::pow(b.hi / lo, static_cast<double>(i) / (points - 1)));
  return g;
}

class Objective
{
public:
  Objective(const CountMatrix& counts, SubtractionSpec sub, const FitConfig& cfg)
      : counts_(counts), sub_(sub), cfg_(cfg)
  {
  }

  double operator()(const Point& x)
  {
    try {
      return negative_log_likelihood(counts_, unpack(x, cfg_.shared_detectors), sub_, cfg_.tail_tol,
                                     cfg_.max_pair_index)
          .value;
    } catch (const TruncationError&) {
      return std::numeric_limits<double>::max();
    }
  }

private:
  const CountMatrix& counts_;
  SubtractionSpec sub_;
  const FitConfig& cfg_;
};

SimplexOutcome refine(Objective& objective, const Point& start, const FitConfig& cfg,
                      const std::vector<double>& initial_steps)
{
  const auto box = box_of(cfg);
  SimplexOutcome first = nelder_mead(std::ref(objective), start, initial_steps, box, cfg.tolerance,
                                     cfg.max_iterations);
  // Restart once from the optimum with a fresh simplex; guards against collapse.
  std::vector<double> small(initial_steps.size());
  for (std::size_t d = 0; d < small.size(); ++d)
    small[d] = std::max(0.1 * initial_steps[d], 20.0 * cfg.tolerance);
  SimplexOutcome second = nelder_mead(std::ref(objective), first.best, small, box, cfg.tolerance,
                                      cfg.max_iterations);
  second.iterations += first.iterations;
  second.evaluations += first.evaluations;
  second.converged = first.converged && second.converged;
  if (first.value < second.value) {
    second.best = first.best;
    second.value = first.value;
  }
  return second;
}

FitResult finish(const CountMatrix& counts, SubtractionSpec sub, const FitConfig& cfg, const SimplexOutcome& o)
{
  FitResult r;
  r.params = unpack(o.best, cfg.shared_detectors);
  const NllResult final_nll =
      negative_log_likelihood(counts, r.params, sub, cfg.tail_tol, cfg.max_pair_index);
  r.nll = final_nll.value;
  r.floored = final_nll.floored;
  r.converged = o.converged && std::isfinite(r.nll);
  r.iterations = o.iterations;
  r.evaluations = o.evaluations;
  r.degenerate = counts.occupied_cells() <= 1;
  r.nu_at_lower_bound = r.params.signal.nu <= cfg.nu.lo + cfg.tolerance &&
                        (cfg.shared_detectors || r.params.idler.nu <= cfg.nu.lo + cfg.tolerance);
  return r;
}

double sample_sd(const std::vector<double>& xs)
{
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs)
    ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

} // namespace

void FitConfig::validate() const
{
  for (const Bounds* b : {&z, &eta, &nu})
    if (!(b->lo <= b->hi))
      throw DomainError("fit bounds must be ordered");
  if (!(z.lo >= 0.0 && z.hi < 1.0))
    throw DomainError("z bounds must lie in [0, 1)");
  if (!(eta.lo > 0.0 && eta.hi <= 1.0))
    throw DomainError("eta bounds must lie in (0, 1]");
  if (!(nu.lo >= 0.0))
    throw DomainError("nu bounds must be non-negative");
  if (!(tolerance > 0.0) || !(tail_tol > 0.0))
    throw DomainError("tolerances must be positive");
  if (grid_z == 0 || grid_eta == 0 || grid_nu == 0)
    throw DomainError("grid resolution must be positive");
}

JointPND model_distribution(const ModelParameters& p, SubtractionSpec sub, unsigned n_max, double tail_tol,
                            unsigned max_pair_index)
{
  const FockAmplitudes state = build_subtracted_state(p.z, sub, tail_tol, max_pair_index);
  return detected_joint_pnd(state, p.signal, p.idler, n_max);
}

NllResult negative_log_likelihood(const CountMatrix& counts, double z, double eta, double nu,
                                  SubtractionSpec sub)
{
  return negative_log_likelihood(counts, ModelParameters::shared(z, eta, nu), sub);
}

NllResult negative_log_likelihood(const CountMatrix& counts, const ModelParameters& p, SubtractionSpec sub,
                                  double tail_tol, unsigned max_pair_index)
{
  if (counts.total() == 0)
    throw InputError("negative log-likelihood of empty counts");
  const auto n_max = static_cast<unsigned>(std::max(counts.rows(), counts.cols()) - 1);
  const JointPND model = model_distribution(p, sub, n_max, tail_tol, max_pair_index);

  NllResult out;
  for (std::size_t n = 0; n < counts.rows(); ++n)
    for (std::size_t m = 0; m < counts.cols(); ++m) {
      const std::uint64_t c = counts.at(n, m);
      if (c == 0)
        continue;
      double prob = model(static_cast<unsigned>(n), static_cast<unsigned>(m));
      if (prob < kProbabilityFloor) {
        prob = kProbabilityFloor;
        out.floored = true;
      }
      out.value -= static_cast<double>(c) * std::log(prob);
    }
  return out;
}

FitResult fit_parameters(const CountMatrix& counts, SubtractionSpec sub, const FitConfig& cfg)
{
  cfg.validate();
  if (counts.total() < 100)
    throw InputError("fitting needs at least 100 counts, got " + std::to_string(counts.total()));

  Objective objective(counts, sub, cfg);
  const auto zs = linear_grid(cfg.z, cfg.grid_z);
  const auto etas = log_grid(cfg.eta, cfg.grid_eta, 0.01);
  const auto nus = log_grid(cfg.nu, cfg.grid_nu, 1e-3);

  // The likelihood has a secondary valley toward z -> 1, eta -> 0 (fixed eta * mean);
  // the simplex is therefore started from several local minima of the grid.
  const std::size_t nz = zs.size(), ne = etas.size(), nn = nus.size();
  std::vector<double> table(nz * ne * nn);
  auto at = [&](std::size_t i, std::size_t j, std::size_t k) -> double& { return table[(i * ne + j) * nn + k]; };
  unsigned evaluations = 0;
  for (std::size_t i = 0; i < nz; ++i)
    for (std::size_t j = 0; j < ne; ++j)
      for (std::size_t k = 0; k < nn; ++k) {
        const Point x{zs[i], etas[j], nus[k]};
        at(i, j, k) = objective(cfg.shared_detectors ? x : Point{x[0], x[1], x[2], x[1], x[2]});
        ++evaluations;
      }
  std::vector<std::pair<double, Point>> starts;
  for (std::size_t i = 0; i < nz; ++i)
    for (std::size_t j = 0; j < ne; ++j)
      for (std::size_t k = 0; k < nn; ++k) {
        const double v = at(i, j, k);
        bool local = std::isfinite(v);
        for (int di = -1; di <= 1 && local; ++di)
          for (int dj = -1; dj <= 1 && local; ++dj)
            for (int dk = -1; dk <= 1 && local; ++dk) {
              const long a = static_cast<long>(i) + di, b = static_cast<long>(j) + dj, c = static_cast<long>(k) + dk;
              if ((di || dj || dk) && a >= 0 && b >= 0 && c >= 0 && a < static_cast<long>(nz) &&
                  b < static_cast<long>(ne) && c < static_cast<long>(nn))
                local = v <= at(a, b, c);
            }
        if (local)
          starts.push_back({v, Point{zs[i], etas[j], nus[k]}});
      }
  if (starts.empty())
    starts.push_back({at(0, 0, 0), Point{zs.front(), etas.front(), nus.front()}});
  std::sort(starts.begin(), starts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  if (starts.size() > kMaxStarts)
    starts.resize(kMaxStarts);

  auto spacing = [](const std::vector<double>& g, double x, double fallback) {
    if (g.size() < 2)
      return fallback;
    double s = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < g.size(); ++i)
      if (g[i] <= x + 1e-15 && x <= g[i + 1] + 1e-15)
        s = std::min(s, g[i + 1] - g[i]);
    if (!std::isfinite(s))
      s = g[1] - g[0];
    return 0.5 * s;
  };
  std::optional<SimplexOutcome> best_outcome;
  unsigned iterations = 0;
  for (const auto& [value, x] : starts) {
    Point start = x;
    Point steps{spacing(zs, x[0], 0.05), spacing(etas, x[1], 0.05), std::max(spacing(nus, x[2], 0.01), 1e-4)};
    if (!cfg.shared_detectors) {
      start = {x[0], x[1], x[2], x[1], x[2]};
      steps = {steps[0], steps[1], steps[2], steps[1], steps[2]};
    }
    const SimplexOutcome o = refine(objective, start, cfg, steps);
    evaluations += o.evaluations;
    iterations += o.iterations;
    if (!best_outcome || o.value < best_outcome->value)
      best_outcome = o;
  }
  SimplexOutcome o = *best_outcome;
  o.iterations = iterations;
  o.evaluations = evaluations;
  return finish(counts, sub, cfg, o);
}

StdErrors bootstrap_errors(const CountMatrix& counts, SubtractionSpec sub, const FitConfig& cfg,
                           const std::optional<FitResult>& start)
{
  if (cfg.bootstrap < 10)
    throw InputError("bootstrap needs at least 10 resamples, got " + std::to_string(cfg.bootstrap));
  const FitResult origin = start ? *start : fit_parameters(counts, sub, cfg);
  const JointPND freq = counts.frequencies();
  const std::uint64_t total = counts.total();
  const Point x0 = pack(origin.params, cfg.shared_detectors);
  const Point steps = cfg.shared_detectors ? Point{0.02, 0.02, 2e-3} : Point{0.02, 0.02, 2e-3, 0.02, 2e-3};

  std::vector<Point> estimates(cfg.bootstrap);
  auto job = [&](unsigned b) {
    mc::Rng rng(numeric::mix_seed(cfg.seed, b));
    const CountMatrix resample = sample_counts(freq, total, rng);
    Objective objective(resample, sub, cfg);
    estimates[b] = refine(objective, x0, cfg, steps).best;
  };
  const unsigned workers = std::max(1u, std::min(cfg.workers, cfg.bootstrap));
  if (workers == 1) {
    for (unsigned b = 0; b < cfg.bootstrap; ++b)
      job(b);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (unsigned b = w; b < cfg.bootstrap; b += workers)
          job(b);
      });
    for (auto& t : pool)
      t.join();
  }

  auto column = [&](std::size_t d) {
    std::vector<double> xs;
    for (const auto& e : estimates)
      xs.push_back(e[d]);
    return sample_sd(xs);
  };
  StdErrors se;
  se.z = column(0);
  se.eta = column(1);
  se.nu = column(2);
  if (!cfg.shared_detectors) {
    se.eta_idler = column(3);
    se.nu_idler = column(4);
  }
  return se;
}

FitResult fit_with_errors(const CountMatrix& counts, SubtractionSpec sub, const FitConfig& cfg)
{
  FitResult r = fit_parameters(counts, sub, cfg);
  if (cfg.bootstrap > 0)
    r.std_errors = bootstrap_errors(counts, sub, cfg, r);
  return r;
}

CountMatrix sample_counts(const JointPND& dist, std::uint64_t total, mc::Rng& rng)
{
  const Eigen::MatrixXd& p = dist.probs();
  CountMatrix out(static_cast<std::size_t>(p.rows()), static_cast<std::size_t>(p.cols()));
  double mass = dist.total();
  std::uint64_t remaining = total;
  Eigen::Index last_n = -1, last_m = -1;
  for (Eigen::Index n = 0; n < p.rows() && remaining > 0; ++n)
    for (Eigen::Index m = 0; m < p.cols() && remaining > 0; ++m) {
      const double cell = p(n, m);
      if (cell <= 0.0)
        continue;
      const double share = std::min(1.0, cell / mass);
      const std::uint64_t k =
          share >= 1.0 ? remaining : std::binomial_distribution<std::uint64_t>(remaining, share)(rng);
      if (k > 0)
        out.add(static_cast<std::size_t>(n), static_cast<std::size_t>(m), k);
      remaining -= k;
      mass -= cell;
      last_n = n;
      last_m = m;
    }
  // Rounding in the running mass can leave a few events for the final cell.
  if (remaining > 0 && last_n >= 0)
    out.add(static_cast<std::size_t>(last_n), static_cast<std::size_t>(last_m), remaining);
  return out;
}

} // namespace tmsv::estimation
