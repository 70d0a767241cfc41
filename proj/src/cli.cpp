#include "tmsv/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "tmsv/errors.hpp"
#include "tmsv/estimation.hpp"
#include "tmsv/io.hpp"
#include "tmsv/mc.hpp"
#include "tmsv/state.hpp"
#include "tmsv/tes.hpp"
#include "tmsv/version.hpp"
#include "tmsv/witness.hpp"

namespace tmsv::cli {

namespace fs = std::filesystem;

namespace {

struct Common
{
  std::string out_dir = ".";
  bool emit_plots = false;
  bool stamp = false;
};

struct PredictArgs
{
  std::optional<double> z;
  std::string pump;
  unsigned l1 = 0, l2 = 0;
  double eta = 1.0, nu = 0.0;
  unsigned nmax = 0;
  double tail_tol = 1e-9;
};

struct McArgs
{
  double z = 0.0;
  unsigned l1 = 0, l2 = 0;
  double eta = 1.0, nu = 0.0;
  double tap_t = 0.9, tap_eta = 1.0, tap_nu = 0.0;
  std::uint64_t shots = 1'000'000;
  std::uint64_t accepted = 0;
  std::uint64_t seed = mc::default_seed;
  unsigned threads = 1;
  double tail_tol = 1e-9;
};

struct FitArgs
{
  std::string in;
  unsigned l1 = 0, l2 = 0;
  unsigned bootstrap = 0;
  std::uint64_t seed = mc::default_seed;
  unsigned threads = 1;
};

struct TesArgs
{
  std::string in;
  bool synth = false;
  unsigned kmax = 8;
  std::uint64_t seed = mc::default_seed;
  std::uint64_t pulses = 10'000;
  double separation = 10.0;
  double mean_photons = 2.0;
  unsigned record_length = 128;
};

struct ReportArgs
{
  std::string in;
};

void header(io::Report& rep, const std::string& command, const Common& common)
{
  rep.add("tool", "tmsv");
  rep.add("version", version);
  rep.add("command", command);
  if (common.stamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    rep.add("timestamp", ts.str());
  } else {
    rep.add("timestamp", "not-recorded");
  }
}

fs::path prepare_dir(const Common& common)
{
  const fs::path dir(common.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

template <class F>
void write_file(const fs::path& path, F&& body)
{
  std::ostringstream os;
  body(os);
  io::write_text_file(path, os.str());
}

std::string join_matrix(const Eigen::Matrix3d& m)
{
  std::string out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      out += (out.empty() ? "" : ",") + io::format_double(m(r, c));
  return out;
}

void add_fit(io::Report& rep, const std::string& prefix, const MarginalFit& fit)
{
  rep.add(prefix + ".mean", fit.mean);
  if (fit.r_squared_defined)
    rep.add(prefix + ".r_squared", fit.r_squared);
  else
    rep.add(prefix + ".r_squared", "undefined");
}

void add_witnesses(io::Report& rep, const WitnessReport& w)
{
  if (w.agarwal)
    rep.add("witness.agarwal", *w.agarwal);
  else
    rep.add("witness.agarwal", "undefined");
  rep.add("witness.det_m", w.det_m);
  rep.add("witness.min_eigenvalue", w.min_eigenvalue);
  rep.add("witness.moment_matrix", join_matrix(w.matrix.m));
  rep.add("witness.signal_mean", w.signal_mean);
  rep.add("witness.idler_mean", w.idler_mean);
  add_fit(rep, "fit.signal.thermal", w.signal_fits.thermal);
  add_fit(rep, "fit.signal.poisson", w.signal_fits.poisson);
  add_fit(rep, "fit.idler.thermal", w.idler_fits.thermal);
  add_fit(rep, "fit.idler.poisson", w.idler_fits.poisson);
  rep.add("verdict.cauchy_schwarz_violated", w.cauchy_schwarz_violated);
  rep.add("verdict.det_negative", w.determinant_negative);
  rep.add("verdict.eigenvalue_negative", w.eigenvalue_negative);
}

void write_distribution_outputs(const fs::path& dir, const Common& common, const JointPND& pnd,
                                const std::string& joint_name, io::Report& rep)
{
  const auto sig = marginal(pnd, Mode::signal);
  const auto idl = marginal(pnd, Mode::idler);
  write_file(dir / (joint_name + ".csv"), [&](std::ostream& os) { io::write_matrix_csv(os, pnd.probs()); });
  write_file(dir / "marginals.csv", [&](std::ostream& os) { io::write_marginals_csv(os, sig, idl); });
  rep.add("files.joint", joint_name + ".csv");
  rep.add("files.marginals", "marginals.csv");
  if (common.emit_plots) {
    io::emit_joint_plot(dir, joint_name, pnd.probs());
    io::emit_marginal_plot(dir, "marginals", sig, idl);
    rep.add("files.plots", joint_name + ".gp,marginals.gp");
  }
}

void finish_report(const fs::path& dir, const io::Report& rep, std::ostream& out)
{
  write_file(dir / "report.txt", [&](std::ostream& os) { rep.write(os); });
  rep.write(out);
}

PumpParameters parse_pump(const std::string& text)
{
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      throw InputError("--pump: cannot parse '" + item + "'");
    }
    if (used != item.size())
      throw InputError("--pump: cannot parse '" + item + "'");
    v.push_back(x);
  }
  if (v.size() != 5)
    throw InputError("--pump expects 5 comma-separated values: chi_eff,omega_p,L,I_p,n0");
  return {v[0], v[1], v[2], v[3], v[4]};
}

int cmd_predict(const PredictArgs& a, const Common& common, std::ostream& out)
{
  if (a.z.has_value() == !a.pump.empty())
    throw InputError("predict needs exactly one of --z or --pump");
  if (!(a.tail_tol > 0.0 && a.tail_tol <= 1e-3))
    throw InputError("--tail-tol must lie in (0, 1e-3]");
  const double z = a.z ? *a.z : squeezing_from_pump(parse_pump(a.pump));
  const SubtractionSpec sub{a.l1, a.l2};
  const DetectorModel det{a.eta, a.nu};
  det.validate();

  Config cfg;
  cfg.tail_tol = a.tail_tol;
  const FockAmplitudes state = build_subtracted_state(z, sub, cfg.tail_tol, cfg.max_pair_index);
  const JointPND pnd = a.nmax > 0 ? detected_joint_pnd(state, det, det, a.nmax) : detected_joint_pnd(state, det, det, cfg);
  const WitnessReport w = compute_witnesses(pnd, cfg);

  const fs::path dir = prepare_dir(common);
  io::Report rep;
  header(rep, "predict", common);
  rep.add("input.z", z);
  if (!a.pump.empty())
    rep.add("input.pump", a.pump);
  rep.add("input.l1", a.l1);
  rep.add("input.l2", a.l2);
  rep.add("input.eta", a.eta);
  rep.add("input.nu", a.nu);
  rep.add("input.nmax", a.nmax > 0 ? std::to_string(a.nmax) : std::string("auto"));
  rep.add("input.tail_tol", a.tail_tol);
  rep.add("state.j_min", state.j_min);
  rep.add("state.j_max", state.j_max);
  rep.add("state.tail_mass", state.tail_mass);
  rep.add("state.limiting_state", state.limiting_state);
  rep.add("state.mean_signal", state.mean_photons(Mode::signal));
  rep.add("state.mean_idler", state.mean_photons(Mode::idler));
  rep.add("pnd.n_max", pnd.n_max());
  rep.add("pnd.total", pnd.total());
  rep.add("pnd.truncated", pnd.total() < 1.0 - cfg.tail_tol);
  add_witnesses(rep, w);
  write_distribution_outputs(dir, common, pnd, "joint", rep);
  finish_report(dir, rep, out);
  return exit_ok;
}

int cmd_mc(const McArgs& a, const std::string& mode, const Common& common, std::ostream& out)
{
  mc::ProtocolConfig cfg;
  cfg.z = a.z;
  cfg.tap_transmission = a.tap_t;
  cfg.tap_detector = {a.tap_eta, a.tap_nu};
  cfg.main_detector = {a.eta, a.nu};
  cfg.condition = {a.l1, a.l2};
  cfg.shots = a.shots;
  cfg.target_accepted = a.accepted;
  cfg.seed = a.seed;
  cfg.workers = a.threads;
  const bool conditioned = mode == "conditioned" || (mode.empty() && a.accepted > 0);
  if (!mode.empty() && mode != "conditioned" && mode != "rejection")
    throw InputError("--mode must be 'rejection' or 'conditioned'");
  cfg.mode = conditioned ? mc::SamplingMode::conditioned : mc::SamplingMode::rejection;
  cfg.validate();

  const mc::McResult res = mc::simulate_run(cfg);
  const fs::path dir = prepare_dir(common);

  io::Report rep;
  header(rep, "mc", common);
  rep.add("input.z", a.z);
  rep.add("input.l1", a.l1);
  rep.add("input.l2", a.l2);
  rep.add("input.eta", a.eta);
  rep.add("input.nu", a.nu);
  rep.add("input.tap_t", a.tap_t);
  rep.add("input.tap_eta", a.tap_eta);
  rep.add("input.tap_nu", a.tap_nu);
  rep.add("input.mode", conditioned ? "conditioned" : "rejection");
  if (conditioned)
    rep.add("input.accepted", static_cast<unsigned long long>(a.accepted));
  else
    rep.add("input.shots", static_cast<unsigned long long>(a.shots));
  rep.add("input.seed", static_cast<unsigned long long>(a.seed));
  rep.add("mc.shots", static_cast<unsigned long long>(res.shots));
  rep.add("mc.accepted", static_cast<unsigned long long>(res.accepted));
  rep.add("mc.acceptance_rate", res.acceptance_rate);
  if (res.heralding_probability)
    rep.add("mc.heralding_probability", *res.heralding_probability);
  rep.add("mc.empty", res.empty);

  write_file(dir / "counts.csv", [&](std::ostream& os) { io::write_counts_csv(os, res.counts); });
  rep.add("files.counts", "counts.csv");
  if (!res.empty) {
    // Analytic model with the tap transmission folded into the main efficiency.
    const DetectorModel folded{a.tap_t * a.eta, a.nu};
    Config model_cfg;
    model_cfg.tail_tol = a.tail_tol;
    const FockAmplitudes state = build_subtracted_state(a.z, cfg.condition, a.tail_tol);
    const JointPND analytic = detected_joint_pnd(state, folded, folded, model_cfg);
    const unsigned grid = std::max(analytic.n_max(), res.empirical.n_max());
    const JointPND empirical = res.empirical.resized(grid);
    rep.add("analytic.eta_folded", folded.eta);
    rep.add("analytic.tv_distance", mc::tv_distance(empirical, analytic.resized(grid)));
    add_witnesses(rep, compute_witnesses(empirical));
    write_distribution_outputs(dir, common, empirical, "empirical", rep);
  }
  finish_report(dir, rep, out);
  return exit_ok;
}

int cmd_fit(const FitArgs& a, const Common& common, std::ostream& out)
{
  std::ifstream is(a.in);
  if (!is)
    throw InputError("cannot open counts file " + a.in);
  const CountMatrix counts = io::read_counts_csv(is, a.in);
  if (counts.total() == 0)
    throw InputError(a.in + ": counts file holds no events");

  estimation::FitConfig cfg;
  cfg.bootstrap = a.bootstrap;
  cfg.seed = a.seed;
  cfg.workers = a.threads;
  const SubtractionSpec sub{a.l1, a.l2};
  const estimation::FitResult fit = estimation::fit_with_errors(counts, sub, cfg);

  const fs::path dir = prepare_dir(common);
  io::Report rep;
  header(rep, "fit", common);
  rep.add("input.file", a.in);
  rep.add("input.l1", a.l1);
  rep.add("input.l2", a.l2);
  rep.add("input.bootstrap", a.bootstrap);
  rep.add("input.seed", static_cast<unsigned long long>(a.seed));
  rep.add("data.total", static_cast<unsigned long long>(counts.total()));
  rep.add("data.occupied_cells", static_cast<unsigned long long>(counts.occupied_cells()));
  rep.add("fit.z", fit.z_hat());
  rep.add("fit.eta", fit.eta_hat());
  rep.add("fit.nu", fit.nu_hat());
  rep.add("fit.nll", fit.nll);
  rep.add("fit.converged", fit.converged);
  rep.add("fit.degenerate", fit.degenerate);
  rep.add("fit.nu_at_lower_bound", fit.nu_at_lower_bound);
  rep.add("fit.floored", fit.floored);
  rep.add("fit.iterations", fit.iterations);
  rep.add("fit.evaluations", fit.evaluations);
  if (fit.std_errors) {
    rep.add("fit.se.z", fit.std_errors->z);
    rep.add("fit.se.eta", fit.std_errors->eta);
    rep.add("fit.se.nu", fit.std_errors->nu);
  }
  finish_report(dir, rep, out);
  return exit_ok;
}

std::vector<tes::Trace> synthesize_traces(const TesArgs& a, std::vector<unsigned>& truth)
{
  if (!(a.separation > 0.0) || !(a.mean_photons >= 0.0) || a.pulses == 0 || a.record_length < 16)
    throw InputError("synthetic traces need --separation > 0, --mean-photons >= 0, --pulses > 0");
  const auto tmpl = tes::PulseTemplate::double_exponential(a.record_length, 2.0, 20.0, a.record_length / 8);
  mc::Rng rng(a.seed);
  std::poisson_distribution<unsigned> photons(a.mean_photons > 0.0 ? a.mean_photons : 1e-300);
  constexpr double amplitude = 1.0;
  std::vector<tes::Trace> traces;
  traces.reserve(a.pulses);
  for (std::uint64_t i = 0; i < a.pulses; ++i) {
    const unsigned n = a.mean_photons > 0.0 ? photons(rng) : 0;
    truth.push_back(n);
    traces.push_back(tes::synth_trace(n, tmpl, amplitude, amplitude / a.separation, rng));
  }
  return traces;
}

int cmd_tes(const TesArgs& a, const Common& common, std::ostream& out)
{
  if (a.synth == !a.in.empty())
    throw InputError("tes needs exactly one of --in or --synth");
  const fs::path dir = prepare_dir(common);

  std::vector<unsigned> truth;
  std::vector<tes::Trace> traces;
  if (a.synth) {
    traces = synthesize_traces(a, truth);
    write_file(dir / "traces.bin", [&](std::ostream& os) { io::write_traces_binary(os, traces); });
  } else {
    traces = io::read_traces(a.in);
  }
  if (traces.empty())
    throw InputError("no traces to process");

  // Template: the mean pulse shape, normalized to unit energy.
  std::vector<double> mean(traces.front().samples.size(), 0.0);
  for (const auto& tr : traces)
    for (std::size_t i = 0; i < mean.size(); ++i)
      mean[i] += tr.samples[i] / static_cast<double>(traces.size());
  const auto tmpl = tes::PulseTemplate::from_waveform(mean);

  std::vector<double> energies;
  energies.reserve(traces.size());
  for (const auto& tr : traces)
    energies.push_back(tes::wiener_project(tr, tmpl));
  const tes::GaussianMixture mix = tes::fit_mixture(energies, a.kmax);
  const tes::Assignment assigned = tes::assign_photon_numbers(energies, mix);

  io::Report rep;
  header(rep, "tes", common);
  if (a.synth) {
    rep.add("input.synth", true);
    rep.add("input.pulses", static_cast<unsigned long long>(a.pulses));
    rep.add("input.separation", a.separation);
    rep.add("input.mean_photons", a.mean_photons);
    rep.add("input.record_length", a.record_length);
    rep.add("input.seed", static_cast<unsigned long long>(a.seed));
  } else {
    rep.add("input.file", a.in);
  }
  rep.add("input.kmax", a.kmax);
  rep.add("tes.pulses", static_cast<unsigned long long>(traces.size()));
  rep.add("tes.record_length", static_cast<unsigned long long>(traces.front().samples.size()));
  rep.add("mixture.converged", mix.converged);
  rep.add("mixture.iterations", mix.iterations);
  rep.add("mixture.log_likelihood", mix.log_likelihood);
  for (std::size_t k = 0; k < mix.components.size(); ++k) {
    const auto& c = mix.components[k];
    rep.add("mixture.component." + std::to_string(k),
            io::format_double(c.weight) + "," + io::format_double(c.mean) + "," + io::format_double(c.sigma));
  }
  for (std::size_t k = 0; k < assigned.distribution.size(); ++k)
    rep.add("pnd." + std::to_string(k), assigned.distribution[k]);
  if (a.synth) {
    std::vector<double> true_pmf(assigned.distribution.size(), 0.0);
    std::uint64_t correct = 0, overflow = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] < true_pmf.size())
        true_pmf[truth[i]] += 1.0 / static_cast<double>(truth.size());
      else
        ++overflow;
      correct += assigned.photon_numbers[i] == truth[i];
    }
    double tv = 0.5 * static_cast<double>(overflow) / static_cast<double>(truth.size());
    for (std::size_t k = 0; k < true_pmf.size(); ++k)
      tv += 0.5 * std::abs(true_pmf[k] - assigned.distribution[k]);
    rep.add("synth.assignment_accuracy", static_cast<double>(correct) / static_cast<double>(truth.size()));
    rep.add("synth.tv_distance", tv);
  }

  write_file(dir / "energies.csv", [&](std::ostream& os) {
    os << "pulse,energy,photons\n";
    for (std::size_t i = 0; i < energies.size(); ++i)
      os << i << ',' << io::format_double(energies[i]) << ',' << assigned.photon_numbers[i] << '\n';
  });
  write_file(dir / "photon_numbers.csv", [&](std::ostream& os) {
    os << "n,probability\n";
    for (std::size_t k = 0; k < assigned.distribution.size(); ++k)
      os << k << ',' << io::format_double(assigned.distribution[k]) << '\n';
  });
  rep.add("files.energies", "energies.csv");
  rep.add("files.distribution", "photon_numbers.csv");
  if (a.synth)
    rep.add("files.traces", "traces.bin");
  finish_report(dir, rep, out);
  return exit_ok;
}

int cmd_report(const ReportArgs& a, const Common& common, std::ostream& out)
{
  std::ifstream is(a.in);
  if (!is)
    throw InputError("cannot open " + a.in);
  const JointPND raw = io::pnd_from_matrix(io::read_matrix_csv(is, a.in));
  if (!(raw.total() > 0.0))
    throw InputError(a.in + ": distribution has zero total");
  const JointPND pnd = raw.normalized();
  const fs::path dir = prepare_dir(common);
  io::Report rep;
  header(rep, "report", common);
  rep.add("input.file", a.in);
  rep.add("input.total", raw.total());
  rep.add("pnd.n_max", pnd.n_max());
  add_witnesses(rep, compute_witnesses(pnd));
  const auto sig = marginal(pnd, Mode::signal);
  const auto idl = marginal(pnd, Mode::idler);
  write_file(dir / "marginals.csv", [&](std::ostream& os) { io::write_marginals_csv(os, sig, idl); });
  rep.add("files.marginals", "marginals.csv");
  if (common.emit_plots) {
    io::emit_joint_plot(dir, "joint", pnd.probs());
    io::emit_marginal_plot(dir, "marginals", sig, idl);
  }
  finish_report(dir, rep, out);
  return exit_ok;
}

void add_common(CLI::App* cmd, Common& common)
{
  cmd->add_option("--out-dir", common.out_dir, "Directory for output files")->capture_default_str();
  cmd->add_flag("--emit-plots", common.emit_plots, "Write gnuplot data and script pairs");
  cmd->add_flag("--stamp", common.stamp, "Record the wall-clock time in the report");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Photon-subtracted two-mode squeezed vacuum: prediction, simulation, fitting, TES processing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version);

  Common common;
  PredictArgs pa;
  McArgs ma;
  std::string mode;
  FitArgs fa;
  TesArgs ta;
  ReportArgs ra;

  auto* predict = app.add_subcommand("predict", "Detected joint distribution and witnesses of a subtracted state");
  predict->add_option("--z", pa.z, "Squeezing parameter in [0, 1)");
  predict->add_option("--pump", pa.pump, "chi_eff,omega_p,L,I_p,n0 (alternative to --z)");
  predict->add_option("--l1", pa.l1, "Photons subtracted from the signal mode");
  predict->add_option("--l2", pa.l2, "Photons subtracted from the idler mode");
  predict->add_option("--eta", pa.eta, "Detector efficiency (both modes)");
  predict->add_option("--nu", pa.nu, "Mean dark counts per pulse (both modes)");
  predict->add_option("--nmax", pa.nmax, "Count cutoff; 0 chooses it from --tail-tol");
  predict->add_option("--tail-tol", pa.tail_tol, "Allowed truncated probability");
  add_common(predict, common);

  auto* mcc = app.add_subcommand("mc", "Monte Carlo simulation of the heralded subtraction protocol");
  mcc->add_option("--z", ma.z, "Squeezing parameter in [0, 1)")->required();
  mcc->add_option("--l1", ma.l1, "Required signal tap count");
  mcc->add_option("--l2", ma.l2, "Required idler tap count");
  mcc->add_option("--eta", ma.eta, "Main detector efficiency");
  mcc->add_option("--nu", ma.nu, "Main detector dark counts per pulse");
  mcc->add_option("--tap-t", ma.tap_t, "Tap coupler transmission");
  mcc->add_option("--tap-eta", ma.tap_eta, "Tap detector efficiency");
  mcc->add_option("--tap-nu", ma.tap_nu, "Tap detector dark counts per pulse");
  mcc->add_option("--shots", ma.shots, "Pump pulses (rejection sampling)");
  mcc->add_option("--accepted", ma.accepted, "Accepted pulses (conditioned sampling)");
  mcc->add_option("--mode", mode, "rejection | conditioned");
  mcc->add_option("--seed", ma.seed, "Random seed");
  mcc->add_option("--threads", ma.threads, "Worker threads (results do not depend on it)");
  mcc->add_option("--tail-tol", ma.tail_tol, "Truncation tolerance of the analytic comparison");
  add_common(mcc, common);

  auto* fit = app.add_subcommand("fit", "Maximum-likelihood fit of z, eta, nu to a count matrix");
  fit->add_option("--in", fa.in, "Count matrix CSV")->required();
  fit->add_option("--l1", fa.l1, "Photons subtracted from the signal mode");
  fit->add_option("--l2", fa.l2, "Photons subtracted from the idler mode");
  fit->add_option("--bootstrap", fa.bootstrap, "Bootstrap resamples (0 disables, else >= 10)");
  fit->add_option("--seed", fa.seed, "Random seed");
  fit->add_option("--threads", fa.threads, "Worker threads (results do not depend on it)");
  add_common(fit, common);

  auto* tesc = app.add_subcommand("tes", "Pulse filtering, mixture fit and photon-number assignment");
  tesc->add_option("--in", ta.in, "Trace file (CSV or binary)");
  tesc->add_flag("--synth", ta.synth, "Generate synthetic traces instead of reading --in");
  tesc->add_option("--kmax", ta.kmax, "Highest photon number in the mixture");
  tesc->add_option("--seed", ta.seed, "Random seed for --synth");
  tesc->add_option("--pulses", ta.pulses, "Synthetic pulse count");
  tesc->add_option("--separation", ta.separation, "Synthetic peak separation over noise sigma");
  tesc->add_option("--mean-photons", ta.mean_photons, "Mean of the synthetic Poissonian photon numbers");
  tesc->add_option("--record-length", ta.record_length, "Samples per synthetic trace");
  add_common(tesc, common);

  auto* report = app.add_subcommand("report", "Witness report for a joint distribution or count matrix CSV");
  report->add_option("--in", ra.in, "Matrix CSV")->required();
  add_common(report, common);

  std::vector<const char*> argv;
  for (const auto& a : args)
    argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForVersion& e) {
    out << version << '\n';
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_input_error;
  }

  try {
    if (*predict)
      return cmd_predict(pa, common, out);
    if (*mcc)
      return cmd_mc(ma, mode, common, out);
    if (*fit)
      return cmd_fit(fa, common, out);
    if (*tesc)
      return cmd_tes(ta, common, out);
    if (*report)
      return cmd_report(ra, common, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return exit_input_error;
  } catch (const DomainError& e) {
    err << "input error: " << e.what() << '\n';
    return exit_input_error;
  } catch (const UndefinedWitnessError& e) {
    err << "input error: " << e.what() << '\n';
    return exit_input_error;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << '\n';
    return exit_numeric_failure;
  }
  return exit_input_error;
}

} // namespace tmsv::cli
