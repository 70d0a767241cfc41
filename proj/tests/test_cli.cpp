#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tmsv/cli.hpp"
#include "tmsv/io.hpp"
#include "tmsv/tes.hpp"

using namespace tmsv;

namespace fs = std::filesystem;

namespace {

struct Outcome
{
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args)
{
  args.insert(args.begin(), "tmsv");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name)
{
  const fs::path dir = fs::temp_directory_path() / "tmsv_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::map<std::string, std::string> report_of(const fs::path& dir)
{
  std::ifstream is(dir / "report.txt");
  return io::Report::parse(is);
}

// Lines starting with skip_prefix (machine-specific paths) are left out of the comparison.
void check_golden(const fs::path& dir, const std::string& file, const std::string& golden,
                  const std::string& skip_prefix = "")
{
  INFO(file);
  std::string actual = slurp(dir / file);
  if (!skip_prefix.empty()) {
    std::istringstream is(actual);
    std::string line, kept;
    while (std::getline(is, line))
      if (line.rfind(skip_prefix, 0) != 0)
        kept += line + "\n";
    actual = kept;
  }
  CHECK(actual == slurp(fs::path(TMSV_GOLDEN_DIR) / golden));
}

} // namespace

TEST_CASE("predict writes the expected files")
{
  const auto dir = scratch("predict");
  const auto r = invoke({"predict", "--z", "0.5", "--l1", "1", "--l2", "0", "--eta", "0.8", "--nu", "0.01",
                         "--nmax", "6", "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  check_golden(dir, "joint.csv", "predict_joint.csv");
  check_golden(dir, "marginals.csv", "predict_marginals.csv");
  check_golden(dir, "report.txt", "predict_report.txt");
}

TEST_CASE("predict at the z = 0.66, l = 3 operating point")
{
  const auto dir = scratch("operating");
  REQUIRE(invoke({"predict", "--z", "0.66", "--l1", "3", "--l2", "3", "--eta", "0.1625", "--nu", "0", "--out-dir",
                  dir.string(), "--emit-plots"})
              .code == 0);
  const auto rep = report_of(dir);
  CHECK(std::stod(rep.at("witness.det_m")) < 0.0);
  CHECK(std::stod(rep.at("witness.agarwal")) < 0.0);
  for (const char* f : {"joint.csv", "marginals.csv", "joint.dat", "joint.gp", "marginals.dat", "marginals.gp"})
    CHECK(fs::exists(dir / f));
}

TEST_CASE("predict of the vacuum")
{
  const auto dir = scratch("vacuum");
  REQUIRE(invoke({"predict", "--z", "0", "--out-dir", dir.string()}).code == 0);
  std::ifstream is(dir / "joint.csv");
  const auto m = io::read_matrix_csv(is);
  CHECK(m(0, 0) == 1.0);
  CHECK(report_of(dir).at("witness.agarwal") == "undefined");
}

TEST_CASE("predict from pump parameters")
{
  const auto dir = scratch("pump");
  const auto r = invoke({"predict", "--pump", "1,599584916,1,1,1", "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(std::stod(report_of(dir).at("input.z")) == doctest::Approx(std::tanh(1.0)).epsilon(1e-14));
  CHECK(invoke({"predict", "--pump", "1,2,3", "--out-dir", dir.string()}).code == 2);
  CHECK(invoke({"predict", "--z", "0.5", "--pump", "1,1,1,1,1", "--out-dir", dir.string()}).code == 2);
}

TEST_CASE("invalid parameters exit with code 2")
{
  const auto dir = scratch("invalid");
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"predict", "--z", "1.5"},
           {"predict", "--z", "0.5", "--eta", "0"},
           {"predict", "--z", "0.5", "--nu", "-1"},
           {"predict", "--z", "abc"},
           {"predict"},
           {"frobnicate"},
           {},
           {"mc", "--z", "0.5", "--tap-t", "1.0"},
       }) {
    auto a = args;
    a.insert(a.end(), {"--out-dir", dir.string()});
    const auto r = invoke(a);
    CHECK(r.code == 2);
    CHECK_FALSE(r.err.empty());
  }
}

TEST_CASE("numeric failures exit with code 3")
{
  const auto dir = scratch("numeric");
  const auto r = invoke({"predict", "--z", "0.995", "--out-dir", dir.string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("numeric") != std::string::npos);
}

TEST_CASE("mc golden output and labels")
{
  const auto dir = scratch("mc");
  REQUIRE(invoke({"mc", "--z", "0.5", "--l1", "1", "--l2", "0", "--shots", "20000", "--seed", "5", "--out-dir",
                  dir.string()})
              .code == 0);
  check_golden(dir, "counts.csv", "mc_counts.csv");
  check_golden(dir, "report.txt", "mc_report.txt");
  const auto rep = report_of(dir);
  CHECK(rep.at("input.l1") == "1");
  CHECK(rep.at("input.l2") == "0");
}

TEST_CASE("mc with zero acceptance reports an empty run")
{
  const auto dir = scratch("mc_empty");
  const auto r = invoke({"mc", "--z", "0", "--l1", "1", "--shots", "1000", "--out-dir", dir.string()});
  CHECK(r.code == 0);
  CHECK(report_of(dir).at("mc.empty") == "true");
}

TEST_CASE("fit command")
{
  const auto dir = scratch("fit");
  {
    std::ofstream os(dir / "empty.csv");
  }
  auto r = invoke({"fit", "--in", (dir / "empty.csv").string(), "--out-dir", dir.string()});
  CHECK(r.code == 2);

  {
    std::ofstream os(dir / "bad.csv");
    os << "n\\m,0,1\n0,5,4\n1,2,oops\n";
  }
  r = invoke({"fit", "--in", (dir / "bad.csv").string(), "--out-dir", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("line 3, column 3") != std::string::npos);

  {
    std::ofstream os(dir / "one.csv");
    os << "n\\m,0\n0,1000\n";
  }
  r = invoke({"fit", "--in", (dir / "one.csv").string(), "--out-dir", dir.string()});
  CHECK(r.code == 0);
  CHECK(report_of(dir).at("fit.degenerate") == "true");

  r = invoke({"fit", "--in", (fs::path(TMSV_GOLDEN_DIR) / "mc_counts.csv").string(), "--l1", "1", "--bootstrap",
              "12", "--out-dir", dir.string()});
  CHECK(r.code == 0);
  check_golden(dir, "report.txt", "fit_report.txt", "input.file = ");

  r = invoke({"fit", "--in", (fs::path(TMSV_GOLDEN_DIR) / "mc_counts.csv").string(), "--bootstrap", "3",
              "--out-dir", dir.string()});
  CHECK(r.code == 2);
}

TEST_CASE("tes command")
{
  const auto dir = scratch("tes");
  REQUIRE(invoke({"tes", "--synth", "--pulses", "2000", "--seed", "3", "--out-dir", dir.string()}).code == 0);
  check_golden(dir, "photon_numbers.csv", "tes_photon_numbers.csv");
  check_golden(dir, "report.txt", "tes_report.txt");

  {
    std::ofstream os(dir / "none.csv");
  }
  CHECK(invoke({"tes", "--in", (dir / "none.csv").string(), "--out-dir", dir.string()}).code == 2);

  {
    std::ofstream os(dir / "ragged.csv");
    os << "0,1,2,1\n0,1,2\n";
  }
  const auto r = invoke({"tes", "--in", (dir / "ragged.csv").string(), "--out-dir", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("record 1") != std::string::npos);

  // Every pulse carries exactly one photon.
  const auto tmpl = tes::PulseTemplate::double_exponential(64, 2.0, 15.0, 8);
  mc::Rng rng(4);
  std::vector<tes::Trace> traces;
  for (int i = 0; i < 500; ++i)
    traces.push_back(tes::synth_trace(1, tmpl, 1.0, 0.02, rng));
  {
    std::ofstream os(dir / "single.bin", std::ios::binary);
    io::write_traces_binary(os, traces);
  }
  REQUIRE(invoke({"tes", "--in", (dir / "single.bin").string(), "--out-dir", dir.string()}).code == 0);
  const auto rep = report_of(dir);
  CHECK(rep.at("pnd.1") == "1");
  CHECK(rep.at("pnd.0") == "0");
}

TEST_CASE("report command")
{
  const auto dir = scratch("report");
  REQUIRE(invoke({"predict", "--z", "0.5", "--l1", "2", "--l2", "2", "--out-dir", dir.string()}).code == 0);
  const auto out = dir / "r";
  REQUIRE(invoke({"report", "--in", (dir / "joint.csv").string(), "--out-dir", out.string()}).code == 0);
  const auto a = report_of(dir), b = report_of(out);
  CHECK(std::stod(a.at("witness.det_m")) == doctest::Approx(std::stod(b.at("witness.det_m"))).epsilon(1e-9));
  CHECK(b.at("verdict.det_negative") == "true");
}
