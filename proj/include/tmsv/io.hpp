#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tmsv/counts.hpp"
#include "tmsv/state.hpp"
#include "tmsv/tes.hpp"

namespace tmsv::io {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double x);

/// Matrix CSV: header "n\m,0,1,...", then one row per n: "n,v0,v1,...".
void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& values);
void write_counts_csv(std::ostream& os, const CountMatrix& counts);

/// Reads the matrix CSV written above; a headerless plain numeric matrix is also
/// accepted. Throws InputError with a line/column diagnostic.
Eigen::MatrixXd read_matrix_csv(std::istream& is, std::string_view source = "input");
CountMatrix read_counts_csv(std::istream& is, std::string_view source = "input");

/// Square joint distribution from a CSV matrix (zero-padded to square).
JointPND pnd_from_matrix(const Eigen::MatrixXd& values);

/// Columns: n, signal, idler.
void write_marginals_csv(std::ostream& os, const std::vector<double>& signal, const std::vector<double>& idler);

/// Ordered "key = value" report.
class Report
{
public:
  void add(std::string key, std::string value);
  void add(std::string key, double value);
  void add(std::string key, long long value);
  void add(std::string key, unsigned long long value);
  void add(std::string key, unsigned value) { add(std::move(key), static_cast<unsigned long long>(value)); }
  void add(std::string key, int value) { add(std::move(key), static_cast<long long>(value)); }
  void add(std::string key, bool value);
  void add(std::string key, const char* value) { add(std::move(key), std::string(value)); }

  void write(std::ostream& os) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  static std::map<std::string, std::string> parse(std::istream& is);

private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Trace files hold one pulse record per row (CSV) or per block (binary).
///
/// CSV: '#' comment lines, optionally "# sample_period = <seconds>", then one
/// comma-separated record per line. Binary (little-endian): 8-byte magic
/// "TMSVTRC1", uint32 record length, uint32 zero, uint64 record count,
/// float64 sample period, then the float64 samples record by record.
std::vector<tes::Trace> read_traces(const std::filesystem::path& path);
void write_traces_csv(std::ostream& os, const std::vector<tes::Trace>& traces);
void write_traces_binary(std::ostream& os, const std::vector<tes::Trace>& traces);

void write_text_file(const std::filesystem::path& path, std::string_view content);

/// gnuplot data + script pair for a joint distribution heat map.
void emit_joint_plot(const std::filesystem::path& dir, const std::string& stem, const Eigen::MatrixXd& values);
/// gnuplot data + script pair for the marginals.
void emit_marginal_plot(const std::filesystem::path& dir, const std::string& stem,
                        const std::vector<double>& signal, const std::vector<double>& idler);

} // namespace tmsv::io
