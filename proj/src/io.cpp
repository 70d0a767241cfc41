#include "tmsv/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tmsv/errors.hpp"

namespace tmsv::io {

namespace {

struct Row
{
  std::size_t line = 0;
  std::vector<std::string> fields;
};

std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view line)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  return out;
}

std::vector<Row> read_rows(std::istream& is)
{
  std::vector<Row> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#')
      continue;
    rows.push_back({number, split(t)});
  }
  return rows;
}

bool parse_double(std::string_view s, double& out)
{
  if (s.empty())
    return false;
  if (s.front() == '+')
    s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_uint(std::string_view s, unsigned long long& out)
{
  if (s.empty())
    return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

[[noreturn]] void fail(std::string_view source, std::size_t line, std::size_t column, const std::string& what)
{
  throw InputError(std::string(source) + ": line " + std::to_string(line) + ", column " + std::to_string(column) +
                   ": " + what);
}

struct ValueRows
{
  std::vector<Row> rows;
  std::size_t column_offset = 1; // 1-based file column of the first value
};

// Strips the optional header row and index column; returns the value cells.
ValueRows value_rows(std::istream& is, std::string_view source)
{
  auto rows = read_rows(is);
  if (rows.empty())
    throw InputError(std::string(source) + ": empty matrix file");

  double probe = 0.0;
  const bool has_header = !parse_double(rows.front().fields.front(), probe);
  if (!has_header) {
    const std::size_t width = rows.front().fields.size();
    for (const auto& r : rows)
      if (r.fields.size() != width)
        fail(source, r.line, std::min(width, r.fields.size()) + 1,
             "expected " + std::to_string(width) + " columns, found " + std::to_string(r.fields.size()));
    return {std::move(rows), 1};
  }

  const Row header = rows.front();
  for (std::size_t c = 1; c < header.fields.size(); ++c) {
    unsigned long long idx = 0;
    if (!parse_uint(header.fields[c], idx) || idx != c - 1)
      fail(source, header.line, c + 1, "header column index must be " + std::to_string(c - 1));
  }
  const std::size_t width = header.fields.size();
  if (width < 2)
    fail(source, header.line, 2, "header has no value columns");
  std::vector<Row> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    auto& r = rows[i];
    if (r.fields.size() != width)
      fail(source, r.line, std::min(width, r.fields.size()) + 1,
           "expected " + std::to_string(width) + " columns, found " + std::to_string(r.fields.size()));
    unsigned long long idx = 0;
    if (!parse_uint(r.fields.front(), idx) || idx != i - 1)
      fail(source, r.line, 1, "row index must be " + std::to_string(i - 1));
    r.fields.erase(r.fields.begin());
    out.push_back(std::move(r));
  }
  if (out.empty())
    throw InputError(std::string(source) + ": matrix has a header but no rows");
  return {std::move(out), 2};
}

void put_u32(std::ostream& os, std::uint32_t v)
{
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i)
    b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b.data(), 4);
}

void put_u64(std::ostream& os, std::uint64_t v)
{
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b.data(), 8);
}

bool get_u64(std::istream& is, std::uint64_t& v)
{
  std::array<unsigned char, 8> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 8))
    return false;
  v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

bool get_u32(std::istream& is, std::uint32_t& v)
{
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4))
    return false;
  v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return true;
}

constexpr std::string_view kTraceMagic = "TMSVTRC1";

std::vector<tes::Trace> read_traces_binary(std::istream& is, const std::string& source)
{
  std::uint32_t length = 0, reserved = 0;
  std::uint64_t count = 0, period_bits = 0;
  if (!get_u32(is, length) || !get_u32(is, reserved) || !get_u64(is, count) || !get_u64(is, period_bits))
    throw InputError(source + ": truncated trace header");
  const double period = std::bit_cast<double>(period_bits);
  if (length == 0)
    throw InputError(source + ": zero record length");
  std::vector<tes::Trace> traces;
  for (std::uint64_t r = 0; r < count; ++r) {
    tes::Trace tr;
    tr.sample_period = period;
    tr.samples.resize(length);
    for (std::uint32_t i = 0; i < length; ++i) {
      std::uint64_t bits = 0;
      if (!get_u64(is, bits))
        throw InputError(source + ": record " + std::to_string(r) + " is shorter than the record length " +
                         std::to_string(length));
      tr.samples[i] = std::bit_cast<double>(bits);
    }
    traces.push_back(std::move(tr));
  }
  return traces;
}

std::vector<tes::Trace> read_traces_csv(std::istream& is, const std::string& source)
{
  std::vector<tes::Trace> traces;
  double period = 1e-8;
  std::string line;
  std::size_t number = 0;
  std::size_t length = 0;
  while (std::getline(is, line)) {
    ++number;
    auto t = trim(line);
    if (t.empty())
      continue;
    if (t.front() == '#') {
      t.remove_prefix(1);
      t = trim(t);
      constexpr std::string_view key = "sample_period";
      if (t.starts_with(key)) {
        auto rest = trim(t.substr(key.size()));
        if (!rest.empty() && rest.front() == '=')
          rest = trim(rest.substr(1));
        if (!parse_double(rest, period) || !(period > 0.0))
          fail(source, number, 1, "invalid sample_period");
      }
      continue;
    }
    const auto fields = split(t);
    tes::Trace tr;
    tr.sample_period = period;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      if (!parse_double(fields[c], v) || !std::isfinite(v))
        fail(source, number, c + 1, "not a finite number: '" + fields[c] + "'");
      tr.samples.push_back(v);
    }
    if (traces.empty())
      length = tr.samples.size();
    else if (tr.samples.size() != length)
      fail(source, number, std::min(length, tr.samples.size()) + 1,
           "record " + std::to_string(traces.size()) + " has length " + std::to_string(tr.samples.size()) +
               ", expected " + std::to_string(length));
    traces.push_back(std::move(tr));
  }
  for (auto& tr : traces)
    tr.sample_period = period;
  return traces;
}

} // namespace

std::string format_double(double x)
{
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc())
    return "nan";
  return {buf.data(), ptr};
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& values)
{
  os << "n\\m";
  for (Eigen::Index m = 0; m < values.cols(); ++m)
    os << ',' << m;
  os << '\n';
  for (Eigen::Index n = 0; n < values.rows(); ++n) {
    os << n;
    for (Eigen::Index m = 0; m < values.cols(); ++m)
      os << ',' << format_double(values(n, m));
    os << '\n';
  }
}

void write_counts_csv(std::ostream& os, const CountMatrix& counts)
{
  const std::size_t rows = std::max<std::size_t>(counts.rows(), 1);
  const std::size_t cols = std::max<std::size_t>(counts.cols(), 1);
  os << "n\\m";
  for (std::size_t m = 0; m < cols; ++m)
    os << ',' << m;
  os << '\n';
  for (std::size_t n = 0; n < rows; ++n) {
    os << n;
    for (std::size_t m = 0; m < cols; ++m)
      os << ',' << counts.at(n, m);
    os << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(std::istream& is, std::string_view source)
{
  const auto [rows, offset] = value_rows(is, source);
  const std::size_t width = rows.front().fields.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) {
      double v = 0.0;
      if (!parse_double(rows[r].fields[c], v) || !std::isfinite(v))
        fail(source, rows[r].line, c + offset, "not a finite number: '" + rows[r].fields[c] + "'");
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  return out;
}

CountMatrix read_counts_csv(std::istream& is, std::string_view source)
{
  const auto [rows, offset] = value_rows(is, source);
  const std::size_t width = rows.front().fields.size();
  CountMatrix out(rows.size(), width);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) {
      unsigned long long v = 0;
      if (!parse_uint(rows[r].fields[c], v))
        fail(source, rows[r].line, c + offset, "not a non-negative integer: '" + rows[r].fields[c] + "'");
      if (v > 0)
        out.add(r, c, v);
    }
  return out;
}

JointPND pnd_from_matrix(const Eigen::MatrixXd& values)
{
  const Eigen::Index size = std::max(values.rows(), values.cols());
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(size, size);
  sq.topLeftCorner(values.rows(), values.cols()) = values;
  return JointPND(std::move(sq));
}

void write_marginals_csv(std::ostream& os, const std::vector<double>& signal, const std::vector<double>& idler)
{
  os << "n,signal,idler\n";
  const std::size_t size = std::max(signal.size(), idler.size());
  for (std::size_t n = 0; n < size; ++n)
    os << n << ',' << format_double(n < signal.size() ? signal[n] : 0.0) << ','
       << format_double(n < idler.size() ? idler[n] : 0.0) << '\n';
}

void Report::add(std::string key, std::string value) { entries_.emplace_back(std::move(key), std::move(value)); }
void Report::add(std::string key, double value) { add(std::move(key), format_double(value)); }
void Report::add(std::string key, long long value) { add(std::move(key), std::to_string(value)); }
void Report::add(std::string key, unsigned long long value) { add(std::move(key), std::to_string(value)); }
void Report::add(std::string key, bool value) { add(std::move(key), std::string(value ? "true" : "false")); }

void Report::write(std::ostream& os) const
{
  for (const auto& [k, v] : entries_)
    os << k << " = " << v << '\n';
}

std::map<std::string, std::string> Report::parse(std::istream& is)
{
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#')
      continue;
    const auto eq = t.find(" = ");
    if (eq == std::string_view::npos)
      continue;
    out[std::string(trim(t.substr(0, eq)))] = std::string(trim(t.substr(eq + 3)));
  }
  return out;
}

std::vector<tes::Trace> read_traces(const std::filesystem::path& path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw InputError("cannot open trace file " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), 8);
  if (is.gcount() == 8 && std::string_view(magic.data(), 8) == kTraceMagic)
    return read_traces_binary(is, path.string());
  is.clear();
  is.seekg(0);
  return read_traces_csv(is, path.string());
}

void write_traces_csv(std::ostream& os, const std::vector<tes::Trace>& traces)
{
  os << "# sample_period = " << format_double(traces.empty() ? 1e-8 : traces.front().sample_period) << '\n';
  for (const auto& tr : traces) {
    for (std::size_t i = 0; i < tr.samples.size(); ++i)
      os << (i ? "," : "") << format_double(tr.samples[i]);
    os << '\n';
  }
}

void write_traces_binary(std::ostream& os, const std::vector<tes::Trace>& traces)
{
  const std::size_t length = traces.empty() ? 0 : traces.front().samples.size();
  for (const auto& tr : traces)
    if (tr.samples.size() != length)
      throw InputError("binary trace files need equal record lengths");
  os.write(kTraceMagic.data(), 8);
  put_u32(os, static_cast<std::uint32_t>(length));
  put_u32(os, 0);
  put_u64(os, traces.size());
  put_u64(os, std::bit_cast<std::uint64_t>(traces.empty() ? 1e-8 : traces.front().sample_period));
  for (const auto& tr : traces)
    for (double x : tr.samples)
      put_u64(os, std::bit_cast<std::uint64_t>(x));
}

void write_text_file(const std::filesystem::path& path, std::string_view content)
{
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os)
    throw InputError("cannot write " + path.string());
  os << content;
}

void emit_joint_plot(const std::filesystem::path& dir, const std::string& stem, const Eigen::MatrixXd& values)
{
  std::ostringstream data;
  for (Eigen::Index n = 0; n < values.rows(); ++n) {
    for (Eigen::Index m = 0; m < values.cols(); ++m)
      data << n << ' ' << m << ' ' << format_double(values(n, m)) << '\n';
    data << '\n';
  }
  write_text_file(dir / (stem + ".dat"), data.str());
  std::ostringstream script;
  script << "set xlabel 'n (signal)'\nset ylabel 'm (idler)'\nset zlabel 'p(n,m)'\n"
         << "set pm3d map\nsplot '" << stem << ".dat' using 1:2:3 with pm3d notitle\n";
  write_text_file(dir / (stem + ".gp"), script.str());
}

void emit_marginal_plot(const std::filesystem::path& dir, const std::string& stem, const std::vector<double>& signal,
                        const std::vector<double>& idler)
{
  std::ostringstream data;
  write_marginals_csv(data, signal, idler);
  write_text_file(dir / (stem + ".dat"), data.str());
  std::ostringstream script;
  script << "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'n'\nset ylabel 'probability'\n"
         << "set style data histograms\nplot '" << stem << ".dat' using 2:xtic(1), '' using 3\n";
  write_text_file(dir / (stem + ".gp"), script.str());
}

} // namespace tmsv::io
