#include "langevin/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "langevin/error.hpp"

namespace langevin::io {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw InvalidInput("not a decimal number: '" + text + "'");
  }
  if (!std::isfinite(v)) throw InvalidInput("non-finite value: '" + text + "'");
  return v;
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("dataset CSV is empty");
  const auto header = split(trim(line), ',');
  if (header.size() < 2 || trim(header[0]) != "y") {
    throw InvalidInput("dataset CSV header must be y,x1,...,xd");
  }
  for (std::size_t k = 1; k < header.size(); ++k) {
    if (trim(header[k]) != "x" + std::to_string(k)) {
      throw InvalidInput("dataset CSV header column " + std::to_string(k + 1) + " must be x" +
                         std::to_string(k));
    }
  }
  const std::size_t d = header.size() - 1;
  std::vector<double> ys, xs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != d + 1) {
      throw InvalidInput("dataset CSV line " + std::to_string(line_no) + " has " +
                         std::to_string(cells.size()) + " fields, expected " + std::to_string(d + 1));
    }
    ys.push_back(parse_double(cells[0]));
    for (std::size_t k = 1; k <= d; ++k) xs.push_back(parse_double(cells[k]));
  }
  const auto n = static_cast<Eigen::Index>(ys.size());
  RowMatrix x = Eigen::Map<RowMatrix>(xs.data(), n, static_cast<Eigen::Index>(d));
  Vector y = Eigen::Map<Vector>(ys.data(), n);
  return Dataset(std::move(x), std::move(y));
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "y";
  for (Eigen::Index k = 1; k <= data.dim(); ++k) out << ",x" << k;
  out << "\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << format_double(data.response(i));
    for (Eigen::Index k = 0; k < data.dim(); ++k) out << "," << format_double(data.covariates()(i, k));
    out << "\n";
  }
}

Matrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split(trim(line), ',')) row.push_back(parse_double(cell));
    if (!rows.empty() && row.size() != rows.front().size()) throw InvalidInput("matrix CSV rows differ in length");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidInput("matrix CSV is empty");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_matrix_csv(in);
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << "\n";
  }
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path);
  write_matrix_csv(out, m);
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "step,event";
  for (Eigen::Index k = 1; k <= trace.dim(); ++k) out << ",theta_" << k;
  out << "\n";
  for (Eigen::Index i = 0; i < trace.length(); ++i) {
    out << (static_cast<std::size_t>(i) + 1) * trace.thin << ","
        << static_cast<char>(trace.events[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < trace.dim(); ++k) out << "," << format_double(trace.samples(i, k));
    out << "\n";
  }
}

void write_trace_csv(const std::filesystem::path& path, const Trace& trace) {
  auto out = open_out(path);
  write_trace_csv(out, trace);
}

Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("trace CSV is empty");
  const auto header = split(trim(line), ',');
  if (header.size() < 3 || header[0] != "step" || header[1] != "event") {
    throw InvalidInput("trace CSV header must be step,event,theta_1..theta_d");
  }
  const std::size_t d = header.size() - 2;
  Trace tr;
  std::vector<double> values;
  std::vector<std::size_t> steps;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != d + 2) throw InvalidInput("trace CSV row has the wrong number of fields");
    steps.push_back(static_cast<std::size_t>(parse_double(cells[0])));
    const std::string ev = trim(cells[1]);
    if (ev == "A") {
      tr.events.push_back(StepEvent::Accepted);
      ++tr.accepted;
    } else if (ev == "R") {
      tr.events.push_back(StepEvent::Rejected);
      ++tr.rejected;
    } else if (ev == "L") {
      tr.events.push_back(StepEvent::LazyHold);
      ++tr.lazy_holds;
    } else {
      throw InvalidInput("trace CSV event must be A, R or L");
    }
    for (std::size_t k = 0; k < d; ++k) values.push_back(parse_double(cells[k + 2]));
  }
  const auto n = static_cast<Eigen::Index>(tr.events.size());
  tr.samples = Eigen::Map<RowMatrix>(values.data(), n, static_cast<Eigen::Index>(d));
  tr.thin = steps.empty() ? 1 : std::max<std::size_t>(1, steps.front());
  const std::size_t moves = tr.accepted + tr.rejected;
  tr.acceptance_rate = moves == 0 ? 0.0 : static_cast<double>(tr.accepted) / static_cast<double>(moves);
  return tr;
}

Trace read_trace_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_trace_csv(in);
}

KeyValues read_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("line " + std::to_string(line_no) + ": expected key=value");
    }
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_key_values(in);
}

void write_key_values(std::ostream& out, const KeyValues& kv) {
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
}

void write_key_values(const std::filesystem::path& path, const KeyValues& kv) {
  auto out = open_out(path);
  write_key_values(out, kv);
}

void write_rhat_csv(std::ostream& out, const DiagnosticsReport& report) {
  out << "prefix_len,coord,rhat_point,rhat_upper\n";
  for (const auto& r : report.rhat) {
    out << r.prefix_len << "," << r.coordinate + 1 << "," << format_double(r.point) << ","
        << format_double(r.upper) << "\n";
  }
}

void write_ess_csv(std::ostream& out, const DiagnosticsReport& report) {
  out << "coord,ess\n";
  for (Eigen::Index c = 0; c < report.ess.size(); ++c) {
    out << c + 1 << "," << format_double(report.ess[c]) << "\n";
  }
}

void write_profile_csv(std::ostream& out, const std::vector<ProfilePoint>& profile) {
  out << "s,v,phi,argmin_bitmask\n";
  for (const auto& p : profile) {
    out << format_double(p.s) << "," << format_double(p.v) << ","
        << (p.value ? format_double(*p.value) : std::string()) << "," << p.argmin << "\n";
  }
}

}  // namespace langevin::io
