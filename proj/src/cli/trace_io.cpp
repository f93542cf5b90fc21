#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sdcam/cli.hpp"

namespace sdcam::cli {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace) {
    out << r.t << ',' << format_double(r.mu_t) << ',' << format_double(r.beta_t) << ','
        << format_double(r.step_norm) << ',' << format_double(r.scaled_step) << ','
        << format_double(r.gap) << ',' << format_double(r.prev_gap) << ','
        << format_double(r.residual) << ',' << format_double(r.fg_value) << ','
        << format_double(r.h_at_y) << ',' << format_double(r.H_value) << ','
        << (r.Theta_value ? format_double(*r.Theta_value) : "") << ','
        << r.unsuccessful_this_iter << ',' << (r.rel_feas ? format_double(*r.rel_feas) : "")
        << '\n';
  }
}

void save_trace_csv(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_trace_csv(out, trace);
  if (!out) throw std::runtime_error("failed writing " + path);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) return table;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split(line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.header.size())
      throw std::runtime_error("csv: row " + std::to_string(table.rows.size() + 1) + " has " +
                               std::to_string(cells.size()) + " cells, header has " +
                               std::to_string(table.header.size()));
    table.rows.push_back(std::move(cells));
  }
  return table;
}

std::vector<double> CsvTable::column(const std::string& name) const {
  std::size_t idx = header.size();
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) idx = k;
  if (idx == header.size()) throw std::runtime_error("csv: no column named '" + name + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    try {
      out.push_back(std::stod(row[idx]));
    } catch (const std::exception&) {
      throw std::runtime_error("csv: non-numeric value '" + row[idx] + "' in column " + name);
    }
  }
  return out;
}

std::vector<SubseqRow> subsequence_from_trace(const CsvTable& trace, const std::string& column) {
  std::string source;
  if (column == "step_norm_sq") source = "step_norm";
  else if (column == "scaled_step_sq") source = "scaled_step";
  else
    throw UsageError("unknown column '" + column + "' (valid: " + kSubseqColumns + ")");
  if (trace.rows.empty()) throw UsageError("subseq: the trace has no rows");

  std::vector<double> a = trace.column(source);
  for (double& v : a) v *= v;
  const std::vector<double> t = trace.column("t");
  const std::vector<double> b = running_averages(a);
  std::vector<SubseqRow> out;
  for (std::int64_t T : select_subsequence(a)) {
    const auto k = static_cast<std::size_t>(T - 1);
    out.push_back({T, static_cast<std::int64_t>(t[k]), a[k], b[k - 1]});
  }
  return out;
}

}  // namespace sdcam::cli
