#include "riseflock/log.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "riseflock/errors.hpp"

namespace riseflock::log {

Eigen::VectorXd TrajectoryLog::z_row(int k) const {
  const Eigen::Index w = e.cols();
  Eigen::VectorXd z(3 * w);
  z.segment(0, w) = e.row(k);
  z.segment(w, w) = r1.row(k);
  z.segment(2 * w, w) = r2.row(k);
  return z;
}

double TrajectoryLog::z_norm(int k) const {
  return std::sqrt(e.row(k).squaredNorm() + r1.row(k).squaredNorm() +
                   r2.row(k).squaredNorm());
}

void TrajectoryLog::validate_uniform_grid() const {
  if (size() < 2) return;
  const double h = t[1] - t[0];
  for (int k = 1; k < size(); ++k) {
    if (std::abs((t[k] - t[k - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h))) {
      throw ValidationError("trajectory log: nonuniform time grid at sample " +
                            std::to_string(k));
    }
  }
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

void axis_names(std::ostringstream& os, const std::string& prefix, int dim) {
  static const char* xyz[3] = {"x", "y", "z"};
  for (int a = 0; a < dim; ++a) {
    os << ',' << prefix << '_';
    if (dim == 3) {
      os << xyz[a];
    } else {
      os << (a + 1);
    }
  }
}

}  // namespace

void write_trajectory_csv(const std::string& path, const TrajectoryLog& log,
                          const std::vector<double>& p_trace,
                          const std::vector<double>& v_trace) {
  const int K = log.size();
  if (!p_trace.empty() && static_cast<int>(p_trace.size()) != K) {
    throw ValidationError("trajectory csv: P trace length mismatch");
  }
  if (!v_trace.empty() && static_cast<int>(v_trace.size()) != K) {
    throw ValidationError("trajectory csv: V trace length mismatch");
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("trajectory csv: cannot open " + path);
  }

  const int n = log.state_dim;
  std::ostringstream header;
  header << 't';
  axis_names(header, "q0", n);
  axis_names(header, "q0dot", n);
  for (int i = 0; i < log.agent_count; ++i) {
    const std::string id = std::to_string(i + 1);
    axis_names(header, "q" + id, n);
    axis_names(header, "q" + id + "dot", n);
    axis_names(header, "u" + id, log.input_dims[i]);
    axis_names(header, "e" + id, n);
  }
  header << ",P,V";
  out << header.str() << '\n';

  for (int k = 0; k < K; ++k) {
    std::string row = format_double(log.t[k]);
    auto append = [&row](double v) {
      row += ',';
      row += format_double(v);
    };
    for (int a = 0; a < n; ++a) append(log.target_q(k, a));
    for (int a = 0; a < n; ++a) append(log.target_qdot(k, a));
    int ucol = 0;
    for (int i = 0; i < log.agent_count; ++i) {
      for (int a = 0; a < n; ++a) append(log.agent_q(k, i * n + a));
      for (int a = 0; a < n; ++a) append(log.agent_qdot(k, i * n + a));
      for (int a = 0; a < log.input_dims[i]; ++a) append(log.u(k, ucol + a));
      for (int a = 0; a < n; ++a) append(log.e(k, i * n + a));
      ucol += log.input_dims[i];
    }
    append(p_trace.empty() ? std::nan("") : p_trace[k]);
    append(v_trace.empty() ? std::nan("") : v_trace[k]);
    out << row << '\n';
  }
}

int CsvTable::rows() const {
  return names.empty() ? 0 : static_cast<int>(columns.at(names[0]).size());
}

const std::vector<double>& CsvTable::col(const std::string& name) const {
  auto it = columns.find(name);
  if (it == columns.end()) {
    throw ValidationError("csv: missing column " + name);
  }
  return it->second;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("csv: cannot open " + path);
  }
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("csv: empty file " + path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) {
    table.names.push_back(cell);
    table.columns[cell] = {};
  }
  if (table.names.empty()) {
    throw ValidationError("csv: header row has no columns in " + path);
  }

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::size_t col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col >= table.names.size()) {
        throw ValidationError("csv: too many fields on line " +
                              std::to_string(lineno));
      }
      char* end = nullptr;
      double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        throw ValidationError("csv: non-numeric field \"" + cell +
                              "\" on line " + std::to_string(lineno));
      }
      table.columns[table.names[col]].push_back(v);
      ++col;
    }
    if (col != table.names.size()) {
      throw ValidationError("csv: wrong field count on line " +
                            std::to_string(lineno));
    }
  }
  return table;
}

}  // namespace riseflock::log
