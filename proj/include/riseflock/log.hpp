#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace riseflock::log {

/// Uniform-grid record of a closed-loop run. One row per logged sample;
/// stacked per-agent blocks of width n (inputs use the per-agent m_i).
struct TrajectoryLog {
  int agent_count = 0;          // N
  int state_dim = 0;            // n
  std::vector<int> input_dims;  // m_i
  double dt_log = 0.0;          // grid step

  std::vector<double> t;
  Eigen::MatrixXd target_q, target_qdot, target_qddot;  // K x n
  Eigen::MatrixXd agent_q, agent_qdot, agent_qddot;     // K x nN
  Eigen::MatrixXd u;                                    // K x sum(m_i)
  Eigen::MatrixXd nu_hat;                               // K x nN
  Eigen::MatrixXd e, r1, r2;                            // K x nN
  Eigen::MatrixXd eta;                                  // K x nN

  int size() const { return static_cast<int>(t.size()); }

  /// z(t_k) = [e; r1; r2] stacked.
  Eigen::VectorXd z_row(int k) const;
  double z_norm(int k) const;

  /// Throws ValidationError when the grid is not uniform to 1 part in 1e9.
  void validate_uniform_grid() const;
};

/// Writes the trajectory CSV: header row, then one row per sample with
/// shortest round-trip decimal formatting. Columns:
///   t, q0_*, q0dot_*, then per agent q{i}_*, q{i}dot_*, u{i}_*, e{i}_*,
///   then P, V.
/// P and V must be empty or of length log.size().
void write_trajectory_csv(const std::string& path, const TrajectoryLog& log,
                          const std::vector<double>& p_trace,
                          const std::vector<double>& v_trace);

/// Column-oriented CSV contents, keyed by header name.
struct CsvTable {
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> columns;

  int rows() const;
  bool has(const std::string& name) const { return columns.count(name) > 0; }
  const std::vector<double>& col(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace riseflock::log
