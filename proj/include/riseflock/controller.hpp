#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>

namespace riseflock::controller {

struct ControllerGains {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;
  double lambda_p = 0.0;
  double lambda_v = 0.0;

  /// k1..k3, lambda_P, lambda_V strictly positive; k4 >= 0 (zero disables
  /// the robust term, used by ablations); lambda_P < k2.
  void validate() const;
};

/// Everything an agent can sense: relative positions and velocities to its
/// graph neighbors (with that agent's edge weights), and, if pinned, the
/// relative state to the target. Keys are 0-based agent indices.
struct LocalMeasurements {
  int state_dim = 0;                       // n
  std::map<int, Eigen::VectorXd> rel_pos;  // j -> q_j - q_i
  std::map<int, Eigen::VectorXd> rel_vel;
  std::map<int, double> weights;           // j -> a_ij
  int pinned = 0;                          // b_i
  std::optional<Eigen::VectorXd> target_rel_pos;  // e_i, present iff pinned
  std::optional<Eigen::VectorXd> target_rel_vel;  // edot_i

  void validate() const;
};

/// Integrated controller state, one per agent.
struct ControllerMemory {
  Eigen::VectorXd nu_hat;
};

/// Element-wise signum: +1, -1, or exactly 0. No epsilon, no dead-zone.
Eigen::VectorXd sgn(const Eigen::VectorXd& v);

/// eta_i = b_i e_i + sum_j a_ij q_ij
Eigen::VectorXd neighborhood_error(const LocalMeasurements& meas);

/// etadot_i = b_i edot_i + sum_j a_ij qdot_ij
Eigen::VectorXd neighborhood_error_rate(const LocalMeasurements& meas);

/// u_i = g+ ( k3 etadot + ((k1+k2)k3 + 1) eta
///            + (k1+k2) b_i edot + (1 + k1 k2) b_i e + nu_hat )
Eigen::VectorXd rise_control(const LocalMeasurements& meas,
                             const ControllerMemory& mem,
                             const ControllerGains& gains,
                             const Eigen::MatrixXd& g_plus);

/// nuhatdot_i = (k1 + (1 + k1 k2) k3) eta + k4 sgn(etadot + k1 eta)
Eigen::VectorXd nuhat_rate(const LocalMeasurements& meas,
                           const ControllerGains& gains);

}  // namespace riseflock::controller
