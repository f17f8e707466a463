#include "riseflock/controller.hpp"

#include "riseflock/errors.hpp"

namespace riseflock::controller {

void ControllerGains::validate() const {
  if (!(k1 > 0.0) || !(k2 > 0.0) || !(k3 > 0.0)) {
    throw ValidationError("gains: k1, k2, k3 must be strictly positive");
  }
  if (k4 < 0.0) {
    throw ValidationError("gains: k4 must be non-negative");
  }
  if (!(lambda_p > 0.0) || !(lambda_v > 0.0)) {
    throw ValidationError("gains: lambda_P and lambda_V must be positive");
  }
  if (!(lambda_p < k2)) {
    throw ValidationError("gains: lambda_P must lie in (0, k2)");
  }
}

void LocalMeasurements::validate() const {
  if (state_dim < 1) {
    throw ValidationError("measurements: state dimension must be >= 1");
  }
  if (pinned != 0 && pinned != 1) {
    throw ValidationError("measurements: pinned flag must be 0 or 1");
  }
  const bool has_target = target_rel_pos.has_value() && target_rel_vel.has_value();
  if (pinned == 1 && !has_target) {
    throw ValidationError("measurements: pinned agent lacks target channels");
  }
  if (pinned == 0 && (target_rel_pos.has_value() || target_rel_vel.has_value())) {
    throw ValidationError("measurements: unpinned agent carries target channels");
  }
  if (rel_pos.size() != rel_vel.size() || rel_pos.size() != weights.size()) {
    throw ValidationError("measurements: neighbor channel maps disagree");
  }
  for (const auto& [j, v] : rel_pos) {
    if (!rel_vel.count(j) || !weights.count(j)) {
      throw ValidationError("measurements: neighbor channel maps disagree");
    }
    (void)v;
  }
}

Eigen::VectorXd sgn(const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out(i) = v(i) > 0.0 ? 1.0 : (v(i) < 0.0 ? -1.0 : 0.0);
  }
  return out;
}

namespace {

Eigen::VectorXd weighted_sum(int state_dim,
                             const std::map<int, Eigen::VectorXd>& channel,
                             const std::map<int, double>& weights,
                             int pinned,
                             const std::optional<Eigen::VectorXd>& target) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(state_dim);
  if (pinned && target) {
    acc += static_cast<double>(pinned) * (*target);
  }
  for (const auto& [j, v] : channel) {
    acc += weights.at(j) * v;
  }
  return acc;
}

}  // namespace

Eigen::VectorXd neighborhood_error(const LocalMeasurements& meas) {
  meas.validate();
  return weighted_sum(meas.state_dim, meas.rel_pos, meas.weights, meas.pinned,
                      meas.target_rel_pos);
}

Eigen::VectorXd neighborhood_error_rate(const LocalMeasurements& meas) {
  meas.validate();
  return weighted_sum(meas.state_dim, meas.rel_vel, meas.weights, meas.pinned,
                      meas.target_rel_vel);
}

Eigen::VectorXd rise_control(const LocalMeasurements& meas,
                             const ControllerMemory& mem,
                             const ControllerGains& gains,
                             const Eigen::MatrixXd& g_plus) {
  const Eigen::VectorXd eta = neighborhood_error(meas);
  const Eigen::VectorXd etadot = neighborhood_error_rate(meas);
  Eigen::VectorXd inner = gains.k3 * etadot +
                          ((gains.k1 + gains.k2) * gains.k3 + 1.0) * eta +
                          mem.nu_hat;
  if (meas.pinned) {
    inner += (gains.k1 + gains.k2) * (*meas.target_rel_vel) +
             (1.0 + gains.k1 * gains.k2) * (*meas.target_rel_pos);
  }
  return g_plus * inner;
}

Eigen::VectorXd nuhat_rate(const LocalMeasurements& meas,
                           const ControllerGains& gains) {
  const Eigen::VectorXd eta = neighborhood_error(meas);
  const Eigen::VectorXd etadot = neighborhood_error_rate(meas);
  return (gains.k1 + (1.0 + gains.k1 * gains.k2) * gains.k3) * eta +
         gains.k4 * sgn(etadot + gains.k1 * eta);
}

}  // namespace riseflock::controller
