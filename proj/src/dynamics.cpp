#include "riseflock/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <utility>

#include "riseflock/errors.hpp"

namespace riseflock::dynamics {

void Bounds::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v > 0.0)) {
      throw ValidationError(std::string("bounds: ") + name +
                            " must be strictly positive");
    }
  };
  check(d_bar, "d_bar");
  check(ddot_bar, "ddot_bar");
  check(dddot_bar, "dddot_bar");
  check(q0_bar, "q0_bar");
  check(q0dot_bar, "q0dot_bar");
  check(q0ddot_bar, "q0ddot_bar");
  check(q0dddot_bar, "q0dddot_bar");
}

Eigen::VectorXd agent_acceleration(const DynamicsModel& model, int agent,
                                   const AgentState& state,
                                   const Eigen::VectorXd& u, double t) {
  const int n = model.state_dim();
  const int m = model.input_dim(agent);
  if (state.q.size() != n || state.qdot.size() != n) {
    throw ValidationError("agent_acceleration: state dimension mismatch");
  }
  if (u.size() != m) {
    throw ValidationError("agent_acceleration: input has length " +
                          std::to_string(u.size()) + ", expected " +
                          std::to_string(m));
  }
  Eigen::VectorXd acc = model.f(agent, state.q, state.qdot, t) +
                        model.g(agent, state.q, state.qdot, t) * u +
                        model.d(agent, t);
  if (!acc.allFinite()) {
    throw NumericError("agent_acceleration: non-finite result for agent " +
                       std::to_string(agent) + " at t = " + std::to_string(t));
  }
  return acc;
}

Eigen::VectorXd target_acceleration(const DynamicsModel& model,
                                    const TargetState& state, double t) {
  const int n = model.state_dim();
  if (state.q0.size() != n || state.q0dot.size() != n) {
    throw ValidationError("target_acceleration: state dimension mismatch");
  }
  Eigen::VectorXd acc = model.f0(state.q0, state.q0dot, t);
  if (!acc.allFinite()) {
    throw NumericError("target_acceleration: non-finite result at t = " +
                       std::to_string(t));
  }
  return acc;
}

Eigen::MatrixXd right_pinv(const Eigen::MatrixXd& g) {
  const Eigen::MatrixXd gram = g * g.transpose();  // n x n
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) {
    throw NumericError("right_pinv: eigen solver failed on g g^T");
  }
  const double lo = solver.eigenvalues()(0);
  const double hi = solver.eigenvalues()(solver.eigenvalues().size() - 1);
  if (!(lo > 0.0) || hi / lo > 1e12) {
    throw NumericError("right_pinv: g g^T is singular or ill-conditioned");
  }
  return g.transpose() * gram.ldlt().solve(
                             Eigen::MatrixXd::Identity(gram.rows(), gram.rows()));
}

Eigen::MatrixXd g_pinv(const DynamicsModel& model, int agent,
                       const AgentState& state, double t) {
  try {
    return right_pinv(model.g(agent, state.q, state.qdot, t));
  } catch (const NumericError&) {
    throw NumericError("g_pinv: control effectiveness singular for agent " +
                       std::to_string(agent) + " at t = " + std::to_string(t));
  }
}

BenchmarkModel::BenchmarkModel(ScenarioParams params, Bounds bounds)
    : params_(std::move(params)), bounds_(bounds) {
  if (params_.c.cols() != 12 || params_.c.rows() < 1) {
    throw ValidationError("benchmark model: parameter matrix must be N x 12");
  }
  bounds_.validate();
}

Eigen::VectorXd BenchmarkModel::f(int agent, const Eigen::VectorXd& q,
                                  const Eigen::VectorXd& qdot,
                                  double t) const {
  const auto c = params_.c.row(agent);
  Eigen::VectorXd out(3);
  out << c(0) * (q(1) - q(2)) + c(1) * std::tanh(qdot(0) * t),
         c(2) * (q(2) - q(0)) + c(3) * std::tanh(qdot(1) * t),
         c(4) * (q(0) - q(1)) + c(5) * std::tanh(qdot(2) * t);
  return out;
}

Eigen::MatrixXd BenchmarkModel::g(int agent, const Eigen::VectorXd&,
                                  const Eigen::VectorXd&, double t) const {
  const auto c = params_.c.row(agent);
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(3, 3);
  out(0, 0) -= c(6) * std::cos(t);
  out(1, 1) -= c(7) * std::sin(t);
  out(2, 2) -= c(8) * std::cos(t) * std::sin(t);
  return out;
}

Eigen::VectorXd BenchmarkModel::d(int agent, double t) const {
  const auto c = params_.c.row(agent);
  Eigen::VectorXd out(3);
  out << c(9) * std::cos(t), c(10) * std::sin(t),
         c(11) * std::cos(t) * std::sin(t);
  return out;
}

Eigen::VectorXd BenchmarkModel::f0(const Eigen::VectorXd& q0,
                                   const Eigen::VectorXd& q0dot,
                                   double) const {
  Eigen::VectorXd out(3);
  out << std::sin(q0(0)) - std::cos(q0(1) * q0dot(0)),
         std::cos(q0(2) * q0dot(1)) - std::sin(q0(0)),
         -std::sin(q0(1) * q0dot(2)) - std::sin(q0(2));
  return out;
}

CustomModel::CustomModel(int agent_count, CustomParams params, Bounds bounds)
    : agent_count_(agent_count), params_(std::move(params)), bounds_(bounds) {
  const int n = params_.n;
  if (n < 1 || agent_count_ < 1) {
    throw ValidationError("custom model: bad dimensions");
  }
  auto defaulted = [n](Eigen::MatrixXd& m) {
    if (m.size() == 0) m = Eigen::MatrixXd::Zero(n, n);
  };
  defaulted(params_.f_linear_pos);
  defaulted(params_.f_linear_vel);
  auto defaulted_vec = [n](Eigen::VectorXd& v, double fill) {
    if (v.size() == 0) v = Eigen::VectorXd::Constant(n, fill);
  };
  defaulted_vec(params_.d_amp, 0.0);
  defaulted_vec(params_.d_freq, 0.0);
  defaulted_vec(params_.d_phase, 0.0);
  defaulted_vec(params_.g_diag, 1.0);
  if (params_.f_linear_pos.rows() != n || params_.f_linear_pos.cols() != n ||
      params_.f_linear_vel.rows() != n || params_.f_linear_vel.cols() != n ||
      params_.d_amp.size() != n || params_.d_freq.size() != n ||
      params_.d_phase.size() != n || params_.g_diag.size() != n) {
    throw ValidationError("custom model: parameter dimensions must match n");
  }
  if (params_.f0_mode != "zero" && params_.f0_mode != "trig") {
    throw ValidationError("custom model: f0_mode must be \"zero\" or \"trig\"");
  }
  if (params_.f0_mode == "trig" && n != 3) {
    throw ValidationError("custom model: f0_mode \"trig\" requires n = 3");
  }
  bounds_.validate();
}

Eigen::VectorXd CustomModel::f(int, const Eigen::VectorXd& q,
                               const Eigen::VectorXd& qdot, double) const {
  return params_.f_linear_pos * q + params_.f_linear_vel * qdot;
}

Eigen::MatrixXd CustomModel::g(int, const Eigen::VectorXd&,
                               const Eigen::VectorXd&, double) const {
  return params_.g_diag.asDiagonal();
}

Eigen::VectorXd CustomModel::d(int, double t) const {
  return params_.d_amp.array() *
         (params_.d_freq.array() * t + params_.d_phase.array()).cos();
}

Eigen::VectorXd CustomModel::f0(const Eigen::VectorXd& q0,
                                const Eigen::VectorXd& q0dot, double) const {
  if (params_.f0_mode == "zero") {
    return Eigen::VectorXd::Zero(params_.n);
  }
  Eigen::VectorXd out(3);
  out << std::sin(q0(0)) - std::cos(q0(1) * q0dot(0)),
         std::cos(q0(2) * q0dot(1)) - std::sin(q0(0)),
         -std::sin(q0(1) * q0dot(2)) - std::sin(q0(2));
  return out;
}

}  // namespace riseflock::dynamics
