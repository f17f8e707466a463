#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>

namespace riseflock::dynamics {

struct AgentState {
  Eigen::VectorXd q;     // position, m
  Eigen::VectorXd qdot;  // velocity, m/s
};

struct TargetState {
  Eigen::VectorXd q0;
  Eigen::VectorXd q0dot;
};

/// Known constants bounding the disturbances and the target trajectory.
/// Declared by the model author, not inferred.
struct Bounds {
  double d_bar = 1.0;
  double ddot_bar = 1.0;
  double dddot_bar = 1.0;
  double q0_bar = 1.0;
  double q0dot_bar = 1.0;
  double q0ddot_bar = 1.0;
  double q0dddot_bar = 1.0;

  void validate() const;  // all strictly positive
};

/// Agent and target dynamics: unknown to the controller, known to the
/// simulator. Implementations must be immutable after construction;
/// evaluation is reentrant.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual int state_dim() const = 0;            // n
  virtual int agent_count() const = 0;          // N
  virtual int input_dim(int agent) const = 0;   // m_i

  virtual Eigen::VectorXd f(int agent, const Eigen::VectorXd& q,
                            const Eigen::VectorXd& qdot, double t) const = 0;
  /// Control effectiveness, n x m_i, full row rank at every evaluated point.
  virtual Eigen::MatrixXd g(int agent, const Eigen::VectorXd& q,
                            const Eigen::VectorXd& qdot, double t) const = 0;
  virtual Eigen::VectorXd d(int agent, double t) const = 0;
  virtual Eigen::VectorXd f0(const Eigen::VectorXd& q0,
                             const Eigen::VectorXd& q0dot, double t) const = 0;

  virtual const Bounds& bounds() const = 0;
};

/// qddot = f_i + g_i u + d_i evaluated at (state, t).
Eigen::VectorXd agent_acceleration(const DynamicsModel& model, int agent,
                                   const AgentState& state,
                                   const Eigen::VectorXd& u, double t);

Eigen::VectorXd target_acceleration(const DynamicsModel& model,
                                    const TargetState& state, double t);

/// Right Moore-Penrose inverse g^T (g g^T)^{-1} of a full-row-rank n x m
/// matrix. Throws NumericError when cond(g g^T) exceeds 1e12.
Eigen::MatrixXd right_pinv(const Eigen::MatrixXd& g);

/// Same, evaluated on a model; failures identify the agent and time.
Eigen::MatrixXd g_pinv(const DynamicsModel& model, int agent,
                       const AgentState& state, double t);

/// Per-agent coefficient matrix for the benchmark model, N x 12. Sampled
/// from U(-0.5, 0.5) unless pinned by the scenario config.
struct ScenarioParams {
  Eigen::MatrixXd c;
};

/// The bundled benchmark dynamics (n = 3):
///   f_i = [ c1 (y - z) + c2 tanh(xdot t)
///           c3 (z - x) + c4 tanh(ydot t)
///           c5 (x - y) + c6 tanh(zdot t) ]
///   g_i = I_3 - diag{ c7 cos t, c8 sin t, c9 cos t sin t }
///   d_i = [ c10 cos t, c11 sin t, c12 cos t sin t ]
///   f_0 = [ sin x0 - cos(y0 x0dot)
///           cos(z0 y0dot) - sin x0
///          -sin(y0 z0dot) - sin z0 ]
class BenchmarkModel : public DynamicsModel {
 public:
  BenchmarkModel(ScenarioParams params, Bounds bounds);

  int state_dim() const override { return 3; }
  int agent_count() const override { return static_cast<int>(params_.c.rows()); }
  int input_dim(int) const override { return 3; }

  Eigen::VectorXd f(int agent, const Eigen::VectorXd& q,
                    const Eigen::VectorXd& qdot, double t) const override;
  Eigen::MatrixXd g(int agent, const Eigen::VectorXd& q,
                    const Eigen::VectorXd& qdot, double t) const override;
  Eigen::VectorXd d(int agent, double t) const override;
  Eigen::VectorXd f0(const Eigen::VectorXd& q0, const Eigen::VectorXd& q0dot,
                     double t) const override;

  const Bounds& bounds() const override { return bounds_; }
  const ScenarioParams& params() const { return params_; }

 private:
  ScenarioParams params_;
  Bounds bounds_;
};

/// User-configurable model, identical across agents, m_i = n:
///   f_i = F_q q + F_v qdot
///   g_i = diag(g_diag)
///   d_i = d_amp .* cos(d_freq t + d_phase)
///   f_0 = 0, or the benchmark f_0 when f0_mode == "trig" (n = 3 only).
struct CustomParams {
  int n = 3;
  Eigen::MatrixXd f_linear_pos;   // n x n, default zero
  Eigen::MatrixXd f_linear_vel;   // n x n, default zero
  Eigen::VectorXd d_amp;          // default zero
  Eigen::VectorXd d_freq;
  Eigen::VectorXd d_phase;
  Eigen::VectorXd g_diag;         // default ones
  std::string f0_mode = "zero";   // "zero" | "trig"
};

class CustomModel : public DynamicsModel {
 public:
  CustomModel(int agent_count, CustomParams params, Bounds bounds);

  int state_dim() const override { return params_.n; }
  int agent_count() const override { return agent_count_; }
  int input_dim(int) const override { return params_.n; }

  Eigen::VectorXd f(int agent, const Eigen::VectorXd& q,
                    const Eigen::VectorXd& qdot, double t) const override;
  Eigen::MatrixXd g(int agent, const Eigen::VectorXd& q,
                    const Eigen::VectorXd& qdot, double t) const override;
  Eigen::VectorXd d(int agent, double t) const override;
  Eigen::VectorXd f0(const Eigen::VectorXd& q0, const Eigen::VectorXd& q0dot,
                     double t) const override;

  const Bounds& bounds() const override { return bounds_; }

 private:
  int agent_count_;
  CustomParams params_;
  Bounds bounds_;
};

}  // namespace riseflock::dynamics
