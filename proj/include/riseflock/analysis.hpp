#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riseflock/controller.hpp"
#include "riseflock/dynamics.hpp"
#include "riseflock/graph.hpp"
#include "riseflock/log.hpp"

namespace riseflock::analysis {

/// Truth states and true accelerations at one instant.
struct GlobalSnapshot {
  Eigen::VectorXd q0, q0dot, q0ddot;
  std::vector<Eigen::VectorXd> q, qdot, qddot;
  double t = 0.0;
};

struct EnsembleErrorState {
  Eigen::VectorXd e;   // stacked q0 - q_i
  Eigen::VectorXd r1;  // edot + k1 e
  Eigen::VectorXd r2;  // r1dot + k2 r1 + e, with r1dot from true accelerations
  Eigen::VectorXd z;   // [e; r1; r2]
};

EnsembleErrorState ensemble_errors(const GlobalSnapshot& snap,
                                   const controller::ControllerGains& gains);

/// Disturbance stacks along a logged run. h_b collects, per agent,
///   d/dt f0 - d/dt f_i - d/dt d_i - (d/dt g_i) g_i+ (q0ddot - f_i - d_i)
/// with every term evaluated along the target trajectory; total time
/// derivatives come from central finite differences at the log step
/// (second-order one-sided stencils at the endpoints). h_tilde collects the
/// state-dependent mismatch between target-path and agent-path evaluations.
struct DisturbanceSignals {
  std::vector<double> t;
  Eigen::MatrixXd h_b;      // K x nN
  Eigen::MatrixXd h_b_dot;  // K x nN, central differences of h_b
  Eigen::MatrixXd h_tilde;  // K x nN
  double chi1 = 0.0;
  double chi2 = 0.0;
};

DisturbanceSignals h_b_trace(const dynamics::DynamicsModel& model,
                             const log::TrajectoryLog& log);

/// chi1 = safety * sup_t ||h_b||, chi2 = safety * sup_t ||h_b_dot||.
/// Stores the estimates into the signals and returns them.
std::pair<double, double> chi_estimates(DisturbanceSignals& signals,
                                        double safety = 1.5);

/// Monte-Carlo alternative: sup of the pointwise h_b stack (and of its
/// directional derivative) over the declared target-bounds box.
std::pair<double, double> chi_box_sampling(const dynamics::DynamicsModel& model,
                                           int samples, double safety,
                                           std::uint64_t seed, double t_max);

struct PFunctionTrace {
  std::vector<double> t;
  std::vector<double> p;
  std::vector<double> conv1;  // accumulator over r1' H' h_b_dot
  std::vector<double> conv2;  // accumulator over (k2-lambda_P)(k4 ||Hr1||_1 - r1' H' h_b)
};

/// P(t) = k4 ||H r1||_1 - r1' H' h_b + conv1 + conv2, each convolution
/// advanced by the exact exponential-decay recursion with trapezoidal
/// quadrature:
///   acc_{k+1} = exp(-lambda_P h) acc_k + h/2 (exp(-lambda_P h) a_k + a_{k+1})
PFunctionTrace p_function_trace(const log::TrajectoryLog& log,
                                const DisturbanceSignals& signals,
                                const graph::InteractionMatrix& im,
                                const controller::ControllerGains& gains);

/// min{ k1 - 1/2, k2 - 1/2,
///      2(k1+k2)(lmin_H lmin_BmI + k3 lmin_H^2)
///        - (lmax_ImH2 + (1 + 2 k1^2 + k1 k2) lmax_H lmax_BmI)^2
///        - (k1(2 - k1^2) + k2)^2 lmax_H^2 lmax_BmI^2 }
double k_min_value(const graph::SpectralSummary& spectral,
                   const controller::ControllerGains& gains);

struct GainVerdict {
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
};

struct GainConditions {
  GainVerdict k1, k2, k3, k4;
  bool all_pass() const {
    return k1.pass && k2.pass && k3.pass && k4.pass;
  }
};

/// k1 > 1/2; k2 > 1/2; k3 > (lmax_ImH2 + lmax_H lmax_BmI)^2
/// + 2 lmax_H^2 lmax_BmI^2; k4 > chi1 + chi2 / (k2 - lambda_P).
GainConditions gain_conditions(const graph::SpectralSummary& spectral,
                               const controller::ControllerGains& gains,
                               double chi1, double chi2);

/// W(z0) = lmin_Q^{-1/2} sqrt(lmax_Q ||z0||^2 + 2 (k4 + chi1) ||H||_1 ||z0||_1)
double w_value(const Eigen::VectorXd& z0,
               const graph::SpectralSummary& spectral,
               const controller::ControllerGains& gains, double chi1);

struct EnvelopeResult {
  double w_z0 = 0.0;
  double rate_used = 0.0;     // lmin_Q * lambda_V (conservative reading)
  double theorem_rate = 0.0;  // 2 lmin_Q * lambda_V (stated reading)
  bool pass = false;
  double worst_margin = 0.0;  // min over samples of envelope + atol - ||z||
  double largest_lambda_v = 0.0;
  double fitted_rate = 0.0;   // least-squares slope of log ||z(t)||
  double fitted_r2 = 0.0;
  double atol = 0.0;
};

/// Checks ||z(t)|| <= W(z0) exp(-rate (t - t0)) + atol along the log and
/// fits an exponential to the transient. The fit window starts fit_skip
/// after t0 and ends when ||z|| first drops below fit_drop * ||z(t0)||.
EnvelopeResult w_envelope(const log::TrajectoryLog& log,
                          const graph::SpectralSummary& spectral,
                          const controller::ControllerGains& gains,
                          double chi1, double atol,
                          double fit_skip = 0.1, double fit_drop = 1e-4);

/// Scalar comparison function for the stabilizing-set membership test.
/// Must be non-decreasing on [0, s_max]; validated by sampling.
struct RhoModel {
  std::function<double(double)> eval;
};

RhoModel rho_polynomial(const std::vector<double>& coeffs);

enum class SetVerdict { kPass, kFail, kRhoUnavailable };

struct StabilizingSetResult {
  SetVerdict verdict = SetVerdict::kRhoUnavailable;
  double budget = 0.0;    // (k_min - lambda_V) / lmax_H
  double rho_at_w = 0.0;  // meaningful when a model was supplied
};

StabilizingSetResult stabilizing_set_check(
    double w_z0, double k_min, double lambda_v,
    const graph::SpectralSummary& spectral,
    const std::optional<RhoModel>& rho);

struct LyapunovTrace {
  std::vector<double> t;
  std::vector<double> v;            // 1/2 z' diag(I, H) z + P
  double descent_fraction = 0.0;    // over all grid steps
};

LyapunovTrace lyapunov_trace(const log::TrajectoryLog& log,
                             const PFunctionTrace& p_trace,
                             const graph::InteractionMatrix& im);

/// Share of grid steps after t0 + skip with V(t_{k+1}) < V(t_k).
double descent_fraction_after(const LyapunovTrace& trace, double skip);

/// Least-squares fit of log(y) = a t + b; returns {rate a, r_squared}.
std::pair<double, double> fit_log_slope(const std::vector<double>& t,
                                        const std::vector<double>& y);

struct CertificateReport {
  graph::SpectralSummary spectral;
  double k_min = 0.0;
  GainConditions gains;
  double chi1 = 0.0;
  double chi2 = 0.0;
  std::string chi_mode = "trajectory";
  double chi_safety = 1.5;
  EnvelopeResult envelope;
  double lyapunov_descent_fraction = 0.0;
  double lyapunov_descent_fraction_after_0p1s = 0.0;
  StabilizingSetResult stabilizing_set;
  double lambda_v = 0.0;
  double h_tilde_sup = 0.0;
};

}  // namespace riseflock::analysis
