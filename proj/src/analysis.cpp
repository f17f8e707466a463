#include "riseflock/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "riseflock/errors.hpp"
#include "riseflock/rng.hpp"

namespace riseflock::analysis {

EnsembleErrorState ensemble_errors(const GlobalSnapshot& snap,
                                   const controller::ControllerGains& gains) {
  const int N = static_cast<int>(snap.q.size());
  if (N == 0 || snap.q0.size() == 0) {
    throw ValidationError("ensemble_errors: empty snapshot");
  }
  const int n = static_cast<int>(snap.q0.size());
  EnsembleErrorState out;
  out.e.resize(n * N);
  Eigen::VectorXd edot(n * N), eddot(n * N);
  for (int i = 0; i < N; ++i) {
    out.e.segment(i * n, n) = snap.q0 - snap.q[i];
    edot.segment(i * n, n) = snap.q0dot - snap.qdot[i];
    eddot.segment(i * n, n) = snap.q0ddot - snap.qddot[i];
  }
  out.r1 = edot + gains.k1 * out.e;
  const Eigen::VectorXd r1dot = eddot + gains.k1 * edot;
  out.r2 = r1dot + gains.k2 * out.r1 + out.e;
  out.z.resize(3 * n * N);
  out.z << out.e, out.r1, out.r2;
  return out;
}

namespace {

// Total time derivative of a sampled signal: central differences inside,
// second-order one-sided stencils at the endpoints.
Eigen::MatrixXd time_derivative(const Eigen::MatrixXd& x, double h) {
  const Eigen::Index K = x.rows();
  Eigen::MatrixXd dx(K, x.cols());
  for (Eigen::Index k = 1; k + 1 < K; ++k) {
    dx.row(k) = (x.row(k + 1) - x.row(k - 1)) / (2.0 * h);
  }
  dx.row(0) = (-3.0 * x.row(0) + 4.0 * x.row(1) - x.row(2)) / (2.0 * h);
  dx.row(K - 1) =
      (3.0 * x.row(K - 1) - 4.0 * x.row(K - 2) + x.row(K - 3)) / (2.0 * h);
  return dx;
}

Eigen::MatrixXd flatten_rowwise(const std::vector<Eigen::MatrixXd>& mats) {
  const Eigen::Index K = static_cast<Eigen::Index>(mats.size());
  const Eigen::Index sz = mats[0].size();
  Eigen::MatrixXd out(K, sz);
  for (Eigen::Index k = 0; k < K; ++k) {
    out.row(k) = Eigen::Map<const Eigen::VectorXd>(mats[k].data(), sz);
  }
  return out;
}

}  // namespace

DisturbanceSignals h_b_trace(const dynamics::DynamicsModel& model,
                             const log::TrajectoryLog& log) {
  const int K = log.size();
  if (K < 3) {
    throw InsufficientDataError(
        "h_b_trace: need at least 3 samples, got " + std::to_string(K));
  }
  log.validate_uniform_grid();
  const double h = log.dt_log;
  const int n = log.state_dim;
  const int N = log.agent_count;

  DisturbanceSignals sig;
  sig.t = log.t;
  sig.h_b.resize(K, n * N);
  sig.h_tilde.resize(K, n * N);

  // f0 along the target path.
  Eigen::MatrixXd f0_tgt(K, n);
  for (int k = 0; k < K; ++k) {
    f0_tgt.row(k) = model.f0(log.target_q.row(k).transpose(),
                             log.target_qdot.row(k).transpose(), log.t[k])
                        .transpose();
  }
  const Eigen::MatrixXd df0 = time_derivative(f0_tgt, h);

  for (int i = 0; i < N; ++i) {
    Eigen::MatrixXd fi_tgt(K, n), di(K, n), fi_agent(K, n);
    std::vector<Eigen::MatrixXd> gi_tgt(K), gi_agent(K);
    for (int k = 0; k < K; ++k) {
      const Eigen::VectorXd q0 = log.target_q.row(k).transpose();
      const Eigen::VectorXd q0dot = log.target_qdot.row(k).transpose();
      const Eigen::VectorXd qi =
          log.agent_q.row(k).segment(i * n, n).transpose();
      const Eigen::VectorXd qidot =
          log.agent_qdot.row(k).segment(i * n, n).transpose();
      fi_tgt.row(k) = model.f(i, q0, q0dot, log.t[k]).transpose();
      fi_agent.row(k) = model.f(i, qi, qidot, log.t[k]).transpose();
      di.row(k) = model.d(i, log.t[k]).transpose();
      gi_tgt[k] = model.g(i, q0, q0dot, log.t[k]);
      gi_agent[k] = model.g(i, qi, qidot, log.t[k]);
    }
    const Eigen::MatrixXd dfi_tgt = time_derivative(fi_tgt, h);
    const Eigen::MatrixXd dfi_agent = time_derivative(fi_agent, h);
    const Eigen::MatrixXd ddi = time_derivative(di, h);
    const Eigen::MatrixXd dgi_tgt_flat =
        time_derivative(flatten_rowwise(gi_tgt), h);
    const Eigen::MatrixXd dgi_agent_flat =
        time_derivative(flatten_rowwise(gi_agent), h);

    const int m = model.input_dim(i);
    for (int k = 0; k < K; ++k) {
      const Eigen::MatrixXd dg_tgt =
          Eigen::Map<const Eigen::MatrixXd>(dgi_tgt_flat.row(k).data(), n, m);
      const Eigen::MatrixXd dg_agent = Eigen::Map<const Eigen::MatrixXd>(
          dgi_agent_flat.row(k).data(), n, m);
      const Eigen::MatrixXd gp_tgt = dynamics::right_pinv(gi_tgt[k]);
      const Eigen::MatrixXd gp_agent = dynamics::right_pinv(gi_agent[k]);

      const Eigen::VectorXd q0ddot = log.target_qddot.row(k).transpose();
      const Eigen::VectorXd qiddot =
          log.agent_qddot.row(k).segment(i * n, n).transpose();

      const Eigen::VectorXd tgt_residual =
          q0ddot - fi_tgt.row(k).transpose() - di.row(k).transpose();
      const Eigen::VectorXd agent_residual =
          qiddot - fi_agent.row(k).transpose() - di.row(k).transpose();

      sig.h_b.row(k).segment(i * n, n) =
          df0.row(k) - dfi_tgt.row(k) - ddi.row(k) -
          (dg_tgt * gp_tgt * tgt_residual).transpose();
      sig.h_tilde.row(k).segment(i * n, n) =
          dfi_tgt.row(k) - dfi_agent.row(k) +
          (dg_tgt * gp_tgt * tgt_residual).transpose() -
          (dg_agent * gp_agent * agent_residual).transpose();
    }
  }
  sig.h_b_dot = time_derivative(sig.h_b, h);
  return sig;
}

std::pair<double, double> chi_estimates(DisturbanceSignals& signals,
                                        double safety) {
  if (safety < 1.0) {
    throw ValidationError("chi_estimates: safety factor must be >= 1");
  }
  signals.chi1 = safety * signals.h_b.rowwise().norm().maxCoeff();
  signals.chi2 = safety * signals.h_b_dot.rowwise().norm().maxCoeff();
  return {signals.chi1, signals.chi2};
}

namespace {

// Pointwise h_b stack for a sampled target state. Partial derivatives of
// f0, f_i, g_i, d_i enter through the chain rule; each is approximated by a
// central difference with step eps along the sampled trajectory direction.
Eigen::VectorXd h_b_point(const dynamics::DynamicsModel& model,
                          const Eigen::VectorXd& q0, const Eigen::VectorXd& q0dot,
                          const Eigen::VectorXd& q0ddot, double t) {
  const int n = model.state_dim();
  const int N = model.agent_count();
  const double eps = 1e-5;
  auto along = [&](auto&& fn) {
    Eigen::VectorXd hi =
        fn(q0 + eps * q0dot, q0dot + eps * q0ddot, t + eps);
    Eigen::VectorXd lo =
        fn(q0 - eps * q0dot, q0dot - eps * q0ddot, t - eps);
    return ((hi - lo) / (2.0 * eps)).eval();
  };
  Eigen::VectorXd out(n * N);
  const Eigen::VectorXd df0 = along([&](const Eigen::VectorXd& a,
                                        const Eigen::VectorXd& b, double tt) {
    return model.f0(a, b, tt);
  });
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd dfi = along(
        [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b, double tt) {
          return model.f(i, a, b, tt);
        });
    const int m = model.input_dim(i);
    const Eigen::MatrixXd dgi_flat = along(
        [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b, double tt) {
          Eigen::MatrixXd gm = model.g(i, a, b, tt);
          return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(gm.data(), gm.size()));
        });
    const Eigen::MatrixXd dgi =
        Eigen::Map<const Eigen::MatrixXd>(dgi_flat.data(), n, m);
    const Eigen::VectorXd ddi =
        (model.d(i, t + eps) - model.d(i, t - eps)) / (2.0 * eps);
    const Eigen::MatrixXd gp = dynamics::right_pinv(model.g(i, q0, q0dot, t));
    const Eigen::VectorXd residual = q0ddot - model.f(i, q0, q0dot, t) -
                                     model.d(i, t);
    out.segment(i * n, n) = df0 - dfi - ddi - dgi * gp * residual;
  }
  return out;
}

}  // namespace

std::pair<double, double> chi_box_sampling(const dynamics::DynamicsModel& model,
                                           int samples, double safety,
                                           std::uint64_t seed, double t_max) {
  if (samples < 1) {
    throw ValidationError("chi_box_sampling: need at least one sample");
  }
  const dynamics::Bounds& b = model.bounds();
  const int n = model.state_dim();
  rng::CounterRng gen(seed, rng::CounterRng::stream_id(0, rng::kChiSampling));

  auto draw_vec = [&](double bound) {
    Eigen::VectorXd v(n);
    for (int a = 0; a < n; ++a) v(a) = gen.uniform(-bound, bound);
    return v;
  };

  double sup1 = 0.0, sup2 = 0.0;
  const double eps = 1e-4;
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd q0 = draw_vec(b.q0_bar);
    const Eigen::VectorXd q0dot = draw_vec(b.q0dot_bar);
    const Eigen::VectorXd q0ddot = draw_vec(b.q0ddot_bar);
    const Eigen::VectorXd q0dddot = draw_vec(b.q0dddot_bar);
    const double t = gen.uniform(eps, std::max(2.0 * eps, t_max));

    sup1 = std::max(sup1,
                    h_b_point(model, q0, q0dot, q0ddot, t).norm());
    const Eigen::VectorXd hi = h_b_point(model, q0 + eps * q0dot,
                                         q0dot + eps * q0ddot,
                                         q0ddot + eps * q0dddot, t + eps);
    const Eigen::VectorXd lo = h_b_point(model, q0 - eps * q0dot,
                                         q0dot - eps * q0ddot,
                                         q0ddot - eps * q0dddot, t - eps);
    sup2 = std::max(sup2, ((hi - lo) / (2.0 * eps)).norm());
  }
  return {safety * sup1, safety * sup2};
}

PFunctionTrace p_function_trace(const log::TrajectoryLog& log,
                                const DisturbanceSignals& signals,
                                const graph::InteractionMatrix& im,
                                const controller::ControllerGains& gains) {
  if (!(gains.lambda_p > 0.0) || !(gains.lambda_p < gains.k2)) {
    throw ValidationError("p_function_trace: lambda_P must lie in (0, k2)");
  }
  log.validate_uniform_grid();
  const int K = log.size();
  if (static_cast<int>(signals.t.size()) != K) {
    throw ValidationError("p_function_trace: signal grid mismatch");
  }

  const double h = log.dt_log;
  const double k4 = gains.k4;
  const double gap = gains.k2 - gains.lambda_p;
  const double decay = std::exp(-gains.lambda_p * h);

  PFunctionTrace out;
  out.t = log.t;
  out.p.resize(K);
  out.conv1.resize(K);
  out.conv2.resize(K);

  // Per-sample base term and convolution integrands.
  std::vector<double> base(K), a1(K), a2(K);
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd hr1 = im.h * log.r1.row(k).transpose();
    base[k] = k4 * hr1.lpNorm<1>() - hr1.dot(signals.h_b.row(k));
    a1[k] = hr1.dot(signals.h_b_dot.row(k));
    a2[k] = gap * base[k];
  }

  double acc1 = 0.0, acc2 = 0.0;
  for (int k = 0; k < K; ++k) {
    if (k > 0) {
      acc1 = decay * acc1 + 0.5 * h * (decay * a1[k - 1] + a1[k]);
      acc2 = decay * acc2 + 0.5 * h * (decay * a2[k - 1] + a2[k]);
    }
    out.conv1[k] = acc1;
    out.conv2[k] = acc2;
    out.p[k] = base[k] + acc1 + acc2;
  }
  return out;
}

double k_min_value(const graph::SpectralSummary& s,
                   const controller::ControllerGains& g) {
  const double third =
      2.0 * (g.k1 + g.k2) *
          (s.lambda_min_h * s.lambda_min_bmi + g.k3 * s.lambda_min_h * s.lambda_min_h) -
      std::pow(s.lambda_max_imh2 +
                   (1.0 + 2.0 * g.k1 * g.k1 + g.k1 * g.k2) * s.lambda_max_h *
                       s.lambda_max_bmi,
               2) -
      std::pow((g.k1 * (2.0 - g.k1 * g.k1) + g.k2) * s.lambda_max_h *
                   s.lambda_max_bmi,
               2);
  return std::min({g.k1 - 0.5, g.k2 - 0.5, third});
}

GainConditions gain_conditions(const graph::SpectralSummary& s,
                               const controller::ControllerGains& g,
                               double chi1, double chi2) {
  if (!(g.lambda_p < g.k2)) {
    throw ValidationError("gain_conditions: lambda_P must lie below k2");
  }
  GainConditions out;
  out.k1 = {g.k1 > 0.5, g.k1, 0.5};
  out.k2 = {g.k2 > 0.5, g.k2, 0.5};
  const double k3_threshold =
      std::pow(s.lambda_max_imh2 + s.lambda_max_h * s.lambda_max_bmi, 2) +
      2.0 * std::pow(s.lambda_max_h * s.lambda_max_bmi, 2);
  out.k3 = {g.k3 > k3_threshold, g.k3, k3_threshold};
  const double k4_threshold = chi1 + chi2 / (g.k2 - g.lambda_p);
  out.k4 = {g.k4 > k4_threshold, g.k4, k4_threshold};
  return out;
}

double w_value(const Eigen::VectorXd& z0, const graph::SpectralSummary& s,
               const controller::ControllerGains& g, double chi1) {
  return std::sqrt((s.lambda_max_q * z0.squaredNorm() +
                    2.0 * (g.k4 + chi1) * s.norm1_h * z0.lpNorm<1>()) /
                   s.lambda_min_q);
}

std::pair<double, double> fit_log_slope(const std::vector<double>& t,
                                        const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!(y[k] > 0.0)) continue;
    const double ly = std::log(y[k]);
    sx += t[k];
    sy += ly;
    sxx += t[k] * t[k];
    sxy += t[k] * ly;
    ++count;
  }
  if (count < 2) return {0.0, 0.0};
  const double denom = count * sxx - sx * sx;
  if (denom == 0.0) return {0.0, 0.0};
  const double slope = (count * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / count;

  double ss_res = 0, ss_tot = 0;
  const double mean = sy / count;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!(y[k] > 0.0)) continue;
    const double ly = std::log(y[k]);
    ss_res += std::pow(ly - (slope * t[k] + intercept), 2);
    ss_tot += std::pow(ly - mean, 2);
  }
  const double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return {slope, r2};
}

EnvelopeResult w_envelope(const log::TrajectoryLog& log,
                          const graph::SpectralSummary& spectral,
                          const controller::ControllerGains& gains,
                          double chi1, double atol, double fit_skip,
                          double fit_drop) {
  const int K = log.size();
  if (K < 1) {
    throw ValidationError("w_envelope: empty log");
  }
  EnvelopeResult out;
  out.atol = atol;
  out.w_z0 = w_value(log.z_row(0), spectral, gains, chi1);
  out.rate_used = spectral.lambda_min_q * gains.lambda_v;
  out.theorem_rate = 2.0 * spectral.lambda_min_q * gains.lambda_v;

  const double t0 = log.t[0];
  double worst = std::numeric_limits<double>::infinity();
  double min_rate = std::numeric_limits<double>::infinity();
  std::vector<double> fit_t, fit_z;
  const double z0n = log.z_norm(0);
  bool dropped = false;
  for (int k = 0; k < K; ++k) {
    const double zn = log.z_norm(k);
    const double env =
        out.w_z0 * std::exp(-out.rate_used * (log.t[k] - t0)) + atol;
    worst = std::min(worst, env - zn);
    if (log.t[k] > t0 && zn > atol) {
      min_rate = std::min(
          min_rate, -std::log((zn - atol) / out.w_z0) / (log.t[k] - t0));
    }
    if (!dropped && zn <= fit_drop * z0n && k > 0) dropped = true;
    if (!dropped && log.t[k] >= t0 + fit_skip) {
      fit_t.push_back(log.t[k]);
      fit_z.push_back(zn);
    }
  }
  out.pass = worst >= 0.0;
  out.worst_margin = worst;
  out.largest_lambda_v = std::isfinite(min_rate)
                             ? min_rate / spectral.lambda_min_q
                             : gains.lambda_v;
  auto [rate, r2] = fit_log_slope(fit_t, fit_z);
  out.fitted_rate = rate;
  out.fitted_r2 = r2;
  return out;
}

RhoModel rho_polynomial(const std::vector<double>& coeffs) {
  return RhoModel{[coeffs](double s) {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
      acc = acc * s + *it;
    }
    return acc;
  }};
}

StabilizingSetResult stabilizing_set_check(
    double w_z0, double k_min, double lambda_v,
    const graph::SpectralSummary& spectral,
    const std::optional<RhoModel>& rho) {
  StabilizingSetResult out;
  out.budget = (k_min - lambda_v) / spectral.lambda_max_h;
  if (!rho.has_value()) {
    out.verdict = SetVerdict::kRhoUnavailable;
    return out;
  }
  const double s_max = std::max(1.0, w_z0);
  double prev = rho->eval(0.0);
  for (int k = 1; k <= 256; ++k) {
    const double s = s_max * static_cast<double>(k) / 256.0;
    const double val = rho->eval(s);
    if (!std::isfinite(val) || val < prev) {
      throw ValidationError("stabilizing_set_check: rho model is not "
                            "non-decreasing on [0, max(1, W)]");
    }
    prev = val;
  }
  out.rho_at_w = rho->eval(w_z0);
  out.verdict =
      out.rho_at_w <= out.budget ? SetVerdict::kPass : SetVerdict::kFail;
  return out;
}

LyapunovTrace lyapunov_trace(const log::TrajectoryLog& log,
                             const PFunctionTrace& p_trace,
                             const graph::InteractionMatrix& im) {
  const int K = log.size();
  if (static_cast<int>(p_trace.t.size()) != K) {
    throw ValidationError("lyapunov_trace: P grid does not match the log");
  }
  LyapunovTrace out;
  out.t = log.t;
  out.v.resize(K);
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd r2 = log.r2.row(k).transpose();
    out.v[k] = 0.5 * (log.e.row(k).squaredNorm() + log.r1.row(k).squaredNorm() +
                      r2.dot(im.h * r2)) +
               p_trace.p[k];
  }
  int descents = 0;
  for (int k = 0; k + 1 < K; ++k) {
    if (out.v[k + 1] < out.v[k]) ++descents;
  }
  out.descent_fraction = K > 1 ? static_cast<double>(descents) / (K - 1) : 0.0;
  return out;
}

double descent_fraction_after(const LyapunovTrace& trace, double skip) {
  const int K = static_cast<int>(trace.t.size());
  if (K < 2) return 0.0;
  const double cutoff = trace.t.front() + skip;
  int total = 0, descents = 0;
  for (int k = 0; k + 1 < K; ++k) {
    if (trace.t[k] < cutoff) continue;
    ++total;
    if (trace.v[k + 1] < trace.v[k]) ++descents;
  }
  return total > 0 ? static_cast<double>(descents) / total : 0.0;
}

}  // namespace riseflock::analysis
