#include "riseflock/certify.hpp"

#include <algorithm>
#include <tuple>

#include "riseflock/errors.hpp"

namespace riseflock::certify {

CertifiedTraces build_certificate(const sim::ScenarioConfig& cfg,
                                  const dynamics::DynamicsModel& model,
                                  const log::TrajectoryLog& log,
                                  const graph::InteractionMatrix& im) {
  CertifiedTraces out;
  const graph::SpectralSummary spectral = graph::spectral_summary(im);

  out.signals = analysis::h_b_trace(model, log);
  double chi1 = 0.0, chi2 = 0.0;
  if (cfg.chi_mode == "box_sampling") {
    std::tie(chi1, chi2) = analysis::chi_box_sampling(
        model, cfg.chi_samples, cfg.chi_safety, cfg.seed, cfg.t_end);
    out.signals.chi1 = chi1;
    out.signals.chi2 = chi2;
  } else {
    std::tie(chi1, chi2) = analysis::chi_estimates(out.signals, cfg.chi_safety);
  }

  out.p = analysis::p_function_trace(log, out.signals, im, cfg.gains);
  out.lyapunov = analysis::lyapunov_trace(log, out.p, im);

  analysis::CertificateReport& rep = out.report;
  rep.spectral = spectral;
  rep.k_min = analysis::k_min_value(spectral, cfg.gains);
  rep.gains = analysis::gain_conditions(spectral, cfg.gains, chi1, chi2);
  rep.chi1 = chi1;
  rep.chi2 = chi2;
  rep.chi_mode = cfg.chi_mode;
  rep.chi_safety = cfg.chi_safety;
  rep.envelope = analysis::w_envelope(log, spectral, cfg.gains, chi1,
                                      cfg.envelope_atol);
  rep.lyapunov_descent_fraction = out.lyapunov.descent_fraction;
  rep.lyapunov_descent_fraction_after_0p1s =
      analysis::descent_fraction_after(out.lyapunov, 0.1);
  std::optional<analysis::RhoModel> rho;
  if (cfg.rho_coeffs) {
    rho = analysis::rho_polynomial(*cfg.rho_coeffs);
  }
  rep.stabilizing_set = analysis::stabilizing_set_check(
      rep.envelope.w_z0, rep.k_min, cfg.gains.lambda_v, spectral, rho);
  rep.lambda_v = cfg.gains.lambda_v;
  rep.h_tilde_sup = out.signals.h_tilde.rowwise().norm().maxCoeff();
  return out;
}

CertifiedTraces certify_gains(const sim::ScenarioConfig& cfg) {
  cfg.validate();
  sim::ScenarioConfig probe = cfg;
  probe.t_end = cfg.chi_horizon;
  probe.noise_sigma = 0.0;
  probe.log_stride = 1;
  probe.metrics_window = std::min(cfg.metrics_window, probe.t_end);

  sim::RunResult run = sim::run_scenario(probe);
  if (run.divergence) {
    throw NumericError("certify: probe run diverged at t = " +
                       std::to_string(run.divergence->time));
  }
  auto model = sim::make_model(probe);
  const graph::InteractionMatrix im = graph::interaction_matrix(probe.topology);
  return build_certificate(probe, *model, run.log, im);
}

}  // namespace riseflock::certify
