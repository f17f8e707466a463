#pragma once

#include "riseflock/analysis.hpp"
#include "riseflock/sim.hpp"

namespace riseflock::certify {

struct CertifiedTraces {
  analysis::DisturbanceSignals signals;
  analysis::PFunctionTrace p;
  analysis::LyapunovTrace lyapunov;
  analysis::CertificateReport report;
};

/// Full certificate for a completed run: disturbance stacks, chi estimates
/// (per the config's chi_mode), P and V traces, gain verdicts, k_min,
/// W(z0), envelope check, and the stabilizing-set budget.
CertifiedTraces build_certificate(const sim::ScenarioConfig& cfg,
                                  const dynamics::DynamicsModel& model,
                                  const log::TrajectoryLog& log,
                                  const graph::InteractionMatrix& im);

/// The gain-checking flow: a short noise-free run over cfg.chi_horizon
/// estimates chi, then every verdict is evaluated. The returned report's
/// traces come from that short run.
CertifiedTraces certify_gains(const sim::ScenarioConfig& cfg);

}  // namespace riseflock::certify
