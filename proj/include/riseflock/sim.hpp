#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riseflock/controller.hpp"
#include "riseflock/dynamics.hpp"
#include "riseflock/graph.hpp"
#include "riseflock/log.hpp"
#include "riseflock/rng.hpp"

namespace riseflock::sim {

/// Full description of one closed-loop experiment. Serialized as the JSON
/// scenario config (see config.hpp).
struct ScenarioConfig {
  graph::GraphTopology topology;
  std::string model = "paper_sec6";  // "paper_sec6" | "custom"
  std::optional<Eigen::MatrixXd> c_params;  // pinned N x 12 coefficients
  dynamics::CustomParams custom;
  dynamics::Bounds bounds;
  controller::ControllerGains gains;

  double t_end = 30.0;
  double dt = 1e-3;
  int log_stride = 1;
  double noise_sigma = 0.0;  // measurement noise, m and m/s
  std::uint64_t seed = 0;
  double init_pos_range = 10.0;  // positions sampled from U(-range, range)^n
  Eigen::VectorXd target_q0;     // defaults to the origin
  Eigen::VectorXd target_v0;     // defaults to zero
  std::optional<Eigen::MatrixXd> init_positions;   // N x n override
  std::optional<Eigen::MatrixXd> init_velocities;  // N x n override
  bool force_zero_u = false;  // diagnostic: integrate with u = 0

  std::string chi_mode = "trajectory";  // "trajectory" | "box_sampling"
  double chi_safety = 1.5;
  double chi_horizon = 2.5;  // certify-run length, s
  int chi_samples = 100000;
  double envelope_atol = 0.0;
  std::optional<std::vector<double>> rho_coeffs;
  double metrics_window = 2.5;
  double metrics_threshold = 0.05;

  void validate() const;
};

/// Instantiates the scenario's dynamics; benchmark coefficients are sampled
/// from the config seed unless pinned.
std::unique_ptr<dynamics::DynamicsModel> make_model(const ScenarioConfig& cfg);

struct Metrics {
  double cumulative_rms_e = 0.0;               // m, over the metrics window
  std::optional<double> convergence_time;      // s, "stays below" definition
  double max_u_norm = 0.0;
  std::vector<double> final_e_norms;
};

struct DivergenceInfo {
  int agent = -1;
  double time = 0.0;
  std::string message;
};

struct RunResult {
  log::TrajectoryLog log;
  Metrics metrics;
  std::optional<DivergenceInfo> divergence;
};

/// Truth state advanced by the integrator.
struct StateBundle {
  double t = 0.0;
  dynamics::TargetState target;
  std::vector<dynamics::AgentState> agents;
  std::vector<Eigen::VectorXd> nu_hat;
};

/// Fixed-step closed-loop integrator. One classical Runge-Kutta stage
/// recomputes every controller from stage-local measurements; measurement
/// noise is drawn once per step and held across the four stages.
class Simulator {
 public:
  Simulator(const ScenarioConfig& cfg, const dynamics::DynamicsModel& model);

  StateBundle initial_state() const;

  /// Advances the bundle by one step of length dt. Throws DivergenceError
  /// on a non-finite result.
  void step(StateBundle& state, double dt);

  /// Control inputs and true accelerations at the bundle's instant, using
  /// the current step's noise draw. Used by the logger.
  struct Evaluation {
    Eigen::VectorXd u;            // stacked inputs
    Eigen::VectorXd agent_acc;    // stacked nN
    Eigen::VectorXd target_acc;   // n
    Eigen::VectorXd eta;          // stacked true neighborhood errors
  };
  Evaluation evaluate(const StateBundle& state);

  const graph::InteractionMatrix& interaction() const { return im_; }

 private:
  struct StepNoise;
  struct Derivative;

  void draw_noise();
  void derivative(const StateBundle& state, double t, Derivative& out) const;

  const ScenarioConfig& cfg_;
  const dynamics::DynamicsModel& model_;
  graph::InteractionMatrix im_;
  std::vector<std::vector<std::pair<int, double>>> neighbors_;  // j, a_ij
  std::vector<rng::CounterRng> pos_noise_rng_, vel_noise_rng_;
  std::unique_ptr<StepNoise> noise_;
};

/// Runs the configured scenario to t_end. A divergence is reported in the
/// result together with the partial log rather than thrown.
RunResult run_scenario(const ScenarioConfig& cfg);

Metrics compute_metrics(const log::TrajectoryLog& log, double window,
                        double threshold);

struct SeedOutcome {
  std::uint64_t seed = 0;
  Metrics metrics;
  bool diverged = false;
};

struct SweepAggregate {
  double fraction_converged_by_3s = 0.0;
  double median_rms = 0.0;
  double min_rms = 0.0;
  double max_rms = 0.0;
};

struct SweepResult {
  std::vector<SeedOutcome> runs;
  SweepAggregate aggregate;
};

/// Independent runs, one per seed; parallel up to max_threads workers.
SweepResult seed_sweep(const ScenarioConfig& cfg,
                       const std::vector<std::uint64_t>& seeds,
                       int max_threads = 0);

}  // namespace riseflock::sim
