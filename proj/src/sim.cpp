#include "riseflock/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "riseflock/errors.hpp"

namespace riseflock::sim {

void ScenarioConfig::validate() const {
  topology.validate();
  gains.validate();
  bounds.validate();
  if (!(dt > 0.0)) {
    throw ValidationError("config: dt must be positive");
  }
  if (!(t_end >= dt)) {
    throw ValidationError("config: t_end must be at least dt");
  }
  if (log_stride < 1) {
    throw ValidationError("config: log_stride must be >= 1");
  }
  if (noise_sigma < 0.0) {
    throw ValidationError("config: noise_sigma must be non-negative");
  }
  if (!(init_pos_range > 0.0)) {
    throw ValidationError("config: init_pos_range must be positive");
  }
  if (model != "paper_sec6" && model != "custom") {
    throw ValidationError("config: model must be \"paper_sec6\" or \"custom\"");
  }
  if (model == "paper_sec6" && topology.state_dim != 3) {
    throw ValidationError("config: the paper_sec6 model requires n = 3");
  }
  if (model == "custom" && custom.n != topology.state_dim) {
    throw ValidationError("config: custom model dimension must match topology n");
  }
  const int n = topology.state_dim;
  const int N = topology.agent_count;
  if (target_q0.size() != 0 && target_q0.size() != n) {
    throw ValidationError("config: target_q0 has wrong dimension");
  }
  if (target_v0.size() != 0 && target_v0.size() != n) {
    throw ValidationError("config: target_v0 has wrong dimension");
  }
  if (init_positions &&
      (init_positions->rows() != N || init_positions->cols() != n)) {
    throw ValidationError("config: init_positions must be N x n");
  }
  if (init_velocities &&
      (init_velocities->rows() != N || init_velocities->cols() != n)) {
    throw ValidationError("config: init_velocities must be N x n");
  }
  if (c_params && (c_params->rows() != N || c_params->cols() != 12)) {
    throw ValidationError("config: pinned c matrix must be N x 12");
  }
  if (chi_mode != "trajectory" && chi_mode != "box_sampling") {
    throw ValidationError(
        "config: chi_mode must be \"trajectory\" or \"box_sampling\"");
  }
  if (!(chi_safety >= 1.0)) {
    throw ValidationError("config: chi_safety must be >= 1");
  }
  if (!(chi_horizon > 0.0)) {
    throw ValidationError("config: chi_horizon must be positive");
  }
  if (chi_samples < 1) {
    throw ValidationError("config: chi_samples must be >= 1");
  }
  if (!(metrics_window > 0.0)) {
    throw ValidationError("config: metrics_window must be positive");
  }
  if (!(metrics_threshold > 0.0)) {
    throw ValidationError("config: metrics_threshold must be positive");
  }
  if (envelope_atol < 0.0) {
    throw ValidationError("config: envelope_atol must be non-negative");
  }
}

std::unique_ptr<dynamics::DynamicsModel> make_model(const ScenarioConfig& cfg) {
  cfg.validate();
  const int N = cfg.topology.agent_count;
  if (cfg.model == "custom") {
    return std::make_unique<dynamics::CustomModel>(N, cfg.custom, cfg.bounds);
  }
  dynamics::ScenarioParams params;
  if (cfg.c_params) {
    params.c = *cfg.c_params;
  } else {
    params.c.resize(N, 12);
    for (int i = 0; i < N; ++i) {
      rng::CounterRng gen(cfg.seed,
                          rng::CounterRng::stream_id(i, rng::kModelParams));
      for (int j = 0; j < 12; ++j) {
        params.c(i, j) = gen.uniform(-0.5, 0.5);
      }
    }
  }
  return std::make_unique<dynamics::BenchmarkModel>(params, cfg.bounds);
}

struct Simulator::StepNoise {
  // One entry per agent; neighbor entries follow the sorted neighbor order.
  std::vector<std::vector<Eigen::VectorXd>> neigh_pos, neigh_vel;
  std::vector<Eigen::VectorXd> target_pos, target_vel;
};

struct Simulator::Derivative {
  Eigen::VectorXd x;  // packed [q0dot, f0, qdot, acc, nudot]
  Eigen::VectorXd u;  // stacked inputs at the evaluation instant
};

namespace {

int packed_size(int n, int N) { return 2 * n + 3 * n * N; }

}  // namespace

Simulator::Simulator(const ScenarioConfig& cfg,
                     const dynamics::DynamicsModel& model)
    : cfg_(cfg), model_(model), im_(graph::interaction_matrix(cfg.topology)) {
  cfg_.validate();
  const int N = cfg_.topology.agent_count;
  neighbors_.resize(N);
  for (const graph::Edge& e : cfg_.topology.edges) {
    neighbors_[e.i - 1].push_back({e.j - 1, e.weight});
    neighbors_[e.j - 1].push_back({e.i - 1, e.weight});
  }
  for (auto& nb : neighbors_) {
    std::sort(nb.begin(), nb.end());
  }
  for (int i = 0; i < N; ++i) {
    pos_noise_rng_.emplace_back(
        cfg_.seed, rng::CounterRng::stream_id(i, rng::kMeasurementPosition));
    vel_noise_rng_.emplace_back(
        cfg_.seed, rng::CounterRng::stream_id(i, rng::kMeasurementVelocity));
  }
  noise_ = std::make_unique<StepNoise>();
  noise_->neigh_pos.resize(N);
  noise_->neigh_vel.resize(N);
  noise_->target_pos.resize(N);
  noise_->target_vel.resize(N);
  const int n = cfg_.topology.state_dim;
  for (int i = 0; i < N; ++i) {
    noise_->neigh_pos[i].assign(neighbors_[i].size(), Eigen::VectorXd::Zero(n));
    noise_->neigh_vel[i].assign(neighbors_[i].size(), Eigen::VectorXd::Zero(n));
    noise_->target_pos[i] = Eigen::VectorXd::Zero(n);
    noise_->target_vel[i] = Eigen::VectorXd::Zero(n);
  }
  draw_noise();
}

void Simulator::draw_noise() {
  if (cfg_.noise_sigma == 0.0) return;  // measurements stay exact
  const int n = cfg_.topology.state_dim;
  const double sigma = cfg_.noise_sigma;
  for (int i = 0; i < cfg_.topology.agent_count; ++i) {
    auto& pos = pos_noise_rng_[i];
    auto& vel = vel_noise_rng_[i];
    for (std::size_t idx = 0; idx < neighbors_[i].size(); ++idx) {
      for (int a = 0; a < n; ++a) {
        noise_->neigh_pos[i][idx](a) = pos.normal(sigma);
        noise_->neigh_vel[i][idx](a) = vel.normal(sigma);
      }
    }
    if (cfg_.topology.pinning[i]) {
      for (int a = 0; a < n; ++a) {
        noise_->target_pos[i](a) = pos.normal(sigma);
        noise_->target_vel[i](a) = vel.normal(sigma);
      }
    }
  }
}

StateBundle Simulator::initial_state() const {
  const int n = cfg_.topology.state_dim;
  const int N = cfg_.topology.agent_count;
  StateBundle s;
  s.t = 0.0;
  s.target.q0 = cfg_.target_q0.size() ? cfg_.target_q0
                                      : Eigen::VectorXd::Zero(n);
  s.target.q0dot = cfg_.target_v0.size() ? cfg_.target_v0
                                         : Eigen::VectorXd::Zero(n);
  s.agents.resize(N);
  s.nu_hat.assign(N, Eigen::VectorXd::Zero(n));
  for (int i = 0; i < N; ++i) {
    if (cfg_.init_positions) {
      s.agents[i].q = cfg_.init_positions->row(i).transpose();
    } else {
      rng::CounterRng gen(cfg_.seed,
                          rng::CounterRng::stream_id(i, rng::kInitialPosition));
      s.agents[i].q.resize(n);
      for (int a = 0; a < n; ++a) {
        s.agents[i].q(a) = gen.uniform(-cfg_.init_pos_range,
                                       cfg_.init_pos_range);
      }
    }
    s.agents[i].qdot = cfg_.init_velocities
                           ? cfg_.init_velocities->row(i).transpose()
                           : Eigen::VectorXd::Zero(n);
  }
  return s;
}

void Simulator::derivative(const StateBundle& state, double t,
                           Derivative& out) const {
  const int n = cfg_.topology.state_dim;
  const int N = cfg_.topology.agent_count;
  out.x.resize(packed_size(n, N));
  out.x.segment(0, n) = state.target.q0dot;
  out.x.segment(n, n) = model_.f0(state.target.q0, state.target.q0dot, t);

  int u_total = 0;
  for (int i = 0; i < N; ++i) u_total += model_.input_dim(i);
  out.u.resize(u_total);

  int u_off = 0;
  for (int i = 0; i < N; ++i) {
    const dynamics::AgentState& self = state.agents[i];
    controller::LocalMeasurements meas;
    meas.state_dim = n;
    meas.pinned = cfg_.topology.pinning[i];
    for (std::size_t idx = 0; idx < neighbors_[i].size(); ++idx) {
      const auto& [j, w] = neighbors_[i][idx];
      meas.rel_pos[j] = state.agents[j].q - self.q + noise_->neigh_pos[i][idx];
      meas.rel_vel[j] =
          state.agents[j].qdot - self.qdot + noise_->neigh_vel[i][idx];
      meas.weights[j] = w;
    }
    if (meas.pinned) {
      meas.target_rel_pos = state.target.q0 - self.q + noise_->target_pos[i];
      meas.target_rel_vel =
          state.target.q0dot - self.qdot + noise_->target_vel[i];
    }

    const Eigen::MatrixXd g = model_.g(i, self.q, self.qdot, t);
    const int m = model_.input_dim(i);
    Eigen::VectorXd u;
    if (cfg_.force_zero_u) {
      u = Eigen::VectorXd::Zero(m);
    } else {
      Eigen::MatrixXd g_plus;
      try {
        g_plus = dynamics::right_pinv(g);
      } catch (const NumericError&) {
        throw NumericError(
            "simulator: control effectiveness singular for agent " +
            std::to_string(i) + " at t = " + std::to_string(t));
      }
      u = controller::rise_control(meas, {state.nu_hat[i]}, cfg_.gains,
                                   g_plus);
    }
    out.u.segment(u_off, m) = u;
    u_off += m;

    out.x.segment(2 * n + i * n, n) = self.qdot;
    out.x.segment(2 * n + (N + i) * n, n) =
        model_.f(i, self.q, self.qdot, t) + g * u + model_.d(i, t);
    out.x.segment(2 * n + (2 * N + i) * n, n) =
        controller::nuhat_rate(meas, cfg_.gains);
  }
}

namespace {

Eigen::VectorXd pack(const StateBundle& s, int n, int N) {
  Eigen::VectorXd x(packed_size(n, N));
  x.segment(0, n) = s.target.q0;
  x.segment(n, n) = s.target.q0dot;
  for (int i = 0; i < N; ++i) {
    x.segment(2 * n + i * n, n) = s.agents[i].q;
    x.segment(2 * n + (N + i) * n, n) = s.agents[i].qdot;
    x.segment(2 * n + (2 * N + i) * n, n) = s.nu_hat[i];
  }
  return x;
}

void unpack(const Eigen::VectorXd& x, StateBundle& s, int n, int N) {
  s.target.q0 = x.segment(0, n);
  s.target.q0dot = x.segment(n, n);
  for (int i = 0; i < N; ++i) {
    s.agents[i].q = x.segment(2 * n + i * n, n);
    s.agents[i].qdot = x.segment(2 * n + (N + i) * n, n);
    s.nu_hat[i] = x.segment(2 * n + (2 * N + i) * n, n);
  }
}

}  // namespace

void Simulator::step(StateBundle& state, double dt) {
  const int n = cfg_.topology.state_dim;
  const int N = cfg_.topology.agent_count;
  const double t = state.t;

  Derivative d1, d2, d3, d4;
  derivative(state, t, d1);

  StateBundle stage = state;
  const Eigen::VectorXd x0 = pack(state, n, N);

  unpack(x0 + 0.5 * dt * d1.x, stage, n, N);
  derivative(stage, t + 0.5 * dt, d2);

  unpack(x0 + 0.5 * dt * d2.x, stage, n, N);
  derivative(stage, t + 0.5 * dt, d3);

  unpack(x0 + dt * d3.x, stage, n, N);
  derivative(stage, t + dt, d4);

  unpack(x0 + (dt / 6.0) * (d1.x + 2.0 * d2.x + 2.0 * d3.x + d4.x), state, n,
         N);
  state.t = t + dt;

  if (!state.target.q0.allFinite() || !state.target.q0dot.allFinite()) {
    throw DivergenceError("simulator: target state non-finite at t = " +
                              std::to_string(state.t),
                          -1, state.t);
  }
  for (int i = 0; i < N; ++i) {
    if (!state.agents[i].q.allFinite() || !state.agents[i].qdot.allFinite() ||
        !state.nu_hat[i].allFinite()) {
      throw DivergenceError("simulator: agent " + std::to_string(i) +
                                " state non-finite at t = " +
                                std::to_string(state.t),
                            i, state.t);
    }
  }

  draw_noise();
}

Simulator::Evaluation Simulator::evaluate(const StateBundle& state) {
  const int n = cfg_.topology.state_dim;
  const int N = cfg_.topology.agent_count;
  Derivative d;
  derivative(state, state.t, d);

  Evaluation ev;
  ev.u = d.u;
  ev.target_acc = d.x.segment(n, n);
  ev.agent_acc = d.x.segment(2 * n + N * n, n * N);

  // True neighborhood errors, free of measurement noise.
  ev.eta.resize(n * N);
  for (int i = 0; i < N; ++i) {
    controller::LocalMeasurements meas;
    meas.state_dim = n;
    meas.pinned = cfg_.topology.pinning[i];
    for (const auto& [j, w] : neighbors_[i]) {
      meas.rel_pos[j] = state.agents[j].q - state.agents[i].q;
      meas.rel_vel[j] = state.agents[j].qdot - state.agents[i].qdot;
      meas.weights[j] = w;
    }
    if (meas.pinned) {
      meas.target_rel_pos = state.target.q0 - state.agents[i].q;
      meas.target_rel_vel = state.target.q0dot - state.agents[i].qdot;
    }
    ev.eta.segment(i * n, n) = controller::neighborhood_error(meas);
  }
  return ev;
}

RunResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  auto model = make_model(cfg);
  Simulator sim(cfg, *model);

  const int n = cfg.topology.state_dim;
  const int N = cfg.topology.agent_count;
  const int steps = static_cast<int>(std::llround(cfg.t_end / cfg.dt));
  const int rows = steps / cfg.log_stride + 1;

  RunResult result;
  log::TrajectoryLog& lg = result.log;
  lg.agent_count = N;
  lg.state_dim = n;
  lg.dt_log = cfg.dt * cfg.log_stride;
  int u_total = 0;
  for (int i = 0; i < N; ++i) {
    lg.input_dims.push_back(model->input_dim(i));
    u_total += model->input_dim(i);
  }
  lg.t.reserve(rows);
  lg.target_q.resize(rows, n);
  lg.target_qdot.resize(rows, n);
  lg.target_qddot.resize(rows, n);
  lg.agent_q.resize(rows, n * N);
  lg.agent_qdot.resize(rows, n * N);
  lg.agent_qddot.resize(rows, n * N);
  lg.u.resize(rows, u_total);
  lg.nu_hat.resize(rows, n * N);
  lg.e.resize(rows, n * N);
  lg.r1.resize(rows, n * N);
  lg.r2.resize(rows, n * N);
  lg.eta.resize(rows, n * N);

  StateBundle state = sim.initial_state();

  auto log_row = [&](int row) {
    Simulator::Evaluation ev = sim.evaluate(state);
    lg.t.push_back(state.t);
    lg.target_q.row(row) = state.target.q0.transpose();
    lg.target_qdot.row(row) = state.target.q0dot.transpose();
    lg.target_qddot.row(row) = ev.target_acc.transpose();
    for (int i = 0; i < N; ++i) {
      lg.agent_q.row(row).segment(i * n, n) = state.agents[i].q.transpose();
      lg.agent_qdot.row(row).segment(i * n, n) =
          state.agents[i].qdot.transpose();
      lg.nu_hat.row(row).segment(i * n, n) = state.nu_hat[i].transpose();
    }
    lg.agent_qddot.row(row) = ev.agent_acc.transpose();
    lg.u.row(row) = ev.u.transpose();
    lg.eta.row(row) = ev.eta.transpose();

    for (int i = 0; i < N; ++i) {
      lg.e.row(row).segment(i * n, n) =
          (state.target.q0 - state.agents[i].q).transpose();
      lg.r1.row(row).segment(i * n, n) =
          (state.target.q0dot - state.agents[i].qdot +
           cfg.gains.k1 * (state.target.q0 - state.agents[i].q))
              .transpose();
    }
    const Eigen::RowVectorXd edot =
        lg.r1.row(row) - cfg.gains.k1 * lg.e.row(row);
    Eigen::RowVectorXd eddot(n * N);
    for (int i = 0; i < N; ++i) {
      eddot.segment(i * n, n) =
          (ev.target_acc - ev.agent_acc.segment(i * n, n)).transpose();
    }
    lg.r2.row(row) = eddot + cfg.gains.k1 * edot +
                     cfg.gains.k2 * lg.r1.row(row) + lg.e.row(row);
  };

  int row = 0;
  for (int k = 0; k <= steps; ++k) {
    if (k % cfg.log_stride == 0) {
      log_row(row);
      ++row;
    }
    if (k == steps) break;
    try {
      sim.step(state, cfg.dt);
    } catch (const DivergenceError& err) {
      result.divergence = DivergenceInfo{err.agent(), err.time(), err.what()};
      break;
    }
  }

  if (row < rows) {
    lg.target_q.conservativeResize(row, Eigen::NoChange);
    lg.target_qdot.conservativeResize(row, Eigen::NoChange);
    lg.target_qddot.conservativeResize(row, Eigen::NoChange);
    lg.agent_q.conservativeResize(row, Eigen::NoChange);
    lg.agent_qdot.conservativeResize(row, Eigen::NoChange);
    lg.agent_qddot.conservativeResize(row, Eigen::NoChange);
    lg.u.conservativeResize(row, Eigen::NoChange);
    lg.nu_hat.conservativeResize(row, Eigen::NoChange);
    lg.e.conservativeResize(row, Eigen::NoChange);
    lg.r1.conservativeResize(row, Eigen::NoChange);
    lg.r2.conservativeResize(row, Eigen::NoChange);
    lg.eta.conservativeResize(row, Eigen::NoChange);
  }

  if (lg.size() > 0) {
    const double window =
        std::min({cfg.metrics_window, cfg.t_end, lg.t.back()});
    result.metrics = compute_metrics(lg, window, cfg.metrics_threshold);
  }
  return result;
}

Metrics compute_metrics(const log::TrajectoryLog& log, double window,
                        double threshold) {
  const int K = log.size();
  if (K == 0) {
    throw ValidationError("compute_metrics: empty log");
  }
  if (window < log.t.front() - 1e-12 || window > log.t.back() + 1e-9) {
    throw ValidationError("compute_metrics: window outside the logged range");
  }
  const int n = log.state_dim;
  const int N = log.agent_count;

  Metrics m;
  double acc = 0.0;
  int count = 0;
  for (int k = 0; k < K; ++k) {
    if (log.t[k] > window + 1e-12) break;
    for (int i = 0; i < N; ++i) {
      acc += log.e.row(k).segment(i * n, n).norm();
      ++count;
    }
  }
  m.cumulative_rms_e = count > 0 ? acc / count : 0.0;

  int last_exceed = -1;
  for (int k = 0; k < K; ++k) {
    double worst = 0.0;
    for (int i = 0; i < N; ++i) {
      worst = std::max(worst, log.e.row(k).segment(i * n, n).norm());
    }
    if (worst > threshold) last_exceed = k;
  }
  if (last_exceed < 0) {
    m.convergence_time = log.t.front();
  } else if (last_exceed + 1 < K) {
    m.convergence_time = log.t[last_exceed + 1];
  }  // else: never settles within the log

  for (int k = 0; k < K; ++k) {
    m.max_u_norm = std::max(m.max_u_norm, log.u.row(k).norm());
  }
  for (int i = 0; i < N; ++i) {
    m.final_e_norms.push_back(log.e.row(K - 1).segment(i * n, n).norm());
  }
  return m;
}

SweepResult seed_sweep(const ScenarioConfig& cfg,
                       const std::vector<std::uint64_t>& seeds,
                       int max_threads) {
  if (seeds.empty()) {
    throw ValidationError("seed_sweep: need at least one seed");
  }
  SweepResult result;
  result.runs.resize(seeds.size());

  int workers = max_threads > 0
                    ? max_threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers,
                                      static_cast<int>(seeds.size())));

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= seeds.size()) return;
      ScenarioConfig run_cfg = cfg;
      run_cfg.seed = seeds[idx];
      RunResult rr = run_scenario(run_cfg);
      result.runs[idx] =
          SeedOutcome{seeds[idx], rr.metrics, rr.divergence.has_value()};
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  std::vector<double> rms;
  int converged = 0;
  for (const SeedOutcome& run : result.runs) {
    if (run.diverged) continue;
    rms.push_back(run.metrics.cumulative_rms_e);
    if (run.metrics.convergence_time && *run.metrics.convergence_time <= 3.0) {
      ++converged;
    }
  }
  result.aggregate.fraction_converged_by_3s =
      static_cast<double>(converged) / static_cast<double>(seeds.size());
  if (!rms.empty()) {
    std::sort(rms.begin(), rms.end());
    result.aggregate.min_rms = rms.front();
    result.aggregate.max_rms = rms.back();
    const std::size_t mid = rms.size() / 2;
    result.aggregate.median_rms = rms.size() % 2 == 1
                                      ? rms[mid]
                                      : 0.5 * (rms[mid - 1] + rms[mid]);
  }
  return result;
}

}  // namespace riseflock::sim
