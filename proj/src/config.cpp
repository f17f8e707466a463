#include "riseflock/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "riseflock/errors.hpp"

namespace riseflock::config {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::string& where,
                  const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) {
      throw ValidationError("config: unknown key \"" + where + key + "\"");
    }
  }
}

double get_num(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) {
    throw ValidationError("config: key \"" + key + "\" must be a number");
  }
  return j[key].get<double>();
}

Eigen::VectorXd get_vec(const json& j, const std::string& key) {
  if (!j.contains(key)) return {};
  const json& arr = j[key];
  if (!arr.is_array()) {
    throw ValidationError("config: key \"" + key + "\" must be an array");
  }
  Eigen::VectorXd v(arr.size());
  for (std::size_t k = 0; k < arr.size(); ++k) {
    if (!arr[k].is_number()) {
      throw ValidationError("config: key \"" + key +
                            "\" must contain numbers");
    }
    v(k) = arr[k].get<double>();
  }
  return v;
}

Eigen::MatrixXd get_mat(const json& arr, const std::string& key) {
  if (!arr.is_array() || arr.empty() || !arr[0].is_array()) {
    throw ValidationError("config: key \"" + key +
                          "\" must be an array of arrays");
  }
  const std::size_t cols = arr[0].size();
  Eigen::MatrixXd m(arr.size(), cols);
  for (std::size_t r = 0; r < arr.size(); ++r) {
    if (!arr[r].is_array() || arr[r].size() != cols) {
      throw ValidationError("config: key \"" + key +
                            "\" rows have inconsistent lengths");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(r, c) = arr[r][c].get<double>();
    }
  }
  return m;
}

graph::GraphTopology topology_from_json(const json& j) {
  require_keys(j, "topology.", {"N", "n", "edges", "pinning"});
  graph::GraphTopology topo;
  if (!j.contains("N") || !j.contains("pinning")) {
    throw ValidationError("config: topology needs \"N\" and \"pinning\"");
  }
  topo.agent_count = j["N"].get<int>();
  topo.state_dim = j.contains("n") ? j["n"].get<int>() : 1;
  for (const auto& b : j["pinning"]) {
    topo.pinning.push_back(b.get<int>());
  }
  if (j.contains("edges")) {
    for (const auto& e : j["edges"]) {
      if (!e.is_array() || e.size() < 2 || e.size() > 3) {
        throw ValidationError(
            "config: topology edges must be [i, j] or [i, j, w]");
      }
      graph::Edge edge;
      edge.i = e[0].get<int>();
      edge.j = e[1].get<int>();
      edge.weight = e.size() == 3 ? e[2].get<double>() : 1.0;
      topo.edges.push_back(edge);
    }
  }
  return topo;
}

}  // namespace

sim::ScenarioConfig from_json(const json& j) {
  require_keys(j, "",
               {"schema", "topology", "model", "model_params", "bounds",
                "gains", "t_end", "dt", "log_stride", "noise_sigma", "seed",
                "init_pos_range", "target_q0", "target_v0", "init_positions",
                "init_velocities", "force_zero_u", "chi_mode", "chi_safety",
                "chi_horizon", "chi_samples", "envelope_atol", "rho_coeffs",
                "metrics_window", "metrics_threshold"});
  if (!j.contains("schema") || j["schema"].get<int>() != 1) {
    throw ValidationError("config: expected \"schema\": 1");
  }
  if (!j.contains("topology")) {
    throw ValidationError("config: missing \"topology\"");
  }

  sim::ScenarioConfig cfg;
  cfg.topology = topology_from_json(j["topology"]);
  cfg.model = j.value("model", std::string("paper_sec6"));

  if (j.contains("model_params")) {
    const json& mp = j["model_params"];
    if (cfg.model == "paper_sec6") {
      require_keys(mp, "model_params.", {"c"});
      if (mp.contains("c")) {
        cfg.c_params = get_mat(mp["c"], "model_params.c");
      }
    } else {
      require_keys(mp, "model_params.",
                   {"f_linear_pos", "f_linear_vel", "d_amp", "d_freq",
                    "d_phase", "g_diag", "f0_mode"});
      cfg.custom.n = cfg.topology.state_dim;
      if (mp.contains("f_linear_pos")) {
        cfg.custom.f_linear_pos =
            get_mat(mp["f_linear_pos"], "model_params.f_linear_pos");
      }
      if (mp.contains("f_linear_vel")) {
        cfg.custom.f_linear_vel =
            get_mat(mp["f_linear_vel"], "model_params.f_linear_vel");
      }
      cfg.custom.d_amp = get_vec(mp, "d_amp");
      cfg.custom.d_freq = get_vec(mp, "d_freq");
      cfg.custom.d_phase = get_vec(mp, "d_phase");
      cfg.custom.g_diag = get_vec(mp, "g_diag");
      cfg.custom.f0_mode = mp.value("f0_mode", std::string("zero"));
    }
  } else if (cfg.model == "custom") {
    cfg.custom.n = cfg.topology.state_dim;
  }

  if (j.contains("bounds")) {
    const json& b = j["bounds"];
    require_keys(b, "bounds.",
                 {"d_bar", "ddot_bar", "dddot_bar", "q0_bar", "q0dot_bar",
                  "q0ddot_bar", "q0dddot_bar"});
    cfg.bounds.d_bar = get_num(b, "d_bar", cfg.bounds.d_bar);
    cfg.bounds.ddot_bar = get_num(b, "ddot_bar", cfg.bounds.ddot_bar);
    cfg.bounds.dddot_bar = get_num(b, "dddot_bar", cfg.bounds.dddot_bar);
    cfg.bounds.q0_bar = get_num(b, "q0_bar", cfg.bounds.q0_bar);
    cfg.bounds.q0dot_bar = get_num(b, "q0dot_bar", cfg.bounds.q0dot_bar);
    cfg.bounds.q0ddot_bar = get_num(b, "q0ddot_bar", cfg.bounds.q0ddot_bar);
    cfg.bounds.q0dddot_bar = get_num(b, "q0dddot_bar", cfg.bounds.q0dddot_bar);
  }

  if (!j.contains("gains")) {
    throw ValidationError("config: missing \"gains\"");
  }
  const json& g = j["gains"];
  require_keys(g, "gains.", {"k1", "k2", "k3", "k4", "lambda_P", "lambda_V"});
  cfg.gains.k1 = get_num(g, "k1", 0.0);
  cfg.gains.k2 = get_num(g, "k2", 0.0);
  cfg.gains.k3 = get_num(g, "k3", 0.0);
  cfg.gains.k4 = get_num(g, "k4", 0.0);
  cfg.gains.lambda_p = get_num(g, "lambda_P", 0.0);
  cfg.gains.lambda_v = get_num(g, "lambda_V", 0.0);

  cfg.t_end = get_num(j, "t_end", cfg.t_end);
  cfg.dt = get_num(j, "dt", cfg.dt);
  if (j.contains("log_stride")) cfg.log_stride = j["log_stride"].get<int>();
  cfg.noise_sigma = get_num(j, "noise_sigma", cfg.noise_sigma);
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.init_pos_range = get_num(j, "init_pos_range", cfg.init_pos_range);
  cfg.target_q0 = get_vec(j, "target_q0");
  cfg.target_v0 = get_vec(j, "target_v0");
  if (j.contains("init_positions")) {
    cfg.init_positions = get_mat(j["init_positions"], "init_positions");
  }
  if (j.contains("init_velocities")) {
    cfg.init_velocities = get_mat(j["init_velocities"], "init_velocities");
  }
  if (j.contains("force_zero_u")) {
    cfg.force_zero_u = j["force_zero_u"].get<bool>();
  }
  cfg.chi_mode = j.value("chi_mode", cfg.chi_mode);
  cfg.chi_safety = get_num(j, "chi_safety", cfg.chi_safety);
  cfg.chi_horizon = get_num(j, "chi_horizon", cfg.chi_horizon);
  if (j.contains("chi_samples")) cfg.chi_samples = j["chi_samples"].get<int>();
  cfg.envelope_atol = get_num(j, "envelope_atol", cfg.envelope_atol);
  if (j.contains("rho_coeffs")) {
    std::vector<double> coeffs;
    for (const auto& c : j["rho_coeffs"]) coeffs.push_back(c.get<double>());
    cfg.rho_coeffs = coeffs;
  }
  cfg.metrics_window = get_num(j, "metrics_window", cfg.metrics_window);
  cfg.metrics_threshold =
      get_num(j, "metrics_threshold", cfg.metrics_threshold);

  cfg.validate();
  return cfg;
}

namespace {

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("config: cannot open " + path);
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& err) {
    throw ValidationError("config: " + path + " is not valid JSON: " +
                          err.what());
  }
}

}  // namespace

sim::ScenarioConfig load_scenario(const std::string& path) {
  return from_json(parse_file(path));
}

void apply_overrides(json& j, const std::vector<std::string>& overrides) {
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError("override must look like key.path=value: " + ov);
    }
    const std::string path = ov.substr(0, eq);
    const std::string text = ov.substr(eq + 1);

    json* node = &j;
    std::size_t start = 0;
    std::vector<std::string> parts;
    while (true) {
      const auto dot = path.find('.', start);
      parts.push_back(path.substr(start, dot - start));
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    for (std::size_t d = 0; d + 1 < parts.size(); ++d) {
      if (!node->is_object() || !node->contains(parts[d])) {
        throw ValidationError("override references missing key \"" + path +
                              "\"");
      }
      node = &(*node)[parts[d]];
    }
    if (!node->is_object() || !node->contains(parts.back())) {
      throw ValidationError("override references missing key \"" + path +
                            "\"");
    }
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;  // bare strings stay strings
    }
    (*node)[parts.back()] = value;
  }
}

sim::ScenarioConfig load_scenario(const std::string& path,
                                  const std::vector<std::string>& overrides) {
  json j = parse_file(path);
  apply_overrides(j, overrides);
  return from_json(j);
}

json metrics_to_json(const sim::Metrics& metrics) {
  json j;
  j["cumulative_rms_e"] = metrics.cumulative_rms_e;
  if (metrics.convergence_time) {
    j["convergence_time_005"] = *metrics.convergence_time;
  } else {
    j["convergence_time_005"] = nullptr;
  }
  j["max_u_norm"] = metrics.max_u_norm;
  j["final_e_norms"] = metrics.final_e_norms;
  return j;
}

json sweep_to_json(const sim::SweepResult& sweep) {
  json runs = json::array();
  for (const auto& run : sweep.runs) {
    json r;
    r["seed"] = run.seed;
    r["diverged"] = run.diverged;
    r["metrics"] = metrics_to_json(run.metrics);
    runs.push_back(r);
  }
  json j;
  j["runs"] = runs;
  j["aggregate"] = {
      {"fraction_converged_by_3s", sweep.aggregate.fraction_converged_by_3s},
      {"median_rms", sweep.aggregate.median_rms},
      {"min_rms", sweep.aggregate.min_rms},
      {"max_rms", sweep.aggregate.max_rms},
  };
  return j;
}

namespace {

json verdict_to_json(const analysis::GainVerdict& v) {
  return {{"pass", v.pass}, {"value", v.value}, {"threshold", v.threshold}};
}

}  // namespace

json certificate_to_json(const analysis::CertificateReport& report) {
  json j;
  j["spectral"] = {
      {"lambda_min_H", report.spectral.lambda_min_h},
      {"lambda_max_H", report.spectral.lambda_max_h},
      {"lambda_min_BmI", report.spectral.lambda_min_bmi},
      {"lambda_max_BmI", report.spectral.lambda_max_bmi},
      {"lambda_max_ImH2", report.spectral.lambda_max_imh2},
      {"lambda_min_Q", report.spectral.lambda_min_q},
      {"lambda_max_Q", report.spectral.lambda_max_q},
      {"norm1_H", report.spectral.norm1_h},
  };
  j["k_min"] = report.k_min;
  j["gain_conditions"] = {
      {"k1", verdict_to_json(report.gains.k1)},
      {"k2", verdict_to_json(report.gains.k2)},
      {"k3", verdict_to_json(report.gains.k3)},
      {"k4", verdict_to_json(report.gains.k4)},
      {"all_pass", report.gains.all_pass()},
  };
  j["chi1"] = report.chi1;
  j["chi2"] = report.chi2;
  j["chi_mode"] = report.chi_mode;
  j["chi_safety"] = report.chi_safety;
  j["W_z0"] = report.envelope.w_z0;
  j["envelope"] = {
      {"rate_used", report.envelope.rate_used},
      {"theorem_rate", report.envelope.theorem_rate},
      {"pass", report.envelope.pass},
      {"worst_margin", report.envelope.worst_margin},
      {"largest_lambda_V", report.envelope.largest_lambda_v},
      {"fitted_rate", report.envelope.fitted_rate},
      {"fitted_r2", report.envelope.fitted_r2},
      {"atol", report.envelope.atol},
  };
  j["lyapunov_descent_fraction"] = report.lyapunov_descent_fraction;
  j["lyapunov_descent_fraction_after_0p1s"] =
      report.lyapunov_descent_fraction_after_0p1s;
  const char* verdict = "rho unavailable";
  if (report.stabilizing_set.verdict == analysis::SetVerdict::kPass) {
    verdict = "pass";
  } else if (report.stabilizing_set.verdict == analysis::SetVerdict::kFail) {
    verdict = "fail";
  }
  j["stabilizing_set"] = {
      {"verdict", verdict},
      {"rho_budget", report.stabilizing_set.budget},
      {"rho_at_W", report.stabilizing_set.rho_at_w},
  };
  j["lambda_V"] = report.lambda_v;
  j["h_tilde_sup"] = report.h_tilde_sup;
  return j;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot open " + path + " for writing");
  }
  out << j.dump(2) << '\n';
}

}  // namespace riseflock::config
