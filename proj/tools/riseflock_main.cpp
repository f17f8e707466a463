#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "riseflock/certify.hpp"
#include "riseflock/config.hpp"
#include "riseflock/errors.hpp"
#include "riseflock/log.hpp"
#include "riseflock/svg.hpp"

namespace {

namespace fs = std::filesystem;
using riseflock::ValidationError;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitCertificateFail = 3;

int thread_cap() {
  const char* env = std::getenv("RISE_FLOCK_THREADS");
  if (!env) return 0;
  const int v = std::atoi(env);
  return v > 0 ? v : 1;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::vector<std::string>& overrides) {
  auto cfg = riseflock::config::load_scenario(config_path, overrides);
  fs::create_directories(out_dir);

  riseflock::sim::RunResult result = riseflock::sim::run_scenario(cfg);
  riseflock::config::write_json((fs::path(out_dir) / "metrics.json").string(),
                                riseflock::config::metrics_to_json(result.metrics));

  std::vector<double> p_trace, v_trace;
  if (result.log.size() >= 3) {
    auto model = riseflock::sim::make_model(cfg);
    const auto im = riseflock::graph::interaction_matrix(cfg.topology);
    auto traces =
        riseflock::certify::build_certificate(cfg, *model, result.log, im);
    p_trace = traces.p.p;
    v_trace = traces.lyapunov.v;
    riseflock::config::write_json(
        (fs::path(out_dir) / "certificate.json").string(),
        riseflock::config::certificate_to_json(traces.report));
  }
  riseflock::log::write_trajectory_csv(
      (fs::path(out_dir) / "trajectory.csv").string(), result.log, p_trace,
      v_trace);

  if (result.divergence) {
    std::cerr << "run diverged: " << result.divergence->message << "\n";
    return kExitDivergence;
  }
  std::cout << "wrote trajectory.csv, metrics.json, certificate.json to "
            << out_dir << "\n";
  return kExitOk;
}

int cmd_certify(const std::string& config_path,
                const std::vector<std::string>& overrides) {
  auto cfg = riseflock::config::load_scenario(config_path, overrides);
  auto traces = riseflock::certify::certify_gains(cfg);
  const auto& rep = traces.report;

  auto line = [](const char* name, const riseflock::analysis::GainVerdict& v) {
    std::cout << "  " << name << " = " << v.value << "  threshold " ;
    std::cout << v.threshold << "  " << (v.pass ? "PASS" : "FAIL") << "\n";
  };
  std::cout << "gain conditions (chi1 = " << rep.chi1
            << ", chi2 = " << rep.chi2 << ", mode " << rep.chi_mode << "):\n";
  line("k1", rep.gains.k1);
  line("k2", rep.gains.k2);
  line("k3", rep.gains.k3);
  line("k4", rep.gains.k4);
  std::cout << "k_min = " << rep.k_min << "\n";
  std::cout << "W(z0) = " << rep.envelope.w_z0 << "\n";
  std::cout << "rho budget (k_min - lambda_V)/lambda_max_H = "
            << rep.stabilizing_set.budget << "\n";
  if (rep.stabilizing_set.verdict !=
      riseflock::analysis::SetVerdict::kRhoUnavailable) {
    std::cout << "stabilizing set: "
              << (rep.stabilizing_set.verdict ==
                          riseflock::analysis::SetVerdict::kPass
                      ? "pass"
                      : "fail")
              << " (rho(W) = " << rep.stabilizing_set.rho_at_w << ")\n";
  } else {
    std::cout << "stabilizing set: rho unavailable, verdict withheld\n";
  }
  return rep.gains.all_pass() ? kExitOk : kExitCertificateFail;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              const std::vector<std::string>& overrides,
              const std::string& seed_list) {
  auto cfg = riseflock::config::load_scenario(config_path, overrides);
  std::vector<std::uint64_t> seeds;
  std::size_t start = 0;
  while (start < seed_list.size()) {
    auto comma = seed_list.find(',', start);
    const std::string tok = seed_list.substr(start, comma - start);
    if (!tok.empty()) {
      seeds.push_back(std::strtoull(tok.c_str(), nullptr, 10));
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (seeds.empty()) {
    throw ValidationError("sweep: --seeds must list at least one seed");
  }

  auto sweep = riseflock::sim::seed_sweep(cfg, seeds, thread_cap());
  fs::create_directories(out_dir);
  riseflock::config::write_json((fs::path(out_dir) / "sweep.json").string(),
                                riseflock::config::sweep_to_json(sweep));
  std::cout << "seeds: " << seeds.size()
            << "  converged by 3 s: " << sweep.aggregate.fraction_converged_by_3s
            << "  median rms: " << sweep.aggregate.median_rms << "  rms range: ["
            << sweep.aggregate.min_rms << ", " << sweep.aggregate.max_rms
            << "]\n";
  return kExitOk;
}

std::vector<double> column_norms(const riseflock::log::CsvTable& table,
                                 const std::string& prefix) {
  static const char* suffixes[] = {"x", "y", "z"};
  std::vector<const std::vector<double>*> cols;
  for (const char* s : suffixes) {
    if (table.has(prefix + "_" + s)) cols.push_back(&table.col(prefix + "_" + s));
  }
  for (int a = 1; cols.empty() && table.has(prefix + "_" + std::to_string(a));
       ++a) {
    cols.push_back(&table.col(prefix + "_" + std::to_string(a)));
  }
  if (cols.empty()) {
    throw ValidationError("plot: no columns with prefix " + prefix);
  }
  std::vector<double> out(cols[0]->size(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double acc = 0.0;
    for (const auto* c : cols) acc += (*c)[k] * (*c)[k];
    out[k] = std::sqrt(acc);
  }
  return out;
}

int cmd_plot(const std::string& csv_path, const std::string& kind,
             const std::string& out_dir) {
  const auto table = riseflock::log::read_csv(csv_path);
  if (table.rows() == 0) {
    throw ValidationError("plot: no samples in " + csv_path);
  }
  fs::create_directories(out_dir);
  const auto& t = table.col("t");

  if (kind == "error_norms") {
    riseflock::svg::LinePlot plot("Tracking error norms", "t [s]",
                                  "||e_i|| [m]");
    for (int i = 1; table.has("e" + std::to_string(i) + "_x") ||
                    table.has("e" + std::to_string(i) + "_1");
         ++i) {
      riseflock::svg::Series s;
      s.label = "agent " + std::to_string(i);
      s.color = riseflock::svg::palette(i - 1);
      s.x = t;
      s.y = column_norms(table, "e" + std::to_string(i));
      plot.add(std::move(s));
    }
    plot.add_hline(0.05, "0.05 m");
    plot.write((fs::path(out_dir) / "error_norms.svg").string());
    std::cout << "wrote error_norms.svg\n";
    return kExitOk;
  }

  if (kind == "traj3d_projection") {
    auto panel = [&](const char* ax, const char* ay, const std::string& title) {
      riseflock::svg::LinePlot plot(title, std::string(ax) + " [m]",
                                    std::string(ay) + " [m]");
      for (int i = 1;
           table.has("q" + std::to_string(i) + "_" + ax) &&
           table.has("q" + std::to_string(i) + "_" + ay);
           ++i) {
        riseflock::svg::Series s;
        s.label = "agent " + std::to_string(i);
        s.color = riseflock::svg::palette(i - 1);
        s.x = table.col("q" + std::to_string(i) + "_" + ax);
        s.y = table.col("q" + std::to_string(i) + "_" + ay);
        plot.add(std::move(s));
      }
      riseflock::svg::Series target;
      target.label = "target";
      target.color = "#000000";
      target.dashed = true;
      target.x = table.col(std::string("q0_") + ax);
      target.y = table.col(std::string("q0_") + ay);
      plot.add(std::move(target));
      return plot.render();
    };
    const std::string left = panel("x", "y", "Trajectories, x-y");
    const std::string right = panel("x", "z", "Trajectories, x-z");
    std::ofstream out(fs::path(out_dir) / "traj_projection.svg",
                      std::ios::binary);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1720\" "
           "height=\"520\">\n<svg x=\"0\">"
        << left << "</svg>\n<svg x=\"860\">" << right << "</svg>\n</svg>\n";
    std::cout << "wrote traj_projection.svg\n";
    return kExitOk;
  }

  if (kind == "lyapunov") {
    riseflock::svg::LinePlot plot("Lyapunov function and P-function", "t [s]",
                                  "value");
    plot.set_log_y(true);
    riseflock::svg::Series v;
    v.label = "V(t)";
    v.color = riseflock::svg::palette(0);
    v.x = t;
    v.y = table.col("V");
    plot.add(std::move(v));
    riseflock::svg::Series p;
    p.label = "P(t)";
    p.color = riseflock::svg::palette(1);
    p.x = t;
    p.y = table.col("P");
    plot.add(std::move(p));
    plot.write((fs::path(out_dir) / "lyapunov.svg").string());
    std::cout << "wrote lyapunov.svg\n";
    return kExitOk;
  }

  throw ValidationError("plot: unknown kind \"" + kind + "\"");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized robust target-tracking simulator and gain "
               "certifier"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", csv_path, kind = "error_norms";
  std::string seed_list;
  std::vector<std::string> overrides;

  CLI::App* run = app.add_subcommand("run", "simulate one scenario");
  run->add_option("--config", config_path, "scenario config JSON")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--set", overrides, "override config key, e.g. gains.k4=0");

  CLI::App* certify = app.add_subcommand("certify", "check the gain conditions");
  certify->add_option("--config", config_path, "scenario config JSON")
      ->required();
  certify->add_option("--set", overrides, "override config key");

  CLI::App* sweep = app.add_subcommand("sweep", "run a list of seeds");
  sweep->add_option("--config", config_path, "scenario config JSON")->required();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--set", overrides, "override config key");
  sweep->add_option("--seeds", seed_list, "comma-separated seed list")
      ->required();

  CLI::App* plot = app.add_subcommand("plot", "render a trajectory CSV");
  plot->add_option("--csv", csv_path, "trajectory.csv path")->required();
  plot->add_option("--kind", kind,
                   "error_norms | traj3d_projection | lyapunov");
  plot->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir, overrides);
    if (*certify) return cmd_certify(config_path, overrides);
    if (*sweep) return cmd_sweep(config_path, out_dir, overrides, seed_list);
    if (*plot) return cmd_plot(csv_path, kind, out_dir);
  } catch (const riseflock::ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const riseflock::DivergenceError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitDivergence;
  } catch (const riseflock::NumericError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitDivergence;
  }
  return kExitValidation;
}
