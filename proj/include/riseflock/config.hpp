#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "riseflock/analysis.hpp"
#include "riseflock/sim.hpp"

namespace riseflock::config {

/// Parses a schema-1 scenario config. Unknown keys are rejected so typos
/// surface as errors instead of silently falling back to defaults.
sim::ScenarioConfig from_json(const nlohmann::json& j);

sim::ScenarioConfig load_scenario(const std::string& path);

/// Applies dotted-path overrides ("gains.k4=0", "dt=5e-4") onto the raw
/// JSON document. Every path must reference an existing key.
void apply_overrides(nlohmann::json& j,
                     const std::vector<std::string>& overrides);

sim::ScenarioConfig load_scenario(const std::string& path,
                                  const std::vector<std::string>& overrides);

nlohmann::json metrics_to_json(const sim::Metrics& metrics);
nlohmann::json sweep_to_json(const sim::SweepResult& sweep);
nlohmann::json certificate_to_json(const analysis::CertificateReport& report);

void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace riseflock::config
