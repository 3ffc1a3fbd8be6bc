#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfm/closed_loop.hpp"
#include "gfm/network.hpp"
#include "gfm/sim.hpp"

namespace gfm {

using Json = nlohmann::json;

struct NetworkSpec {
    NetworkParams params;
    std::array<PlantState, 2> init;
    std::array<Json, 2> controllers;
};

struct Scenario {
    std::string name;
    ConverterParams params;
    PlantState init;
    Json controller;  // validated spec, instantiated by make_controller
    LoadModel load;
    bool filter = true;
    SimConfig sim;
    std::optional<NetworkSpec> network;
};

// Reads a JSON file; syntax errors become ParseError with line and column.
Json load_json_file(const std::filesystem::path& path);
Json parse_json_text(const std::string& text);

// Throws ConfigError on unknown keys, wrong types or invalid values.
Scenario parse_scenario(const Json& j);
ConverterParams parse_converter(const Json& j);
std::unique_ptr<Controller> make_controller(const Json& spec, const ConverterParams& p);

struct ScenarioResult {
    SimTrace trace;
    NetworkTrace net_trace;
    bool is_network = false;
    bool diverged = false;
    double diverged_at = 0.0;
    Json summary;
};

// Divergence is reported in the result (partial trace kept), not thrown.
ScenarioResult run_scenario(const Scenario& sc);

// Steady-state, passivity and droop-line figures computed from a trace alone.
Json summarize_trace(const SimTrace& trace, const SimConfig& cfg, const Json& controller);

struct SweepSpec {
    Json base;  // scenario template
    std::string parameter;  // JSON pointer into the template
    std::vector<double> values;
};

SweepSpec parse_sweep(const Json& j, const std::filesystem::path& base_dir);

struct SweepRow {
    double value = 0.0;
    bool converged = false;
    std::string error;
    SteadyState steady;
    double p_x = 0.0, q_x = 0.0, p_load = 0.0, q_load = 0.0;
    // analytic overlay from the simulated P_x and current amplitude
    double v_dc_analytic = NAN, vx_analytic = NAN, omega_analytic = NAN;
    double b_over_analytic = NAN, b_under_analytic = NAN;
};

std::vector<SweepRow> run_sweep(const SweepSpec& spec);
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os);

}  // namespace gfm
