#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gfm/analysis.hpp"
#include "gfm/errors.hpp"
#include "gfm/network.hpp"
#include "gfm/scenario.hpp"

namespace fs = std::filesystem;
using gfm::Json;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitConfig = 3;
constexpr int kExitDiverged = 4;

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw gfm::ConfigError("cannot write " + path.string());
    out << text;
}

Json eigen_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json r = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

int cmd_simulate(const std::string& cfg, const fs::path& out_dir, std::optional<double> dt) {
    Json j = gfm::load_json_file(cfg);
    if (dt) {
        if (!j.contains("sim")) j["sim"] = Json::object();
        j["sim"]["dt_seconds"] = *dt;
    }
    const gfm::Scenario sc = gfm::parse_scenario(j);
    const gfm::ScenarioResult res = gfm::run_scenario(sc);
    fs::create_directories(out_dir);
    {
        std::ofstream csv(out_dir / "trace.csv");
        if (res.is_network)
            gfm::write_network_csv(res.net_trace, csv);
        else
            gfm::write_csv(res.trace, csv);
    }
    write_text(out_dir / "summary.json", res.summary.dump(2) + "\n");
    std::cout << res.summary.dump(2) << "\n";
    if (res.diverged) {
        std::cerr << "diverged at t=" << res.diverged_at << " s; partial trace written\n";
        return kExitDiverged;
    }
    return 0;
}

int cmd_sweep(const std::string& cfg, const fs::path& out_dir, std::optional<double> dt) {
    Json j = gfm::load_json_file(cfg);
    gfm::SweepSpec spec = gfm::parse_sweep(j, fs::path(cfg).parent_path());
    if (dt) {
        if (!spec.base.contains("sim")) spec.base["sim"] = Json::object();
        spec.base["sim"]["dt_seconds"] = *dt;
    }
    const auto rows = gfm::run_sweep(spec);
    fs::create_directories(out_dir);
    std::ofstream csv(out_dir / "sweep.csv");
    gfm::write_sweep_csv(rows, csv);
    gfm::write_sweep_csv(rows, std::cout);
    return 0;
}

struct AnalyzeArgs {
    std::string converter;
    double p_x = 0.0;
    double g = 0.0;
    double b = 0.0;
    std::optional<double> omega;
};

gfm::ConverterParams analyze_params(const AnalyzeArgs& a) {
    if (a.converter.empty()) return {};
    const Json j = gfm::load_json_file(a.converter);
    return gfm::parse_converter(j.contains("converter") ? j.at("converter") : j);
}

Json analyze(const std::string& what, const AnalyzeArgs& a) {
    const gfm::ConverterParams p = analyze_params(a);
    if (what == "steady-state") {
        const auto s = gfm::steady_state_profile(p, a.p_x);
        return {{"p_x_watts", s.p_x},
                {"v_dc_volts", s.v_dc_ss},
                {"amp_vx_volts", s.vx_amp},
                {"omega_rad_per_second", s.omega},
                {"frequency_hz", s.omega / (2.0 * M_PI)}};
    }
    if (what == "droop-coeffs") {
        const auto c = gfm::droop_coefficients(p, gfm::steady_state_profile(p, a.p_x));
        return {{"p_x_watts", a.p_x}, {"dp_dvx_watts_per_volt", c.d_vx}, {"dp_domega_watts_per_rad_per_second", c.d_omega}};
    }
    if (what == "max-power") {
        const auto m = gfm::max_power(p);
        return {{"p_max_watts", m.p_max},
                {"v_dc_volts", p.i_dc / (2.0 * p.g_dc)},
                {"amp_vx_volts", m.v_max},
                {"omega_rad_per_second", m.omega_max},
                {"il_max_amperes", gfm::max_current_amplitude(p)}};
    }
    if (what == "lyapunov") {
        const auto eq = gfm::dq_equilibrium(p, a.g, a.b);
        const auto r = gfm::lyapunov_condition(p, eq, a.g);
        return {{"g_siemens", a.g},
                {"b_siemens", a.b},
                {"equilibrium",
                 {{"v_dc_volts", eq.v_dc_s},
                  {"i_d_amperes", eq.i_dq_s.a},
                  {"i_q_amperes", eq.i_dq_s.b},
                  {"v_d_volts", eq.v_dq_s.a},
                  {"v_q_volts", eq.v_dq_s.b},
                  {"omega_rad_per_second", eq.omega_s},
                  {"residual", eq.residual},
                  {"iterations", eq.iterations}}},
                {"condition_lhs", r.condition_lhs},
                {"condition_rhs", r.condition_rhs},
                {"holds", r.holds},
                {"max_eigenvalue", r.max_eigenvalue},
                {"p_matrix", eigen_json(r.p_matrix)}};
    }
    if (what == "manifold") {
        const double om = a.omega ? *a.omega : p.eta * p.i_dc / p.g_dc;
        const auto im = gfm::internal_model_manifold(p, a.g, a.b, om);
        return {{"g_siemens", a.g},
                {"b_siemens", a.b},
                {"omega_rad_per_second", om},
                {"f", eigen_json(im.f)},
                {"a", eigen_json(im.a)},
                {"sylvester_residual", im.sylvester_residual},
                {"a_hurwitz", im.a_hurwitz},
                {"spectral_abscissa", im.spectral_abscissa}};
    }
    throw gfm::ConfigError("unknown analysis '" + what + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Averaged grid-forming converter simulator"};
    app.require_subcommand(1);
    std::string out_dir = "out";
    std::optional<double> dt;
    std::optional<unsigned> seed;
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--dt", dt, "Override the integration step (s)");
    app.add_option("--seed", seed, "Reserved; simulations are deterministic");

    std::string cfg;
    auto* sim = app.add_subcommand("simulate", "Run a scenario and write trace.csv and summary.json");
    sim->add_option("config", cfg, "Scenario JSON")->required();
    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep and write sweep.csv");
    sweep->add_option("config", cfg, "Sweep JSON")->required();

    AnalyzeArgs aa;
    std::string what;
    auto* an = app.add_subcommand("analyze", "Closed-form analysis of the matching-controlled converter");
    an->add_option("what", what, "steady-state | droop-coeffs | max-power | lyapunov | manifold")
        ->required()
        ->check(CLI::IsMember({"steady-state", "droop-coeffs", "max-power", "lyapunov", "manifold"}));
    an->add_option("--converter", aa.converter, "JSON file with converter parameters");
    an->add_option("--p-x", aa.p_x, "Active power P_x (W)");
    an->add_option("--g", aa.g, "Load conductance (S)");
    an->add_option("--b", aa.b, "Load susceptance (S)");
    an->add_option("--omega", aa.omega, "Frequency (rad/s), default eta i_dc / G_dc");

    // the subcommand options above are also accepted after the subcommand
    for (auto* sc : {sim, sweep, an}) sc->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return cmd_simulate(cfg, out_dir, dt);
        if (*sweep) return cmd_sweep(cfg, out_dir, dt);
        const Json r = analyze(what, aa);
        std::cout << r.dump(2) << "\n";
        if (app.count("--out")) {
            fs::create_directories(out_dir);
            write_text(fs::path(out_dir) / ("analyze_" + what + ".json"), r.dump(2) + "\n");
        }
        return 0;
    } catch (const gfm::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const gfm::DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const gfm::ConfigError& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return kExitConfig;
    } catch (const gfm::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
