// cqdyn — config-driven CQ dynamics runner.
//
// Subcommands: simulate, spectrum, audit, check-dd, toy. One JSON config file
// fully determines a run; outputs are plot-ready CSV and JSON reports.

#include "cqdyn/audit.hpp"
#include "cqdyn/evolution.hpp"
#include "cqdyn/models.hpp"
#include "cqdyn/spectral.hpp"
#include "cqdyn/toy_model.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMonitorAbort = 2;
constexpr int kExitConfigError = 3;
constexpr int kExitCapacity = 4;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Scenario {
    json cfg;
    fs::path out_dir;
    unsigned seed = 0;
};

Scenario load_scenario(const std::string& config_path, const std::string& out_override,
                       int seed_override) {
    Scenario scenario;
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file: " + config_path);
    try {
        in >> scenario.cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    scenario.out_dir = out_override.empty()
                           ? fs::path(scenario.cfg.value("output", "."))
                           : fs::path(out_override);
    scenario.seed = seed_override >= 0 ? static_cast<unsigned>(seed_override)
                                       : scenario.cfg.value("seed", 0u);
    fs::create_directories(scenario.out_dir);
    return scenario;
}

// 17 significant digits, '.' separator, LF endings: bit-exact golden files.
std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("failed to write " + path.string());
}

void write_json(const fs::path& path, const json& doc,
                const std::vector<std::string>& required_keys) {
    const std::string text = doc.dump(2) + "\n";
    const json reparsed = json::parse(text);
    for (const auto& key : required_keys)
        if (!reparsed.contains(key))
            throw std::runtime_error("output schema violation in " + path.string() +
                                     ": missing key " + key);
    write_text(path, text);
}

struct Integration {
    double t_final = 10.0;
    double dt = 1e-3;
    int snapshot_every = 0;
};

Integration parse_integration(const json& cfg) {
    Integration integration;
    const json block = cfg.value("integration", json::object());
    integration.t_final = block.value("t_final", 10.0);
    integration.dt = block.value("dt", 1e-3);
    integration.snapshot_every = block.value("snapshot_every", 0);
    if (integration.dt <= 0.0) throw ConfigError("integration.dt must be positive");
    if (integration.t_final <= 0.0) throw ConfigError("integration.t_final must be positive");
    return integration;
}

std::string trajectory_csv(const cqdyn::evo::Trajectory& traj) {
    std::string csv = "t,trace_dev,min_eig";
    for (const auto& label : traj.labels) csv += "," + label;
    csv += "\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        csv += fmt(traj.times[i]) + "," + fmt(traj.trace_dev[i]) + "," + fmt(traj.min_eig[i]);
        for (const auto& series : traj.observables) csv += "," + fmt(series[i]);
        csv += "\n";
    }
    return csv;
}

int cmd_simulate(const Scenario& scenario) {
    auto model = cqdyn::models::build_model(scenario.cfg.value("model", json::object()),
                                            scenario.seed);
    const Integration integration = parse_integration(scenario.cfg);

    cqdyn::state::HybridStateGrid rho0 = model.initial;
    const json hooks = scenario.cfg.value("test_hooks", json::object());
    if (hooks.contains("scale_initial")) {
        const double factor = hooks.at("scale_initial").get<double>();
        for (auto& block : rho0.blocks) block *= factor;
    }

    cqdyn::evo::EvolveOptions options;
    options.snapshot_every = integration.snapshot_every;
    const auto traj = cqdyn::evo::evolve(*model.generator, rho0, integration.t_final,
                                         integration.dt, model.observables, options);
    write_text(scenario.out_dir / "trajectory.csv", trajectory_csv(traj));

    json final_obs = json::object();
    for (std::size_t k = 0; k < traj.labels.size(); ++k)
        final_obs[traj.labels[k]] = traj.observables[k].back();
    write_json(scenario.out_dir / "summary.json",
               {{"model", model.name},
                {"t_final", integration.t_final},
                {"dt", integration.dt},
                {"seed", scenario.seed},
                {"aborted", traj.aborted},
                {"abort_time", traj.abort_time},
                {"final", {{"t", traj.times.back()},
                           {"trace_dev", traj.trace_dev.back()},
                           {"min_eig", traj.min_eig.back()},
                           {"observables", final_obs}}}},
               {"model", "aborted", "final"});
    return traj.aborted ? kExitMonitorAbort : kExitOk;
}

int cmd_spectrum(const Scenario& scenario) {
    auto model = cqdyn::models::build_model(scenario.cfg.value("model", json::object()),
                                            scenario.seed);
    const json block = scenario.cfg.value("spectrum", json::object());
    const auto report = cqdyn::spectral::classify_spectrum(
        model.generator->liouvillian_matrix(), block.value("tol_zero", 1e-9),
        block.value("gap_threshold", 100.0));
    write_json(scenario.out_dir / "spectrum.json", report.to_json(),
               {"eigenvalues", "classes", "zero_multiplicity", "metastable"});
    return kExitOk;
}

cqdyn::toy::ToyModelParams toy_params(const Scenario& scenario) {
    const json model_cfg = scenario.cfg.value("model", json::object());
    const std::string name = model_cfg.value("name", "toy");
    if (name != "toy") throw ConfigError("model.name: this command requires the toy model");
    return cqdyn::models::toy_params_from_json(model_cfg.value("params", json::object()));
}

int cmd_audit(const Scenario& scenario) {
    const auto params = toy_params(scenario);
    const auto verdict = cqdyn::audit::noether_audit(params, 30, scenario.seed);
    json doc = verdict.to_json();
    const auto analyses = scenario.cfg.value("analyses", std::vector<std::string>{});
    if (std::find(analyses.begin(), analyses.end(), "consistency") != analyses.end()) {
        const Integration integration = parse_integration(scenario.cfg);
        doc["consistency"] =
            cqdyn::audit::consistency_suite(params, integration.t_final).to_json();
    }
    write_json(scenario.out_dir / "audit.json", doc,
               {"observable", "symmetric", "conserved", "symmetry_residual",
                "conservation_residual", "dJdt_samples"});
    return kExitOk;
}

json summary_to_json(const cqdyn::gen::BackreactionSummary& summary,
                     const cqdyn::gen::DdVerdict& verdict) {
    std::vector<double> d1(summary.d1.begin(), summary.d1.end());
    std::vector<std::vector<double>> d2;
    for (Eigen::Index i = 0; i < summary.d2.rows(); ++i)
        d2.emplace_back(summary.d2.row(i).begin(), summary.d2.row(i).end());
    return {{"pass", verdict.pass},
            {"pass_componentwise", verdict.pass_componentwise},
            {"verdicts_agree", verdict.verdicts_agree},
            {"min_eigenvalue", verdict.min_eigenvalue},
            {"worst", {{"i", verdict.worst_i}, {"j", verdict.worst_j},
                       {"margin", verdict.worst_margin}}},
            {"summary", {{"d0", summary.d0}, {"d1", d1}, {"d2", d2}}}};
}

int cmd_check_dd(const Scenario& scenario) {
    cqdyn::gen::BackreactionSummary summary;
    if (scenario.cfg.contains("dd_override")) {
        const json& o = scenario.cfg.at("dd_override");
        summary.d0 = o.at("d0").get<double>();
        const auto d1 = o.at("d1").get<std::vector<double>>();
        summary.d1 = Eigen::Map<const Eigen::VectorXd>(d1.data(), d1.size());
        const auto d2 = o.at("d2").get<std::vector<std::vector<double>>>();
        summary.d2.resize(d2.size(), d2.size());
        for (std::size_t i = 0; i < d2.size(); ++i)
            for (std::size_t j = 0; j < d2.size(); ++j) summary.d2(i, j) = d2[i][j];
    } else {
        auto model = cqdyn::models::build_model(scenario.cfg.value("model", json::object()),
                                                scenario.seed);
        auto& generator = *model.generator;
        cqdyn::state::HybridStateGrid state = model.initial;
        const auto lmat = generator.liouvillian_matrix();
        const auto asym =
            cqdyn::spectral::asymptotic_projection(lmat, cqdyn::gen::vectorize(state));
        if (asym.has_limit) {
            state = cqdyn::gen::devectorize(asym.state, model.grid, generator.dim());
            for (auto& block : state.blocks) block = (block + block.adjoint().eval()) / 2.0;
        }
        cqdyn::gen::PairKernel amplitudes = generator.kernel();
        if (!amplitudes) {
            // Local dissipator only: zeroth moment is lambda(z), no displacements.
            throw ConfigError("check-dd: model has no kernel; supply dd_override instead");
        }
        const auto m0 = cqdyn::gen::compute_moments(amplitudes, 0, *model.grid);
        const auto m1 = cqdyn::gen::compute_moments(amplitudes, 1, *model.grid);
        const auto m2 = cqdyn::gen::compute_moments(amplitudes, 2, *model.grid);
        summary = cqdyn::gen::backreaction_summary(state, m0, m1, m2, generator.basis());
    }
    const auto verdict = cqdyn::gen::check_diffusion_decoherence(summary);
    write_json(scenario.out_dir / "dd.json", summary_to_json(summary, verdict),
               {"pass", "pass_componentwise", "worst", "summary"});
    return kExitOk;
}

// One-shot reproduction of the toy model: exact J(t) trace, audit, spectrum,
// consistency report, and the headline verdict.
int cmd_toy(const Scenario& scenario) {
    const auto params = toy_params(scenario);
    const Integration integration = parse_integration(scenario.cfg);
    const int n_points = scenario.cfg.value("toy", json::object()).value("points", 1000);

    std::vector<cqdyn::evo::ObservableSum> j_fields;
    for (int a = 0; a < 3; ++a) j_fields.push_back(cqdyn::toy::toy_J_field(a, params.hbar));
    const auto initial = cqdyn::toy::toy_initial_state(params);

    std::string csv = "t,trace_dev,min_eig,Jx,Jy,Jz\n";
    std::vector<double> t_grid;
    for (int k = 0; k < n_points; ++k) {
        const double t = integration.t_final * k / (n_points - 1);
        t_grid.push_back(t);
        const auto s = cqdyn::toy::evolve_atomic_toy(params, initial, t);
        csv += fmt(t) + "," + fmt(cqdyn::state::check_normalization(s)) + "," +
               fmt(cqdyn::state::positivity_report(s).min_eigenvalue);
        for (int a = 0; a < 3; ++a) csv += "," + fmt(cqdyn::evo::expectation(j_fields[a], s));
        csv += "\n";
    }
    write_text(scenario.out_dir / "trajectory.csv", csv);

    const auto demo =
        cqdyn::toy::nonconservation_demo(params, t_grid, integration.dt, scenario.seed);
    const auto verdict = cqdyn::audit::noether_audit(params, 30, scenario.seed);
    write_json(scenario.out_dir / "audit.json", verdict.to_json(),
               {"observable", "symmetric", "conserved"});

    const auto grid_model = cqdyn::toy::make_toy_grid_model(params);
    const auto spectrum =
        cqdyn::spectral::classify_spectrum(grid_model.generator->liouvillian_matrix());
    write_json(scenario.out_dir / "spectrum.json", spectrum.to_json(),
               {"eigenvalues", "classes", "zero_multiplicity"});

    write_json(scenario.out_dir / "consistency.json",
               cqdyn::audit::consistency_suite(params, integration.t_final).to_json(),
               {"entries", "model_violates_conservation"});

    write_json(scenario.out_dir / "summary.json",
               {{"model", "toy"},
                {"seed", scenario.seed},
                {"verdict",
                 {{"eom_rotationally_invariant", demo.eom_rotationally_invariant},
                  {"J_conserved", demo.j_conserved},
                  {"symmetry_residual", demo.symmetry_residual},
                  {"max_atomic_deviation", demo.max_atomic_deviation},
                  {"max_grid_deviation", demo.max_grid_deviation},
                  {"J_initial", {demo.j_initial[0], demo.j_initial[1], demo.j_initial[2]}},
                  {"J_final", {demo.j_final[0], demo.j_final[1], demo.j_final[2]}}}}},
               {"model", "verdict"});
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cqdyn: completely positive classical-quantum dynamics toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir;
    int seed = -1;
    app.add_option("--config", config_path, "scenario config file (JSON)")->required();
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--seed", seed, "seed for randomized checks (overrides config)");

    auto* simulate = app.add_subcommand("simulate", "integrate and write trajectory.csv");
    auto* spectrum = app.add_subcommand("spectrum", "Liouvillian spectral report");
    auto* audit_cmd = app.add_subcommand("audit", "symmetry/conservation audit");
    auto* check_dd = app.add_subcommand("check-dd", "diffusion-decoherence verdict");
    auto* toy_cmd = app.add_subcommand("toy", "one-shot toy-model reproduction");

    CLI11_PARSE(app, argc, argv);

    try {
        const Scenario scenario = load_scenario(config_path, out_dir, seed);
        if (simulate->parsed()) return cmd_simulate(scenario);
        if (spectrum->parsed()) return cmd_spectrum(scenario);
        if (audit_cmd->parsed()) return cmd_audit(scenario);
        if (check_dd->parsed()) return cmd_check_dd(scenario);
        if (toy_cmd->parsed()) return cmd_toy(scenario);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const cqdyn::gen::CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return kExitCapacity;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
