#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lvnet/builtin_configs.hpp"
#include "lvnet/certify.hpp"
#include "lvnet/config.hpp"
#include "lvnet/io.hpp"
#include "lvnet/scenario.hpp"
#include "lvnet/sim.hpp"
#include "lvnet/verify.hpp"

namespace lvnet {

namespace detail {

/// Certificates analyze the network/matrix; everything else analyzes
/// trajectories or the vector field and lands in the property report list.
[[nodiscard]] inline bool is_structural_check(const std::string& name) {
    static const std::set<std::string> structural = {"metzler",       "gershgorin", "hurwitz",
                                                     "cooperativity", "dissipativity", "equilibrium"};
    return structural.count(name) != 0;
}

/// Matrix the structural certificates run against: the interaction matrix at
/// the initial time for coupled scenarios, the decoupled matrix otherwise.
[[nodiscard]] inline Matrix analysis_matrix(const ScenarioConfig& cfg, const FrozenScenario& frozen) {
    if (cfg.mode == "decoupled") return interaction_matrix_decoupled(cfg.network, frozen.k).entries;
    return interaction_matrix_coupled(cfg.network, frozen.theta, frozen.k).entries;
}

[[nodiscard]] inline CertificateReport run_structural_check(
    const ScenarioConfig& cfg, const FrozenScenario& frozen, const Matrix& matrix,
    const CheckRequest& req, std::optional<EquilibriumResult>& equilibrium_out) {
    if (req.name == "metzler") return is_metzler(matrix);
    if (req.name == "gershgorin") return gershgorin_negative_definite(cfg.network, frozen.k);
    if (req.name == "hurwitz") return hurwitz_check(matrix);
    if (req.name == "cooperativity") return cooperativity_check(cfg.network, req.param("beta", 0.0));
    if (req.name == "dissipativity") return dissipativity_check(matrix, cfg.seed).report;
    // equilibrium: existence + interiority of the frozen steady state.
    EquilibriumResult eq = solve_equilibrium(cfg.network, frozen.k, frozen.v_star);
    equilibrium_out = eq;
    CertificateReport report;
    report.kind = "equilibrium";
    report.holds = eq.interior;
    report.margin = eq.v_bar.size() > 0 ? eq.v_bar.minCoeff() : 0.0;
    report.notes = "residual " + format_double(eq.residual) +
                   (eq.interior ? "; interior" : "; touches the boundary");
    return report;
}

enum class TrajectorySource { fresh, supplied };

/// Collapse per-run reports into the single report the bundle carries for a
/// check name: worst violation wins, holds only if every run holds. `trajs`
/// supplies the run labels, one per report.
[[nodiscard]] inline PropertyReport merge_reports(std::vector<PropertyReport> parts,
                                                  const std::vector<Trajectory>& trajs) {
    if (parts.empty()) throw std::runtime_error("no runs to check");
    std::size_t worst = 0;
    for (std::size_t i = 1; i < parts.size(); ++i) {
        if (parts[i].holds != parts[worst].holds) {
            if (!parts[i].holds) worst = i;
        } else if (parts[i].worst_violation > parts[worst].worst_violation) {
            worst = i;
        }
    }
    if (parts.size() == 1) return parts[worst];
    PropertyReport merged = parts[worst];
    merged.holds = std::all_of(parts.begin(), parts.end(),
                               [](const PropertyReport& p) { return p.holds; });
    merged.samples_checked = 0;
    for (const PropertyReport& p : parts) merged.samples_checked += p.samples_checked;
    if (!merged.notes.empty()) merged.notes += "; ";
    merged.notes += "worst of " + std::to_string(parts.size()) + " runs (" +
                    trajs[worst].meta.scenario_id + ")";
    return merged;
}

/// Order two trajectories by their initial states for the monotone-order
/// comparison; throws if the starts are not componentwise comparable.
[[nodiscard]] inline std::pair<const Trajectory*, const Trajectory*> order_by_initial_state(
    const std::vector<Trajectory>& trajs) {
    if (trajs.size() != 2)
        throw std::runtime_error("monotone_order needs exactly two trajectories, got " +
                                 std::to_string(trajs.size()));
    const Vector& a = trajs[0].states.front();
    const Vector& b = trajs[1].states.front();
    if ((a.array() <= b.array()).all()) return {&trajs[0], &trajs[1]};
    if ((b.array() <= a.array()).all()) return {&trajs[1], &trajs[0]};
    throw std::runtime_error("monotone_order: initial states are not componentwise ordered");
}

[[nodiscard]] inline PropertyReport run_property_check(const ScenarioConfig& cfg,
                                                       const FrozenScenario& frozen,
                                                       const std::vector<Trajectory>& trajs,
                                                       TrajectorySource source,
                                                       const CheckRequest& req) {
    const PowerNetwork& net = cfg.network;
    if (req.name == "homogeneity")
        return check_homogeneity(net, frozen.theta, frozen.k,
                                 static_cast<int>(req.param("samples", 200.0)), cfg.seed);
    if (req.name == "assumption1") return check_assumption1(net);

    if (req.name == "monotone_order") {
        auto [lower, upper] = order_by_initial_state(trajs);
        return check_monotone_order(*lower, *upper, req.param("tol", 1e-7));
    }

    std::vector<PropertyReport> parts;
    if (req.name == "positivity") {
        for (const Trajectory& t : trajs) parts.push_back(check_positivity(t, req.param("tol", 0.0)));
    } else if (req.name == "ultimate_bound") {
        for (const Trajectory& t : trajs)
            parts.push_back(estimate_ultimate_bound(t, req.param("transient_fraction", 0.5)).report);
    } else if (req.name == "lyapunov_descent") {
        const EquilibriumResult eq = solve_equilibrium(net, frozen.k, frozen.v_star);
        const Matrix psi_l = interaction_matrix_decoupled(net, frozen.k).entries;
        for (const Trajectory& t : trajs) parts.push_back(check_lyapunov_descent(t, eq.v_bar, psi_l));
    } else if (req.name == "l1_descent_frozen") {
        const Matrix psi = analysis_matrix(cfg, frozen);
        if (source == TrajectorySource::supplied) {
            for (const Trajectory& t : trajs) parts.push_back(check_l1_descent_frozen(t, psi));
        } else {
            // The descent statement is about the drift-only frozen flow, so
            // re-integrate each start under that flow rather than reusing the
            // driven trajectories.
            for (const Trajectory& t : trajs) {
                Trajectory drift = integrate_frozen(net, frozen.sigma, t.states.front(), cfg.t0,
                                                    cfg.t_end, cfg.settings, FrozenDrift::drift_only);
                PropertyReport part = check_l1_descent_frozen(drift, psi);
                part.notes += (part.notes.empty() ? "" : "; ");
                part.notes += "drift-only rerun of " + t.meta.scenario_id;
                parts.push_back(std::move(part));
            }
        }
    } else {
        throw std::runtime_error("unhandled property check '" + req.name + "'");
    }
    return merge_reports(std::move(parts), trajs);
}

inline void print_line(std::ostream& out, const CertificateReport& r) {
    out << "certificate " << r.kind << ": " << (r.holds ? "holds" : "FAILS") << " (margin "
        << format_double(r.margin) << ")";
    if (!r.notes.empty()) out << "  [" << r.notes << "]";
    out << '\n';
}

inline void print_line(std::ostream& out, const PropertyReport& r) {
    out << "property " << r.property << ": " << (r.holds ? "holds" : "FAILS")
        << " (worst violation " << format_double(r.worst_violation) << ")";
    if (!r.notes.empty()) out << "  [" << r.notes << "]";
    out << '\n';
}

}  // namespace detail

/// Command-line overrides that take precedence over config file values.
struct CliOverrides {
    std::optional<unsigned long> seed;
    std::optional<double> rel_tol;
    std::optional<double> abs_tol;
    std::optional<double> t_end;
    std::optional<double> stride;

    void apply(ScenarioConfig& cfg) const {
        if (seed) cfg.seed = *seed;
        if (rel_tol) cfg.settings.rel_tol = *rel_tol;
        if (abs_tol) cfg.settings.abs_tol = *abs_tol;
        if (t_end) cfg.t_end = *t_end;
        if (stride) cfg.settings.record_stride = *stride;
        if (!(cfg.t_end >= cfg.t0)) throw ConfigError("command line: --t-end must be >= t0");
        try {
            cfg.settings.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("command line: ") + e.what());
        }
    }
};

struct LoadedConfig {
    ScenarioConfig cfg;
    std::string path;
    std::string hash;
};

[[nodiscard]] inline std::string_view builtin_config_text(const std::string& name) {
    if (name == "fig2") return builtin::fig2_cfg;
    if (name == "fig3") return builtin::fig3_cfg;
    if (name == "fig4") return builtin::fig4_cfg;
    throw ConfigError("unknown bundled scenario '" + name + "' (expected fig2, fig3 or fig4)");
}

[[nodiscard]] inline LoadedConfig load_config_file(const std::string& path, const CliOverrides& over) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    LoadedConfig loaded{parse_config_text(buf.str(), path), path, hash_config_text(buf.str())};
    over.apply(loaded.cfg);
    return loaded;
}

[[nodiscard]] inline LoadedConfig load_builtin_config(const std::string& name, const CliOverrides& over) {
    const std::string_view text = builtin_config_text(name);
    LoadedConfig loaded{parse_config_text(std::string(text), "builtin:" + name), "builtin:" + name,
                        hash_config_text(text)};
    over.apply(loaded.cfg);
    return loaded;
}

namespace detail {

[[nodiscard]] inline std::vector<Trajectory> integrate_config_runs(const ScenarioConfig& cfg) {
    return batch_integrate(cfg.network, cfg.initial_conditions, cfg.t0, cfg.t_end, cfg.settings);
}

/// Shared engine behind simulate/reproduce/verify: produce or accept
/// trajectories, evaluate every applicable requested check, fill the bundle.
/// `line_out`, when set, receives one human-readable line per report.
inline RunBundle evaluate_scenario(const LoadedConfig& loaded, const std::vector<Trajectory>& trajs,
                                   TrajectorySource source, bool structural, bool property,
                                   std::ostream* line_out) {
    const ScenarioConfig& cfg = loaded.cfg;
    RunBundle bundle;
    bundle.config_path = loaded.path;
    bundle.config_hash = loaded.hash;
    bundle.seed = cfg.seed;
    bundle.warnings = cfg.network.warnings();

    const FrozenScenario frozen = freeze(cfg.network, cfg.t0);
    std::optional<Matrix> matrix;  // built lazily; certify-only configs need it

    for (const CheckRequest& req : cfg.checks) {
        if (is_structural_check(req.name)) {
            if (!structural) continue;
            if (!matrix) matrix = analysis_matrix(cfg, frozen);
            CertificateReport report;
            try {
                report = run_structural_check(cfg, frozen, *matrix, req, bundle.equilibrium);
            } catch (const std::runtime_error& e) {
                report.kind = req.name;
                report.holds = false;
                report.margin = -std::numeric_limits<double>::infinity();
                report.notes = e.what();
            }
            if (line_out) print_line(*line_out, report);
            bundle.certificates.push_back(std::move(report));
        } else {
            if (!property) continue;
            PropertyReport report;
            try {
                report = run_property_check(cfg, frozen, trajs, source, req);
            } catch (const std::runtime_error& e) {
                report.property = req.name;
                report.holds = false;
                report.worst_violation = std::numeric_limits<double>::infinity();
                report.notes = e.what();
            }
            if (line_out) print_line(*line_out, report);
            bundle.properties.push_back(std::move(report));
        }
    }
    return bundle;
}

inline void write_outputs(RunBundle& bundle, const std::vector<Trajectory>& trajs,
                          const std::string& out_dir, std::ostream& out) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    for (const Trajectory& traj : trajs) {
        const std::string name = traj.meta.scenario_id + ".csv";
        write_trajectory_csv(traj, (fs::path(out_dir) / name).string());
        bundle.trajectory_files.push_back(name);
        out << "wrote " << (fs::path(out_dir) / name).string() << '\n';
    }
    const std::string bundle_path = (fs::path(out_dir) / "run.json").string();
    write_run_bundle(bundle, bundle_path);
    out << "wrote " << bundle_path << '\n';
}

inline void print_warnings(const ScenarioConfig& cfg, std::ostream& err) {
    for (const std::string& w : cfg.network.warnings()) err << "warning: " << w << '\n';
}

inline int run_simulate_like(const LoadedConfig& loaded, const std::string& out_dir, std::ostream& out,
                             std::ostream& err) {
    print_warnings(loaded.cfg, err);
    std::vector<Trajectory> trajs = integrate_config_runs(loaded.cfg);
    RunBundle bundle = evaluate_scenario(loaded, trajs, TrajectorySource::fresh, /*structural=*/true,
                                         /*property=*/true, &out);
    write_outputs(bundle, trajs, out_dir, out);
    const bool ok = bundle.all_hold();
    out << (ok ? "all checks hold" : "CHECKS FAILED") << '\n';
    return ok ? 0 : 1;
}

}  // namespace detail

/// Full command-line entry point; `args` excludes the program name. Returns
/// the process exit code: 0 all requested checks hold, 1 a check failed or a
/// run aborted, 2 usage or configuration error.
inline int cli_main(std::vector<std::string> args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    CLI::App app{"Voltage-dynamics simulator and certificate engine for droop-controlled networks"};
    app.require_subcommand(1);

    CliOverrides over;
    std::string config_path;
    std::string out_dir;
    std::string fig_name;
    std::vector<std::string> traj_paths;

    auto add_common = [&](CLI::App* cmd, bool with_overrides) {
        cmd->add_option("config", config_path, "scenario config file")->required();
        cmd->add_option("--seed", over.seed, "override the config seed");
        if (!with_overrides) return;
        cmd->add_option("--rel-tol", over.rel_tol, "override relative tolerance");
        cmd->add_option("--abs-tol", over.abs_tol, "override absolute tolerance");
        cmd->add_option("--t-end", over.t_end, "override the end of the integration window");
        cmd->add_option("--stride", over.stride, "override the recording stride");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "integrate the scenario, run its checks, write CSVs");
    add_common(simulate, true);
    simulate->add_option("--out", out_dir, "output directory")->required();

    CLI::App* certify = app.add_subcommand("certify", "run the structural certificates and print reports");
    add_common(certify, false);

    CLI::App* equilibrium = app.add_subcommand("equilibrium", "solve and print the frozen equilibrium");
    add_common(equilibrium, false);

    CLI::App* verify = app.add_subcommand("verify", "run trajectory property checks");
    add_common(verify, true);
    verify->add_option("--traj", traj_paths, "use these trajectory CSVs instead of integrating");

    CLI::App* reproduce = app.add_subcommand("reproduce", "run a bundled scenario end to end");
    reproduce->add_option("name", fig_name, "bundled scenario")
        ->required()
        ->check(CLI::IsMember({"fig2", "fig3", "fig4"}));
    reproduce->add_option("--out", out_dir, "output directory (default <name>_out)");
    reproduce->add_option("--seed", over.seed, "override the config seed");
    reproduce->add_option("--rel-tol", over.rel_tol, "override relative tolerance");
    reproduce->add_option("--abs-tol", over.abs_tol, "override absolute tolerance");
    reproduce->add_option("--t-end", over.t_end, "override the end of the integration window");
    reproduce->add_option("--stride", over.stride, "override the recording stride");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (simulate->parsed()) {
            return detail::run_simulate_like(load_config_file(config_path, over), out_dir, out, err);
        }

        if (certify->parsed()) {
            const LoadedConfig loaded = load_config_file(config_path, over);
            detail::print_warnings(loaded.cfg, err);
            RunBundle bundle = detail::evaluate_scenario(loaded, {}, detail::TrajectorySource::fresh,
                                                         /*structural=*/true, /*property=*/false, nullptr);
            Json reports = Json::array();
            for (const CertificateReport& c : bundle.certificates) reports.push_back(to_json(c));
            out << reports.dump(2) << '\n';
            if (bundle.certificates.empty()) err << "warning: no structural checks requested\n";
            return bundle.all_hold() ? 0 : 1;
        }

        if (equilibrium->parsed()) {
            const LoadedConfig loaded = load_config_file(config_path, over);
            detail::print_warnings(loaded.cfg, err);
            const FrozenScenario frozen = freeze(loaded.cfg.network, loaded.cfg.t0);
            const EquilibriumResult eq =
                solve_equilibrium(loaded.cfg.network, frozen.k, frozen.v_star);
            out << to_json(eq).dump(2) << '\n';
            return eq.interior ? 0 : 1;
        }

        if (verify->parsed()) {
            const LoadedConfig loaded = load_config_file(config_path, over);
            detail::print_warnings(loaded.cfg, err);
            std::vector<Trajectory> trajs;
            detail::TrajectorySource source = detail::TrajectorySource::fresh;
            if (!traj_paths.empty()) {
                source = detail::TrajectorySource::supplied;
                for (const std::string& path : traj_paths) {
                    Trajectory traj = read_trajectory_csv(path);
                    if (traj.dimension() != loaded.cfg.network.size())
                        throw ConfigError(path + ": trajectory has " + std::to_string(traj.dimension()) +
                                          " state columns, scenario has " +
                                          std::to_string(loaded.cfg.network.size()) + " nodes");
                    traj.meta.scenario_id = path;
                    trajs.push_back(std::move(traj));
                }
            } else {
                trajs = detail::integrate_config_runs(loaded.cfg);
            }
            RunBundle bundle = detail::evaluate_scenario(loaded, trajs, source,
                                                         /*structural=*/false, /*property=*/true, nullptr);
            Json reports = Json::array();
            for (const PropertyReport& p : bundle.properties) reports.push_back(to_json(p));
            out << reports.dump(2) << '\n';
            if (bundle.properties.empty()) err << "warning: no property checks requested\n";
            return bundle.all_hold() ? 0 : 1;
        }

        // reproduce
        const LoadedConfig loaded = load_builtin_config(fig_name, over);
        if (out_dir.empty()) out_dir = fig_name + "_out";
        return detail::run_simulate_like(loaded, out_dir, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace lvnet
