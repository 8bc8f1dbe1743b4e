#pragma once

#include <json.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lvnet/sim.hpp"

namespace lvnet {

using Json = nlohmann::json;

/// Malformed or semantically invalid configuration input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One requested check with its numeric parameters (e.g. beta for
/// cooperativity, transient_fraction for ultimate_bound).
struct CheckRequest {
    std::string name;
    std::map<std::string, double> params;

    [[nodiscard]] double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

/// Fully validated scenario: network, mode, runs, window, stepper settings,
/// requested checks and the RNG seed for seeded checks.
struct ScenarioConfig {
    PowerNetwork network;
    std::string mode = "coupled";  // "coupled" | "decoupled"
    std::vector<Vector> initial_conditions;
    double t0 = 0.0;
    double t_end = 0.0;
    IntegratorSettings settings;
    std::vector<CheckRequest> checks;
    unsigned long seed = 0;
};

namespace detail {

[[nodiscard]] inline const Json& require_field(const Json& j, const std::string& key,
                                               const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(where + ": missing required field '" + key + "'");
    return *it;
}

[[nodiscard]] inline double as_number(const Json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    return j.get<double>();
}

[[nodiscard]] inline double number_field(const Json& j, const std::string& key, const std::string& where) {
    return as_number(require_field(j, key, where), where + "." + key);
}

[[nodiscard]] inline double number_field_or(const Json& j, const std::string& key, double fallback,
                                            const std::string& where) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return as_number(j.at(key), where + "." + key);
}

[[nodiscard]] inline std::string id_field(const Json& j, const std::string& key, const std::string& where) {
    const Json& v = require_field(j, key, where);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw ConfigError(where + "." + key + ": expected a string or integer node id");
}

[[nodiscard]] inline SignalSpec parse_signal(const Json& j, const std::string& where) {
    if (j.is_number()) return SignalSpec::constant(j.get<double>());
    if (!j.is_object()) throw ConfigError(where + ": expected a number or a signal object");
    const Json& form = require_field(j, "form", where);
    if (!form.is_string()) throw ConfigError(where + ".form: expected 'constant' or 'sinusoid'");
    const std::string f = form.get<std::string>();
    if (f == "constant") return SignalSpec::constant(number_field(j, "value", where));
    if (f == "sinusoid")
        return SignalSpec::sinusoid(number_field(j, "offset", where), number_field(j, "amplitude", where),
                                    number_field(j, "angular_frequency", where),
                                    number_field_or(j, "phase", 0.0, where));
    throw ConfigError(where + ".form: unknown form '" + f + "' (expected 'constant' or 'sinusoid')");
}

[[nodiscard]] inline Json signal_to_json(const SignalSpec& s) {
    if (s.form() == SignalSpec::Form::constant) return Json{{"form", "constant"}, {"value", s.offset()}};
    return Json{{"form", "sinusoid"},
                {"offset", s.offset()},
                {"amplitude", s.amplitude()},
                {"angular_frequency", s.angular_frequency()},
                {"phase", s.phase()}};
}

inline const std::set<std::string>& known_checks() {
    static const std::set<std::string> names = {
        "metzler",        "gershgorin",      "hurwitz",        "cooperativity", "dissipativity",
        "equilibrium",    "positivity",      "monotone_order", "lyapunov_descent",
        "l1_descent_frozen", "ultimate_bound", "homogeneity",  "assumption1"};
    return names;
}

}  // namespace detail

/// Parse a scenario from JSON text (comments allowed). `origin` names the
/// source in diagnostics.
[[nodiscard]] inline ScenarioConfig parse_config_text(const std::string& text, const std::string& origin) {
    Json root;
    try {
        root = Json::parse(text, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
    } catch (const Json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");

    ScenarioConfig cfg;

    const Json& mode = detail::require_field(root, "mode", origin);
    if (!mode.is_string() || (mode != "coupled" && mode != "decoupled"))
        throw ConfigError(origin + ".mode: expected 'coupled' or 'decoupled'");
    cfg.mode = mode.get<std::string>();

    if (root.contains("seed")) {
        const Json& seed = root.at("seed");
        if (!seed.is_number_integer() || seed.get<long long>() < 0)
            throw ConfigError(origin + ".seed: expected a nonnegative integer");
        cfg.seed = seed.get<unsigned long>();
    }

    // --- network ---
    const Json& network = detail::require_field(root, "network", origin);
    const Json& nodes_json = detail::require_field(network, "nodes", origin + ".network");
    if (!nodes_json.is_array() || nodes_json.empty())
        throw ConfigError(origin + ".network.nodes: expected a non-empty array");

    std::vector<NodeParams> nodes;
    for (std::size_t i = 0; i < nodes_json.size(); ++i) {
        const std::string where = origin + ".network.nodes[" + std::to_string(i) + "]";
        const Json& nj = nodes_json[i];
        NodeParams nd;
        nd.id = detail::id_field(nj, "id", where);
        nd.tau = detail::number_field_or(nj, "tau", 1.0, where);
        nd.shunt = detail::number_field_or(nj, "shunt", 0.0, where);
        nd.theta0 = detail::number_field_or(nj, "theta0", 0.0, where);
        nd.gain = detail::parse_signal(detail::require_field(nj, "gain", where), where + ".gain");
        nd.reference =
            detail::parse_signal(detail::require_field(nj, "reference", where), where + ".reference");
        if (nj.is_object() && nj.contains("theta_perturbation"))
            nd.theta_perturbation = detail::parse_signal(nj.at("theta_perturbation"), where + ".theta_perturbation");
        nodes.push_back(std::move(nd));
    }

    std::vector<LineParams> lines;
    const Json& lines_json = detail::require_field(network, "lines", origin + ".network");
    if (!lines_json.is_array()) throw ConfigError(origin + ".network.lines: expected an array");
    for (std::size_t e = 0; e < lines_json.size(); ++e) {
        const std::string where = origin + ".network.lines[" + std::to_string(e) + "]";
        const Json& lj = lines_json[e];
        LineParams lp;
        lp.from = detail::id_field(lj, "from", where);
        lp.to = detail::id_field(lj, "to", where);
        lp.susceptance = detail::number_field(lj, "susceptance", where);
        lp.conductance = detail::number_field_or(lj, "conductance", 0.0, where);
        lines.push_back(std::move(lp));
    }

    std::vector<EdgeAngleOverride> overrides;
    if (root.contains("edge_angle_overrides")) {
        const Json& ov_json = root.at("edge_angle_overrides");
        if (!ov_json.is_array()) throw ConfigError(origin + ".edge_angle_overrides: expected an array");
        for (std::size_t e = 0; e < ov_json.size(); ++e) {
            const std::string where = origin + ".edge_angle_overrides[" + std::to_string(e) + "]";
            const Json& oj = ov_json[e];
            EdgeAngleOverride ov;
            ov.from = detail::id_field(oj, "from", where);
            ov.to = detail::id_field(oj, "to", where);
            ov.signal = detail::parse_signal(detail::require_field(oj, "signal", where), where + ".signal");
            overrides.push_back(std::move(ov));
        }
    }

    if (cfg.mode == "decoupled") {
        if (!overrides.empty())
            throw ConfigError(origin + ": decoupled mode forbids edge_angle_overrides");
        for (std::size_t i = 1; i < nodes.size(); ++i)
            if (nodes[i].theta0 != nodes[0].theta0)
                throw ConfigError(origin + ": decoupled mode requires identical theta0 on every node "
                                  "(nonzero spread between '" + nodes[0].id + "' and '" + nodes[i].id + "')");
        for (const NodeParams& nd : nodes)
            if (!nd.theta_perturbation.is_zero())
                throw ConfigError(origin + ": decoupled mode forbids theta_perturbation (node '" + nd.id +
                                  "')");
    }

    try {
        cfg.network = PowerNetwork::build(std::move(nodes), lines, overrides);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(origin + ".network: " + e.what());
    }
    const int n = cfg.network.size();

    // --- initial conditions ---
    const Json& ics = detail::require_field(root, "initial_conditions", origin);
    if (!ics.is_array() || ics.empty())
        throw ConfigError(origin + ".initial_conditions: expected a non-empty array of state vectors");
    for (std::size_t r = 0; r < ics.size(); ++r) {
        const std::string where = origin + ".initial_conditions[" + std::to_string(r) + "]";
        const Json& row = ics[r];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            throw ConfigError(where + ": expected an array of " + std::to_string(n) + " values");
        Vector v0(n);
        for (int i = 0; i < n; ++i) {
            v0[i] = detail::as_number(row[i], where + "[" + std::to_string(i) + "]");
            if (!(v0[i] >= 0.0))
                throw ConfigError(where + "[" + std::to_string(i) + "]: initial voltages must be >= 0");
        }
        cfg.initial_conditions.push_back(std::move(v0));
    }

    // --- integration window and settings ---
    const Json& sim = detail::require_field(root, "sim", origin);
    cfg.t0 = detail::number_field_or(sim, "t0", 0.0, origin + ".sim");
    cfg.t_end = detail::number_field(sim, "t_end", origin + ".sim");
    if (!(cfg.t_end >= cfg.t0)) throw ConfigError(origin + ".sim: t_end must be >= t0");
    cfg.settings.dt_init = detail::number_field_or(sim, "dt_init", cfg.settings.dt_init, origin + ".sim");
    cfg.settings.dt_min = detail::number_field_or(sim, "dt_min", cfg.settings.dt_min, origin + ".sim");
    cfg.settings.dt_max = detail::number_field_or(sim, "dt_max", cfg.settings.dt_max, origin + ".sim");
    cfg.settings.rel_tol = detail::number_field_or(sim, "rel_tol", cfg.settings.rel_tol, origin + ".sim");
    cfg.settings.abs_tol = detail::number_field_or(sim, "abs_tol", cfg.settings.abs_tol, origin + ".sim");
    cfg.settings.record_stride =
        detail::number_field_or(sim, "record_stride", cfg.settings.record_stride, origin + ".sim");
    try {
        cfg.settings.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(origin + ".sim: " + e.what());
    }

    // --- checks ---
    if (root.contains("checks")) {
        const Json& checks = root.at("checks");
        if (!checks.is_array()) throw ConfigError(origin + ".checks: expected an array");
        for (std::size_t c = 0; c < checks.size(); ++c) {
            const std::string where = origin + ".checks[" + std::to_string(c) + "]";
            const Json& cj = checks[c];
            CheckRequest req;
            if (cj.is_string()) {
                req.name = cj.get<std::string>();
            } else if (cj.is_object()) {
                const Json& name = detail::require_field(cj, "name", where);
                if (!name.is_string()) throw ConfigError(where + ".name: expected a string");
                req.name = name.get<std::string>();
                for (auto it = cj.begin(); it != cj.end(); ++it) {
                    if (it.key() == "name") continue;
                    req.params[it.key()] = detail::as_number(it.value(), where + "." + it.key());
                }
            } else {
                throw ConfigError(where + ": expected a check name or an object with a 'name' field");
            }
            if (detail::known_checks().count(req.name) == 0)
                throw ConfigError(where + ": unknown check '" + req.name + "'");
            if (req.name == "cooperativity" && req.params.count("beta") == 0)
                throw ConfigError(where + ": cooperativity requires a 'beta' parameter");
            if (req.name == "monotone_order" && cfg.initial_conditions.size() != 2)
                throw ConfigError(where + ": monotone_order requires exactly two initial conditions");
            cfg.checks.push_back(std::move(req));
        }
    }
    return cfg;
}

/// Parse a scenario config file (JSON with comments).
[[nodiscard]] inline ScenarioConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

/// Canonical JSON serialization of a parsed scenario. parse -> serialize ->
/// parse is the identity on semantic content.
[[nodiscard]] inline Json to_json(const ScenarioConfig& cfg) {
    Json nodes = Json::array();
    for (const NodeParams& nd : cfg.network.nodes()) {
        Json nj{{"id", nd.id},
                {"tau", nd.tau},
                {"shunt", nd.shunt},
                {"theta0", nd.theta0},
                {"gain", detail::signal_to_json(nd.gain)},
                {"reference", detail::signal_to_json(nd.reference)}};
        if (!nd.theta_perturbation.is_zero())
            nj["theta_perturbation"] = detail::signal_to_json(nd.theta_perturbation);
        nodes.push_back(std::move(nj));
    }
    Json lines = Json::array();
    Json overrides = Json::array();
    for (const Line& ln : cfg.network.lines()) {
        const std::string from = cfg.network.node(ln.from).id;
        const std::string to = cfg.network.node(ln.to).id;
        lines.push_back(Json{{"from", from},
                             {"to", to},
                             {"susceptance", ln.susceptance},
                             {"conductance", ln.conductance}});
        if (ln.angle_override)
            overrides.push_back(
                Json{{"from", from}, {"to", to}, {"signal", detail::signal_to_json(*ln.angle_override)}});
    }

    Json ics = Json::array();
    for (const Vector& v0 : cfg.initial_conditions) {
        Json row = Json::array();
        for (Eigen::Index i = 0; i < v0.size(); ++i) row.push_back(v0[i]);
        ics.push_back(std::move(row));
    }

    Json checks = Json::array();
    for (const CheckRequest& req : cfg.checks) {
        if (req.params.empty()) {
            checks.push_back(req.name);
        } else {
            Json cj{{"name", req.name}};
            for (const auto& [key, value] : req.params) cj[key] = value;
            checks.push_back(std::move(cj));
        }
    }

    Json root{{"mode", cfg.mode},
              {"seed", cfg.seed},
              {"network", Json{{"nodes", std::move(nodes)}, {"lines", std::move(lines)}}},
              {"initial_conditions", std::move(ics)},
              {"sim", Json{{"t0", cfg.t0},
                           {"t_end", cfg.t_end},
                           {"dt_init", cfg.settings.dt_init},
                           {"dt_min", cfg.settings.dt_min},
                           {"dt_max", cfg.settings.dt_max},
                           {"rel_tol", cfg.settings.rel_tol},
                           {"abs_tol", cfg.settings.abs_tol},
                           {"record_stride", cfg.settings.record_stride}}},
              {"checks", std::move(checks)}};
    if (!overrides.empty()) root["edge_angle_overrides"] = std::move(overrides);
    return root;
}

}  // namespace lvnet
