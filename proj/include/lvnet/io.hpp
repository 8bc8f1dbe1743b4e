#pragma once

#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "lvnet/certify.hpp"
#include "lvnet/format.hpp"
#include "lvnet/sim.hpp"
#include "lvnet/verify.hpp"

namespace lvnet {

inline constexpr const char* kToolVersion = "0.1.0";

namespace detail {

[[nodiscard]] inline double parse_double(std::string_view token, const std::string& where) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw std::runtime_error(where + ": malformed number '" + std::string(token) + "'");
    return value;
}

/// JSON has no inf/nan literals; report margins can be +inf by design.
[[nodiscard]] inline Json json_number(double x) {
    if (std::isfinite(x)) return Json(x);
    if (std::isnan(x)) return Json("nan");
    return Json(x > 0 ? "inf" : "-inf");
}

[[nodiscard]] inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

[[nodiscard]] inline std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

}  // namespace detail

/// Write a trajectory as CSV: header `t,V_1,...,V_n`, one row per sample,
/// shortest round-trip decimal for every value. Output is deterministic.
inline void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
    const int n = traj.dimension();
    out << 't';
    for (int i = 0; i < n; ++i) out << ",V_" << (i + 1);
    out << '\n';
    for (std::size_t s = 0; s < traj.samples(); ++s) {
        out << detail::format_double(traj.times[s]);
        for (int i = 0; i < n; ++i) out << ',' << detail::format_double(traj.states[s][i]);
        out << '\n';
    }
}

inline void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_trajectory_csv(traj, out);
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

/// Read a trajectory CSV written by write_trajectory_csv (or any file with the
/// same header/row shape). Errors carry the offending line number.
[[nodiscard]] inline Trajectory read_trajectory_csv(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(origin + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    int n = 0;
    {
        std::stringstream header(line);
        std::string col;
        if (!std::getline(header, col, ',') || col != "t")
            throw std::runtime_error(origin + ":1: header must start with 't'");
        while (std::getline(header, col, ',')) {
            ++n;
            if (col != "V_" + std::to_string(n))
                throw std::runtime_error(origin + ":1: expected column 'V_" + std::to_string(n) +
                                         "', got '" + col + "'");
        }
        if (n == 0) throw std::runtime_error(origin + ":1: no state columns");
    }

    Trajectory traj;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        std::stringstream row(line);
        std::string token;
        if (!std::getline(row, token, ',')) throw std::runtime_error(where + ": missing time value");
        traj.times.push_back(detail::parse_double(token, where));
        Vector state(n);
        for (int i = 0; i < n; ++i) {
            if (!std::getline(row, token, ','))
                throw std::runtime_error(where + ": expected " + std::to_string(n + 1) + " columns");
            state[i] = detail::parse_double(token, where);
        }
        if (std::getline(row, token, ','))
            throw std::runtime_error(where + ": too many columns");
        traj.states.push_back(std::move(state));
    }
    return traj;
}

[[nodiscard]] inline Trajectory read_trajectory_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open trajectory file '" + path + "'");
    return read_trajectory_csv(in, path);
}

[[nodiscard]] inline Json to_json(const CertificateReport& report) {
    Json witnesses = Json::array();
    for (const Witness& w : report.witnesses)
        witnesses.push_back(Json{{"row", w.row}, {"col", w.col}, {"value", detail::json_number(w.value)}});
    return Json{{"kind", report.kind},
                {"holds", report.holds},
                {"margin", detail::json_number(report.margin)},
                {"witnesses", std::move(witnesses)},
                {"notes", report.notes}};
}

[[nodiscard]] inline Json to_json(const PropertyReport& report) {
    Json values = Json::object();
    for (const auto& [key, value] : report.values) values[key] = detail::json_number(value);
    return Json{{"property", report.property},
                {"holds", report.holds},
                {"worst_violation", detail::json_number(report.worst_violation)},
                {"worst_time", detail::json_number(report.worst_time)},
                {"worst_node", report.worst_node},
                {"samples_checked", report.samples_checked},
                {"values", std::move(values)},
                {"notes", report.notes}};
}

[[nodiscard]] inline Json to_json(const EquilibriumResult& eq) {
    Json v_bar = Json::array();
    for (Eigen::Index i = 0; i < eq.v_bar.size(); ++i) v_bar.push_back(eq.v_bar[i]);
    return Json{{"v_bar", std::move(v_bar)},
                {"interior", eq.interior},
                {"residual", detail::json_number(eq.residual)}};
}

/// Everything one CLI invocation produced: provenance, reports, file names of
/// trajectories written alongside, and the aggregate verdict.
struct RunBundle {
    std::string tool_version = kToolVersion;
    std::string config_path;
    std::string config_hash;  // fnv1a-64 of the config bytes, hex
    unsigned long seed = 0;
    std::vector<std::string> trajectory_files;
    std::vector<CertificateReport> certificates;
    std::vector<PropertyReport> properties;
    std::optional<EquilibriumResult> equilibrium;
    std::vector<std::string> warnings;

    [[nodiscard]] bool all_hold() const {
        for (const CertificateReport& c : certificates)
            if (!c.holds) return false;
        for (const PropertyReport& p : properties)
            if (!p.holds) return false;
        return true;
    }
};

[[nodiscard]] inline Json to_json(const RunBundle& bundle) {
    Json certificates = Json::array();
    for (const CertificateReport& c : bundle.certificates) certificates.push_back(to_json(c));
    Json properties = Json::array();
    for (const PropertyReport& p : bundle.properties) properties.push_back(to_json(p));
    Json root{{"tool_version", bundle.tool_version},
              {"config_path", bundle.config_path},
              {"config_hash", bundle.config_hash},
              {"seed", bundle.seed},
              {"trajectory_files", bundle.trajectory_files},
              {"certificates", std::move(certificates)},
              {"properties", std::move(properties)},
              {"warnings", bundle.warnings},
              {"all_hold", bundle.all_hold()}};
    if (bundle.equilibrium) root["equilibrium"] = to_json(*bundle.equilibrium);
    return root;
}

inline void write_run_bundle(const RunBundle& bundle, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << to_json(bundle).dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

[[nodiscard]] inline std::string hash_config_text(std::string_view text) {
    return detail::hex64(detail::fnv1a64(text));
}

}  // namespace lvnet
