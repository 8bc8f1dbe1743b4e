#pragma once

// Shared scenario builders for the test suite: the five-node demonstration
// network (radial-ish grid with a triangle), its decoupled variant, the
// time-varying variant driving the boundedness experiments, and a
// configurable two-node net for hand-checked oracles.

#include <lvnet/network.hpp>
#include <lvnet/signals.hpp>

#include <numbers>
#include <string>
#include <vector>

namespace fixtures {

using lvnet::EdgeAngleOverride;
using lvnet::LineParams;
using lvnet::NodeParams;
using lvnet::PowerNetwork;
using lvnet::SignalSpec;
using lvnet::Vector;

inline constexpr double kPi = std::numbers::pi;

inline std::vector<LineParams> demo_lines() {
    return {{"1", "2", -1.5, 0.75},
            {"1", "3", -1.0, 0.5},
            {"2", "3", -0.7, 0.35},
            {"3", "4", -1.8, 0.9},
            {"4", "5", -1.2, 0.6}};
}

inline std::vector<double> demo_theta0() {
    return {kPi / 20.0, kPi / 25.0, kPi / 30.0, kPi / 35.0, kPi / 40.0};
}

inline Vector demo_theta0_vector() {
    const std::vector<double> theta = demo_theta0();
    return Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()));
}

/// Five-node network with constant gain/reference and the spread of initial
/// angles used throughout; theta0 can be zeroed for decoupled scenarios.
inline PowerNetwork demo_network(double gain = 5.0, double reference = 2.0, bool with_theta0 = true) {
    std::vector<NodeParams> nodes;
    const std::vector<double> theta0 = demo_theta0();
    for (int i = 0; i < 5; ++i) {
        NodeParams nd;
        nd.id = std::to_string(i + 1);
        nd.theta0 = with_theta0 ? theta0[static_cast<std::size_t>(i)] : 0.0;
        nd.gain = SignalSpec::constant(gain);
        nd.reference = SignalSpec::constant(reference);
        nodes.push_back(std::move(nd));
    }
    return PowerNetwork::build(std::move(nodes), demo_lines());
}

inline PowerNetwork demo_decoupled(double gain = 5.0, double reference = 2.0) {
    return demo_network(gain, reference, /*with_theta0=*/false);
}

/// Time-varying variant: sinusoidal references 2 +/- 0.2 (sine on odd nodes,
/// cosine on even ones) and every line's relative angle overridden to
/// theta0_{i,j} + (pi/10) sin(120 t).
inline PowerNetwork demo_time_varying() {
    std::vector<NodeParams> nodes;
    const std::vector<double> theta0 = demo_theta0();
    for (int i = 0; i < 5; ++i) {
        NodeParams nd;
        nd.id = std::to_string(i + 1);
        nd.theta0 = theta0[static_cast<std::size_t>(i)];
        nd.gain = SignalSpec::constant(5.0);
        nd.reference = (i % 2 == 0) ? SignalSpec::sinusoid(2.0, 0.2, 1.0)
                                    : SignalSpec::sinusoid(2.0, 0.2, 1.0, kPi / 2.0);
        nodes.push_back(std::move(nd));
    }
    std::vector<EdgeAngleOverride> overrides;
    for (const LineParams& lp : demo_lines())
        overrides.push_back({lp.from, lp.to, SignalSpec::sinusoid(0.0, kPi / 10.0, 120.0)});
    return PowerNetwork::build(std::move(nodes), demo_lines(), overrides);
}

struct TwoNodeSpec {
    double susceptance = -1.0;
    double conductance = 0.0;
    double shunt1 = 0.0;
    double shunt2 = 0.0;
    double gain1 = 1.0;
    double gain2 = 1.0;
    double reference1 = 1.0;
    double reference2 = 1.0;
    double theta0_1 = 0.0;
    double theta0_2 = 0.0;
};

inline PowerNetwork two_node(const TwoNodeSpec& spec = {}) {
    NodeParams a;
    a.id = "1";
    a.shunt = spec.shunt1;
    a.theta0 = spec.theta0_1;
    a.gain = SignalSpec::constant(spec.gain1);
    a.reference = SignalSpec::constant(spec.reference1);
    NodeParams b;
    b.id = "2";
    b.shunt = spec.shunt2;
    b.theta0 = spec.theta0_2;
    b.gain = SignalSpec::constant(spec.gain2);
    b.reference = SignalSpec::constant(spec.reference2);
    return PowerNetwork::build({a, b}, {{"1", "2", spec.susceptance, spec.conductance}});
}

inline PowerNetwork single_node(double shunt = 0.0, double gain = 1.0, double reference = 3.0) {
    NodeParams nd;
    nd.id = "1";
    nd.shunt = shunt;
    nd.gain = SignalSpec::constant(gain);
    nd.reference = SignalSpec::constant(reference);
    return PowerNetwork::build({nd}, {});
}

inline Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

}  // namespace fixtures
