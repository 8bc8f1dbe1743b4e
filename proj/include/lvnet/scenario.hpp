#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "lvnet/network.hpp"

namespace lvnet {

// ============================================================================
// Time evaluation of the network's signals
// ============================================================================

/// Nodal angles at time t: theta0_i + theta_perturbation_i(t).
[[nodiscard]] inline Vector nodal_angles(const PowerNetwork& net, double t) {
    Vector theta(net.size());
    for (int i = 0; i < net.size(); ++i)
        theta[i] = net.node(i).theta0 + net.node(i).theta_perturbation.eval(t);
    return theta;
}

/// Per-line relative angles at time t. Lines with an angle override follow
/// (theta0_i - theta0_j) + override(t); all others derive from nodal angles.
[[nodiscard]] inline Vector edge_angles(const PowerNetwork& net, double t) {
    Vector rel(net.line_count());
    for (int e = 0; e < net.line_count(); ++e) {
        const Line& ln = net.lines()[e];
        if (ln.angle_override) {
            rel[e] = (net.node(ln.from).theta0 - net.node(ln.to).theta0) + ln.angle_override->eval(t);
        } else {
            const double a = net.node(ln.from).theta0 + net.node(ln.from).theta_perturbation.eval(t);
            const double b = net.node(ln.to).theta0 + net.node(ln.to).theta_perturbation.eval(t);
            rel[e] = a - b;
        }
    }
    return rel;
}

[[nodiscard]] inline Vector gains_at(const PowerNetwork& net, double t) {
    Vector k(net.size());
    for (int i = 0; i < net.size(); ++i) k[i] = net.node(i).gain.eval(t);
    return k;
}

[[nodiscard]] inline Vector references_at(const PowerNetwork& net, double t) {
    Vector v(net.size());
    for (int i = 0; i < net.size(); ++i) v[i] = net.node(i).reference.eval(t);
    return v;
}

// ============================================================================
// Freezing
// ============================================================================

/// All signal values pinned at one instant sigma. theta_rel carries the
/// per-line relative angles (including overrides), which is what the frozen
/// interaction matrix is assembled from.
struct FrozenScenario {
    Vector theta;      ///< nodal angles at sigma
    Vector theta_rel;  ///< per-line relative angles at sigma
    Vector k;
    Vector v_star;
    double sigma = 0.0;
};

[[nodiscard]] inline FrozenScenario freeze(const PowerNetwork& net, double sigma) {
    FrozenScenario fz;
    fz.sigma = sigma;
    fz.theta = nodal_angles(net, sigma);
    fz.theta_rel = edge_angles(net, sigma);
    fz.k = gains_at(net, sigma);
    fz.v_star = references_at(net, sigma);
    for (int i = 0; i < net.size(); ++i)
        if (!(fz.k[i] > 0.0))
            throw std::invalid_argument("node '" + net.node(i).id + "': frozen droop gain k(" +
                                        detail::format_double(sigma) + ") = " + detail::format_double(fz.k[i]) +
                                        " is not positive");
    return fz;
}

// ============================================================================
// Envelope bounds
// ============================================================================

/// Uniform bounds c_k >= k_i(t) and c_r >= |k_i(t) V_i*(t)| for all i, t.
///
/// The analytic part uses the signals' exact envelopes (for two positive
/// signals the product of upper envelopes bounds the product); the supplied
/// grid only sharpens the reported values diagnostically, it can never exceed
/// the envelopes. gains_positive records whether every gain's lower envelope
/// stays strictly above zero.
struct Assumption1Bounds {
    double c_k = 0.0;
    double c_r = 0.0;
    bool gains_positive = true;
};

[[nodiscard]] inline Assumption1Bounds assumption1_bounds(const PowerNetwork& net,
                                                          const std::vector<double>& t_grid) {
    if (t_grid.empty()) throw std::invalid_argument("assumption1_bounds requires a non-empty time grid");
    Assumption1Bounds out;
    for (int i = 0; i < net.size(); ++i) {
        const NodeParams& nd = net.node(i);
        out.c_k = std::max(out.c_k, nd.gain.upper_envelope());
        out.c_r = std::max(out.c_r, nd.gain.upper_envelope() * nd.reference.upper_envelope());
        if (!(nd.gain.lower_envelope() > 0.0)) out.gains_positive = false;
    }
    for (double t : t_grid) {
        for (int i = 0; i < net.size(); ++i) {
            const double k = net.node(i).gain.eval(t);
            out.c_k = std::max(out.c_k, k);
            out.c_r = std::max(out.c_r, std::abs(k * net.node(i).reference.eval(t)));
        }
    }
    return out;
}

}  // namespace lvnet
