#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lvnet/certify.hpp"
#include "lvnet/sim.hpp"

namespace lvnet {

// ============================================================================
// Property reports
// ============================================================================

/// Outcome of one empirical trajectory check. worst_violation is measured in
/// the property's own units (or normalized by the per-clause tolerance for
/// composite checks, where holds means worst_violation <= 1); worst_time and
/// worst_node locate it when meaningful.
struct PropertyReport {
    std::string property;
    bool holds = false;
    double worst_violation = 0.0;
    double worst_time = 0.0;
    int worst_node = -1;
    long samples_checked = 0;
    std::string notes;
    std::vector<std::pair<std::string, double>> values;
};

namespace detail {

inline void require_samples(const Trajectory& traj, int at_least, const char* who) {
    if (traj.samples() < at_least)
        throw std::invalid_argument(std::string(who) + " requires a trajectory with at least " +
                                    std::to_string(at_least) + " samples, got " +
                                    std::to_string(traj.samples()));
}

inline void require_shared_grid(const Trajectory& a, const Trajectory& b, const char* who) {
    if (a.dimension() != b.dimension())
        throw std::invalid_argument(std::string(who) + ": trajectories have different dimensions");
    if (a.times != b.times)
        throw std::invalid_argument(std::string(who) +
                                    ": trajectories do not share a record grid (same t0, t_end and "
                                    "record_stride are required)");
}

/// Least-squares slope of y over x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    return den == 0.0 ? 0.0 : num / den;
}

}  // namespace detail

// ============================================================================
// Trajectory checks
// ============================================================================

/// Every recorded component stays above -tol. Interior trajectories also
/// report their smallest component (distance from the boundary).
[[nodiscard]] inline PropertyReport check_positivity(const Trajectory& traj, double tol = 0.0) {
    detail::require_samples(traj, 1, "check_positivity");
    PropertyReport rep;
    rep.property = "positivity";
    double min_component = std::numeric_limits<double>::infinity();
    for (int s = 0; s < traj.samples(); ++s)
        for (int i = 0; i < traj.dimension(); ++i) {
            ++rep.samples_checked;
            if (traj.states[s][i] < min_component) {
                min_component = traj.states[s][i];
                rep.worst_time = traj.times[s];
                rep.worst_node = i;
            }
        }
    rep.worst_violation = std::max(0.0, -min_component);
    rep.holds = rep.worst_violation <= tol;
    rep.values.emplace_back("min_component", min_component);
    rep.notes = min_component > 0.0 ? "trajectory stays in the open orthant" : "trajectory touches the boundary";
    return rep;
}

/// Componentwise order between two runs sharing a record grid: lower <= upper
/// + tol at every stamp. The initial states must already be ordered.
[[nodiscard]] inline PropertyReport check_monotone_order(const Trajectory& lower, const Trajectory& upper,
                                                         double tol = 1e-7) {
    detail::require_samples(lower, 1, "check_monotone_order");
    detail::require_shared_grid(lower, upper, "check_monotone_order");
    for (int i = 0; i < lower.dimension(); ++i)
        if (lower.states[0][i] > upper.states[0][i])
            throw std::invalid_argument("check_monotone_order: initial conditions are not ordered "
                                        "(component " + std::to_string(i) + ")");
    PropertyReport rep;
    rep.property = "monotone_order";
    rep.worst_violation = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < lower.samples(); ++s)
        for (int i = 0; i < lower.dimension(); ++i) {
            ++rep.samples_checked;
            const double gap = lower.states[s][i] - upper.states[s][i];
            if (gap > rep.worst_violation) {
                rep.worst_violation = gap;
                rep.worst_time = lower.times[s];
                rep.worst_node = i;
            }
        }
    rep.holds = rep.worst_violation <= tol;
    rep.notes = "largest (lower - upper) gap across the shared grid";
    return rep;
}

namespace detail {

/// Shared machinery for descent checks: series must be non-increasing up to
/// monotone_tol, and the discrete rate must match rate_fn at interval
/// midpoints within rate_rel_tol (intervals whose reference rate is below a
/// noise floor relative to the largest rate are skipped — near the attractor
/// the series is cancellation noise).
template <class RateFn>
PropertyReport check_descent(const Trajectory& traj, const std::vector<double>& series, RateFn&& rate_fn,
                             const char* property, double monotone_tol, double rate_rel_tol) {
    PropertyReport rep;
    rep.property = property;

    double max_increase = -std::numeric_limits<double>::infinity();
    for (int s = 0; s + 1 < traj.samples(); ++s) {
        const double inc = series[s + 1] - series[s];
        if (inc > max_increase) {
            max_increase = inc;
            rep.worst_time = traj.times[s + 1];
        }
    }

    std::vector<double> mid_rates(traj.samples() - 1);
    double max_abs_rate = 0.0;
    for (int s = 0; s + 1 < traj.samples(); ++s) {
        const Vector mid = 0.5 * (traj.states[s] + traj.states[s + 1]);
        mid_rates[s] = rate_fn(mid);
        max_abs_rate = std::max(max_abs_rate, std::abs(mid_rates[s]));
    }
    const double floor = 1e-8 * max_abs_rate;

    double max_mismatch = 0.0;
    double worst_mismatch_time = traj.times[0];
    std::vector<double> mismatches;
    for (int s = 0; s + 1 < traj.samples(); ++s) {
        ++rep.samples_checked;
        if (std::abs(mid_rates[s]) <= floor) continue;
        const double discrete = (series[s + 1] - series[s]) / (traj.times[s + 1] - traj.times[s]);
        const double rel = std::abs(discrete - mid_rates[s]) / std::abs(mid_rates[s]);
        mismatches.push_back(rel);
        if (rel > max_mismatch) {
            max_mismatch = rel;
            worst_mismatch_time = traj.times[s + 1];
        }
    }
    double median_mismatch = 0.0;
    if (!mismatches.empty()) {
        auto nth = mismatches.begin() + static_cast<long>(mismatches.size() / 2);
        std::nth_element(mismatches.begin(), nth, mismatches.end());
        median_mismatch = *nth;
    }

    const double monotone_ratio = std::max(0.0, max_increase) / monotone_tol;
    const double rate_ratio = max_mismatch / rate_rel_tol;
    rep.worst_violation = std::max(monotone_ratio, rate_ratio);
    if (rate_ratio > monotone_ratio) rep.worst_time = worst_mismatch_time;
    rep.holds = rep.worst_violation <= 1.0;
    rep.values.emplace_back("max_increase", max_increase);
    rep.values.emplace_back("max_rate_mismatch", max_mismatch);
    rep.values.emplace_back("median_rate_mismatch", median_mismatch);
    rep.values.emplace_back("initial_value", series.front());
    rep.values.emplace_back("final_value", series.back());
    rep.notes = std::string("composite: worst_violation is the larger of max_increase/") +
                detail::format_double(monotone_tol) + " and max_rate_mismatch/" + detail::format_double(rate_rel_tol);
    return rep;
}

}  // namespace detail

/// Entropy Lyapunov descent along a decoupled run (unit time constants):
/// V(t) non-increasing within 1e-8, and the discrete rate matching
/// (V - vbar)^T Psi^l (V - vbar) at interval midpoints within 5%.
[[nodiscard]] inline PropertyReport check_lyapunov_descent(const Trajectory& traj, const Vector& v_bar,
                                                           const Matrix& psi_l) {
    detail::require_samples(traj, 2, "check_lyapunov_descent");
    std::vector<double> entropy(traj.samples());
    for (int s = 0; s < traj.samples(); ++s) entropy[s] = lyapunov_entropy(traj.states[s], v_bar);
    auto rate = [&](const Vector& mid) { return lyapunov_entropy_rate(mid, v_bar, psi_l); };
    return detail::check_descent(traj, entropy, rate, "lyapunov_descent", 1e-8, 0.05);
}

/// l1-norm descent along a drift-only frozen run: sum_i V_i non-increasing
/// within 1e-8 and the discrete rate matching V^T Psi V within 5%.
[[nodiscard]] inline PropertyReport check_l1_descent_frozen(const Trajectory& traj, const Matrix& psi) {
    detail::require_samples(traj, 2, "check_l1_descent_frozen");
    std::vector<double> l1(traj.samples());
    for (int s = 0; s < traj.samples(); ++s) l1[s] = traj.states[s].sum();
    auto rate = [&](const Vector& mid) { return lyapunov_l1_rate(mid, psi); };
    return detail::check_descent(traj, l1, rate, "l1_descent_frozen", 1e-8, 0.05);
}

/// Empirical ultimate bound R = sup of ||V(t)||_inf after the transient.
struct UltimateBound {
    double radius = 0.0;
    PropertyReport report;
};

/// The report holds when the bound is not an artifact of terminal growth: the
/// least-squares slope of the running maximum of ||V(t)||_inf over the last
/// decile of the post-transient window stays at or below 1e-3 (the running
/// max of a bounded signal flattens once the sup is attained; a diverging run
/// keeps raising it).
[[nodiscard]] inline UltimateBound estimate_ultimate_bound(const Trajectory& traj,
                                                           double transient_fraction = 0.5) {
    if (!(transient_fraction >= 0.0) || !(transient_fraction < 1.0))
        throw std::invalid_argument("estimate_ultimate_bound: transient_fraction must lie in [0, 1)");
    detail::require_samples(traj, 2, "estimate_ultimate_bound");
    const int last = traj.samples() - 1;
    const int start = static_cast<int>(std::ceil(transient_fraction * last));
    const int window = last - start + 1;
    if (window < 10)
        throw std::invalid_argument("estimate_ultimate_bound: post-transient window has only " +
                                    std::to_string(window) + " samples; need at least 10");

    UltimateBound out;
    PropertyReport& rep = out.report;
    rep.property = "ultimate_bound";

    std::vector<double> running_max(window);
    double sup = -std::numeric_limits<double>::infinity();
    for (int s = start; s <= last; ++s) {
        const double norm = traj.states[s].cwiseAbs().maxCoeff();
        ++rep.samples_checked;
        if (norm > sup) {
            sup = norm;
            rep.worst_time = traj.times[s];
        }
        running_max[s - start] = sup;
    }
    out.radius = sup;

    const int tail_start = static_cast<int>(std::floor(0.9 * (window - 1)));
    std::vector<double> tail_t(running_max.size() - tail_start), tail_g(running_max.size() - tail_start);
    for (std::size_t i = tail_start; i < running_max.size(); ++i) {
        tail_t[i - tail_start] = traj.times[start + static_cast<int>(i)];
        tail_g[i - tail_start] = running_max[i];
    }
    const double slope = detail::ls_slope(tail_t, tail_g);
    rep.worst_violation = slope;
    rep.holds = slope <= 1e-3;
    rep.values.emplace_back("radius", sup);
    rep.values.emplace_back("tail_slope", slope);
    rep.notes = "R attained at worst_time; tail slope of the running sup must stay <= 1e-3";
    return out;
}

/// Quadratic homogeneity of the drift f_H(V) = diag(tau)^-1 diag(V) Psi V:
/// f_H(sV) must equal s^2 f_H(V) to relative precision 1e-10 on seeded random
/// states and scales.
[[nodiscard]] inline PropertyReport check_homogeneity(const PowerNetwork& net, const Vector& theta,
                                                      const Vector& k, int samples, unsigned seed) {
    if (samples <= 0) throw std::invalid_argument("check_homogeneity: samples must be > 0");
    const Matrix psi = interaction_matrix_coupled(net, theta, k).entries;
    const Vector zero_drive = Vector::Zero(net.size());

    PropertyReport rep;
    rep.property = "homogeneity";
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> state_dist(0.0, 3.0);
    std::uniform_real_distribution<double> scale_dist(0.0, 4.0);
    std::uniform_int_distribution<int> node_dist(0, net.size() - 1);

    double worst = 0.0;
    for (int sample = 0; sample < samples; ++sample) {
        Vector v(net.size());
        for (int i = 0; i < net.size(); ++i) v[i] = state_dist(rng);
        if (sample % 7 == 3) v[node_dist(rng)] = 0.0;  // exercise boundary components
        const double s = sample == 0 ? 0.0 : sample == 1 ? 1.0 : scale_dist(rng);

        const Vector lhs = lotka_volterra_rhs(net.tau(), (s * v).eval(), psi, zero_drive);
        const Vector rhs = s * s * lotka_volterra_rhs(net.tau(), v, psi, zero_drive);
        for (int i = 0; i < net.size(); ++i) {
            ++rep.samples_checked;
            const double denom = std::max(std::abs(lhs[i]), std::abs(rhs[i]));
            const double rel = denom == 0.0 ? 0.0 : std::abs(lhs[i] - rhs[i]) / denom;
            if (rel > worst) {
                worst = rel;
                rep.worst_node = i;
                rep.worst_time = s;  // the scale, not a time; see notes
            }
        }
    }
    rep.worst_violation = worst;
    rep.holds = worst <= 1e-10;
    rep.notes = "worst_time column carries the scaling factor s of the worst sample";
    return rep;
}

/// Envelope form of the persistent-signal assumption: every gain stays
/// strictly positive and the uniform bounds c_k, c_r are finite.
[[nodiscard]] inline PropertyReport check_assumption1(const PowerNetwork& net) {
    std::vector<double> grid(401);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 0.05 * static_cast<double>(i);
    const Assumption1Bounds bounds = assumption1_bounds(net, grid);

    PropertyReport rep;
    rep.property = "assumption1";
    rep.samples_checked = static_cast<long>(grid.size()) * net.size();
    double min_gain_floor = std::numeric_limits<double>::infinity();
    for (int i = 0; i < net.size(); ++i)
        min_gain_floor = std::min(min_gain_floor, net.node(i).gain.lower_envelope());
    rep.holds = bounds.gains_positive && std::isfinite(bounds.c_k) && std::isfinite(bounds.c_r);
    rep.worst_violation = rep.holds ? 0.0 : std::max(0.0, -min_gain_floor) + (std::isfinite(bounds.c_k) ? 0.0 : 1.0);
    rep.values.emplace_back("c_k", bounds.c_k);
    rep.values.emplace_back("c_r", bounds.c_r);
    rep.values.emplace_back("min_gain_envelope", min_gain_floor);
    rep.notes = "envelope bounds: c_k >= k_i(t), c_r >= |k_i(t) V_i*(t)| for all i, t";
    return rep;
}

}  // namespace lvnet
