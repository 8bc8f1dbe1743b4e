#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lvnet/scenario.hpp"

namespace lvnet {

// ============================================================================
// Settings and trajectory containers
// ============================================================================

struct IntegratorSettings {
    double dt_init = 1e-3;
    double dt_min = 1e-10;
    double dt_max = 1e-2;
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double record_stride = 1e-2;
    bool adaptive = true;  ///< false pins the step size to dt_init (error control off)

    void validate() const {
        if (!(dt_min > 0.0) || !(dt_min <= dt_init) || !(dt_init <= dt_max))
            throw std::invalid_argument("integrator settings require 0 < dt_min <= dt_init <= dt_max");
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw std::invalid_argument("integrator tolerances must be > 0");
        if (!(record_stride > 0.0))
            throw std::invalid_argument("record_stride must be > 0");
    }
};

struct TrajectoryMeta {
    std::string scenario_id;
    IntegratorSettings settings;
    long accepted_steps = 0;
    long rejected_error_steps = 0;
    long rejected_positivity_steps = 0;
    long rhs_evaluations = 0;
};

/// Sampled solution: states[s] is the full state at times[s]. Stamps land
/// exactly on t0 + j*record_stride (plus the final time), so trajectories
/// produced with the same window and stride share their grid bit-for-bit.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    TrajectoryMeta meta;

    [[nodiscard]] int samples() const { return static_cast<int>(times.size()); }
    [[nodiscard]] int dimension() const { return times.empty() ? 0 : static_cast<int>(states[0].size()); }
};

/// Step failure with the integration time and state at the point of failure.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double time, Vector state)
        : std::runtime_error(format(what, time, state)), time_(time), state_(std::move(state)) {}

    [[nodiscard]] double time() const { return time_; }
    [[nodiscard]] const Vector& state() const { return state_; }

private:
    static std::string format(const std::string& what, double time, const Vector& state) {
        std::ostringstream os;
        os << what << " at t = " << time << ", state = [";
        for (Eigen::Index i = 0; i < state.size() && i < 8; ++i) {
            if (i) os << ", ";
            os << state[i];
        }
        if (state.size() > 8) os << ", ...";
        os << "]";
        return os.str();
    }

    double time_;
    Vector state_;
};

// ============================================================================
// Dormand-Prince 5(4) stepper
// ============================================================================

namespace detail {

// Butcher tableau of the embedded 5(4) pair; e[] are the coefficients of the
// difference between the 5th- and 4th-order solutions.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                            a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                            b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
};

constexpr long kMaxTotalSteps = 20'000'000;

template <class Rhs>
Trajectory integrate_core(Rhs&& rhs, const Vector& v0, double t0, double t_end,
                          const IntegratorSettings& settings) {
    settings.validate();
    if (!(t_end >= t0)) throw std::invalid_argument("integration window requires t_end >= t0");
    for (Eigen::Index i = 0; i < v0.size(); ++i) {
        if (!std::isfinite(v0[i]))
            throw std::invalid_argument("initial state component " + std::to_string(i) + " is not finite");
        if (v0[i] < 0.0)
            throw std::invalid_argument("initial state component " + std::to_string(i) +
                                        " is negative; states live in the nonnegative orthant");
    }

    Trajectory traj;
    traj.meta.settings = settings;
    traj.times.push_back(t0);
    traj.states.push_back(v0);
    if (t_end == t0) return traj;

    const Eigen::Index n = v0.size();
    std::vector<char> pinned(n, 0);
    for (Eigen::Index i = 0; i < n; ++i) pinned[i] = v0[i] == 0.0;

    using T = Dopri5;
    Vector y = v0;
    double t = t0;
    long stamp = 1;
    auto stamp_time = [&](long j) {
        const double s = t0 + static_cast<double>(j) * settings.record_stride;
        return s >= t_end ? t_end : s;
    };
    double next_rec = stamp_time(stamp);

    auto eval = [&](double tt, const Vector& yy) {
        ++traj.meta.rhs_evaluations;
        return rhs(tt, yy);
    };

    double dt = std::clamp(settings.dt_init, settings.dt_min, settings.dt_max);
    Vector k1 = eval(t, y);
    Vector k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y_new(n), err(n);

    for (long total = 0;; ++total) {
        if (total > kMaxTotalSteps) throw IntegrationError("integration step budget exceeded", t, y);

        bool landed = false;
        double h = dt;
        if (t + h >= next_rec) {
            h = next_rec - t;
            landed = true;
        }

        k2 = eval(t + T::c2 * h, y + h * (T::a21 * k1));
        k3 = eval(t + T::c3 * h, y + h * (T::a31 * k1 + T::a32 * k2));
        k4 = eval(t + T::c4 * h, y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
        k5 = eval(t + T::c5 * h, y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4));
        k6 = eval(t + h, y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5));
        y_new = y + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);

        if (!y_new.allFinite()) {
            if (!settings.adaptive) throw IntegrationError("state became non-finite", t, y);
            ++traj.meta.rejected_error_steps;
            dt = 0.2 * h;
            if (dt < settings.dt_min)
                throw IntegrationError("state became non-finite and the step size underflowed dt_min", t, y);
            continue;
        }

        // Positivity guard: never clip. A step that leaves the orthant is
        // rejected outright and retried at half the size.
        bool negative = false;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!pinned[i] && y_new[i] < 0.0) {
                negative = true;
                break;
            }
        if (negative) {
            ++traj.meta.rejected_positivity_steps;
            dt = 0.5 * h;
            if (dt < settings.dt_min)
                throw IntegrationError("positivity guard drove the step size below dt_min", t, y);
            continue;
        }

        for (Eigen::Index i = 0; i < n; ++i)
            if (pinned[i]) y_new[i] = 0.0;
        k7 = eval(t + h, y_new);

        double err_norm = 0.0;
        if (settings.adaptive) {
            err = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
            for (Eigen::Index i = 0; i < n; ++i) {
                const double sc = settings.abs_tol +
                                  settings.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
                const double q = err[i] / sc;
                err_norm += q * q;
            }
            err_norm = std::sqrt(err_norm / static_cast<double>(n));
            if (err_norm > 1.0) {
                ++traj.meta.rejected_error_steps;
                const double shrink = std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
                dt = h * shrink;
                if (dt < settings.dt_min)
                    throw IntegrationError("error control drove the step size below dt_min", t, y);
                continue;
            }
        }

        ++traj.meta.accepted_steps;
        y.swap(y_new);
        k1.swap(k7);
        t = landed ? next_rec : t + h;
        if (landed) {
            traj.times.push_back(t);
            traj.states.push_back(y);
            if (t >= t_end) break;
            ++stamp;
            next_rec = stamp_time(stamp);
        }

        if (settings.adaptive) {
            const double safe = std::max(err_norm, 1e-300);
            const double grow = std::clamp(0.9 * std::pow(safe, -0.2), 0.2, 5.0);
            const double proposal = h * grow;
            dt = landed ? std::max(dt, proposal) : proposal;
        } else {
            dt = settings.dt_init;
        }
        dt = std::clamp(dt, settings.dt_min, settings.dt_max);
    }
    return traj;
}

/// RHS with signals evaluated at every stage time.
class TimeVaryingRhs {
public:
    explicit TimeVaryingRhs(const PowerNetwork& net) : net_(&net) {}

    Vector operator()(double t, const Vector& y) {
        const Vector k = gains_at(*net_, t);
        const InteractionMatrix psi = interaction_matrix_coupled_edges(*net_, edge_angles(*net_, t), k);
        return lotka_volterra_rhs(net_->tau(), y, psi.entries, drive_vector(k, references_at(*net_, t)));
    }

private:
    const PowerNetwork* net_;
};

/// RHS with all signals pinned at sigma; optionally with the drive removed.
class FrozenRhs {
public:
    FrozenRhs(const PowerNetwork& net, const FrozenScenario& fz, bool drift_only)
        : tau_(net.tau()),
          psi_(interaction_matrix_coupled_edges(net, fz.theta_rel, fz.k).entries),
          b_(drift_only ? Vector::Zero(net.size()).eval() : drive_vector(fz.k, fz.v_star)) {}

    Vector operator()(double, const Vector& y) { return lotka_volterra_rhs(tau_, y, psi_, b_); }

private:
    Vector tau_;
    Matrix psi_;
    Vector b_;
};

}  // namespace detail

// ============================================================================
// Public entry points
// ============================================================================

enum class FrozenDrift { full, drift_only };

/// Integrate the time-varying system from V0 over [t0, t_end].
[[nodiscard]] inline Trajectory integrate(const PowerNetwork& net, const Vector& v0, double t0,
                                          double t_end, const IntegratorSettings& settings = {}) {
    detail::check_dim(net, v0, "initial state");
    detail::TimeVaryingRhs rhs(net);
    return detail::integrate_core(rhs, v0, t0, t_end, settings);
}

/// Integrate with every signal held at its sigma-value. With
/// FrozenDrift::drift_only the constant drive b is removed, leaving the
/// homogeneous system diag(tau)^-1 diag(V) Psi(theta_sigma) V.
[[nodiscard]] inline Trajectory integrate_frozen(const PowerNetwork& net, double sigma, const Vector& v0,
                                                 double t0, double t_end,
                                                 const IntegratorSettings& settings = {},
                                                 FrozenDrift drift = FrozenDrift::full) {
    detail::check_dim(net, v0, "initial state");
    const FrozenScenario fz = freeze(net, sigma);
    detail::FrozenRhs rhs(net, fz, drift == FrozenDrift::drift_only);
    return detail::integrate_core(rhs, v0, t0, t_end, settings);
}

/// Integrate several initial conditions over the same window and settings.
/// Outputs share their record grid exactly.
[[nodiscard]] inline std::vector<Trajectory> batch_integrate(const PowerNetwork& net,
                                                             const std::vector<Vector>& initial_conditions,
                                                             double t0, double t_end,
                                                             const IntegratorSettings& settings = {}) {
    std::vector<Trajectory> out;
    out.reserve(initial_conditions.size());
    for (std::size_t r = 0; r < initial_conditions.size(); ++r) {
        out.push_back(integrate(net, initial_conditions[r], t0, t_end, settings));
        out.back().meta.scenario_id = "run-" + std::to_string(r + 1);
    }
    return out;
}

}  // namespace lvnet
