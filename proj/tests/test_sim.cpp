#include <catch2/catch_amalgamated.hpp>

#include <lvnet/sim.hpp>

#include "fixtures.hpp"

#include <cmath>
#include <random>

using namespace lvnet;
using fixtures::vec;

namespace {

bool states_identical(const Trajectory& a, const Trajectory& b) {
    if (a.times != b.times || a.states.size() != b.states.size()) return false;
    for (std::size_t s = 0; s < a.states.size(); ++s)
        if ((a.states[s] - b.states[s]).cwiseAbs().maxCoeff() != 0.0) return false;
    return true;
}

}  // namespace

TEST_CASE("decoupled run converges to the uniform reference", "[sim]") {
    const PowerNetwork net = fixtures::demo_decoupled();
    const Trajectory traj =
        integrate(net, vec({1.8, 1.6, 1.4, 1.2, 1.0}), 0.0, 10.0, IntegratorSettings{});

    REQUIRE(traj.samples() == 1001);
    CHECK(traj.times.front() == 0.0);
    CHECK(traj.times.back() == 10.0);
    CHECK((traj.states.front() - vec({1.8, 1.6, 1.4, 1.2, 1.0})).cwiseAbs().maxCoeff() == 0.0);
    CHECK((traj.states.back() - Vector::Constant(5, 2.0)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(traj.meta.accepted_steps > 0);
    CHECK(traj.meta.rhs_evaluations > traj.meta.accepted_steps);
}

TEST_CASE("equilibrium initial condition stays put", "[sim]") {
    const PowerNetwork net = fixtures::demo_decoupled();
    const Trajectory traj = integrate(net, Vector::Constant(5, 2.0), 0.0, 10.0, IntegratorSettings{});
    double worst = 0.0;
    for (const Vector& v : traj.states)
        worst = std::max(worst, (v - Vector::Constant(5, 2.0)).cwiseAbs().maxCoeff());
    CHECK(worst < 1e-9);
}

TEST_CASE("zero components are pinned for the whole run", "[sim]") {
    const PowerNetwork net = fixtures::demo_decoupled();
    const Trajectory traj = integrate(net, vec({1.0, 1.0, 0.0, 1.0, 1.0}), 0.0, 2.0, IntegratorSettings{});
    for (const Vector& v : traj.states) {
        REQUIRE(v[2] == 0.0);
        REQUIRE(v[0] > 0.0);
        REQUIRE(v[4] > 0.0);
    }
}

TEST_CASE("all-zero start yields the zero trajectory", "[sim]") {
    const PowerNetwork net = fixtures::demo_decoupled();
    const Trajectory traj = integrate(net, Vector::Zero(5), 0.0, 1.0, IntegratorSettings{});
    for (const Vector& v : traj.states) REQUIRE(v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("drift-only frozen flow drains toward the origin", "[sim]") {
    const PowerNetwork net = fixtures::demo_network();
    const Trajectory traj = integrate_frozen(net, 0.0, Vector::Ones(5), 0.0, 10.0,
                                             IntegratorSettings{}, FrozenDrift::drift_only);
    // quadratic drift decays algebraically (~1/t): well clear of its start but
    // far from the exponential regime
    const double ratio = traj.states.back().cwiseAbs().maxCoeff();
    CHECK(ratio < 2e-2);
    CHECK(ratio > 1.6e-3);

    double previous = std::numeric_limits<double>::infinity();
    for (const Vector& v : traj.states) {
        const double l1 = v.sum();
        REQUIRE(l1 <= previous + 1e-12);
        previous = l1;
    }
}

TEST_CASE("frozen integration of constant signals matches the time-varying path bit for bit",
          "[sim]") {
    const PowerNetwork net = fixtures::demo_decoupled();
    const Vector v0 = vec({1.8, 1.6, 1.4, 1.2, 1.0});
    const Trajectory live = integrate(net, v0, 0.0, 3.0, IntegratorSettings{});
    const Trajectory frozen = integrate_frozen(net, 3.7, v0, 0.0, 3.0, IntegratorSettings{});
    CHECK(states_identical(live, frozen));
}

TEST_CASE("repeated runs are bitwise deterministic", "[sim]") {
    const PowerNetwork net = fixtures::demo_time_varying();
    const Vector v0 = vec({1.8, 1.6, 1.4, 1.2, 1.0});
    const Trajectory a = integrate(net, v0, 0.0, 2.0, IntegratorSettings{});
    const Trajectory b = integrate(net, v0, 0.0, 2.0, IntegratorSettings{});
    CHECK(states_identical(a, b));
}

TEST_CASE("time-varying run stays in the orthant", "[sim]") {
    const PowerNetwork net = fixtures::demo_time_varying();
    const Trajectory traj =
        integrate(net, vec({1.8, 1.6, 1.4, 1.2, 1.0}), 0.0, 5.0, IntegratorSettings{});
    for (const Vector& v : traj.states) REQUIRE(v.minCoeff() > 0.0);
}

TEST_CASE("batch runs share the grid and order", "[sim]") {
    const PowerNetwork net = fixtures::demo_decoupled();
    const std::vector<Vector> ics = {vec({1.8, 1.6, 1.4, 1.2, 1.0}), vec({2.8, 2.6, 2.4, 2.2, 2.0})};

    SECTION("figure-pair batch") {
        const std::vector<Trajectory> runs = batch_integrate(net, ics, 0.0, 10.0, IntegratorSettings{});
        REQUIRE(runs.size() == 2);
        CHECK(runs[0].meta.scenario_id == "run-1");
        CHECK(runs[1].meta.scenario_id == "run-2");
        REQUIRE(runs[0].times == runs[1].times);
        for (int s = 0; s < runs[0].samples(); ++s)
            REQUIRE((runs[1].states[s] - runs[0].states[s]).minCoeff() >= -1e-9);
    }
    SECTION("singleton batch equals a direct run") {
        const std::vector<Trajectory> runs =
            batch_integrate(net, {ics[0]}, 0.0, 2.0, IntegratorSettings{});
        REQUIRE(runs.size() == 1);
        CHECK(states_identical(runs[0], integrate(net, ics[0], 0.0, 2.0, IntegratorSettings{})));
    }
    SECTION("empty batch") {
        CHECK(batch_integrate(net, {}, 0.0, 1.0, IntegratorSettings{}).empty());
    }
}

TEST_CASE("record stamps land exactly on the stride grid", "[sim]") {
    const PowerNetwork net = fixtures::demo_decoupled();
    IntegratorSettings settings;
    settings.record_stride = 0.003;
    const Trajectory traj = integrate(net, Vector::Ones(5), 0.0, 0.02, settings);
    REQUIRE(traj.samples() == 8);
    for (int j = 0; j < traj.samples(); ++j)
        REQUIRE(traj.times[static_cast<std::size_t>(j)] ==
                std::min(static_cast<double>(j) * 0.003, 0.02));
    for (int j = 1; j < traj.samples(); ++j)
        REQUIRE(traj.times[static_cast<std::size_t>(j)] > traj.times[static_cast<std::size_t>(j - 1)]);
}

TEST_CASE("single-node drift-only run matches the separable closed form", "[sim]") {
    const PowerNetwork net = fixtures::single_node(0.0, 1.0, 3.0);
    const Trajectory traj = integrate_frozen(net, 0.0, vec({1.0}), 0.0, 1.0, IntegratorSettings{},
                                             FrozenDrift::drift_only);
    double worst = 0.0;
    for (int s = 0; s < traj.samples(); ++s) {
        const double t = traj.times[static_cast<std::size_t>(s)];
        const double exact = 1.0 / (1.0 + t);  // dV/dt = -(|B|+k) V^2 with |B|=0, k=1
        worst = std::max(worst, std::abs(traj.states[static_cast<std::size_t>(s)][0] - exact));
    }
    CHECK(worst < 1e-6);
    CHECK(worst < 1e-8);  // defaults are much tighter than the contract
}

TEST_CASE("fixed-step sweep exhibits the embedded pair's order", "[sim][slow]") {
    const PowerNetwork net = fixtures::demo_decoupled();
    const Vector v0 = vec({1.8, 1.6, 1.4, 1.2, 1.0});

    IntegratorSettings tight;
    tight.rel_tol = 1e-12;
    tight.abs_tol = 1e-14;
    tight.dt_min = 1e-12;
    tight.record_stride = 1.0;
    const Vector reference = integrate(net, v0, 0.0, 1.0, tight).states.back();

    // record only the endpoint so the stride never clips the fixed step
    auto fixed_error = [&](double dt) {
        IntegratorSettings fixed;
        fixed.adaptive = false;
        fixed.dt_init = dt;
        fixed.dt_min = 1e-12;
        fixed.dt_max = 0.1;
        fixed.record_stride = 1.0;
        const Trajectory traj = integrate(net, v0, 0.0, 1.0, fixed);
        return (traj.states.back() - reference).cwiseAbs().maxCoeff();
    };

    const double e1 = fixed_error(0.04);
    const double e2 = fixed_error(0.02);
    const double e3 = fixed_error(0.01);
    REQUIRE(e1 > e2);
    REQUIRE(e2 > e3);
    const double p1 = std::log2(e1 / e2);
    const double p2 = std::log2(e2 / e3);
    INFO("errors " << e1 << " " << e2 << " " << e3 << ", observed orders " << p1 << " " << p2);
    CHECK(p1 >= 4.0);
    CHECK(std::max(p1, p2) >= 4.0);
}

TEST_CASE("tightening tolerances tightens the answer", "[sim]") {
    const PowerNetwork net = fixtures::demo_time_varying();
    const Vector v0 = vec({1.8, 1.6, 1.4, 1.2, 1.0});

    auto final_state = [&](double rel) {
        IntegratorSettings s;
        s.rel_tol = rel;
        s.abs_tol = rel * 1e-2;
        return integrate(net, v0, 0.0, 2.0, s).states.back();
    };
    IntegratorSettings tight;
    tight.rel_tol = 1e-12;
    tight.abs_tol = 1e-14;
    tight.dt_min = 1e-12;
    const Vector reference = integrate(net, v0, 0.0, 2.0, tight).states.back();

    const double loose = (final_state(1e-6) - reference).cwiseAbs().maxCoeff();
    const double fine = (final_state(1e-10) - reference).cwiseAbs().maxCoeff();
    CHECK(loose > fine);
    CHECK(loose / std::max(fine, 1e-16) > 10.0);
}

TEST_CASE("positivity guard underflow raises a located error", "[sim]") {
    const PowerNetwork net = fixtures::single_node(0.0, 1.0, 3.0);
    IntegratorSettings settings;
    settings.dt_init = 0.5;
    settings.dt_min = 0.4;
    settings.dt_max = 1.0;
    settings.rel_tol = 10.0;
    settings.abs_tol = 10.0;
    settings.record_stride = 1.0;

    try {
        (void)integrate_frozen(net, 0.0, vec({100.0}), 0.0, 2.0, settings, FrozenDrift::drift_only);
        FAIL("expected IntegrationError");
    } catch (const IntegrationError& e) {
        CHECK(e.time() == 0.0);
        REQUIRE(e.state().size() == 1);
        CHECK(e.state()[0] == 100.0);
        CHECK(std::string(e.what()).find("positivity") != std::string::npos);
    }
}

TEST_CASE("invalid settings and windows are rejected up front", "[sim]") {
    const PowerNetwork net = fixtures::single_node();
    IntegratorSettings bad;

    SECTION("dt ordering") {
        bad.dt_min = 1e-2;
        bad.dt_init = 1e-3;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    }
    SECTION("tolerances must be positive") {
        bad.rel_tol = 0.0;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    }
    SECTION("stride must be positive") {
        bad.record_stride = 0.0;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    }
    SECTION("window must move forward") {
        CHECK_THROWS_AS(integrate(net, vec({1.0}), 1.0, 0.5, IntegratorSettings{}),
                        std::invalid_argument);
    }
    SECTION("initial state must be finite and nonnegative") {
        CHECK_THROWS_AS(integrate(net, vec({-0.1}), 0.0, 1.0, IntegratorSettings{}),
                        std::invalid_argument);
        CHECK_THROWS_AS(integrate(net, vec({std::nan("")}), 0.0, 1.0, IntegratorSettings{}),
                        std::invalid_argument);
    }
}
