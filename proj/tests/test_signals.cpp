#include <catch2/catch_amalgamated.hpp>

#include <lvnet/signals.hpp>

#include <cmath>
#include <random>

using lvnet::SignalSpec;

TEST_CASE("constant signal evaluates to its value everywhere", "[signals]") {
    const SignalSpec s = SignalSpec::constant(2.5);
    CHECK(s.eval(0.0) == 2.5);
    CHECK(s.eval(-3.0) == 2.5);
    CHECK(s.eval(1e6) == 2.5);
    CHECK(s.is_constant());
    CHECK(s.lower_envelope() == 2.5);
    CHECK(s.upper_envelope() == 2.5);
}

TEST_CASE("sinusoid evaluates offset + amplitude*sin(w t + phase)", "[signals]") {
    const SignalSpec s = SignalSpec::sinusoid(2.0, 0.2, 1.0);
    CHECK(s.eval(0.0) == Catch::Approx(2.0));
    CHECK(s.eval(M_PI / 2.0) == Catch::Approx(2.2));
    CHECK(s.eval(M_PI) == Catch::Approx(2.0).margin(1e-15));

    const SignalSpec cosine = SignalSpec::sinusoid(2.0, 0.2, 1.0, M_PI / 2.0);
    CHECK(cosine.eval(0.0) == Catch::Approx(2.2));
    CHECK(cosine.eval(M_PI) == Catch::Approx(1.8));
}

TEST_CASE("envelopes bound every sample", "[signals][property]") {
    std::mt19937_64 rng(20260814ull);
    std::uniform_real_distribution<double> offset(-5.0, 5.0);
    std::uniform_real_distribution<double> amplitude(0.0, 3.0);
    std::uniform_real_distribution<double> freq(0.0, 200.0);
    std::uniform_real_distribution<double> phase(-10.0, 10.0);
    std::uniform_real_distribution<double> time(-100.0, 100.0);

    for (int trial = 0; trial < 2000; ++trial) {
        const SignalSpec s = SignalSpec::sinusoid(offset(rng), amplitude(rng), freq(rng), phase(rng));
        const double lo = s.lower_envelope();
        const double hi = s.upper_envelope();
        REQUIRE(lo <= hi);
        for (int draw = 0; draw < 50; ++draw) {
            const double v = s.eval(time(rng));
            REQUIRE(v >= lo - 1e-12);
            REQUIRE(v <= hi + 1e-12);
        }
    }
}

TEST_CASE("negative amplitude is normalized away from the envelope order", "[signals]") {
    const SignalSpec s = SignalSpec::sinusoid(1.0, -0.5, 2.0);
    CHECK(s.lower_envelope() == Catch::Approx(0.5));
    CHECK(s.upper_envelope() == Catch::Approx(1.5));
}

TEST_CASE("positivity classification uses the lower envelope", "[signals]") {
    CHECK(SignalSpec::constant(0.1).positive_valued());
    CHECK_FALSE(SignalSpec::constant(0.0).positive_valued());
    CHECK_FALSE(SignalSpec::constant(-1.0).positive_valued());
    CHECK(SignalSpec::sinusoid(2.0, 0.2, 1.0).positive_valued());
    CHECK_FALSE(SignalSpec::sinusoid(0.2, 0.5, 1.0).positive_valued());

    CHECK_NOTHROW(lvnet::require_positive_valued(SignalSpec::sinusoid(5.0, 1.0, 3.0), "gain"));
    CHECK_THROWS_AS(lvnet::require_positive_valued(SignalSpec::sinusoid(1.0, 1.0, 3.0), "gain"),
                    std::invalid_argument);
}

TEST_CASE("zero detection covers both forms", "[signals]") {
    CHECK(SignalSpec::constant(0.0).is_zero());
    CHECK_FALSE(SignalSpec::constant(1e-30).is_zero());
    CHECK(SignalSpec::sinusoid(0.0, 0.0, 120.0).is_zero());
    CHECK_FALSE(SignalSpec::sinusoid(0.0, 0.1, 120.0).is_zero());
}

TEST_CASE("signals compare structurally", "[signals]") {
    CHECK(SignalSpec::constant(2.0) == SignalSpec::constant(2.0));
    CHECK_FALSE(SignalSpec::constant(2.0) == SignalSpec::sinusoid(2.0, 0.0, 1.0));
    CHECK(SignalSpec::sinusoid(1.0, 2.0, 3.0, 4.0) == SignalSpec::sinusoid(1.0, 2.0, 3.0, 4.0));
}
