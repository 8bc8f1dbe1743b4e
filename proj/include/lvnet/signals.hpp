#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "lvnet/format.hpp"

namespace lvnet {

/// Closed-form scalar signal: either a constant or a sinusoid
/// offset + amplitude * sin(angular_frequency * t + phase).
///
/// Signals parameterize droop gains, voltage references and angle
/// perturbations. They are evaluated analytically (no lookup tables), so the
/// integrator can query them at arbitrary stage times and envelope bounds are
/// exact.
class SignalSpec {
public:
    enum class Form { constant, sinusoid };

    SignalSpec() = default;

    [[nodiscard]] static SignalSpec constant(double value) {
        SignalSpec s;
        s.form_ = Form::constant;
        s.offset_ = value;
        return s;
    }

    [[nodiscard]] static SignalSpec sinusoid(double offset, double amplitude,
                                             double angular_frequency, double phase = 0.0) {
        SignalSpec s;
        s.form_ = Form::sinusoid;
        s.offset_ = offset;
        s.amplitude_ = amplitude;
        s.angular_frequency_ = angular_frequency;
        s.phase_ = phase;
        return s;
    }

    [[nodiscard]] double eval(double t) const {
        if (form_ == Form::constant) return offset_;
        return offset_ + amplitude_ * std::sin(angular_frequency_ * t + phase_);
    }

    /// Exact lower bound of the signal over all t.
    [[nodiscard]] double lower_envelope() const {
        if (form_ == Form::constant) return offset_;
        return offset_ - std::abs(amplitude_);
    }

    /// Exact upper bound of the signal over all t.
    [[nodiscard]] double upper_envelope() const {
        if (form_ == Form::constant) return offset_;
        return offset_ + std::abs(amplitude_);
    }

    /// True when the envelope keeps the signal strictly above zero.
    [[nodiscard]] bool positive_valued() const { return lower_envelope() > 0.0; }

    [[nodiscard]] bool is_constant() const {
        return form_ == Form::constant || amplitude_ == 0.0;
    }

    /// True for a constant signal with value exactly zero (or a degenerate
    /// zero-amplitude, zero-offset sinusoid).
    [[nodiscard]] bool is_zero() const { return is_constant() && offset_ == 0.0; }

    [[nodiscard]] Form form() const { return form_; }
    [[nodiscard]] double offset() const { return offset_; }
    [[nodiscard]] double amplitude() const { return amplitude_; }
    [[nodiscard]] double angular_frequency() const { return angular_frequency_; }
    [[nodiscard]] double phase() const { return phase_; }

    friend bool operator==(const SignalSpec& a, const SignalSpec& b) {
        if (a.form_ != b.form_) return false;
        if (a.form_ == Form::constant) return a.offset_ == b.offset_;
        return a.offset_ == b.offset_ && a.amplitude_ == b.amplitude_ &&
               a.angular_frequency_ == b.angular_frequency_ && a.phase_ == b.phase_;
    }

private:
    Form form_ = Form::constant;
    double offset_ = 0.0;
    double amplitude_ = 0.0;
    double angular_frequency_ = 0.0;
    double phase_ = 0.0;
};

[[nodiscard]] inline double eval_signal(const SignalSpec& spec, double t) {
    return spec.eval(t);
}

/// Enforce the construction-time contract for signals that must stay strictly
/// positive (droop gains, voltage references): constant value > 0, or
/// offset - |amplitude| > 0 for sinusoids.
inline void require_positive_valued(const SignalSpec& spec, const std::string& what) {
    if (!spec.positive_valued()) {
        throw std::invalid_argument(
            what + " must be strictly positive for all t (envelope lower bound " +
            detail::format_double(spec.lower_envelope()) + " <= 0)");
    }
}

}  // namespace lvnet
