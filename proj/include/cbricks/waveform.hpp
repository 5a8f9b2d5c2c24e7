#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cbricks/error.hpp"

namespace cbricks::circuit {

enum class WaveKind { Square, Sine, Sawtooth };

inline std::string_view to_string(WaveKind kind) {
    switch (kind) {
        case WaveKind::Square: return "square";
        case WaveKind::Sine: return "sine";
        case WaveKind::Sawtooth: return "sawtooth";
    }
    return "?";
}

inline WaveKind parse_wave_kind(std::string_view s) {
    if (s == "square") return WaveKind::Square;
    if (s == "sine") return WaveKind::Sine;
    if (s == "sawtooth" || s == "saw") return WaveKind::Sawtooth;
    throw ValidationError("unknown waveform kind '" + std::string(s) + "'");
}

namespace detail {

// Cycle count f*t + phase/2pi, snapped onto integers/half-integers that it
// misses only by rounding so grid-aligned edges land on the grid point.
inline double cycles(double frequency, double phase, double t) {
    double c = frequency * t + phase / (2.0 * std::numbers::pi);
    const double half = std::round(2.0 * c) / 2.0;
    if (std::abs(c - half) < 1e-9) c = half;
    return c;
}

}  // namespace detail

/// Periodic generator signal. Signals are right-continuous at their edges.
/// After `cutoff` the output is exactly zero.
struct Waveform {
    WaveKind kind = WaveKind::Sine;
    double frequency = 1.0;  // Hz
    double amplitude = 1.0;  // V
    double phase = 0.0;      // rad
    double dc_offset = 0.0;  // V
    double cutoff = std::numeric_limits<double>::infinity();

    void validate() const {
        require(frequency > 0 && std::isfinite(frequency), "waveform frequency must be positive");
        require(amplitude >= 0, "waveform amplitude must be non-negative");
    }

    double operator()(double t) const {
        if (t >= cutoff) return 0.0;
        const double c = detail::cycles(frequency, phase, t);
        const double frac = c - std::floor(c);
        double v = 0.0;
        switch (kind) {
            case WaveKind::Square: v = frac < 0.5 ? amplitude : -amplitude; break;
            case WaveKind::Sine: v = amplitude * std::sin(2.0 * std::numbers::pi * c); break;
            case WaveKind::Sawtooth: v = amplitude * (2.0 * frac - 1.0); break;
        }
        return v + dc_offset;
    }

    /// True when the signal has a jump at some t in (t0, t1].
    bool jumps_in(double t0, double t1) const {
        if (t0 < cutoff && t1 >= cutoff && (*this)(t0) != 0.0) return true;
        if (t0 >= cutoff || amplitude == 0.0 || kind == WaveKind::Sine) return false;
        const double per_cycle = kind == WaveKind::Square ? 2.0 : 1.0;
        return std::floor(per_cycle * detail::cycles(frequency, phase, t0)) !=
               std::floor(per_cycle * detail::cycles(frequency, phase, t1));
    }

    bool operator==(const Waveform&) const = default;
};

inline double waveform_sample(const Waveform& w, double t) { return w(t); }

/// Piecewise-constant drive: values[k] is held on [k*period, (k+1)*period),
/// zero afterwards.
struct HeldSequence {
    double period = 1.0;
    std::vector<double> values;

    std::ptrdiff_t slot(double t) const {
        return static_cast<std::ptrdiff_t>(std::floor(t / period + 1e-9));
    }

    double operator()(double t) const {
        const auto k = slot(t);
        if (k < 0 || k >= static_cast<std::ptrdiff_t>(values.size())) return 0.0;
        return values[static_cast<std::size_t>(k)];
    }

    bool jumps_in(double t0, double t1) const {
        return slot(t0) != slot(t1) && (*this)(t0) != (*this)(t1);
    }

    bool operator==(const HeldSequence&) const = default;
};

using Stimulus = std::variant<Waveform, HeldSequence>;

inline double stimulus_value(const Stimulus& s, double t) {
    return std::visit([t](const auto& x) { return x(t); }, s);
}

inline bool stimulus_jumps(const Stimulus& s, double t0, double t1) {
    return std::visit([=](const auto& x) { return x.jumps_in(t0, t1); }, s);
}

}  // namespace cbricks::circuit
