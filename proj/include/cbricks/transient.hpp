#pragma once

#include <algorithm>
#include <functional>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cbricks/circuit.hpp"
#include "cbricks/error.hpp"
#include "cbricks/waveform.hpp"

namespace cbricks::circuit {

enum class Scheme { BackwardEuler, Trapezoidal };

inline std::string_view to_string(Scheme s) {
    return s == Scheme::BackwardEuler ? "backward-euler" : "trapezoidal";
}

inline Scheme parse_scheme(std::string_view s) {
    if (s == "backward-euler" || s == "be") return Scheme::BackwardEuler;
    if (s == "trapezoidal" || s == "trap") return Scheme::Trapezoidal;
    throw ValidationError("unknown integration scheme '" + std::string(s) + "'");
}

struct SimConfig {
    double dt = 2e-5;
    double duration = 0.1;
    Scheme scheme = Scheme::Trapezoidal;
    std::size_t record_stride = 1;
    /// Nodes to record; empty means the topology's output pins.
    std::vector<NodeId> record_nodes;
    /// Initial state of every memristor.
    double initial_memristor_state = 0.5;

    std::size_t step_count() const {
        return static_cast<std::size_t>(std::llround(duration / dt));
    }

    void validate() const {
        require(dt > 0 && std::isfinite(dt), "dt must be positive");
        require(duration >= dt * (1.0 - 1e-9), "duration must be at least one step");
        require(record_stride >= 1, "record_stride must be at least 1");
        require(initial_memristor_state >= 0 && initial_memristor_state <= 1,
                "initial memristor state must lie in [0,1]");
    }
};

/// Complete integrator state. Capacitor branch currents are part of the
/// state because the trapezoidal companion model needs them.
struct TransientState {
    Eigen::VectorXd voltages;
    std::vector<double> memristor_states;
    std::vector<double> capacitor_currents;

    static TransientState rest(const CircuitTopology& topo, double w0 = 0.5) {
        TransientState s;
        s.voltages = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(topo.node_count));
        s.memristor_states.assign(topo.indices_of<Memristor>().size(), w0);
        s.capacitor_currents.assign(topo.indices_of<Capacitor>().size(), 0.0);
        return s;
    }
};

/// Driven pin -> source voltage at the end of the step.
using SourceMap = std::map<NodeId, double>;

/// Modified nodal analysis with companion models. Unknowns are the
/// non-ground node voltages followed by one branch current per driven pin.
/// Kirchhoff's current law is enforced at the end of every step; only the
/// capacitor branch relation depends on the scheme. Memristors are frozen at
/// their start-of-step conductance, then their state advances by explicit
/// Euler with the end-of-step current.
class TransientSolver {
public:
    explicit TransientSolver(const CircuitTopology& topo) : topo_(topo) {
        validate(topo_);
        index_.assign(topo_.node_count, -1);
        Eigen::Index k = 0;
        for (NodeId n = 0; n < topo_.node_count; ++n) {
            if (n != topo_.ground) index_[n] = k++;
        }
        free_count_ = k;
        memristors_ = topo_.indices_of<Memristor>();
        capacitors_ = topo_.indices_of<Capacitor>();
    }

    const CircuitTopology& topology() const { return topo_; }

    TransientState step(const TransientState& state, const SourceMap& sources, double dt,
                        Scheme scheme) {
        check_shapes(state, sources);
        require(dt > 0, "dt must be positive");

        const auto& lu = factor(state, sources, dt, scheme);
        const Eigen::VectorXd x = lu.solve(rhs(state, sources, dt, scheme));
        if (!x.allFinite()) {
            throw NumericalInstabilityError(
                "transient step produced a non-finite value; try a smaller dt");
        }

        TransientState next;
        next.voltages = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(topo_.node_count));
        for (NodeId n = 0; n < topo_.node_count; ++n) {
            if (index_[n] >= 0) next.voltages[static_cast<Eigen::Index>(n)] = x[index_[n]];
        }

        next.capacitor_currents.resize(capacitors_.size());
        for (std::size_t c = 0; c < capacitors_.size(); ++c) {
            const auto& e = topo_.elements[capacitors_[c]];
            const double cap = std::get<Capacitor>(e.kind).capacitance;
            const double dv = branch(next.voltages, e) - branch(state.voltages, e);
            next.capacitor_currents[c] = scheme == Scheme::BackwardEuler
                                             ? cap / dt * dv
                                             : 2.0 * cap / dt * dv - state.capacitor_currents[c];
        }

        next.memristor_states.resize(memristors_.size());
        for (std::size_t m = 0; m < memristors_.size(); ++m) {
            const auto& e = topo_.elements[memristors_[m]];
            const auto& mem = std::get<Memristor>(e.kind);
            const double w = state.memristor_states[m];
            const double i = mem.conductance(w) * branch(next.voltages, e);
            const double w_next = w + dt * mem.state_rate() * i * w * (1.0 - w);
            if (!std::isfinite(w_next)) {
                throw NumericalInstabilityError(
                    "memristor state became non-finite; try a smaller dt");
            }
            next.memristor_states[m] = std::clamp(w_next, 0.0, 1.0);
        }
        return next;
    }

private:
    template <typename Vec>
    static double branch(const Vec& v, const Element& e) {
        return v[static_cast<Eigen::Index>(e.a)] - v[static_cast<Eigen::Index>(e.b)];
    }

    void check_shapes(const TransientState& s, const SourceMap& sources) const {
        require(static_cast<std::size_t>(s.voltages.size()) == topo_.node_count,
                "voltage vector length must equal node_count");
        require(s.memristor_states.size() == memristors_.size(),
                "one state per memristor required");
        require(s.capacitor_currents.size() == capacitors_.size(),
                "one current per capacitor required");
        for (const auto& [pin, v] : sources) {
            require(std::find(topo_.input_pins.begin(), topo_.input_pins.end(), pin) !=
                        topo_.input_pins.end(),
                    "sources may only drive input pins");
        }
    }

    void stamp(Eigen::MatrixXd& a, NodeId p, NodeId q, double g) const {
        const auto i = index_[p];
        const auto j = index_[q];
        if (i >= 0) a(i, i) += g;
        if (j >= 0) a(j, j) += g;
        if (i >= 0 && j >= 0) {
            a(i, j) -= g;
            a(j, i) -= g;
        }
    }

    // Time-invariant part: resistors, leak, capacitor companions, source rows.
    Eigen::MatrixXd base_matrix(const std::vector<NodeId>& driven, double dt, Scheme scheme) const {
        const Eigen::Index n = free_count_ + static_cast<Eigen::Index>(driven.size());
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < free_count_; ++i) a(i, i) += topo_.leak_conductance;
        const double cap_scale = scheme == Scheme::BackwardEuler ? 1.0 : 2.0;
        for (const auto& e : topo_.elements) {
            if (const auto* r = std::get_if<Resistor>(&e.kind)) {
                stamp(a, e.a, e.b, r->conductance);
            } else if (const auto* c = std::get_if<Capacitor>(&e.kind)) {
                stamp(a, e.a, e.b, cap_scale * c->capacitance / dt);
            }
        }
        for (std::size_t k = 0; k < driven.size(); ++k) {
            const Eigen::Index row = free_count_ + static_cast<Eigen::Index>(k);
            const Eigen::Index node = index_[driven[k]];
            a(node, row) -= 1.0;
            a(row, node) = 1.0;
        }
        return a;
    }

    const Eigen::PartialPivLU<Eigen::MatrixXd>& factor(const TransientState& state,
                                                       const SourceMap& sources, double dt,
                                                       Scheme scheme) {
        std::vector<NodeId> driven;
        for (const auto& [pin, v] : sources) driven.push_back(pin);
        const bool cache_hit = cache_ && cache_->dt == dt && cache_->scheme == scheme &&
                               cache_->driven == driven;
        if (!cache_hit) {
            cache_ = Cache{dt, scheme, driven, base_matrix(driven, dt, scheme), {}};
            if (memristors_.empty()) refactor(cache_->base);
        }
        if (!memristors_.empty()) {
            Eigen::MatrixXd a = cache_->base;
            for (std::size_t m = 0; m < memristors_.size(); ++m) {
                const auto& e = topo_.elements[memristors_[m]];
                stamp(a, e.a, e.b, std::get<Memristor>(e.kind).conductance(state.memristor_states[m]));
            }
            refactor(a);
        }
        return cache_->lu;
    }

    void refactor(const Eigen::MatrixXd& a) {
        cache_->lu.compute(a);
        const Eigen::VectorXd pivots = cache_->lu.matrixLU().diagonal().cwiseAbs();
        if (!(pivots.minCoeff() > 1e-14 * pivots.maxCoeff())) {
            throw SingularSystemError(
                "nodal matrix is singular: some node has no resistive path to ground");
        }
    }

    Eigen::VectorXd rhs(const TransientState& state, const SourceMap& sources, double dt,
                        Scheme scheme) const {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(free_count_ + static_cast<Eigen::Index>(sources.size()));
        for (std::size_t c = 0; c < capacitors_.size(); ++c) {
            const auto& e = topo_.elements[capacitors_[c]];
            const double cap = std::get<Capacitor>(e.kind).capacitance;
            const double x = branch(state.voltages, e);
            const double inj = scheme == Scheme::BackwardEuler
                                   ? cap / dt * x
                                   : 2.0 * cap / dt * x + state.capacitor_currents[c];
            if (index_[e.a] >= 0) b[index_[e.a]] += inj;
            if (index_[e.b] >= 0) b[index_[e.b]] -= inj;
        }
        Eigen::Index row = free_count_;
        for (const auto& [pin, v] : sources) b[row++] = v;
        return b;
    }

    struct Cache {
        double dt;
        Scheme scheme;
        std::vector<NodeId> driven;
        Eigen::MatrixXd base;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    };

    CircuitTopology topo_;
    std::vector<Eigen::Index> index_;
    Eigen::Index free_count_ = 0;
    std::vector<std::size_t> memristors_;
    std::vector<std::size_t> capacitors_;
    std::optional<Cache> cache_;
};

/// One integration step from `state` with the given end-of-step sources.
inline TransientState step_transient(const CircuitTopology& topo, const TransientState& state,
                                     const SourceMap& sources, double dt, Scheme scheme) {
    TransientSolver solver(topo);
    return solver.step(state, sources, dt, scheme);
}

/// Time-sampled node voltages and memristor states. Row r of `samples`
/// holds the voltages of `nodes` at `times[r]`.
struct TraceRecord {
    std::vector<double> times;
    std::vector<NodeId> nodes;
    Eigen::MatrixXd samples;
    Eigen::MatrixXd memristor_states;

    std::size_t size() const { return times.size(); }

    bool operator==(const TraceRecord& o) const {
        return times == o.times && nodes == o.nodes && samples == o.samples &&
               memristor_states == o.memristor_states;
    }
};

using StimulusMap = std::map<NodeId, Stimulus>;

namespace detail {

template <typename E>
[[noreturn]] void rethrow_at(const E& e, double t) {
    std::ostringstream os;
    os << "at t=" << t << " s: " << e.what();
    throw E(os.str());
}

}  // namespace detail

/// Observer invoked after every step with (step index, time, state).
using StepObserver = std::function<void(std::size_t, double, const TransientState&)>;

/// Fixed-step transient run from rest. With the trapezoidal scheme, the first
/// step and any step whose interval contains a source discontinuity fall back
/// to backward Euler so that stiff modes do not ring after the jump.
inline TraceRecord simulate(const CircuitTopology& topo, const StimulusMap& stimuli,
                            const SimConfig& config, const StepObserver& observer = {}) {
    config.validate();
    for (const auto& [pin, s] : stimuli) {
        require(std::find(topo.input_pins.begin(), topo.input_pins.end(), pin) !=
                    topo.input_pins.end(),
                "every stimulus must target an input pin");
        if (const auto* w = std::get_if<Waveform>(&s)) w->validate();
    }
    TransientSolver solver(topo);

    TraceRecord trace;
    trace.nodes = config.record_nodes.empty() ? topo.output_pins : config.record_nodes;
    for (NodeId n : trace.nodes) require(n < topo.node_count, "record node out of range");

    const std::size_t steps = config.step_count();
    const std::size_t rows = steps / config.record_stride;
    const auto n_mem = topo.indices_of<Memristor>().size();
    trace.times.reserve(rows);
    trace.samples.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(trace.nodes.size()));
    trace.memristor_states.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n_mem));

    TransientState state = TransientState::rest(topo, config.initial_memristor_state);
    SourceMap sources;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t0 = static_cast<double>(k) * config.dt;
        const double t1 = static_cast<double>(k + 1) * config.dt;
        bool jump = k == 0;
        for (const auto& [pin, s] : stimuli) {
            sources[pin] = stimulus_value(s, t1);
            jump = jump || stimulus_jumps(s, t0, t1);
        }
        const Scheme scheme = jump ? Scheme::BackwardEuler : config.scheme;
        try {
            state = solver.step(state, sources, config.dt, scheme);
        } catch (const SingularSystemError& e) {
            detail::rethrow_at(e, t1);
        } catch (const NumericalInstabilityError& e) {
            detail::rethrow_at(e, t1);
        }
        if (observer) observer(k, t1, state);
        if ((k + 1) % config.record_stride == 0) {
            const auto r = static_cast<Eigen::Index>(trace.times.size());
            trace.times.push_back(t1);
            for (std::size_t c = 0; c < trace.nodes.size(); ++c) {
                trace.samples(r, static_cast<Eigen::Index>(c)) =
                    state.voltages[static_cast<Eigen::Index>(trace.nodes[c])];
            }
            for (std::size_t m = 0; m < n_mem; ++m) {
                trace.memristor_states(r, static_cast<Eigen::Index>(m)) = state.memristor_states[m];
            }
        }
    }
    return trace;
}

}  // namespace cbricks::circuit
