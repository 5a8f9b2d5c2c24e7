#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "cbricks/error.hpp"

namespace cbricks::circuit {

using NodeId = std::size_t;

struct Resistor {
    double conductance;  // siemens
    bool operator==(const Resistor&) const = default;
};

struct Capacitor {
    double capacitance;  // farads
    bool operator==(const Capacitor&) const = default;
};

/// Linear ion-drift memristor. State w in [0,1] interpolates between the
/// doped (r_on) and undoped (r_off) resistance; w = 1 is fully conducting.
struct Memristor {
    double r_on;
    double r_off;
    double mobility;
    double length_scale;

    double resistance(double w) const { return r_on * w + r_off * (1.0 - w); }
    double conductance(double w) const { return 1.0 / resistance(w); }
    /// dw/dt per ampere, before the window function.
    double state_rate() const { return mobility / (length_scale * length_scale) * r_on; }

    bool operator==(const Memristor&) const = default;
};

using ElementKind = std::variant<Resistor, Capacitor, Memristor>;

inline void validate(const ElementKind& kind) {
    std::visit(
        [](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, Resistor>) {
                require(e.conductance > 0 && std::isfinite(e.conductance),
                        "resistor conductance must be positive");
            } else if constexpr (std::is_same_v<T, Capacitor>) {
                require(e.capacitance > 0 && std::isfinite(e.capacitance),
                        "capacitance must be positive");
            } else {
                require(e.r_on > 0 && e.r_on < e.r_off && std::isfinite(e.r_off),
                        "memristor needs 0 < r_on < r_off");
                require(e.mobility > 0 && e.length_scale > 0,
                        "memristor mobility and length scale must be positive");
            }
        },
        kind);
}

/// Ohmic elements carry DC current; capacitors do not.
inline bool is_resistive(const ElementKind& kind) {
    return !std::holds_alternative<Capacitor>(kind);
}

struct Element {
    NodeId a;
    NodeId b;
    ElementKind kind;
    bool operator==(const Element&) const = default;
};

/// Two-terminal element graph. Every non-ground node additionally carries an
/// implicit leak of `leak_conductance` to ground.
struct CircuitTopology {
    std::size_t node_count = 0;
    NodeId ground = 0;
    std::vector<Element> elements;
    std::vector<NodeId> input_pins;
    std::vector<NodeId> output_pins;
    std::uint64_t seed = 0;
    double leak_conductance = 0.0;

    template <typename Kind>
    std::vector<std::size_t> indices_of() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < elements.size(); ++i) {
            if (std::holds_alternative<Kind>(elements[i].kind)) out.push_back(i);
        }
        return out;
    }

    std::size_t count_of_kind(std::size_t variant_index) const {
        return static_cast<std::size_t>(std::count_if(
            elements.begin(), elements.end(),
            [&](const Element& e) { return e.kind.index() == variant_index; }));
    }

    bool operator==(const CircuitTopology&) const = default;
};

inline void validate(const CircuitTopology& topo) {
    require(topo.node_count >= 2, "topology needs at least two nodes");
    require(topo.ground < topo.node_count, "ground node out of range");
    require(topo.leak_conductance >= 0 && std::isfinite(topo.leak_conductance),
            "leak conductance must be non-negative");
    for (const auto& e : topo.elements) {
        require(e.a < topo.node_count && e.b < topo.node_count,
                "element references an unknown node");
        require(e.a != e.b, "element terminals must be distinct nodes");
        validate(e.kind);
    }
    for (const auto* pins : {&topo.input_pins, &topo.output_pins}) {
        for (NodeId p : *pins) {
            require(p < topo.node_count && p != topo.ground,
                    "pin must be a valid non-ground node");
        }
    }
}

/// True when every node reaches ground through ohmic elements or the leak.
inline bool has_ground_path(const CircuitTopology& topo) {
    if (topo.leak_conductance > 0) return true;
    std::vector<std::vector<NodeId>> adj(topo.node_count);
    for (const auto& e : topo.elements) {
        if (!is_resistive(e.kind)) continue;
        adj[e.a].push_back(e.b);
        adj[e.b].push_back(e.a);
    }
    std::vector<bool> seen(topo.node_count, false);
    std::queue<NodeId> q;
    q.push(topo.ground);
    seen[topo.ground] = true;
    std::size_t reached = 1;
    while (!q.empty()) {
        NodeId u = q.front();
        q.pop();
        for (NodeId v : adj[u]) {
            if (!seen[v]) {
                seen[v] = true;
                ++reached;
                q.push(v);
            }
        }
    }
    return reached == topo.node_count;
}

/// Stored energy 1/2 sum C (v_a - v_b)^2 over all capacitors.
template <typename Vec>
double capacitive_energy(const CircuitTopology& topo, const Vec& voltages) {
    double energy = 0.0;
    for (const auto& e : topo.elements) {
        if (const auto* c = std::get_if<Capacitor>(&e.kind)) {
            const double x = voltages[e.a] - voltages[e.b];
            energy += 0.5 * c->capacitance * x * x;
        }
    }
    return energy;
}

inline double memristor_current(const Memristor& m, double w, double v) {
    return v * m.conductance(w);
}

}  // namespace cbricks::circuit
