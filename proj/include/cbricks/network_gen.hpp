#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cbricks/circuit.hpp"
#include "cbricks/random.hpp"

namespace cbricks::circuit {

struct LogRange {
    double lo;
    double hi;
    bool operator==(const LogRange&) const = default;
};

/// Parameters of the random lattice. Edge classes are drawn independently
/// per lattice edge; whatever probability mass is left over becomes
/// high-resistance matrix resistors.
struct NetworkGenParams {
    std::array<std::size_t, 3> lattice_dims{6, 6, 1};
    double p_metallic = 0.10;
    double p_memristive = 0.05;
    double p_capacitive = 0.30;
    LogRange metallic_ohms{1.0, 10.0};
    LogRange matrix_ohms{1e4, 1e6};
    LogRange capacitance_farads{1e-9, 1e-6};
    double r_on = 100.0;
    double r_off = 16e3;
    double mobility = 1e-14;
    double length_scale = 1e-8;
    double leak_factor = 10.0;  // r_leak = leak_factor * r_off
    std::size_t pin_count_in = 2;
    std::size_t pin_count_out = 1;
    std::uint64_t seed = 1;

    std::size_t lattice_size() const { return lattice_dims[0] * lattice_dims[1] * lattice_dims[2]; }

    bool operator==(const NetworkGenParams&) const = default;
};

inline void validate(const NetworkGenParams& p) {
    for (std::size_t d : p.lattice_dims) require(d >= 1, "lattice dimensions must be positive");
    require(p.lattice_size() >= 2, "lattice needs at least two nodes");
    for (double q : {p.p_metallic, p.p_memristive, p.p_capacitive}) {
        require(q >= 0.0 && q <= 1.0, "element probabilities must lie in [0,1]");
    }
    require(p.p_metallic + p.p_memristive + p.p_capacitive <= 1.0 + 1e-12,
            "element probabilities sum to more than 1");
    for (const LogRange& r : {p.metallic_ohms, p.matrix_ohms, p.capacitance_farads}) {
        require(r.lo > 0 && r.lo <= r.hi, "value ranges need 0 < lo <= hi");
    }
    require(p.r_on > 0 && p.r_on < p.r_off, "memristor needs 0 < r_on < r_off");
    require(p.mobility > 0 && p.length_scale > 0, "memristor rate constants must be positive");
    require(p.leak_factor > 0, "leak factor must be positive");
}

/// Lattice-site id of (x, y, z).
inline NodeId lattice_node(const NetworkGenParams& p, std::size_t x, std::size_t y, std::size_t z) {
    return x + p.lattice_dims[0] * (y + p.lattice_dims[1] * z);
}

/// Nodes on the outer faces of the lattice. Only dimensions longer than one
/// site have faces, so a 6x6x1 plate has its 20 perimeter sites as boundary.
inline std::vector<NodeId> boundary_nodes(const NetworkGenParams& p) {
    const auto [nx, ny, nz] = p.lattice_dims;
    auto on_face = [](std::size_t i, std::size_t n) { return n > 1 && (i == 0 || i + 1 == n); };
    std::vector<NodeId> out;
    for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t x = 0; x < nx; ++x)
                if (on_face(x, nx) || on_face(y, ny) || on_face(z, nz))
                    out.push_back(lattice_node(p, x, y, z));
    return out;
}

/// Random R/C/memristor lattice with a leak to an extra ground node.
/// Nodes 0..N-1 are lattice sites, node N is ground.
inline CircuitTopology generate_network(const NetworkGenParams& p) {
    validate(p);
    const auto [nx, ny, nz] = p.lattice_dims;
    const std::size_t n = p.lattice_size();

    CircuitTopology topo;
    topo.node_count = n + 1;
    topo.ground = n;
    topo.seed = p.seed;
    topo.leak_conductance = 1.0 / (p.leak_factor * p.r_off);

    Rng rng(p.seed);
    auto draw = [&](NodeId a, NodeId b) {
        const double u = rng.uniform();
        Element e{a, b, Resistor{0.0}};
        if (u < p.p_metallic) {
            e.kind = Resistor{1.0 / rng.log_uniform(p.metallic_ohms.lo, p.metallic_ohms.hi)};
        } else if (u < p.p_metallic + p.p_memristive) {
            e.kind = Memristor{p.r_on, p.r_off, p.mobility, p.length_scale};
        } else if (u < p.p_metallic + p.p_memristive + p.p_capacitive) {
            e.kind = Capacitor{rng.log_uniform(p.capacitance_farads.lo, p.capacitance_farads.hi)};
        } else {
            e.kind = Resistor{1.0 / rng.log_uniform(p.matrix_ohms.lo, p.matrix_ohms.hi)};
        }
        topo.elements.push_back(e);
    };

    for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t x = 0; x < nx; ++x) {
                const NodeId here = lattice_node(p, x, y, z);
                if (x + 1 < nx) draw(here, lattice_node(p, x + 1, y, z));
                if (y + 1 < ny) draw(here, lattice_node(p, x, y + 1, z));
                if (z + 1 < nz) draw(here, lattice_node(p, x, y, z + 1));
            }

    const auto boundary = boundary_nodes(p);
    require(p.pin_count_in + p.pin_count_out <= boundary.size(),
            "not enough boundary nodes for the requested pins");
    const auto pins = rng.sample(boundary, p.pin_count_in + p.pin_count_out);
    topo.input_pins.assign(pins.begin(), pins.begin() + static_cast<std::ptrdiff_t>(p.pin_count_in));
    topo.output_pins.assign(pins.begin() + static_cast<std::ptrdiff_t>(p.pin_count_in), pins.end());
    return topo;
}

}  // namespace cbricks::circuit
