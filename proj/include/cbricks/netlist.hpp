#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "cbricks/circuit.hpp"
#include "cbricks/io/csv.hpp"
#include "cbricks/transient.hpp"

namespace cbricks::circuit {

// Line-oriented netlist:
//
//   nodes <count>
//   ground <id>
//   seed <u64>
//   leak <siemens>
//   inputs <id>...
//   outputs <id>...
//   R <a> <b> <conductance>
//   C <a> <b> <capacitance>
//   M <a> <b> <r_on> <r_off> <mobility> <length_scale>
//
// Blank lines and lines starting with '#' are ignored.

inline void write_netlist(std::ostream& os, const CircuitTopology& topo) {
    using io::format_double;
    os << "# cbricks netlist\n";
    os << "nodes " << topo.node_count << '\n';
    os << "ground " << topo.ground << '\n';
    os << "seed " << topo.seed << '\n';
    os << "leak " << format_double(topo.leak_conductance) << '\n';
    os << "inputs";
    for (NodeId p : topo.input_pins) os << ' ' << p;
    os << "\noutputs";
    for (NodeId p : topo.output_pins) os << ' ' << p;
    os << '\n';
    for (const auto& e : topo.elements) {
        if (const auto* r = std::get_if<Resistor>(&e.kind)) {
            os << "R " << e.a << ' ' << e.b << ' ' << format_double(r->conductance) << '\n';
        } else if (const auto* c = std::get_if<Capacitor>(&e.kind)) {
            os << "C " << e.a << ' ' << e.b << ' ' << format_double(c->capacitance) << '\n';
        } else {
            const auto& m = std::get<Memristor>(e.kind);
            os << "M " << e.a << ' ' << e.b << ' ' << format_double(m.r_on) << ' '
               << format_double(m.r_off) << ' ' << format_double(m.mobility) << ' '
               << format_double(m.length_scale) << '\n';
        }
    }
}

inline CircuitTopology read_netlist(std::istream& is) {
    CircuitTopology topo;
    std::string line;
    std::size_t line_no = 0;
    bool saw_nodes = false;
    while (std::getline(is, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key) || key[0] == '#') continue;
        auto fail = [&](const std::string& why) {
            throw ValidationError("netlist line " + std::to_string(line_no) + ": " + why);
        };
        if (key == "nodes") {
            if (!(ls >> topo.node_count)) fail("bad node count");
            saw_nodes = true;
        } else if (key == "ground") {
            if (!(ls >> topo.ground)) fail("bad ground id");
        } else if (key == "seed") {
            if (!(ls >> topo.seed)) fail("bad seed");
        } else if (key == "leak") {
            if (!(ls >> topo.leak_conductance)) fail("bad leak conductance");
        } else if (key == "inputs" || key == "outputs") {
            auto& pins = key == "inputs" ? topo.input_pins : topo.output_pins;
            NodeId p;
            while (ls >> p) pins.push_back(p);
        } else if (key == "R" || key == "C" || key == "M") {
            Element e{0, 0, Resistor{0}};
            if (!(ls >> e.a >> e.b)) fail("bad element terminals");
            if (key == "R") {
                Resistor r{};
                if (!(ls >> r.conductance)) fail("bad resistor value");
                e.kind = r;
            } else if (key == "C") {
                Capacitor c{};
                if (!(ls >> c.capacitance)) fail("bad capacitor value");
                e.kind = c;
            } else {
                Memristor m{};
                if (!(ls >> m.r_on >> m.r_off >> m.mobility >> m.length_scale)) {
                    fail("bad memristor parameters");
                }
                e.kind = m;
            }
            topo.elements.push_back(e);
        } else {
            fail("unknown record '" + key + "'");
        }
    }
    require(saw_nodes, "netlist has no 'nodes' header");
    validate(topo);
    return topo;
}

/// CSV with header `t,<node ids...>`.
inline void write_trace_csv(std::ostream& os, const TraceRecord& trace) {
    io::CsvWriter csv(os);
    std::vector<std::string> header{"t"};
    for (NodeId n : trace.nodes) header.push_back(std::to_string(n));
    csv.row(header);
    for (std::size_t r = 0; r < trace.size(); ++r) {
        std::vector<std::string> fields{io::format_double(trace.times[r])};
        for (std::size_t c = 0; c < trace.nodes.size(); ++c) {
            fields.push_back(io::format_double(
                trace.samples(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))));
        }
        csv.row(fields);
    }
}

}  // namespace cbricks::circuit
