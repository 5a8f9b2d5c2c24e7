#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cbricks/app/config.hpp"
#include "cbricks/app/run.hpp"
#include "cbricks/comm.hpp"
#include "cbricks/io/csv.hpp"
#include "cbricks/io/ppm.hpp"
#include "cbricks/netlist.hpp"
#include "cbricks/network_gen.hpp"
#include "cbricks/portrait.hpp"
#include "cbricks/reservoir_tasks.hpp"
#include "cbricks/wall_io.hpp"

namespace cbricks::app {

using circuit::CircuitTopology;
using circuit::NetworkGenParams;
using circuit::SimConfig;
using circuit::Waveform;
using circuit::WaveKind;
using io::format_double;

// ---------------------------------------------------------------------------
// Shared parameter readers

inline NetworkGenParams read_network(Config& cfg, std::uint64_t seed) {
    NetworkGenParams p;
    const auto dims = cfg.get_sizes("network.dims", {6, 6, 1});
    require(dims.size() == 3, "network.dims needs three values");
    p.lattice_dims = {dims[0], dims[1], dims[2]};
    p.p_metallic = cfg.get_double("network.p_metallic", p.p_metallic);
    p.p_memristive = cfg.get_double("network.p_memristive", p.p_memristive);
    p.p_capacitive = cfg.get_double("network.p_capacitive", p.p_capacitive);
    auto range = [&](const std::string& key, circuit::LogRange r) {
        const auto v = cfg.get_doubles(key, {r.lo, r.hi});
        require(v.size() == 2, key + " needs two values");
        return circuit::LogRange{v[0], v[1]};
    };
    p.metallic_ohms = range("network.metallic_ohms", p.metallic_ohms);
    p.matrix_ohms = range("network.matrix_ohms", p.matrix_ohms);
    p.capacitance_farads = range("network.capacitance_farads", p.capacitance_farads);
    p.r_on = cfg.get_double("network.r_on", p.r_on);
    p.r_off = cfg.get_double("network.r_off", p.r_off);
    p.mobility = cfg.get_double("network.mobility", p.mobility);
    p.length_scale = cfg.get_double("network.length_scale", p.length_scale);
    p.leak_factor = cfg.get_double("network.leak_factor", p.leak_factor);
    p.pin_count_in = cfg.get_size("network.pins_in", p.pin_count_in);
    p.pin_count_out = cfg.get_size("network.pins_out", p.pin_count_out);
    p.seed = cfg.get_u64("network.seed", seed);
    circuit::validate(p);
    return p;
}

inline SimConfig read_sim(Config& cfg, double duration) {
    SimConfig s;
    s.dt = cfg.get_double("sim.dt", s.dt);
    s.duration = cfg.get_double("sim.duration", duration);
    s.scheme = circuit::parse_scheme(cfg.get_string("sim.scheme", std::string(circuit::to_string(s.scheme))));
    s.initial_memristor_state = cfg.get_double("sim.initial_memristor_state", s.initial_memristor_state);
    return s;
}

inline bool memoryless(const CircuitTopology& topo) {
    return topo.indices_of<circuit::Capacitor>().empty() && topo.indices_of<circuit::Memristor>().empty();
}

// ---------------------------------------------------------------------------
// attractor

struct AttractorParams {
    NetworkGenParams network;
    SimConfig sim;
    Waveform primary;
    Waveform secondary;
    double washout = 0.2;
    std::size_t lag = 25;
    std::size_t resolution = 64;
    std::size_t channel = 0;
    std::size_t image_size = 256;
    double decay_cutoff = 0.03;
    double decay_duration = 0.06;
};

inline AttractorParams read_attractor(Config& cfg, std::uint64_t seed) {
    AttractorParams a;
    a.network = read_network(cfg, seed);
    a.sim = read_sim(cfg, 1.2);
    a.sim.record_stride = cfg.get_size("attractor.record_stride", 5);
    a.primary.kind = circuit::parse_wave_kind(cfg.get_string("attractor.primary", "square"));
    a.primary.frequency = cfg.get_double("attractor.primary_frequency", 100.0);
    a.primary.amplitude = cfg.get_double("attractor.primary_amplitude", 1.0);
    a.secondary.kind = circuit::parse_wave_kind(cfg.get_string("attractor.secondary", "sine"));
    a.secondary.frequency = cfg.get_double("attractor.secondary_frequency", 101.0);
    a.secondary.amplitude = cfg.get_double("attractor.secondary_amplitude", 1.0);
    a.washout = cfg.get_double("attractor.washout", a.washout);
    a.lag = cfg.get_size("attractor.lag", a.lag);
    a.resolution = cfg.get_size("attractor.resolution", a.resolution);
    a.channel = cfg.get_size("attractor.channel", a.channel);
    a.image_size = cfg.get_size("attractor.image_size", a.image_size);
    a.decay_cutoff = cfg.get_double("attractor.decay_cutoff", a.decay_cutoff);
    a.decay_duration = cfg.get_double("attractor.decay_duration", a.decay_duration);
    a.sim.validate();
    a.primary.validate();
    a.secondary.validate();
    require(a.network.pin_count_in >= 2, "attractor needs two input pins");
    require(a.washout >= 0 && a.washout < a.sim.duration, "attractor.washout must lie in [0, duration)");
    require(a.image_size >= 2, "attractor.image_size must be at least 2");
    require(a.decay_cutoff > 0 && a.decay_cutoff < a.decay_duration, "need 0 < decay_cutoff < decay_duration");
    return a;
}

inline circuit::TraceRecord drop_washout(const circuit::TraceRecord& t, double washout) {
    std::size_t skip = 0;
    while (skip < t.size() && t.times[skip] < washout - 1e-12) ++skip;
    circuit::TraceRecord out = t;
    out.times.erase(out.times.begin(), out.times.begin() + static_cast<std::ptrdiff_t>(skip));
    out.samples = t.samples.bottomRows(static_cast<Eigen::Index>(t.size() - skip));
    if (t.memristor_states.rows() > 0) {
        out.memristor_states = t.memristor_states.bottomRows(static_cast<Eigen::Index>(t.size() - skip));
    }
    return out;
}

inline io::Raster render_portrait(const std::vector<circuit::Point2>& pts, std::size_t size) {
    io::Raster img(size, size, {255, 255, 255});
    double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
    for (const auto& p : pts) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    auto pix = [&](double v, double lo, double hi) {
        if (!(hi > lo)) return size / 2;
        return std::min(size - 1, static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(size)));
    };
    for (const auto& p : pts) img.set(pix(p.x, x0, x1), size - 1 - pix(p.y, y0, y1), {20, 20, 120});
    return img;
}

inline void cmd_attractor(Config& cfg, Run& run, const fs::path& out_root, bool force) {
    const auto a = read_attractor(cfg, run.seed());
    cfg.require_all_used();
    run.open_dir(out_root, force);

    const auto topo = circuit::generate_network(a.network);
    require(a.channel < topo.output_pins.size(), "attractor.channel out of range");
    const circuit::NodeId in0 = topo.input_pins[0], in1 = topo.input_pins[1];

    const auto dual = circuit::simulate(topo, {{in0, a.primary}, {in1, a.secondary}}, a.sim);
    const auto single = circuit::simulate(topo, {{in0, a.primary}}, a.sim);
    const auto dual_kept = drop_washout(dual, a.washout);
    const auto single_kept = drop_washout(single, a.washout);
    const auto pts = circuit::delay_embed(dual_kept, a.channel, a.lag);
    const auto pts_single = circuit::delay_embed(single_kept, a.channel, a.lag);
    const std::size_t cov_dual = circuit::portrait_coverage(pts, a.resolution);
    const std::size_t cov_single = circuit::portrait_coverage(pts_single, a.resolution);

    {
        auto os = run.open("netlist.txt");
        circuit::write_netlist(os, topo);
    }
    {
        auto os = run.open("trace.csv");
        circuit::write_trace_csv(os, dual);
    }
    {
        auto os = run.open("portrait.csv");
        io::CsvWriter csv(os);
        csv.row({"x", "y"});
        for (const auto& p : pts) csv.row({format_double(p.x), format_double(p.y)});
    }
    run.write_ppm("portrait.ppm", render_portrait(pts, a.image_size));

    // Passivity: node voltages stay inside the source range, and stored
    // energy never grows once the sources are switched off.
    const double bound = a.primary.amplitude + a.secondary.amplitude;
    const double peak = dual.samples.cwiseAbs().maxCoeff();
    Waveform p = a.primary, s = a.secondary;
    p.cutoff = s.cutoff = a.decay_cutoff;
    SimConfig decay = a.sim;
    decay.duration = a.decay_duration;
    decay.record_stride = 1;
    double prev = -1.0, worst = 0.0;
    circuit::simulate(topo, {{in0, p}, {in1, s}}, decay,
                      [&](std::size_t, double t, const circuit::TransientState& st) {
                          const double e = circuit::capacitive_energy(topo, st.voltages);
                          if (t > a.decay_cutoff + 1.5 * decay.dt && prev > 0) worst = std::max(worst, e / prev - 1.0);
                          prev = e;
                      });

    run.metric("primary", circuit::to_string(a.primary.kind));
    run.metric("primary_frequency", a.primary.frequency);
    run.metric("secondary", circuit::to_string(a.secondary.kind));
    run.metric("secondary_frequency", a.secondary.frequency);
    run.metric("samples", dual.size());
    run.metric("portrait_points", pts.size());
    run.metric("coverage_dual", cov_dual);
    run.metric("coverage_single", cov_single);
    run.metric("dual_exceeds_single", cov_dual > cov_single);
    run.metric("peak_voltage", peak);
    run.metric("energy_growth_max", worst);
    run.check("bounded_voltage", peak <= bound * (1 + 1e-6));
    run.check("energy_non_increasing", worst <= 1e-9);
}

// ---------------------------------------------------------------------------
// reservoir

struct ClassifyParams {
    std::size_t episodes = 30;
    reservoir::ClassificationOptions options;
    double washout = 0.02;
    double sample_period = 1e-4;
};

struct MemoryParams {
    std::size_t max_delay = 10;
    reservoir::MemoryTaskOptions options;
    double washout = 0.01;
    double sample_period = 1e-3;
};

struct ReservoirParams {
    NetworkGenParams network;
    SimConfig sim;
    std::string task = "classify";
    std::string nodes = "all";
    double input_scale = 1.0;
    bool lambda_sweep = false;
    std::vector<double> lambdas;
    ClassifyParams classify;
    MemoryParams memory;
};

inline ReservoirParams read_reservoir(Config& cfg, std::uint64_t seed) {
    ReservoirParams r;
    r.network = read_network(cfg, seed);
    r.sim = read_sim(cfg, 0.06);
    r.task = cfg.get_string("reservoir.task", r.task);
    r.nodes = cfg.get_string("reservoir.nodes", r.nodes);
    r.input_scale = cfg.get_double("reservoir.input_scale", r.input_scale);
    r.lambda_sweep = cfg.get_bool("reservoir.lambda_sweep", false);
    r.lambdas = cfg.get_doubles("reservoir.lambdas", {1e-6, 1e-4, 1e-2, 1.0, 100.0});
    require(r.task == "classify" || r.task == "memory", "reservoir.task must be classify or memory");
    require(r.nodes == "all" || r.nodes == "outputs", "reservoir.nodes must be all or outputs");
    require(!r.lambdas.empty(), "reservoir.lambdas must not be empty");
    if (r.task == "classify") {
        auto& c = r.classify;
        c.episodes = cfg.get_size("classify.episodes", c.episodes);
        c.washout = cfg.get_double("classify.washout", c.washout);
        c.sample_period = cfg.get_double("classify.sample_period", c.sample_period);
        c.options.primary_frequency = cfg.get_double("classify.primary_frequency", c.options.primary_frequency);
        c.options.secondary_frequency = cfg.get_double("classify.secondary_frequency", c.options.secondary_frequency);
        c.options.amplitude = cfg.get_double("classify.amplitude", c.options.amplitude);
        c.options.amplitude_jitter = cfg.get_double("classify.amplitude_jitter", c.options.amplitude_jitter);
        c.options.episode_duration = cfg.get_double("classify.episode_duration", c.options.episode_duration);
        c.options.lambda = cfg.get_double("classify.lambda", c.options.lambda);
        c.options.shuffle_rounds = cfg.get_size("classify.shuffle_rounds", c.options.shuffle_rounds);
    } else {
        auto& m = r.memory;
        m.max_delay = cfg.get_size("memory.max_delay", m.max_delay);
        m.washout = cfg.get_double("memory.washout", m.washout);
        m.sample_period = cfg.get_double("memory.sample_period", m.sample_period);
        m.options.n_samples = cfg.get_size("memory.samples", m.options.n_samples);
        m.options.lambda = cfg.get_double("memory.lambda", m.options.lambda);
        m.options.seed = cfg.get_u64("memory.input_seed", seed);
    }
    return r;
}

inline void write_weights(Run& run, const std::vector<std::string>& names,
                          const std::vector<reservoir::ReadoutWeights>& readouts,
                          const std::vector<circuit::NodeId>& nodes) {
    auto os = run.open("weights.csv");
    io::CsvWriter csv(os);
    std::vector<std::string> header{"readout", "lambda", "bias"};
    for (auto n : nodes) header.push_back("w" + std::to_string(n));
    csv.row(header);
    for (std::size_t i = 0; i < readouts.size(); ++i) {
        std::vector<std::string> row{names[i], format_double(readouts[i].ridge_lambda), format_double(readouts[i].bias)};
        for (Eigen::Index k = 0; k < readouts[i].weights.size(); ++k) row.push_back(format_double(readouts[i].weights(k)));
        csv.row(row);
    }
}

/// Fits the same regression problem for each lambda. Returns false if the
/// weight norm ever grows with lambda.
inline bool lambda_sweep(Run& run, const std::vector<double>& lambdas, const Eigen::MatrixXd& x_train,
                         const Eigen::VectorXd& y_train, const Eigen::MatrixXd& x_test, const Eigen::VectorXd& y_test) {
    auto sorted = lambdas;
    std::sort(sorted.begin(), sorted.end());
    auto os = run.open("lambda_sweep.csv");
    io::CsvWriter csv(os);
    csv.row({"lambda", "nrmse", "weight_norm"});
    double prev = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (double lambda : sorted) {
        const auto r = reservoir::train_ridge(x_train, y_train, lambda);
        const double norm = r.weights.norm();
        monotone = monotone && norm <= prev * (1 + 1e-9);
        prev = norm;
        csv.row({format_double(lambda), format_double(reservoir::nrmse(reservoir::predict(r, x_test), y_test)),
                 format_double(norm)});
    }
    return monotone;
}

inline void cmd_reservoir(Config& cfg, Run& run, const fs::path& out_root, bool force) {
    const auto r = read_reservoir(cfg, run.seed());
    cfg.require_all_used();
    run.open_dir(out_root, force);

    const auto topo = circuit::generate_network(r.network);
    {
        auto os = run.open("netlist.txt");
        circuit::write_netlist(os, topo);
    }
    reservoir::ReservoirConfig rc;
    rc.sampled_nodes = r.nodes == "all" ? reservoir::all_nodes(topo) : topo.output_pins;
    rc.input_scale = r.input_scale;
    run.metric("task", r.task);
    run.metric("sampled_nodes", rc.sampled_nodes.size());

    if (r.task == "classify") {
        rc.washout = r.classify.washout;
        rc.sample_period = r.classify.sample_period;
        const auto res =
            reservoir::waveform_classification_task(topo, r.sim, rc, r.classify.episodes, run.seed(), r.classify.options);
        {
            auto os = run.open("states.csv");
            io::CsvWriter csv(os);
            std::vector<std::string> header{"episode", "label", "split"};
            for (auto n : rc.sampled_nodes) header.push_back("v" + std::to_string(n));
            csv.row(header);
            for (Eigen::Index e = 0; e < res.features.rows(); ++e) {
                const auto i = static_cast<std::size_t>(e);
                std::vector<std::string> row{std::to_string(e),
                                             std::string(circuit::to_string(reservoir::kWaveClasses[res.labels[i]])),
                                             res.is_train[i] ? "train" : "test"};
                for (Eigen::Index k = 0; k < res.features.cols(); ++k) row.push_back(format_double(res.features(e, k)));
                csv.row(row);
            }
        }
        std::vector<std::string> names;
        for (auto k : reservoir::kWaveClasses) names.emplace_back(circuit::to_string(k));
        write_weights(run, names, res.readouts, rc.sampled_nodes);

        run.metric("episodes", r.classify.episodes);
        run.metric("train_accuracy", res.train_accuracy);
        run.metric("accuracy", res.test_accuracy);
        run.metric("shuffled_accuracy", res.shuffled_accuracy);
        run.check("accuracy_in_range", res.test_accuracy >= 0.0 && res.test_accuracy <= 1.0);

        if (r.lambda_sweep) {
            // One-vs-rest regression for the first class.
            std::vector<Eigen::Index> tr, te;
            for (std::size_t i = 0; i < res.labels.size(); ++i) (res.is_train[i] ? tr : te).push_back(static_cast<Eigen::Index>(i));
            Eigen::VectorXd y(static_cast<Eigen::Index>(res.labels.size()));
            for (std::size_t i = 0; i < res.labels.size(); ++i) y(static_cast<Eigen::Index>(i)) = res.labels[i] == 0 ? 1.0 : 0.0;
            const Eigen::MatrixXd xtr = res.features(tr, Eigen::all), xte = res.features(te, Eigen::all);
            const Eigen::VectorXd ytr = y(tr), yte = y(te);
            run.check("weight_norm_non_increasing", lambda_sweep(run, r.lambdas, xtr, ytr, xte, yte));
        }
    } else {
        rc.washout = r.memory.washout;
        rc.sample_period = r.memory.sample_period;
        const auto mc = reservoir::memory_capacity(topo, r.sim, rc, r.memory.max_delay, r.memory.options);
        {
            auto os = run.open("states.csv");
            io::CsvWriter csv(os);
            std::vector<std::string> header{"t", "input"};
            for (auto n : rc.sampled_nodes) header.push_back("v" + std::to_string(n));
            csv.row(header);
            for (Eigen::Index j = 0; j < mc.states.rows(); ++j) {
                const auto i = static_cast<std::size_t>(j);
                std::vector<std::string> row{format_double(mc.states.times[i]), format_double(mc.inputs[mc.slots[i]])};
                for (Eigen::Index k = 0; k < mc.states.cols(); ++k) row.push_back(format_double(mc.states.states(j, k)));
                csv.row(row);
            }
        }
        std::vector<std::string> names;
        for (std::size_t k = 0; k < mc.readouts.size(); ++k) names.push_back("delay_" + std::to_string(k));
        write_weights(run, names, mc.readouts, rc.sampled_nodes);
        {
            auto os = run.open("memory.csv");
            io::CsvWriter csv(os);
            csv.row({"delay", "r2"});
            for (std::size_t k = 0; k < mc.r2.size(); ++k) csv.row({std::to_string(k), format_double(mc.r2[k])});
        }
        run.metric("max_delay", r.memory.max_delay);
        run.metric("r2_delay0", mc.r2[0]);
        run.metric("memory_capacity", mc.total);
        const bool no_memory = memoryless(topo);
        run.metric("memoryless_network", no_memory);
        if (no_memory) {
            bool forgets = true;
            for (std::size_t k = 1; k < mc.r2.size(); ++k) forgets = forgets && mc.r2[k] < 0.1;
            run.check("memoryless_forgets", forgets && mc.total < 0.5);
        }
        if (r.lambda_sweep) {
            // Delay-1 recall, split as in the capacity estimate.
            std::vector<Eigen::Index> rows;
            for (std::size_t j = 0; j < mc.slots.size(); ++j)
                if (mc.slots[j] >= 1) rows.push_back(static_cast<Eigen::Index>(j));
            const auto n = static_cast<Eigen::Index>(rows.size());
            const Eigen::Index n_train = 2 * n / 3;
            const Eigen::MatrixXd x = mc.states.states(rows, Eigen::all);
            Eigen::VectorXd y(n);
            for (Eigen::Index i = 0; i < n; ++i) y(i) = mc.inputs[mc.slots[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])] - 1];
            run.check("weight_norm_non_increasing",
                      lambda_sweep(run, r.lambdas, x.topRows(n_train), y.head(n_train), x.bottomRows(n - n_train),
                                   y.tail(n - n_train)));
        }
    }
}

// ---------------------------------------------------------------------------
// wall

struct WallParams {
    std::size_t rows = 16;
    std::size_t cols = 16;
    bool toroidal = false;
    std::string task = "excite";
    std::size_t steps = 40;
    wall::RuleSpec rule;
    std::size_t source_x = 0, source_y = 0;
    std::string initial;  // optional state grid file
    std::size_t seed_count = 5;
    double density = 0.5;
    std::string image;  // optional binary image grid file
};

inline WallParams read_wall(Config& cfg) {
    WallParams w;
    const std::string preset = cfg.get_string("wall.preset", "none");
    if (preset == "paper-wall") {
        w.rows = 20;
        w.cols = 30;
    } else {
        require(preset == "none", "unknown wall preset '" + preset + "'");
    }
    w.rows = cfg.get_size("wall.rows", w.rows);
    w.cols = cfg.get_size("wall.cols", w.cols);
    w.toroidal = cfg.get_bool("wall.toroidal", w.toroidal);
    w.task = cfg.get_string("wall.task", w.task);
    require(w.task == "excite" || w.task == "voronoi" || w.task == "morph", "wall.task must be excite, voronoi or morph");
    if (w.task == "excite") {
        w.steps = cfg.get_size("wall.steps", w.steps);
        w.rule.excite_lo = static_cast<int>(cfg.get_size("wall.excite_lo", 1));
        w.rule.excite_hi = static_cast<int>(cfg.get_size("wall.excite_hi", 6));
        w.rule.refractory_len = static_cast<int>(cfg.get_size("wall.refractory_len", 1));
        w.rule.validate();
        w.initial = cfg.get_string("wall.initial", "");
        if (w.initial.empty()) {
            w.source_x = cfg.get_size("wall.source_x", w.cols / 2);
            w.source_y = cfg.get_size("wall.source_y", w.rows / 2);
        }
    } else if (w.task == "voronoi") {
        w.seed_count = cfg.get_size("wall.seed_count", w.seed_count);
    } else {
        w.image = cfg.get_string("wall.image", "");
        if (w.image.empty()) w.density = cfg.get_double("wall.density", w.density);
        require(w.density >= 0 && w.density <= 1, "wall.density must lie in [0,1]");
    }
    return w;
}

/// Nearest-seed labels computed from one BFS per seed; ties become boundary.
inline std::vector<int> nearest_seed_labels(const wall::WallGraph& g, const std::vector<wall::CellId>& seeds) {
    std::vector<std::vector<std::size_t>> dist;
    for (auto s : seeds) dist.push_back(wall::bfs_distances(g, s));
    std::vector<int> out(g.size(), wall::kUnreached);
    for (wall::CellId c = 0; c < g.size(); ++c) {
        std::size_t best = wall::kUnreachable;
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            if (dist[i][c] < best) {
                best = dist[i][c];
                out[c] = static_cast<int>(i);
            } else if (dist[i][c] == best && best != wall::kUnreachable) {
                out[c] = wall::kBoundary;
            }
        }
    }
    return out;
}

inline std::string frame_name(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frames/frame_%04zu.ppm", k);
    return buf;
}

inline void cmd_wall(Config& cfg, Run& run, const fs::path& out_root, bool force) {
    auto w = read_wall(cfg);
    cfg.require_all_used();

    // Loaded grids define the wall shape.
    wall::WallState initial;
    wall::BinaryImage image;
    if (w.task == "excite" && !w.initial.empty()) {
        std::ifstream is(w.initial);
        require(static_cast<bool>(is), "cannot open " + w.initial);
        initial = wall::read_state_grid(is, w.rows, w.cols, static_cast<std::uint16_t>(w.rule.refractory_len));
    }
    if (w.task == "morph" && !w.image.empty()) {
        std::ifstream is(w.image);
        require(static_cast<bool>(is), "cannot open " + w.image);
        image = wall::read_image_grid(is, w.rows, w.cols);
    }
    const auto g = wall::build_brick_wall(w.rows, w.cols, w.toroidal);
    run.open_dir(out_root, force);
    run.metric("task", w.task);
    run.metric("rows", w.rows);
    run.metric("cols", w.cols);
    run.metric("bricks", g.size());

    if (w.task == "excite") {
        const bool single_source = w.initial.empty();
        if (single_source) {
            require(w.source_x < w.cols && w.source_y < w.rows, "wall source outside the wall");
            initial = wall::WallState::quiescent(g);
            initial.cells[g.id(w.source_x, w.source_y)] = wall::CellState::excited();
        }
        const auto traj = wall::run(g, initial, w.rule, w.steps);
        auto states = run.open("states.txt");
        for (std::size_t k = 0; k < traj.size(); ++k) {
            if (k) states << '\n';
            wall::write_state_grid(states, g, traj[k]);
            run.write_ppm(frame_name(k), wall::render_frame(g, traj[k]));
        }
        run.metric("frames", traj.size());
        run.metric("final_excited", traj.back().count(wall::Phase::Excited));

        // Any wave: excited cells at step t lie in the BFS shell at distance t.
        const bool classic = w.rule.excite_lo == 1 && w.rule.excite_hi == 6 && w.rule.refractory_len == 1;
        std::vector<wall::CellId> sources;
        bool only_excited = true;
        for (wall::CellId c = 0; c < g.size(); ++c) {
            if (initial.cells[c].phase == wall::Phase::Excited) sources.push_back(c);
            only_excited = only_excited && initial.cells[c].phase != wall::Phase::Refractory;
        }
        if (classic && only_excited && !sources.empty()) {
            const auto d = wall::bfs_distances(g, sources);
            bool shell = true;
            for (std::size_t t = 0; t < traj.size(); ++t)
                for (wall::CellId c = 0; c < g.size(); ++c)
                    if (traj[t].cells[c].phase == wall::Phase::Excited) shell = shell && d[c] == t;
            run.check("wavefront_on_bfs_shell", shell);
        }
        if (classic && single_source) {
            const wall::CellId src = g.id(w.source_x, w.source_y);
            const auto first = wall::first_excitation(g, src);
            const auto d = wall::bfs_distances(g, src);
            const std::size_t ecc = *std::max_element(d.begin(), d.end());
            const std::size_t bt = wall::broadcast_time(g, src);
            run.metric("broadcast_time", bt);
            run.metric("eccentricity", ecc);
            run.check("oracle_match", first == d && bt == ecc);
        }
    } else if (w.task == "voronoi") {
        require(w.seed_count >= 1 && w.seed_count <= g.size(), "wall.seed_count must lie in [1, bricks]");
        std::vector<wall::CellId> all(g.size());
        std::iota(all.begin(), all.end(), wall::CellId{0});
        Rng rng(run.seed());
        auto seeds = rng.sample(all, w.seed_count);
        const auto labels = wall::voronoi_wavefront(g, seeds);
        auto states = run.open("states.txt");
        wall::write_label_grid(states, g, labels);
        run.write_ppm(frame_name(0), wall::render_frame(g, labels));
        {
            auto os = run.open("seeds.csv");
            io::CsvWriter csv(os);
            csv.row({"label", "x", "y"});
            for (std::size_t i = 0; i < seeds.size(); ++i)
                csv.row({std::to_string(i), std::to_string(g.x_of(seeds[i])), std::to_string(g.y_of(seeds[i]))});
        }
        run.metric("seeds", seeds.size());
        run.metric("boundary_cells", std::count(labels.begin(), labels.end(), wall::kBoundary));
        run.check("oracle_match", labels == nearest_seed_labels(g, seeds));
    } else {
        if (w.image.empty()) {
            Rng rng(run.seed());
            image.resize(g.size());
            for (auto& v : image) v = rng.uniform() < w.density;
        }
        const auto dil = wall::morph_op(g, image, wall::MorphOp::Dilate);
        const auto ero = wall::morph_op(g, image, wall::MorphOp::Erode);
        const auto con = wall::morph_op(g, image, wall::MorphOp::Contour);
        auto states = run.open("states.txt");
        const std::vector<std::pair<std::string, const wall::BinaryImage*>> outs{
            {"input", &image}, {"dilate", &dil}, {"erode", &ero}, {"contour", &con}};
        for (std::size_t i = 0; i < outs.size(); ++i) {
            if (i) states << '\n';
            wall::write_image_grid(states, g, *outs[i].second);
            run.write_ppm("frames/" + outs[i].first + ".ppm", wall::render_frame(g, *outs[i].second));
            run.metric(outs[i].first + "_on", std::count(outs[i].second->begin(), outs[i].second->end(), 1));
        }
        auto inv = [](wall::BinaryImage b) {
            for (auto& v : b) v = !v;
            return b;
        };
        bool contour_ok = true, extensive = true;
        for (wall::CellId c = 0; c < g.size(); ++c) {
            contour_ok = contour_ok && con[c] == (image[c] && !ero[c]);
            extensive = extensive && ero[c] <= image[c] && image[c] <= dil[c];
        }
        run.check("duality", ero == inv(wall::morph_op(g, inv(image), wall::MorphOp::Dilate)));
        run.check("contour_definition", contour_ok);
        run.check("ordering", extensive);
    }
}

// ---------------------------------------------------------------------------
// route

struct RouteCase {
    std::string id;
    std::vector<wall::CellId> faults;
    wall::CellId src = 0;
    wall::CellId dst = 0;
};

struct RouteScenarioFile {
    std::size_t rows = 0, cols = 0;
    std::size_t ttl = 0;
    std::vector<RouteCase> cases;
};

/// Scenario text: `wall ROWS COLS`, `ttl N`, then blocks of `scenario ID`,
/// `fail CELL...` (any number of lines) and `pair SRC DST` (one result row
/// each). Cells are ids y * cols + x. `#` starts a comment.
inline RouteScenarioFile read_route_scenarios(std::istream& is) {
    RouteScenarioFile f;
    std::string line, current = "default";
    std::vector<wall::CellId> faults;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        const std::string where = "scenario line " + std::to_string(lineno) + ": ";
        if (key == "wall") {
            require(static_cast<bool>(ls >> f.rows >> f.cols), where + "expected wall ROWS COLS");
        } else if (key == "ttl") {
            require(static_cast<bool>(ls >> f.ttl), where + "expected ttl N");
        } else if (key == "scenario") {
            require(static_cast<bool>(ls >> current), where + "expected scenario ID");
            faults.clear();
        } else if (key == "fail") {
            wall::CellId c;
            while (ls >> c) faults.push_back(c);
            require(ls.eof(), where + "bad cell id");
        } else if (key == "pair") {
            RouteCase rc{current, faults, 0, 0};
            require(static_cast<bool>(ls >> rc.src >> rc.dst), where + "expected pair SRC DST");
            f.cases.push_back(rc);
        } else {
            throw ValidationError(where + "unknown record '" + key + "'");
        }
        ls.clear();
        std::string extra;
        require(!(ls >> extra), where + "trailing text");
    }
    require(f.rows >= 1 && f.cols >= 1, "scenario file needs a wall line");
    require(f.ttl >= 1, "scenario file needs ttl >= 1");
    require(!f.cases.empty(), "scenario file has no pairs");
    return f;
}

struct RouteParams {
    std::size_t rows = 20, cols = 30;
    std::size_t ttl = 1000;
    std::string scenario;
    std::size_t max_faults = 50;
    std::size_t fault_step = 5;
    std::size_t trials = 20;
};

inline RouteParams read_route(Config& cfg) {
    RouteParams r;
    r.scenario = cfg.get_string("route.scenario", "");
    if (r.scenario.empty()) {
        r.rows = cfg.get_size("route.rows", r.rows);
        r.cols = cfg.get_size("route.cols", r.cols);
        r.ttl = cfg.get_size("route.ttl", r.ttl);
        r.max_faults = cfg.get_size("route.max_faults", r.max_faults);
        r.fault_step = cfg.get_size("route.fault_step", r.fault_step);
        r.trials = cfg.get_size("route.trials", r.trials);
        require(r.fault_step >= 1, "route.fault_step must be at least 1");
        require(r.trials >= 1, "route.trials must be at least 1");
        require(r.ttl >= 1, "route.ttl must be at least 1");
        require(r.rows * r.cols >= r.max_faults + 2, "route.max_faults leaves no room for endpoints");
    }
    return r;
}

inline void cmd_route(Config& cfg, Run& run, const fs::path& out_root, bool force) {
    auto p = read_route(cfg);
    cfg.require_all_used();

    struct Row {
        RouteCase rc;
        std::size_t failures;
    };
    std::vector<Row> rows;
    std::size_t ttl = p.ttl;
    if (!p.scenario.empty()) {
        std::ifstream is(p.scenario);
        require(static_cast<bool>(is), "cannot open " + p.scenario);
        const auto f = read_route_scenarios(is);
        p.rows = f.rows;
        p.cols = f.cols;
        ttl = f.ttl;
        for (const auto& c : f.cases) rows.push_back({c, 0});
    } else {
        // Matched seeds: each trial fails a growing prefix of one fixed
        // random order, so damage only ever accumulates.
        const std::size_t n = p.rows * p.cols;
        for (std::size_t t = 0; t < p.trials; ++t) {
            Rng rng(run.seed() * 1000003ULL + t);
            const wall::CellId src = rng.below(n);
            wall::CellId dst = rng.below(n - 1);
            if (dst >= src) ++dst;
            std::vector<wall::CellId> pool;
            for (wall::CellId c = 0; c < n; ++c)
                if (c != src && c != dst) pool.push_back(c);
            const auto order = rng.sample(pool, p.max_faults);
            for (std::size_t k = 0; k <= p.max_faults; k += p.fault_step) {
                RouteCase rc{"f" + std::to_string(k) + "-t" + std::to_string(t),
                             std::vector<wall::CellId>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k)),
                             src, dst};
                rows.push_back({rc, k});
            }
        }
    }
    const auto g = wall::build_brick_wall(p.rows, p.cols);
    run.open_dir(out_root, force);

    auto os = run.open("results.csv");
    io::CsvWriter csv(os);
    csv.row({"scenario", "failures", "src", "dst", "delivered", "hops", "messages", "oracle"});
    bool oracle_ok = true, gossip_ok = true;
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> by_faults;  // delivered, total
    std::size_t delivered = 0, messages = 0;
    Rng values_rng(run.seed());
    for (const auto& row : rows) {
        const auto faults = comm::FaultScenario::from_cells(g, row.rc.faults);
        require(row.rc.src < g.size() && row.rc.dst < g.size(), "scenario " + row.rc.id + ": endpoint out of range");
        const auto r = comm::flood_route(g, faults, row.rc.src, row.rc.dst, ttl);
        const auto d = wall::bfs_distances(g, row.rc.src, faults.failed);
        const bool oracle = d[row.rc.dst] <= ttl;
        oracle_ok = oracle_ok && r.delivered == oracle && (!r.delivered || r.hops == d[row.rc.dst]);
        csv.row({row.rc.id, std::to_string(faults.failure_count), std::to_string(row.rc.src),
                 std::to_string(row.rc.dst), r.delivered ? "true" : "false",
                 r.delivered ? std::to_string(r.hops) : "", std::to_string(r.messages_sent),
                 oracle ? "true" : "false"});
        delivered += r.delivered;
        messages += r.messages_sent;
        auto& [ok, total] = by_faults[faults.failure_count];
        ok += r.delivered;
        ++total;

        // Gossip min inside the source component settles within its diameter.
        std::vector<double> v(g.size());
        for (auto& x : v) x = values_rng.uniform();
        const std::size_t diam = comm::component_diameter(g, faults, row.rc.src);
        const auto s = comm::gossip_aggregate(g, faults, v, comm::Aggregation::Min, diam);
        double lo = std::numeric_limits<double>::infinity();
        for (wall::CellId c = 0; c < g.size(); ++c)
            if (d[c] != wall::kUnreachable) lo = std::min(lo, v[c]);
        for (wall::CellId c = 0; c < g.size(); ++c)
            if (d[c] != wall::kUnreachable) gossip_ok = gossip_ok && s.values[c] == lo;
    }

    run.metric("rows", p.rows);
    run.metric("cols", p.cols);
    run.metric("ttl", ttl);
    run.metric("scenarios", rows.size());
    run.metric("delivery_rate", static_cast<double>(delivered) / static_cast<double>(rows.size()));
    run.metric("messages_total", messages);
    run.check("oracle_match", oracle_ok);
    run.check("gossip_within_diameter", gossip_ok);
    if (p.scenario.empty()) {
        auto dos = run.open("delivery.csv");
        io::CsvWriter dcsv(dos);
        dcsv.row({"failures", "delivery_rate"});
        double prev = 1.0;
        bool monotone = true;
        for (const auto& [k, c] : by_faults) {
            const double rate = static_cast<double>(c.first) / static_cast<double>(c.second);
            monotone = monotone && rate <= prev;
            prev = rate;
            dcsv.row({std::to_string(k), format_double(rate)});
        }
        run.metric("delivery_rate_fault_free", static_cast<double>(by_faults[0].first) / static_cast<double>(by_faults[0].second));
        run.check("delivery_non_increasing", monotone);
        run.check("fault_free_delivers", by_faults[0].first == by_faults[0].second);
    }
}

// ---------------------------------------------------------------------------
// dispatch

struct Outcome {
    int code = kOk;
    std::string reason;  // one line, empty on success
    fs::path dir;
    std::string summary;
};

/// Runs `command` with `cfg`; `run.seed` in the config names the output
/// directory <out_root>/<command>-<seed>.
inline Outcome run_command(const std::string& command, Config cfg, const fs::path& out_root, bool force) {
    Outcome out;
    try {
        const std::uint64_t seed = cfg.get_u64("run.seed", 1);
        const std::string configured = cfg.get_string("run.command", command);
        require(configured == command, "config is for command " + configured);
        Run run(command, seed);
        if (command == "attractor") cmd_attractor(cfg, run, out_root, force);
        else if (command == "reservoir") cmd_reservoir(cfg, run, out_root, force);
        else if (command == "wall") cmd_wall(cfg, run, out_root, force);
        else if (command == "route") cmd_route(cfg, run, out_root, force);
        else throw ValidationError("unknown command '" + command + "'");
        run.finish(cfg);
        out.dir = run.dir();
        out.summary = run.summary_text();
        if (const auto failed = run.first_failure(); !failed.empty()) {
            out.code = kCheckFailed;
            out.reason = "check failed: " + failed;
        }
    } catch (const OutputExistsError& e) {
        out.code = kOutputExists;
        out.reason = std::string("error: ") + e.what();
    } catch (const std::exception& e) {
        out.code = kInvalid;
        out.reason = std::string("error: ") + e.what();
    }
    return out;
}

}  // namespace cbricks::app
