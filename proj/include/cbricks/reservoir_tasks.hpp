#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cbricks/reservoir.hpp"
#include "cbricks/waveform.hpp"

namespace cbricks::reservoir {

// ---------------------------------------------------------------------------
// Memory capacity

struct MemoryTaskOptions {
    std::size_t n_samples = 600;  // post-washout samples, one per input value
    double lambda = 1e-8;
    std::uint64_t seed = 1;
};

struct MemoryCapacity {
    /// r2[k] for k = 0..max_delay on held-out samples.
    std::vector<double> r2;
    /// Sum of r2[k] for k >= 1.
    double total = 0.0;
    StateMatrix states;
    std::vector<double> inputs;            // held value per sample slot
    std::vector<std::size_t> slots;        // slot index of each state row
    std::vector<ReadoutWeights> readouts;  // one per delay
};

/// Drives the first input pin with a uniform random stream, one value in
/// [-input_scale, +input_scale] per sample_period, and trains one readout per
/// delay to recall input(t - k). The first two thirds of the samples train,
/// the last third tests.
inline MemoryCapacity memory_capacity(const CircuitTopology& topo, SimConfig sim,
                                      const ReservoirConfig& res, std::size_t max_delay,
                                      const MemoryTaskOptions& opt = {}) {
    require(max_delay >= 1, "max_delay must be at least 1");
    require(!topo.input_pins.empty(), "topology has no input pin");
    require(opt.n_samples >= 3 * (max_delay + 2), "too few samples for the requested delays");

    const double period = res.sample_period;
    const auto washout_slots = static_cast<std::size_t>(std::ceil(res.washout / period - 1e-9));
    const std::size_t total_slots = washout_slots + opt.n_samples + 1;

    Rng rng(opt.seed);
    circuit::HeldSequence input;
    input.period = period;
    input.values.resize(total_slots);
    for (double& v : input.values) v = res.input_scale * rng.uniform(-1.0, 1.0);

    sim.duration = period * static_cast<double>(washout_slots + opt.n_samples);
    ReservoirConfig aligned = res;
    aligned.washout = period * static_cast<double>(washout_slots);
    const auto states = harvest_states(topo, {{topo.input_pins[0], input}}, sim, aligned);

    // Sample j was taken at t_j = j * period, when slot j's value was applied.
    std::vector<std::size_t> slot(states.times.size());
    for (std::size_t j = 0; j < slot.size(); ++j) {
        slot[j] = static_cast<std::size_t>(std::llround(states.times[j] / period));
    }

    MemoryCapacity mc;
    for (std::size_t k = 0; k <= max_delay; ++k) {
        std::vector<Eigen::Index> rows;
        for (std::size_t j = 0; j < slot.size(); ++j) {
            if (slot[j] >= k) rows.push_back(static_cast<Eigen::Index>(j));
        }
        const auto n = static_cast<Eigen::Index>(rows.size());
        const Eigen::Index n_train = 2 * n / 3;
        Eigen::MatrixXd x = states.states(rows, Eigen::all);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            y(i) = input.values[slot[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])] - k];
        }
        const auto readout = train_ridge(x.topRows(n_train), y.head(n_train), opt.lambda);
        const Eigen::VectorXd pred = predict(readout, x.bottomRows(n - n_train));
        const double r2 = squared_correlation(pred, y.tail(n - n_train));
        mc.r2.push_back(r2);
        mc.readouts.push_back(readout);
        if (k >= 1) mc.total += r2;
    }
    mc.states = states;
    mc.inputs = input.values;
    mc.slots = slot;
    return mc;
}

// ---------------------------------------------------------------------------
// Waveform classification

struct ClassificationOptions {
    double primary_frequency = 100.0;
    double secondary_frequency = 101.0;
    double amplitude = 1.0;
    double amplitude_jitter = 0.2;  // secondary amplitude scaled by 1 + U(-j, j)
    double episode_duration = 0.06;
    double lambda = 1e-9;
    std::size_t shuffle_rounds = 40;
};

constexpr std::array<circuit::WaveKind, 3> kWaveClasses{
    circuit::WaveKind::Square, circuit::WaveKind::Sine, circuit::WaveKind::Sawtooth};

struct ClassificationResult {
    Eigen::MatrixXd features;            // episode x sampled node: time-mean voltages
    std::vector<std::size_t> labels;     // index into kWaveClasses
    std::vector<bool> is_train;
    std::vector<ReadoutWeights> readouts;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    /// Held-out accuracy averaged over readouts trained on permuted labels.
    double shuffled_accuracy = 0.0;
};

/// Per-class split: round(2/3 of each class) to training, order seeded.
inline std::vector<bool> stratified_split(const std::vector<std::size_t>& labels,
                                          std::size_t n_classes, Rng& rng) {
    std::vector<bool> is_train(labels.size(), false);
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == c) members.push_back(i);
        }
        rng.shuffle(members);
        const auto n_train = static_cast<std::size_t>(std::llround(2.0 * static_cast<double>(members.size()) / 3.0));
        for (std::size_t i = 0; i < n_train; ++i) is_train[members[i]] = true;
    }
    return is_train;
}

/// One-vs-rest ridge readouts (targets 1 / 0) on the rows flagged as train.
inline std::vector<ReadoutWeights> train_one_vs_rest(const Eigen::MatrixXd& x,
                                                     const std::vector<std::size_t>& labels,
                                                     const std::vector<bool>& use,
                                                     std::size_t n_classes, double lambda) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (use[i]) rows.push_back(static_cast<Eigen::Index>(i));
    }
    const Eigen::MatrixXd xs = x(rows, Eigen::all);
    std::vector<ReadoutWeights> out;
    for (std::size_t c = 0; c < n_classes; ++c) {
        Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            y(static_cast<Eigen::Index>(i)) = labels[static_cast<std::size_t>(rows[i])] == c ? 1.0 : 0.0;
        }
        out.push_back(train_ridge(xs, y, lambda));
    }
    return out;
}

inline double accuracy_on(const std::vector<ReadoutWeights>& readouts, const Eigen::MatrixXd& x,
                          const std::vector<std::size_t>& labels, const std::vector<bool>& use) {
    const auto decided = classify_argmax(readouts, x);
    std::size_t hits = 0, total = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!use[i]) continue;
        ++total;
        hits += decided[i] == labels[i];
    }
    return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

/// Time-mean sampled voltage of each episode, for episodes defined by their
/// secondary waveform.
inline Eigen::MatrixXd episode_features(const CircuitTopology& topo, const SimConfig& sim,
                                        const ReservoirConfig& res,
                                        const std::vector<circuit::Waveform>& primary,
                                        const std::vector<circuit::Waveform>& secondary) {
    Eigen::MatrixXd features(static_cast<Eigen::Index>(secondary.size()),
                             static_cast<Eigen::Index>(res.sampled_nodes.size()));
    for (std::size_t e = 0; e < secondary.size(); ++e) {
        const StimulusMap stim{{topo.input_pins[0], primary[e]}, {topo.input_pins[1], secondary[e]}};
        const auto states = harvest_states(topo, stim, sim, res);
        features.row(static_cast<Eigen::Index>(e)) = states.states.colwise().mean();
    }
    return features;
}

/// Classifies which waveform drives the secondary pin while the primary pin
/// carries a fixed square wave. Episodes are balanced over the three classes
/// and differ by a seeded secondary-amplitude jitter.
inline ClassificationResult waveform_classification_task(const CircuitTopology& topo, SimConfig sim,
                                                         const ReservoirConfig& res,
                                                         std::size_t n_episodes, std::uint64_t seed,
                                                         const ClassificationOptions& opt = {}) {
    require(n_episodes >= 12, "classification needs at least 12 episodes");
    require(topo.input_pins.size() >= 2, "classification needs two input pins");
    sim.duration = opt.episode_duration;

    Rng rng(seed);
    ClassificationResult out;
    std::vector<circuit::Waveform> primary, secondary;
    for (std::size_t e = 0; e < n_episodes; ++e) {
        const std::size_t label = e % kWaveClasses.size();
        out.labels.push_back(label);
        circuit::Waveform p;
        p.kind = circuit::WaveKind::Square;
        p.frequency = opt.primary_frequency;
        p.amplitude = opt.amplitude * res.input_scale;
        circuit::Waveform s;
        s.kind = kWaveClasses[label];
        s.frequency = opt.secondary_frequency;
        s.amplitude = opt.amplitude * res.input_scale * (1.0 + rng.uniform(-opt.amplitude_jitter, opt.amplitude_jitter));
        primary.push_back(p);
        secondary.push_back(s);
    }
    out.features = episode_features(topo, sim, res, primary, secondary);

    out.is_train = stratified_split(out.labels, kWaveClasses.size(), rng);
    std::vector<bool> is_test(out.is_train.size());
    for (std::size_t i = 0; i < is_test.size(); ++i) is_test[i] = !out.is_train[i];

    out.readouts = train_one_vs_rest(out.features, out.labels, out.is_train, kWaveClasses.size(), opt.lambda);
    out.train_accuracy = accuracy_on(out.readouts, out.features, out.labels, out.is_train);
    out.test_accuracy = accuracy_on(out.readouts, out.features, out.labels, is_test);

    double shuffled = 0.0;
    for (std::size_t round = 0; round < opt.shuffle_rounds; ++round) {
        auto permuted = out.labels;
        rng.shuffle(permuted);
        const auto split = stratified_split(permuted, kWaveClasses.size(), rng);
        std::vector<bool> held(split.size());
        for (std::size_t i = 0; i < held.size(); ++i) held[i] = !split[i];
        const auto r = train_one_vs_rest(out.features, permuted, split, kWaveClasses.size(), opt.lambda);
        shuffled += accuracy_on(r, out.features, permuted, held);
    }
    out.shuffled_accuracy = opt.shuffle_rounds ? shuffled / static_cast<double>(opt.shuffle_rounds) : 0.0;
    return out;
}

}  // namespace cbricks::reservoir
