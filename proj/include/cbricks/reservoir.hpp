#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "cbricks/error.hpp"
#include "cbricks/random.hpp"
#include "cbricks/transient.hpp"

namespace cbricks::reservoir {

using circuit::CircuitTopology;
using circuit::NodeId;
using circuit::SimConfig;
using circuit::StimulusMap;

/// How a network is read as a reservoir: which node voltages form the state
/// and how the raw trace is trimmed and downsampled.
struct ReservoirConfig {
    std::vector<NodeId> sampled_nodes;
    double washout = 0.0;        // s
    double sample_period = 1e-4; // s
    double input_scale = 1.0;    // V per unit of task input

    void validate(const SimConfig& sim) const {
        require(!sampled_nodes.empty(), "reservoir needs at least one sampled node");
        require(sample_period >= sim.dt * (1.0 - 1e-9), "sample_period must be at least dt");
        require(washout >= 0 && washout < sim.duration, "washout must lie in [0, duration)");
        require(input_scale > 0, "input scale must be positive");
    }
};

/// Every non-ground node of the topology, in id order.
inline std::vector<NodeId> all_nodes(const CircuitTopology& topo) {
    std::vector<NodeId> out;
    for (NodeId n = 0; n < topo.node_count; ++n) {
        if (n != topo.ground) out.push_back(n);
    }
    return out;
}

struct StateMatrix {
    Eigen::MatrixXd states;  // time x sampled node, volts
    std::vector<double> times;
    std::vector<NodeId> nodes;

    Eigen::Index rows() const { return states.rows(); }
    Eigen::Index cols() const { return states.cols(); }
};

/// Simulates, drops samples before the washout and keeps one sample per
/// sample_period. Kept samples sit on integer multiples of the period.
inline StateMatrix harvest_states(const CircuitTopology& topo, const StimulusMap& stimuli,
                                  SimConfig sim, const ReservoirConfig& res) {
    res.validate(sim);
    sim.record_nodes = res.sampled_nodes;
    const auto trace = circuit::simulate(topo, stimuli, sim);

    const double recorded_dt = sim.dt * static_cast<double>(sim.record_stride);
    const auto every = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(res.sample_period / recorded_dt)));
    std::vector<Eigen::Index> keep;
    for (std::size_t r = 0; r < trace.size(); ++r) {
        if ((r + 1) % every == 0 && trace.times[r] >= res.washout * (1.0 - 1e-12)) {
            keep.push_back(static_cast<Eigen::Index>(r));
        }
    }
    require(!keep.empty(), "no samples remain after the washout");

    StateMatrix m;
    m.nodes = trace.nodes;
    m.states = trace.samples(keep, Eigen::all);
    for (auto r : keep) m.times.push_back(trace.times[static_cast<std::size_t>(r)]);
    return m;
}

/// Linear readout y = X w + b.
struct ReadoutWeights {
    Eigen::VectorXd weights;
    double bias = 0.0;
    double ridge_lambda = 0.0;
};

/// ||X w + b - y||^2 + lambda ||w||^2
inline double ridge_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& w, double b, double lambda) {
    const Eigen::VectorXd r = (x * w).array() + b - y.array();
    return r.squaredNorm() + lambda * w.squaredNorm();
}

/// Gradient of ridge_objective with respect to (w, b), stacked.
inline Eigen::VectorXd ridge_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& w, double b, double lambda) {
    const Eigen::VectorXd r = (x * w).array() + b - y.array();
    Eigen::VectorXd g(w.size() + 1);
    g.head(w.size()) = 2.0 * (x.transpose() * r + lambda * w);
    g(w.size()) = 2.0 * r.sum();
    return g;
}

namespace detail {

inline void check_training_data(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
    require(x.rows() == y.size(), "state rows must match target length");
    require(x.rows() >= 1 && x.cols() >= 1, "empty training data");
    require(lambda >= 0 && std::isfinite(lambda), "ridge lambda must be non-negative");
    require(x.allFinite() && y.allFinite(), "training data must be finite");
}

}  // namespace detail

/// Closed-form ridge fit with an unpenalized bias. Centering removes the bias
/// from the normal equations: (Xc'Xc + lambda I) w = Xc'yc, b = mean(y) - mean(X) w.
inline ReadoutWeights train_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
    detail::check_training_data(x, y, lambda);
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const double y_mean = y.mean();
    const Eigen::MatrixXd xc = x.rowwise() - x_mean;
    const Eigen::VectorXd yc = y.array() - y_mean;

    Eigen::MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
    const double scale = std::max(gram.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    if (ldlt.info() != Eigen::Success || !(d.minCoeff() > 1e-13 * scale)) {
        throw IllConditionedError(
            "normal equations are singular or ill-conditioned (collinear states); use lambda > 0");
    }
    ReadoutWeights out;
    out.weights = ldlt.solve(xc.transpose() * yc);
    out.bias = y_mean - x_mean.dot(out.weights);
    out.ridge_lambda = lambda;
    if (!out.weights.allFinite()) throw IllConditionedError("ridge solution is not finite; use lambda > 0");
    return out;
}

/// Largest eigenvalue of the objective's Hessian, by power iteration.
inline double hessian_norm_estimate(const Eigen::MatrixXd& x, double lambda, int iterations = 200) {
    const Eigen::Index d = x.cols();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(d + 1).normalized();
    double norm = 0.0;
    for (int i = 0; i < iterations; ++i) {
        const Eigen::VectorXd xv = x * v.head(d) + Eigen::VectorXd::Constant(x.rows(), v(d));
        Eigen::VectorXd hv(d + 1);
        hv.head(d) = 2.0 * (x.transpose() * xv + lambda * v.head(d));
        hv(d) = 2.0 * xv.sum();
        norm = hv.norm();
        if (norm == 0.0) break;
        v = hv / norm;
    }
    return norm;
}

/// Step size 1 / (2 L) with L the estimated Hessian norm; guarantees a
/// monotone objective sequence for full-batch descent.
inline double safe_learning_rate(const Eigen::MatrixXd& x, double lambda) {
    return 0.5 / hessian_norm_estimate(x, lambda);
}

struct GdFit {
    ReadoutWeights readout;
    std::vector<double> objective;  // before the first epoch, then after each
};

/// Full-batch gradient descent on ridge_objective from a small seeded start.
inline GdFit train_gd(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                      double learning_rate, int epochs, std::uint64_t seed) {
    detail::check_training_data(x, y, lambda);
    require(learning_rate > 0, "learning rate must be positive");
    require(epochs >= 1, "epochs must be at least 1");

    Rng rng(seed);
    Eigen::VectorXd w(x.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(-0.01, 0.01);
    double b = 0.0;

    GdFit fit;
    fit.objective.reserve(static_cast<std::size_t>(epochs) + 1);
    const double start = ridge_objective(x, y, w, b, lambda);
    fit.objective.push_back(start);
    for (int e = 0; e < epochs; ++e) {
        const Eigen::VectorXd g = ridge_gradient(x, y, w, b, lambda);
        w -= learning_rate * g.head(w.size());
        b -= learning_rate * g(w.size());
        const double j = ridge_objective(x, y, w, b, lambda);
        if (!std::isfinite(j) || j > 10.0 * start + 1e-300) {
            throw StepSizeError("gradient descent diverged at epoch " + std::to_string(e + 1) +
                                "; reduce the learning rate");
        }
        fit.objective.push_back(j);
    }
    fit.readout = {w, b, lambda};
    return fit;
}

inline Eigen::VectorXd predict(const ReadoutWeights& r, const Eigen::MatrixXd& x) {
    require(x.cols() == r.weights.size(), "state dimension does not match the readout");
    return (x * r.weights).array() + r.bias;
}

/// +1 / -1 decision of a single readout (zero maps to +1).
inline std::vector<int> classify_sign(const ReadoutWeights& r, const Eigen::MatrixXd& x) {
    const Eigen::VectorXd y = predict(r, x);
    std::vector<int> out(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) out[static_cast<std::size_t>(i)] = y(i) >= 0 ? 1 : -1;
    return out;
}

/// One-vs-rest decision: index of the readout with the largest output per
/// row. Ties go to the lowest index.
inline std::vector<std::size_t> classify_argmax(const std::vector<ReadoutWeights>& readouts,
                                                const Eigen::MatrixXd& x) {
    require(!readouts.empty(), "need at least one readout");
    Eigen::MatrixXd scores(x.rows(), static_cast<Eigen::Index>(readouts.size()));
    for (std::size_t c = 0; c < readouts.size(); ++c) {
        scores.col(static_cast<Eigen::Index>(c)) = predict(readouts[c], x);
    }
    std::vector<std::size_t> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Eigen::Index best;
        scores.row(i).maxCoeff(&best);
        out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    }
    return out;
}

/// sqrt(MSE / Var(target)), population variance.
inline double nrmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
    require(pred.size() == target.size(), "prediction and target lengths differ");
    require(target.size() >= 2, "nrmse needs at least two samples");
    const double var = (target.array() - target.mean()).square().mean();
    require(var > 0, "target has zero variance");
    return std::sqrt((pred - target).squaredNorm() / static_cast<double>(target.size()) / var);
}

/// Squared Pearson correlation; zero when either side is constant.
inline double squared_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::ArrayXd da = a.array() - a.mean();
    const Eigen::ArrayXd db = b.array() - b.mean();
    const double saa = da.square().sum(), sbb = db.square().sum();
    if (saa <= 0 || sbb <= 0) return 0.0;
    const double sab = (da * db).sum();
    return sab * sab / (saa * sbb);
}

/// Mean distance between two state trajectories over the mean state norm.
/// Symmetric in its arguments and zero iff the trajectories coincide.
inline double trajectory_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "trajectories differ in shape");
    require(a.rows() >= 1, "empty trajectories");
    double dist = 0.0, norm = 0.0;
    for (Eigen::Index t = 0; t < a.rows(); ++t) {
        dist += (a.row(t) - b.row(t)).norm();
        norm += 0.5 * (a.row(t).norm() + b.row(t).norm());
    }
    if (dist == 0.0) return 0.0;
    return norm > 0 ? dist / norm : std::numeric_limits<double>::infinity();
}

inline double separation_score(const CircuitTopology& topo, const StimulusMap& stimulus_a,
                               const StimulusMap& stimulus_b, const SimConfig& sim,
                               const ReservoirConfig& res) {
    const auto a = harvest_states(topo, stimulus_a, sim, res);
    const auto b = harvest_states(topo, stimulus_b, sim, res);
    return trajectory_distance(a.states, b.states);
}

}  // namespace cbricks::reservoir
