#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "cbricks/error.hpp"
#include "cbricks/random.hpp"
#include "cbricks/wall.hpp"

namespace cbricks::comm {

using wall::CellId;
using wall::kUnreachable;
using wall::WallGraph;

/// Set of failed bricks. Failed bricks neither send nor relay.
struct FaultScenario {
    std::vector<bool> failed;
    std::uint64_t seed = 0;
    std::size_t failure_count = 0;

    static FaultScenario none(const WallGraph& g) { return {std::vector<bool>(g.size(), false), 0, 0}; }

    static FaultScenario from_cells(const WallGraph& g, const std::vector<CellId>& cells) {
        FaultScenario f = none(g);
        for (CellId c : cells) {
            require(c < g.size(), "failed cell out of range");
            if (!f.failed[c]) ++f.failure_count;
            f.failed[c] = true;
        }
        return f;
    }

    /// `count` distinct failures drawn uniformly, never hitting `protect`.
    static FaultScenario random(const WallGraph& g, std::size_t count, std::uint64_t seed,
                                const std::vector<CellId>& protect = {}) {
        std::vector<CellId> pool;
        for (CellId c = 0; c < g.size(); ++c) {
            if (std::find(protect.begin(), protect.end(), c) == protect.end()) pool.push_back(c);
        }
        require(count <= pool.size(), "more failures requested than available cells");
        Rng rng(seed);
        FaultScenario f = from_cells(g, rng.sample(pool, count));
        f.seed = seed;
        return f;
    }

    bool alive(CellId c) const { return !failed[c]; }

    std::vector<CellId> cells() const {
        std::vector<CellId> out;
        for (CellId c = 0; c < failed.size(); ++c) {
            if (failed[c]) out.push_back(c);
        }
        return out;
    }
};

struct Message {
    std::uint64_t msg_id = 0;
    CellId src = 0;
    CellId dst = 0;
    std::vector<std::uint8_t> payload;
    std::size_t ttl = 1;
    std::size_t hops = 0;
};

struct FloodResult {
    bool delivered = false;
    std::size_t hops = kUnreachable;  // round dst was first informed
    std::size_t messages_sent = 0;
    std::vector<std::size_t> per_round;  // sends in round 1, 2, ...
    std::vector<std::size_t> informed_round;
};

namespace detail {

inline void check_faults(const WallGraph& g, const FaultScenario& f) {
    require(f.failed.size() == g.size(), "fault mask length must match the wall");
}

inline std::size_t alive_degree(const WallGraph& g, const FaultScenario& f, CellId c) {
    return static_cast<std::size_t>(std::count_if(g.adjacency[c].begin(), g.adjacency[c].end(),
                                                  [&](CellId n) { return f.alive(n); }));
}

}  // namespace detail

/// Lock-step flooding. In round r every cell first informed in round r-1
/// sends one copy to each alive neighbour; a cell forwards a message at most
/// once. Flooding runs until no cell is newly informed or `ttl` rounds pass.
inline FloodResult flood_route(const WallGraph& g, const FaultScenario& faults, CellId src, CellId dst,
                               std::size_t ttl) {
    detail::check_faults(g, faults);
    require(src < g.size() && dst < g.size(), "endpoint out of range");
    require(faults.alive(src) && faults.alive(dst), "source and destination must be alive");
    require(ttl >= 1, "ttl must be at least 1");

    FloodResult r;
    r.informed_round.assign(g.size(), kUnreachable);
    r.informed_round[src] = 0;
    if (src == dst) {
        r.delivered = true;
        r.hops = 0;
        return r;
    }
    std::vector<CellId> senders{src};
    for (std::size_t round = 1; round <= ttl && !senders.empty(); ++round) {
        std::size_t sent = 0;
        std::vector<CellId> informed;
        for (CellId u : senders) {
            for (CellId v : g.adjacency[u]) {
                if (!faults.alive(v)) continue;
                ++sent;
                if (r.informed_round[v] == kUnreachable) {
                    r.informed_round[v] = round;
                    informed.push_back(v);
                }
            }
        }
        r.per_round.push_back(sent);
        r.messages_sent += sent;
        senders = std::move(informed);
    }
    if (r.informed_round[dst] != kUnreachable) {
        r.delivered = true;
        r.hops = r.informed_round[dst];
    }
    return r;
}

/// Floods `msg` and records the hop count on delivery.
inline FloodResult send(const WallGraph& g, const FaultScenario& faults, Message& msg) {
    require(msg.ttl >= 1, "message ttl must be at least 1");
    FloodResult r = flood_route(g, faults, msg.src, msg.dst, msg.ttl);
    if (r.delivered) msg.hops = r.hops;
    return r;
}

/// Cells reachable from `src` through alive cells.
inline std::vector<bool> connectivity_oracle(const WallGraph& g, const FaultScenario& faults, CellId src) {
    detail::check_faults(g, faults);
    require(src < g.size() && faults.alive(src), "source must be an alive cell");
    const auto dist = wall::bfs_distances(g, src, faults.failed);
    std::vector<bool> out(g.size());
    for (CellId c = 0; c < g.size(); ++c) out[c] = dist[c] != kUnreachable;
    return out;
}

/// Largest hop distance between two cells of the alive component holding `cell`.
inline std::size_t component_diameter(const WallGraph& g, const FaultScenario& faults, CellId cell) {
    const auto reach = connectivity_oracle(g, faults, cell);
    std::size_t diameter = 0;
    for (CellId c = 0; c < g.size(); ++c) {
        if (!reach[c]) continue;
        const auto d = wall::bfs_distances(g, c, faults.failed);
        for (CellId o = 0; o < g.size(); ++o) {
            if (reach[o]) diameter = std::max(diameter, d[o]);
        }
    }
    return diameter;
}

// ---------------------------------------------------------------------------
// Neighbour gossip

enum class Aggregation { Min, Max };

struct GossipState {
    std::vector<double> values;
    std::size_t round = 0;
    /// Last round in which some value changed (0 if none did).
    std::size_t last_change_round = 0;
    std::vector<std::size_t> per_round;  // messages sent per round
};

/// Each round every alive cell sends its value to its alive neighbours and
/// replaces it with the min (or max) of what it holds and receives. Failed
/// cells keep their initial value and take no part.
inline GossipState gossip_aggregate(const WallGraph& g, const FaultScenario& faults,
                                    const std::vector<double>& initial, Aggregation agg, std::size_t rounds) {
    detail::check_faults(g, faults);
    require(initial.size() == g.size(), "one initial value per cell required");
    GossipState s{initial, 0, 0, {}};
    auto better = [agg](double a, double b) { return agg == Aggregation::Min ? std::min(a, b) : std::max(a, b); };
    for (std::size_t r = 1; r <= rounds; ++r) {
        std::vector<double> next = s.values;
        std::size_t sent = 0;
        bool changed = false;
        for (CellId c = 0; c < g.size(); ++c) {
            if (!faults.alive(c)) continue;
            for (CellId n : g.adjacency[c]) {
                if (!faults.alive(n)) continue;
                ++sent;
                next[n] = better(next[n], s.values[c]);
            }
        }
        for (CellId c = 0; c < g.size(); ++c) changed = changed || next[c] != s.values[c];
        s.values = std::move(next);
        s.round = r;
        s.per_round.push_back(sent);
        if (changed) s.last_change_round = r;
    }
    return s;
}

struct TreeMean {
    std::vector<double> mean;  // component mean per alive cell, NaN for failed cells
    std::size_t rounds = 0;    // convergecast plus broadcast, deepest component
    std::size_t messages = 0;
};

/// Exact per-component mean via a BFS spanning tree: partial sums and counts
/// flow up to the root, the mean flows back down. Unlike neighbour gossip,
/// every value is counted exactly once.
inline TreeMean tree_mean(const WallGraph& g, const FaultScenario& faults, const std::vector<double>& values) {
    detail::check_faults(g, faults);
    require(values.size() == g.size(), "one value per cell required");
    TreeMean out;
    out.mean.assign(g.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<bool> done(g.size(), false);
    for (CellId root = 0; root < g.size(); ++root) {
        if (done[root] || !faults.alive(root)) continue;
        // BFS tree rooted at the lowest alive id of the component.
        std::vector<CellId> order{root};
        std::vector<CellId> parent(g.size(), kUnreachable);
        std::vector<std::size_t> depth(g.size(), 0);
        done[root] = true;
        for (std::size_t i = 0; i < order.size(); ++i) {
            const CellId u = order[i];
            for (CellId v : g.adjacency[u]) {
                if (done[v] || !faults.alive(v)) continue;
                done[v] = true;
                parent[v] = u;
                depth[v] = depth[u] + 1;
                order.push_back(v);
            }
        }
        // Convergecast: children report (sum, count) to their parent, deepest first.
        std::vector<double> sum(g.size(), 0.0);
        std::vector<std::size_t> count(g.size(), 0);
        for (CellId c : order) {
            sum[c] = values[c];
            count[c] = 1;
        }
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            if (parent[*it] == kUnreachable) continue;
            sum[parent[*it]] += sum[*it];
            count[parent[*it]] += count[*it];
        }
        const double mean = sum[root] / static_cast<double>(count[root]);
        for (CellId c : order) out.mean[c] = mean;
        out.rounds = std::max(out.rounds, 2 * depth[order.back()]);
        out.messages += 2 * (order.size() - 1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cost accounting

struct MessageCost {
    std::size_t total_messages = 0;
    std::vector<std::size_t> per_round;
};

inline MessageCost message_cost(const FloodResult& r) {
    return {std::accumulate(r.per_round.begin(), r.per_round.end(), std::size_t{0}), r.per_round};
}

inline MessageCost message_cost(const GossipState& s) {
    return {std::accumulate(s.per_round.begin(), s.per_round.end(), std::size_t{0}), s.per_round};
}

}  // namespace cbricks::comm
