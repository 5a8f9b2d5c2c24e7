#pragma once

#include <algorithm>
#include <array>
#include <iterator>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "cbricks/error.hpp"

namespace cbricks::wall {

using CellId = std::size_t;

inline constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

/// Running-bond brick wall. Cell (x, y) has id y * cols + x; row y is a
/// course of bricks, x counts along the course.
struct WallGraph {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::vector<CellId>> adjacency;

    std::size_t size() const { return adjacency.size(); }
    CellId id(std::size_t x, std::size_t y) const { return y * cols + x; }
    std::size_t x_of(CellId c) const { return c % cols; }
    std::size_t y_of(CellId c) const { return c / cols; }
};

/// Neighbours of (x, y): (x±1, y) in the same course and (x, y±1), (x+o, y±1)
/// in the courses above and below, with o = +1 on even rows and -1 on odd
/// rows. Edge bricks keep whatever subset exists unless `toroidal` wraps
/// both axes (which needs an even row count to keep the offsets consistent).
inline WallGraph build_brick_wall(std::size_t rows, std::size_t cols, bool toroidal = false) {
    require(rows >= 1 && cols >= 1, "wall dimensions must be positive");
    require(!toroidal || rows % 2 == 0, "a toroidal wall needs an even number of rows");
    WallGraph g;
    g.rows = rows;
    g.cols = cols;
    g.adjacency.resize(rows * cols);
    const auto r = static_cast<long>(rows), c = static_cast<long>(cols);
    for (long y = 0; y < r; ++y) {
        const long o = y % 2 == 0 ? 1 : -1;
        for (long x = 0; x < c; ++x) {
            const std::array<std::array<long, 2>, 6> offsets{{{-1, 0}, {1, 0}, {0, -1}, {o, -1}, {0, 1}, {o, 1}}};
            auto& adj = g.adjacency[g.id(static_cast<std::size_t>(x), static_cast<std::size_t>(y))];
            for (const auto& [dx, dy] : offsets) {
                long nx = x + dx, ny = y + dy;
                if (toroidal) {
                    nx = (nx % c + c) % c;
                    ny = (ny % r + r) % r;
                } else if (nx < 0 || nx >= c || ny < 0 || ny >= r) {
                    continue;
                }
                const CellId n = g.id(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny));
                if (n != g.id(static_cast<std::size_t>(x), static_cast<std::size_t>(y))) adj.push_back(n);
            }
            std::sort(adj.begin(), adj.end());
            adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
        }
    }
    return g;
}

/// Hop distances from a set of sources, skipping cells flagged in `blocked`.
inline std::vector<std::size_t> bfs_distances(const WallGraph& g, std::span<const CellId> sources,
                                              const std::vector<bool>& blocked = {}) {
    std::vector<std::size_t> dist(g.size(), kUnreachable);
    std::queue<CellId> q;
    for (CellId s : sources) {
        require(s < g.size(), "source cell out of range");
        if (!blocked.empty() && blocked[s]) continue;
        if (dist[s] == 0) continue;
        dist[s] = 0;
        q.push(s);
    }
    while (!q.empty()) {
        const CellId u = q.front();
        q.pop();
        for (CellId v : g.adjacency[u]) {
            if (dist[v] != kUnreachable || (!blocked.empty() && blocked[v])) continue;
            dist[v] = dist[u] + 1;
            q.push(v);
        }
    }
    return dist;
}

inline std::vector<std::size_t> bfs_distances(const WallGraph& g, CellId source,
                                              const std::vector<bool>& blocked = {}) {
    return bfs_distances(g, std::span<const CellId>(&source, 1), blocked);
}

/// Graph whose edges join cells at most `radius` wall steps apart.
inline WallGraph neighbourhood_graph(const WallGraph& wall, std::size_t radius) {
    require(radius >= 1, "communication radius must be at least 1");
    if (radius == 1) return wall;
    WallGraph g = wall;
    for (CellId c = 0; c < wall.size(); ++c) {
        const auto d = bfs_distances(wall, c);
        auto& adj = g.adjacency[c];
        adj.clear();
        for (CellId o = 0; o < wall.size(); ++o) {
            if (o != c && d[o] <= radius) adj.push_back(o);
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Cell states and rules

enum class Phase : std::uint8_t { Resting, Excited, Refractory };

struct CellState {
    Phase phase = Phase::Resting;
    std::uint16_t remaining = 0;  // steps left, Refractory only

    static CellState resting() { return {}; }
    static CellState excited() { return {Phase::Excited, 0}; }
    static CellState refractory(std::uint16_t steps) { return {Phase::Refractory, steps}; }

    bool operator==(const CellState&) const = default;
};

/// Totalistic three-state table: next phase from (phase, excited neighbours).
class RuleTable {
public:
    void set(Phase from, int excited_neighbours, Phase to) {
        require(excited_neighbours >= 0 && excited_neighbours <= 6, "neighbour count must be in [0,6]");
        next_[static_cast<std::size_t>(from)][static_cast<std::size_t>(excited_neighbours)] = to;
    }

    std::optional<Phase> get(Phase from, std::size_t excited_neighbours) const {
        if (excited_neighbours > 6) return std::nullopt;
        return next_[static_cast<std::size_t>(from)][excited_neighbours];
    }

    bool total() const {
        for (const auto& row : next_)
            for (const auto& e : row)
                if (!e) return false;
        return true;
    }

    /// The interval rule with one-step refractoriness written as a table.
    static RuleTable interval(int lo, int hi) {
        RuleTable t;
        for (int n = 0; n <= 6; ++n) {
            t.set(Phase::Resting, n, n >= lo && n <= hi ? Phase::Excited : Phase::Resting);
            t.set(Phase::Excited, n, Phase::Refractory);
            t.set(Phase::Refractory, n, Phase::Resting);
        }
        return t;
    }

    bool operator==(const RuleTable&) const = default;

private:
    std::array<std::array<std::optional<Phase>, 7>, 3> next_{};
};

struct RuleSpec {
    int excite_lo = 1;
    int excite_hi = 6;
    int refractory_len = 1;
    std::optional<RuleTable> table;

    /// Resting cell fires when at least one neighbour is excited.
    static RuleSpec classic() { return {}; }

    void validate() const {
        require(excite_lo >= 1 && excite_lo <= excite_hi && excite_hi <= 6,
                "excitation interval must satisfy 1 <= lo <= hi <= 6");
        require(refractory_len >= 1 && refractory_len <= 65535, "refractory length must be >= 1");
        require(!table || table->total(), "rule table is missing entries");
    }
};

struct WallState {
    std::vector<CellState> cells;
    std::size_t step = 0;

    static WallState quiescent(const WallGraph& g) { return {std::vector<CellState>(g.size()), 0}; }

    std::size_t count(Phase p) const {
        return static_cast<std::size_t>(
            std::count_if(cells.begin(), cells.end(), [p](const CellState& c) { return c.phase == p; }));
    }
};

namespace detail {

inline CellState next_cell(const WallGraph& g, const WallState& s, const RuleSpec& rule, CellId c) {
    std::size_t excited = 0;
    for (CellId n : g.adjacency[c]) excited += s.cells[n].phase == Phase::Excited;
    const CellState& cur = s.cells[c];
    if (rule.table) {
        const Phase p = *rule.table->get(cur.phase, std::min<std::size_t>(excited, 6));
        return p == Phase::Refractory ? CellState::refractory(1) : CellState{p, 0};
    }
    switch (cur.phase) {
        case Phase::Resting: {
            const auto lo = static_cast<std::size_t>(rule.excite_lo);
            const auto hi = static_cast<std::size_t>(rule.excite_hi);
            return excited >= lo && excited <= hi ? CellState::excited() : CellState::resting();
        }
        case Phase::Excited:
            return CellState::refractory(static_cast<std::uint16_t>(rule.refractory_len));
        case Phase::Refractory:
            return cur.remaining > 1 ? CellState::refractory(static_cast<std::uint16_t>(cur.remaining - 1))
                                     : CellState::resting();
    }
    return cur;
}

}  // namespace detail

/// Synchronous update: every cell reads only the input state, so the result
/// does not depend on the order cells are visited in.
inline WallState step_sync(const WallGraph& g, const WallState& s, const RuleSpec& rule,
                           std::span<const CellId> order) {
    rule.validate();
    require(s.cells.size() == g.size(), "state length must match the wall");
    require(order.size() == g.size(), "evaluation order must visit every cell");
    WallState next{std::vector<CellState>(g.size()), s.step + 1};
    for (CellId c : order) next.cells[c] = detail::next_cell(g, s, rule, c);
    return next;
}

inline WallState step_sync(const WallGraph& g, const WallState& s, const RuleSpec& rule) {
    std::vector<CellId> order(g.size());
    std::iota(order.begin(), order.end(), CellId{0});
    return step_sync(g, s, rule, order);
}

/// Trajectory starting with `initial`; stops early once a step reproduces
/// its predecessor, without appending the repeat.
inline std::vector<WallState> run(const WallGraph& g, const WallState& initial, const RuleSpec& rule,
                                  std::size_t max_steps) {
    std::vector<WallState> traj{initial};
    for (std::size_t k = 0; k < max_steps; ++k) {
        WallState next = step_sync(g, traj.back(), rule);
        if (next.cells == traj.back().cells) break;
        traj.push_back(std::move(next));
    }
    return traj;
}

/// Step at which each cell is first excited when the classic rule runs
/// from `source`; kUnreachable for cells never excited.
inline std::vector<std::size_t> first_excitation(const WallGraph& g, CellId source) {
    require(source < g.size(), "source cell out of range");
    WallState s = WallState::quiescent(g);
    s.cells[source] = CellState::excited();
    std::vector<std::size_t> first(g.size(), kUnreachable);
    first[source] = 0;
    const RuleSpec rule = RuleSpec::classic();
    while (s.count(Phase::Excited) > 0) {
        s = step_sync(g, s, rule);
        for (CellId c = 0; c < g.size(); ++c) {
            if (s.cells[c].phase == Phase::Excited && first[c] == kUnreachable) first[c] = s.step;
        }
    }
    return first;
}

/// Steps until every brick has been excited at least once by a wave from
/// `source` under the classic rule.
inline std::size_t broadcast_time(const WallGraph& g, CellId source) {
    const auto first = first_excitation(g, source);
    const auto last = *std::max_element(first.begin(), first.end());
    if (last == kUnreachable) throw UnreachableError("broadcast cannot reach every cell");
    return last;
}

// ---------------------------------------------------------------------------
// Voronoi tessellation by colliding wavefronts

inline constexpr int kBoundary = -1;
inline constexpr int kUnreached = -2;

/// Every seed launches a labelled wave that advances one cell per tick.
/// A cell takes the label of the only wave that reaches it first; cells hit
/// by several waves on the same tick become boundary and pass all of those
/// labels on, so that ties propagate like a bisector.
inline std::vector<int> voronoi_wavefront(const WallGraph& g, std::span<const CellId> seeds) {
    require(!seeds.empty(), "voronoi needs at least one seed");
    std::vector<std::vector<int>> arrived(g.size());
    std::vector<bool> reached(g.size(), false);
    std::vector<CellId> frontier;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        require(seeds[i] < g.size(), "seed out of range");
        require(!reached[seeds[i]], "seeds must be distinct");
        reached[seeds[i]] = true;
        arrived[seeds[i]] = {static_cast<int>(i)};
        frontier.push_back(seeds[i]);
    }
    while (!frontier.empty()) {
        std::vector<CellId> next;
        for (CellId u : frontier) {
            for (CellId v : g.adjacency[u]) {
                if (reached[v]) continue;
                if (arrived[v].empty()) next.push_back(v);
                auto& labels = arrived[v];
                std::vector<int> merged;
                std::set_union(labels.begin(), labels.end(), arrived[u].begin(), arrived[u].end(),
                               std::back_inserter(merged));
                labels = std::move(merged);
            }
        }
        for (CellId v : next) reached[v] = true;
        frontier = std::move(next);
    }
    std::vector<int> out(g.size(), kUnreached);
    for (CellId c = 0; c < g.size(); ++c) {
        if (arrived[c].size() == 1) out[c] = arrived[c][0];
        else if (arrived[c].size() > 1) out[c] = kBoundary;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Morphology with the brick neighbourhood as structuring element

enum class MorphOp { Dilate, Erode, Contour };

using BinaryImage = std::vector<std::uint8_t>;

inline BinaryImage morph_op(const WallGraph& g, const BinaryImage& image, MorphOp op) {
    require(image.size() == g.size(), "image length must match the wall");
    BinaryImage out(g.size(), 0);
    for (CellId c = 0; c < g.size(); ++c) {
        bool any_on = false, all_on = true;
        for (CellId n : g.adjacency[c]) {
            any_on = any_on || image[n];
            all_on = all_on && image[n];
        }
        switch (op) {
            case MorphOp::Dilate: out[c] = image[c] || any_on; break;
            case MorphOp::Erode: out[c] = image[c] && all_on; break;
            case MorphOp::Contour: out[c] = image[c] && !all_on; break;
        }
    }
    return out;
}

}  // namespace cbricks::wall
