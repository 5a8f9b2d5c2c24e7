#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cbricks/comm.hpp"

using namespace cbricks;
using namespace cbricks::comm;

namespace {

// Reachability by repeated relaxation, independent of any queue-based BFS.
std::vector<std::size_t> relaxed_distances(const WallGraph& g, const FaultScenario& f, CellId src) {
    std::vector<std::size_t> d(g.size(), kUnreachable);
    d[src] = 0;
    for (bool changed = true; changed;) {
        changed = false;
        for (CellId c = 0; c < g.size(); ++c) {
            if (!f.alive(c) || d[c] == kUnreachable) continue;
            for (CellId n : g.adjacency[c]) {
                if (f.alive(n) && d[c] + 1 < d[n]) {
                    d[n] = d[c] + 1;
                    changed = true;
                }
            }
        }
    }
    return d;
}

std::vector<double> random_values(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-10, 10);
    return v;
}

}  // namespace

TEST(FloodRoute, SourceEqualsDestination) {
    const auto g = wall::build_brick_wall(4, 4);
    const auto r = flood_route(g, FaultScenario::none(g), 5, 5, 3);
    EXPECT_TRUE(r.delivered);
    EXPECT_EQ(r.hops, 0u);
    EXPECT_EQ(r.messages_sent, 0u);
    EXPECT_EQ(message_cost(r).total_messages, 0u);
}

TEST(FloodRoute, OppositeCornersTakeBfsDistance) {
    const auto g = wall::build_brick_wall(10, 10);
    const CellId a = g.id(0, 0), b = g.id(9, 9);
    const auto r = flood_route(g, FaultScenario::none(g), a, b, 100);
    ASSERT_TRUE(r.delivered);
    EXPECT_EQ(r.hops, relaxed_distances(g, FaultScenario::none(g), a)[b]);
    EXPECT_FALSE(flood_route(g, FaultScenario::none(g), a, b, r.hops - 1).delivered);
    EXPECT_TRUE(flood_route(g, FaultScenario::none(g), a, b, r.hops).delivered);
}

TEST(FloodRoute, FullCutNeverDelivers) {
    const auto g = wall::build_brick_wall(8, 10);
    std::vector<CellId> cut;
    for (std::size_t y = 0; y < 8; ++y) cut.push_back(g.id(5, y));
    const auto f = FaultScenario::from_cells(g, cut);
    EXPECT_EQ(f.failure_count, 8u);
    for (std::size_t ttl : {1u, 10u, 1000u}) EXPECT_FALSE(flood_route(g, f, g.id(0, 3), g.id(9, 4), ttl).delivered);
}

TEST(FloodRoute, RejectsFailedEndpointsAndBadTtl) {
    const auto g = wall::build_brick_wall(3, 3);
    const auto f = FaultScenario::from_cells(g, {4});
    EXPECT_THROW(flood_route(g, f, 4, 0, 5), ValidationError);
    EXPECT_THROW(flood_route(g, f, 0, 4, 5), ValidationError);
    EXPECT_THROW(flood_route(g, f, 0, 1, 0), ValidationError);
    EXPECT_THROW(connectivity_oracle(g, f, 4), ValidationError);
    Message m{7, 0, 8, {1, 2}, 0, 0};
    EXPECT_THROW(send(g, f, m), ValidationError);
}

TEST(FloodRoute, SendRecordsHops) {
    const auto g = wall::build_brick_wall(5, 5);
    Message m{1, g.id(0, 0), g.id(4, 0), {0xAB}, 10, 0};
    const auto r = send(g, FaultScenario::none(g), m);
    EXPECT_TRUE(r.delivered);
    EXPECT_EQ(m.hops, 4u);
    EXPECT_LE(m.hops, m.ttl);
}

TEST(ConnectivityOracle, Examples) {
    const auto g = wall::build_brick_wall(6, 6);
    const auto all = connectivity_oracle(g, FaultScenario::none(g), 0);
    EXPECT_EQ(std::count(all.begin(), all.end(), true), 36);
    const CellId c = g.id(3, 3);
    const auto f = FaultScenario::from_cells(g, g.adjacency[c]);
    const auto alone = connectivity_oracle(g, f, c);
    EXPECT_EQ(std::count(alone.begin(), alone.end(), true), 1);
    EXPECT_TRUE(alone[c]);
}

TEST(ConnectivityOracle, FloodAgreesOnRandomFaults) {
    const auto g = wall::build_brick_wall(12, 12);
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        const CellId src = 0;
        const auto f = FaultScenario::random(g, 10 + seed, seed, {src});
        EXPECT_EQ(f.failure_count, 10 + seed);
        EXPECT_FALSE(f.failed[src]);
        const auto reach = connectivity_oracle(g, f, src);
        const auto d = relaxed_distances(g, f, src);
        for (CellId dst = 0; dst < g.size(); ++dst) {
            if (!f.alive(dst)) continue;
            const auto r = flood_route(g, f, src, dst, g.size());
            ASSERT_EQ(r.delivered, static_cast<bool>(reach[dst]));
            ASSERT_EQ(r.delivered, d[dst] != kUnreachable);
            if (r.delivered) {
                ASSERT_EQ(r.hops, d[dst]);
            }
        }
    }
}

TEST(FaultScenario, DeterministicAndBounded) {
    const auto g = wall::build_brick_wall(20, 30);
    const auto a = FaultScenario::random(g, 40, 99), b = FaultScenario::random(g, 40, 99);
    EXPECT_EQ(a.failed, b.failed);
    EXPECT_EQ(a.cells().size(), 40u);
    EXPECT_NE(a.failed, FaultScenario::random(g, 40, 100).failed);
    EXPECT_THROW(FaultScenario::random(g, 601, 1), ValidationError);
    EXPECT_THROW(FaultScenario::from_cells(g, {600}), ValidationError);
}

TEST(FloodRoute, MonotoneDamage) {
    const auto g = wall::build_brick_wall(10, 12);
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const CellId src = rng.below(g.size());
        CellId dst = rng.below(g.size());
        if (dst == src) dst = (dst + 1) % g.size();
        auto f = FaultScenario::none(g);
        auto prev = flood_route(g, f, src, dst, 500);
        for (int k = 0; k < 40; ++k) {
            const CellId c = rng.below(g.size());
            if (c == src || c == dst) continue;
            f.failed[c] = true;
            const auto r = flood_route(g, f, src, dst, 500);
            if (!prev.delivered) {
                EXPECT_FALSE(r.delivered);
            }
            if (r.delivered) {
                EXPECT_GE(r.hops, prev.hops);
            }
            prev = r;
        }
    }
}

TEST(Gossip, ZeroRoundsLeavesValues) {
    const auto g = wall::build_brick_wall(4, 4);
    Rng rng(3);
    const auto v = random_values(g.size(), rng);
    const auto s = gossip_aggregate(g, FaultScenario::none(g), v, Aggregation::Min, 0);
    EXPECT_EQ(s.values, v);
    EXPECT_EQ(s.round, 0u);
    EXPECT_TRUE(s.per_round.empty());
}

TEST(Gossip, MinConvergesWithinDiameter) {
    const auto g = wall::build_brick_wall(8, 8);
    const auto none = FaultScenario::none(g);
    const std::size_t diameter = component_diameter(g, none, 0);
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const auto v = random_values(g.size(), rng);
        const double lo = *std::min_element(v.begin(), v.end());
        const double hi = *std::max_element(v.begin(), v.end());
        const auto smin = gossip_aggregate(g, none, v, Aggregation::Min, diameter);
        const auto smax = gossip_aggregate(g, none, v, Aggregation::Max, diameter);
        for (double x : smin.values) EXPECT_EQ(x, lo);
        for (double x : smax.values) EXPECT_EQ(x, hi);
        EXPECT_LE(smin.last_change_round, diameter);
    }
}

TEST(Gossip, ComponentsNeverMix) {
    const auto g = wall::build_brick_wall(6, 9);
    std::vector<CellId> cut;
    for (std::size_t y = 0; y < 6; ++y) cut.push_back(g.id(4, y));
    const auto f = FaultScenario::from_cells(g, cut);
    std::vector<double> v(g.size());
    for (CellId c = 0; c < g.size(); ++c) v[c] = static_cast<double>(c);
    const auto s = gossip_aggregate(g, f, v, Aggregation::Min, 50);
    for (CellId c = 0; c < g.size(); ++c) {
        const std::size_t x = g.x_of(c);
        if (x < 4) EXPECT_EQ(s.values[c], 0.0);
        else if (x > 4) EXPECT_EQ(s.values[c], 5.0);
        else EXPECT_EQ(s.values[c], v[c]);
    }
    EXPECT_LE(s.last_change_round, std::max(component_diameter(g, f, 0), component_diameter(g, f, 5)));
}

TEST(TreeMean, ExactPerComponent) {
    const auto g = wall::build_brick_wall(6, 9);
    std::vector<CellId> cut;
    for (std::size_t y = 0; y < 6; ++y) cut.push_back(g.id(4, y));
    const auto f = FaultScenario::from_cells(g, cut);
    Rng rng(8);
    const auto v = random_values(g.size(), rng);
    double left = 0, right = 0;
    for (CellId c = 0; c < g.size(); ++c) {
        if (g.x_of(c) < 4) left += v[c];
        if (g.x_of(c) > 4) right += v[c];
    }
    const auto m = tree_mean(g, f, v);
    for (CellId c = 0; c < g.size(); ++c) {
        if (g.x_of(c) < 4) EXPECT_NEAR(m.mean[c], left / 24, 1e-12);
        else if (g.x_of(c) > 4) EXPECT_NEAR(m.mean[c], right / 24, 1e-12);
        else EXPECT_TRUE(std::isnan(m.mean[c]));
    }
    EXPECT_EQ(m.messages, 2u * (24 - 1) * 2);
    EXPECT_GT(m.rounds, 0u);
}

TEST(MessageCost, TwoBrickFlood) {
    const auto g = wall::build_brick_wall(1, 2);
    const auto r = flood_route(g, FaultScenario::none(g), 0, 1, 10);
    EXPECT_EQ(r.messages_sent, 2u);
    EXPECT_EQ(message_cost(r).per_round, (std::vector<std::size_t>{1, 1}));
}

TEST(MessageCost, BookkeepingAndBound) {
    const auto g = wall::build_brick_wall(20, 30);
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const CellId src = rng.below(g.size()), dst = rng.below(g.size());
        const auto r = flood_route(g, FaultScenario::none(g), src, dst, 1000);
        const auto cost = message_cost(r);
        EXPECT_EQ(cost.total_messages, r.messages_sent);
        EXPECT_EQ(std::accumulate(cost.per_round.begin(), cost.per_round.end(), std::size_t{0}), r.messages_sent);
        EXPECT_LE(r.messages_sent, g.size() * 6);
        // Every alive cell forwards exactly once, to each alive neighbour.
        if (src != dst) {
            std::size_t degree_sum = 0;
            for (const auto& adj : g.adjacency) degree_sum += adj.size();
            EXPECT_EQ(r.messages_sent, degree_sum);
        }
    }
    const auto s = gossip_aggregate(g, FaultScenario::none(g), std::vector<double>(g.size(), 1.0),
                                    Aggregation::Max, 3);
    EXPECT_EQ(message_cost(s).per_round.size(), 3u);
}
