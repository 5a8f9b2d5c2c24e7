#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "cbricks/random.hpp"
#include "cbricks/wall_io.hpp"

using namespace cbricks;
using namespace cbricks::wall;

namespace {

// Plain nearest-seed classification: one BFS per seed, compare distances.
std::vector<int> nearest_seed_oracle(const WallGraph& g, const std::vector<CellId>& seeds) {
    std::vector<std::vector<std::size_t>> dist;
    for (CellId s : seeds) dist.push_back(bfs_distances(g, s));
    std::vector<int> out(g.size(), kUnreached);
    for (CellId c = 0; c < g.size(); ++c) {
        std::size_t best = kUnreachable;
        int who = kUnreached;
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            if (dist[i][c] < best) {
                best = dist[i][c];
                who = static_cast<int>(i);
            } else if (dist[i][c] == best && best != kUnreachable) {
                who = kBoundary;
            }
        }
        out[c] = who;
    }
    return out;
}

std::size_t eccentricity(const WallGraph& g, CellId s) {
    const auto d = bfs_distances(g, s);
    return *std::max_element(d.begin(), d.end());
}

BinaryImage random_image(std::size_t n, Rng& rng, double p = 0.5) {
    BinaryImage img(n);
    for (auto& v : img) v = rng.uniform() < p;
    return img;
}

BinaryImage complement(BinaryImage img) {
    for (auto& v : img) v = !v;
    return img;
}

}  // namespace

TEST(BuildBrickWall, SingleBrickHasNoNeighbours) {
    const auto g = build_brick_wall(1, 1);
    ASSERT_EQ(g.size(), 1u);
    EXPECT_TRUE(g.adjacency[0].empty());
}

TEST(BuildBrickWall, CentreOfThreeByThreeHasSixNeighbours) {
    const auto g = build_brick_wall(3, 3);
    const auto& adj = g.adjacency[g.id(1, 1)];
    EXPECT_EQ(adj.size(), 6u);
    // Row 1 is odd, so the diagonal partners sit at x - 1.
    const std::set<CellId> expect{g.id(0, 1), g.id(2, 1), g.id(1, 0), g.id(0, 0), g.id(1, 2), g.id(0, 2)};
    EXPECT_EQ(std::set<CellId>(adj.begin(), adj.end()), expect);
}

TEST(BuildBrickWall, SymmetricWithoutSelfLoops) {
    for (bool toroidal : {false, true}) {
        const auto g = build_brick_wall(10, 10, toroidal);
        std::size_t six = 0;
        for (CellId c = 0; c < g.size(); ++c) {
            EXPECT_LE(g.adjacency[c].size(), 6u);
            six += g.adjacency[c].size() == 6;
            for (CellId n : g.adjacency[c]) {
                EXPECT_NE(n, c);
                const auto& back = g.adjacency[n];
                EXPECT_NE(std::find(back.begin(), back.end(), c), back.end());
            }
        }
        if (toroidal) {
            EXPECT_EQ(six, g.size());
        }
    }
    const auto g = build_brick_wall(10, 10);
    for (std::size_t y = 1; y + 1 < 10; ++y)
        for (std::size_t x = 1; x + 1 < 10; ++x) EXPECT_EQ(g.adjacency[g.id(x, y)].size(), 6u);
}

TEST(BuildBrickWall, RejectsBadDimensions) {
    EXPECT_THROW(build_brick_wall(0, 3), ValidationError);
    EXPECT_THROW(build_brick_wall(3, 0), ValidationError);
    EXPECT_THROW(build_brick_wall(3, 4, true), ValidationError);
}

TEST(NeighbourhoodGraph, RadiusTwoJoinsCellsWithinTwoSteps) {
    const auto g = build_brick_wall(7, 7);
    const auto g2 = neighbourhood_graph(g, 2);
    const auto d = bfs_distances(g, g.id(3, 3));
    std::size_t within = 0;
    for (CellId c = 0; c < g.size(); ++c) within += c != g.id(3, 3) && d[c] <= 2;
    EXPECT_EQ(g2.adjacency[g.id(3, 3)].size(), within);
    EXPECT_EQ(within, 18u);
    EXPECT_THROW(neighbourhood_graph(g, 0), ValidationError);
}

TEST(StepSync, QuiescentIsFixedPoint) {
    const auto g = build_brick_wall(6, 6);
    const auto s = WallState::quiescent(g);
    for (int lo = 1; lo <= 6; ++lo)
        for (int hi = lo; hi <= 6; ++hi) {
            RuleSpec rule{lo, hi, 2, {}};
            EXPECT_EQ(step_sync(g, s, rule).cells, s.cells);
        }
}

TEST(StepSync, SingleSourceExcitesItsNeighbours) {
    const auto g = build_brick_wall(5, 5);
    auto s = WallState::quiescent(g);
    const CellId src = g.id(2, 2);
    s.cells[src] = CellState::excited();
    const auto next = step_sync(g, s, RuleSpec::classic());
    EXPECT_EQ(next.step, 1u);
    EXPECT_EQ(next.cells[src], CellState::refractory(1));
    EXPECT_EQ(next.count(Phase::Excited), 6u);
    for (CellId n : g.adjacency[src]) EXPECT_EQ(next.cells[n].phase, Phase::Excited);
}

TEST(StepSync, TwoExcitedCellsRecoverAndStayResting) {
    const auto g = build_brick_wall(1, 2);
    WallState s{{CellState::excited(), CellState::excited()}, 0};
    const auto rule = RuleSpec::classic();
    s = step_sync(g, s, rule);
    EXPECT_EQ(s.count(Phase::Refractory), 2u);
    s = step_sync(g, s, rule);
    EXPECT_EQ(s.count(Phase::Resting), 2u);
    s = step_sync(g, s, rule);
    EXPECT_EQ(s.count(Phase::Resting), 2u);
}

TEST(StepSync, MultiStepRefractoryCountsDown) {
    const auto g = build_brick_wall(1, 1);
    WallState s{{CellState::excited()}, 0};
    const RuleSpec rule{1, 6, 3, {}};
    std::vector<CellState> seen;
    for (int k = 0; k < 4; ++k) {
        s = step_sync(g, s, rule);
        seen.push_back(s.cells[0]);
    }
    EXPECT_EQ(seen, (std::vector<CellState>{CellState::refractory(3), CellState::refractory(2),
                                            CellState::refractory(1), CellState::resting()}));
}

TEST(StepSync, IntervalRuleNeedsEnoughExcitedNeighbours) {
    const auto g = build_brick_wall(3, 3);
    auto s = WallState::quiescent(g);
    s.cells[g.id(0, 1)] = CellState::excited();
    const RuleSpec two{2, 6, 1, {}};
    EXPECT_EQ(step_sync(g, s, two).cells[g.id(1, 1)].phase, Phase::Resting);
    s.cells[g.id(2, 1)] = CellState::excited();
    EXPECT_EQ(step_sync(g, s, two).cells[g.id(1, 1)].phase, Phase::Excited);
}

TEST(StepSync, TableMatchesIntervalRule) {
    const auto g = build_brick_wall(12, 12);
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        WallState s = WallState::quiescent(g);
        for (auto& c : s.cells) {
            const double u = rng.uniform();
            c = u < 0.2 ? CellState::excited() : u < 0.35 ? CellState::refractory(1) : CellState::resting();
        }
        const int lo = 1 + static_cast<int>(rng.below(3));
        const int hi = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(7 - lo)));
        RuleSpec by_table{1, 6, 1, RuleTable::interval(lo, hi)};
        EXPECT_EQ(step_sync(g, s, by_table).cells, step_sync(g, s, RuleSpec{lo, hi, 1, {}}).cells);
    }
}

TEST(StepSync, RejectsMalformedInput) {
    const auto g = build_brick_wall(3, 3);
    const auto s = WallState::quiescent(g);
    RuleTable partial;
    partial.set(Phase::Resting, 0, Phase::Resting);
    EXPECT_FALSE(partial.total());
    EXPECT_THROW(step_sync(g, s, RuleSpec{1, 6, 1, partial}), ValidationError);
    EXPECT_THROW(step_sync(g, s, RuleSpec{0, 6, 1, {}}), ValidationError);
    EXPECT_THROW(step_sync(g, s, RuleSpec{3, 2, 1, {}}), ValidationError);
    EXPECT_THROW(step_sync(g, s, RuleSpec{1, 7, 1, {}}), ValidationError);
    EXPECT_THROW(step_sync(g, s, RuleSpec{1, 6, 0, {}}), ValidationError);
    EXPECT_THROW(step_sync(g, WallState{{}, 0}, RuleSpec::classic()), ValidationError);
    EXPECT_THROW(partial.set(Phase::Resting, 7, Phase::Excited), ValidationError);
}

TEST(StepSync, EvaluationOrderDoesNotMatter) {
    const auto g = build_brick_wall(9, 11);
    Rng rng(21);
    WallState s = WallState::quiescent(g);
    for (auto& c : s.cells) c = rng.uniform() < 0.3 ? CellState::excited() : CellState::resting();
    std::vector<CellId> order(g.size());
    std::iota(order.begin(), order.end(), CellId{0});
    const auto ref = step_sync(g, s, RuleSpec{1, 3, 2, {}}, order);
    for (int k = 0; k < 10; ++k) {
        rng.shuffle(order);
        EXPECT_EQ(step_sync(g, s, RuleSpec{1, 3, 2, {}}, order).cells, ref.cells);
    }
    std::reverse(order.begin(), order.end());
    order.pop_back();
    EXPECT_THROW(step_sync(g, s, RuleSpec::classic(), order), ValidationError);
}

TEST(Run, QuiescentTrajectoryHasOneState) {
    const auto g = build_brick_wall(4, 4);
    EXPECT_EQ(run(g, WallState::quiescent(g), RuleSpec::classic(), 50).size(), 1u);
    EXPECT_EQ(run(g, WallState::quiescent(g), RuleSpec::classic(), 0).size(), 1u);
}

TEST(Run, SingleWaveDiesOutAndRespectsStepBound) {
    const auto g = build_brick_wall(20, 20);
    auto s = WallState::quiescent(g);
    s.cells[g.id(7, 9)] = CellState::excited();
    const auto traj = run(g, s, RuleSpec::classic(), 200);
    EXPECT_LE(traj.size(), 201u);
    EXPECT_EQ(traj.back().count(Phase::Resting), g.size());
    for (std::size_t cap : {0u, 1u, 5u, 17u}) EXPECT_LE(run(g, s, RuleSpec::classic(), cap).size(), cap + 1);
}

TEST(Run, ExcitedCountBoundedByBfsShell) {
    const auto g = build_brick_wall(15, 18);
    Rng rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        auto s = WallState::quiescent(g);
        std::vector<CellId> sources;
        for (int k = 0; k < 3; ++k) sources.push_back(rng.below(g.size()));
        for (CellId c : sources) s.cells[c] = CellState::excited();
        const auto d = bfs_distances(g, sources);
        const auto traj = run(g, s, RuleSpec::classic(), 100);
        for (std::size_t t = 0; t < traj.size(); ++t) {
            const auto shell = static_cast<std::size_t>(std::count(d.begin(), d.end(), t));
            EXPECT_LE(traj[t].count(Phase::Excited), shell);
        }
    }
}

TEST(Broadcast, WavefrontMatchesBfsDistance) {
    Rng rng(12);
    for (std::size_t rows : {1u, 2u, 7u, 30u})
        for (std::size_t cols : {1u, 5u, 30u}) {
            const auto g = build_brick_wall(rows, cols);
            for (int k = 0; k < 3; ++k) {
                const CellId src = rng.below(g.size());
                EXPECT_EQ(first_excitation(g, src), bfs_distances(g, src));
                EXPECT_EQ(broadcast_time(g, src), eccentricity(g, src));
            }
        }
}

TEST(Broadcast, Examples) {
    EXPECT_EQ(broadcast_time(build_brick_wall(1, 1), 0), 0u);
    const auto g = build_brick_wall(10, 10);
    for (CellId corner : {g.id(0, 0), g.id(9, 0), g.id(0, 9), g.id(9, 9)})
        EXPECT_EQ(broadcast_time(g, corner), eccentricity(g, corner));
    EXPECT_THROW(broadcast_time(g, g.size()), ValidationError);
}

TEST(Broadcast, DisconnectedGraphIsUnreachable) {
    WallGraph g;
    g.rows = 1;
    g.cols = 3;
    g.adjacency = {{1}, {0}, {}};
    EXPECT_THROW(broadcast_time(g, 0), UnreachableError);
}

TEST(Voronoi, OneSeedLabelsEverything) {
    const auto g = build_brick_wall(8, 9);
    const std::vector<CellId> seeds{g.id(4, 4)};
    const auto labels = voronoi_wavefront(g, seeds);
    EXPECT_EQ(std::count(labels.begin(), labels.end(), 0), static_cast<long>(g.size()));
}

TEST(Voronoi, MatchesNearestSeedOracle) {
    Rng rng(31);
    const auto g = build_brick_wall(20, 20);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<CellId> all(g.size());
        std::iota(all.begin(), all.end(), CellId{0});
        const auto seeds = rng.sample(all, 5);
        EXPECT_EQ(voronoi_wavefront(g, seeds), nearest_seed_oracle(g, seeds));
    }
}

TEST(Voronoi, MirrorSymmetricSeedsGiveSymmetricBoundary) {
    // Rows 0..3 under y -> 3 - y swap parities, so reflect x as well: the
    // map (x, y) -> (cols-1-x, rows-1-y) is an automorphism when rows is even.
    const std::size_t rows = 8, cols = 11;
    const auto g = build_brick_wall(rows, cols);
    auto mirror = [&](CellId c) { return g.id(cols - 1 - g.x_of(c), rows - 1 - g.y_of(c)); };
    for (CellId c = 0; c < g.size(); ++c) {
        std::set<CellId> image;
        for (CellId n : g.adjacency[c]) image.insert(mirror(n));
        const auto& adj = g.adjacency[mirror(c)];
        ASSERT_EQ(image, std::set<CellId>(adj.begin(), adj.end()));
    }
    const std::vector<CellId> seeds{g.id(2, 3), mirror(g.id(2, 3))};
    const auto labels = voronoi_wavefront(g, seeds);
    std::size_t boundary = 0;
    for (CellId c = 0; c < g.size(); ++c) {
        EXPECT_EQ(labels[c] == kBoundary, labels[mirror(c)] == kBoundary);
        boundary += labels[c] == kBoundary;
    }
    EXPECT_GT(boundary, 0u);
}

TEST(Voronoi, RejectsBadSeeds) {
    const auto g = build_brick_wall(3, 3);
    EXPECT_THROW(voronoi_wavefront(g, std::vector<CellId>{}), ValidationError);
    EXPECT_THROW(voronoi_wavefront(g, std::vector<CellId>{1, 1}), ValidationError);
    EXPECT_THROW(voronoi_wavefront(g, std::vector<CellId>{9}), ValidationError);
}

TEST(Morphology, AllOffStaysOff) {
    const auto g = build_brick_wall(6, 6);
    const BinaryImage off(g.size(), 0);
    for (auto op : {MorphOp::Dilate, MorphOp::Erode, MorphOp::Contour}) EXPECT_EQ(morph_op(g, off, op), off);
}

TEST(Morphology, DilateSingleCell) {
    const auto g = build_brick_wall(6, 6);
    BinaryImage img(g.size(), 0);
    const CellId c = g.id(3, 2);
    img[c] = 1;
    BinaryImage expect = img;
    for (CellId n : g.adjacency[c]) expect[n] = 1;
    EXPECT_EQ(morph_op(g, img, MorphOp::Dilate), expect);
    EXPECT_EQ(morph_op(g, img, MorphOp::Contour), img);
    EXPECT_EQ(morph_op(g, img, MorphOp::Erode), BinaryImage(g.size(), 0));
}

TEST(Morphology, DualityMonotonicityAndContour) {
    const auto g = build_brick_wall(16, 16);
    Rng rng(44);
    for (int trial = 0; trial < 30; ++trial) {
        const auto s = random_image(g.size(), rng);
        EXPECT_EQ(morph_op(g, s, MorphOp::Erode), complement(morph_op(g, complement(s), MorphOp::Dilate)));
        auto t = s;
        for (auto& v : t) v = v || rng.uniform() < 0.2;
        const auto ds = morph_op(g, s, MorphOp::Dilate), dt = morph_op(g, t, MorphOp::Dilate);
        for (CellId c = 0; c < g.size(); ++c) EXPECT_LE(ds[c], dt[c]);
        const auto e = morph_op(g, s, MorphOp::Erode), k = morph_op(g, s, MorphOp::Contour);
        for (CellId c = 0; c < g.size(); ++c) EXPECT_EQ(k[c], s[c] && !e[c]);
    }
    EXPECT_THROW(morph_op(g, BinaryImage(3), MorphOp::Dilate), ValidationError);
}

TEST(TextGrid, StateRoundTrip) {
    std::istringstream in("..E.\n.R..\n\nE...\n");
    std::size_t rows = 0, cols = 0;
    const auto s = read_state_grid(in, rows, cols, 2);
    EXPECT_EQ(rows, 3u);
    EXPECT_EQ(cols, 4u);
    EXPECT_EQ(s.cells[2], CellState::excited());
    EXPECT_EQ(s.cells[5], CellState::refractory(2));
    std::ostringstream out;
    write_state_grid(out, build_brick_wall(rows, cols), s);
    EXPECT_EQ(out.str(), "..E.\n.R..\nE...\n");
}

TEST(TextGrid, RejectsMalformedGrids) {
    std::size_t r = 0, c = 0;
    std::istringstream ragged("...\n..\n"), bad("..x\n"), empty("");
    EXPECT_THROW(read_state_grid(ragged, r, c), ValidationError);
    EXPECT_THROW(read_state_grid(bad, r, c), ValidationError);
    EXPECT_THROW(read_state_grid(empty, r, c), ValidationError);
    std::istringstream img_bad("#.E\n");
    EXPECT_THROW(read_image_grid(img_bad, r, c), ValidationError);
}

TEST(TextGrid, LabelsAndImages) {
    const auto g = build_brick_wall(1, 4);
    std::ostringstream labels;
    write_label_grid(labels, g, {0, kBoundary, 12, kUnreached});
    EXPECT_EQ(labels.str(), "0#2?\n");
    std::istringstream in("#..#\n");
    std::size_t r = 0, c = 0;
    const auto img = read_image_grid(in, r, c);
    EXPECT_EQ(img, (BinaryImage{1, 0, 0, 1}));
    std::ostringstream out;
    write_image_grid(out, g, img);
    EXPECT_EQ(out.str(), "#..#\n");
}

TEST(Render, SingleBrickIsRestingBlock) {
    const auto g = build_brick_wall(1, 1);
    const RenderStyle st;
    const auto img = render_frame(g, WallState::quiescent(g), st);
    EXPECT_EQ(img.width, st.brick_w + st.brick_w / 2);
    EXPECT_EQ(img.height, st.brick_h);
    std::size_t resting = 0;
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x) resting += img.at(x, y) == st.resting;
    EXPECT_EQ(resting, (st.brick_w - 1) * (st.brick_h - 1));
}

TEST(Render, DeterministicAndDistinguishesPhases) {
    const auto g = build_brick_wall(5, 6);
    auto s = WallState::quiescent(g);
    s.cells[3] = CellState::excited();
    s.cells[7] = CellState::refractory(1);
    std::ostringstream a, b;
    io::write_ppm(a, render_frame(g, s));
    io::write_ppm(b, render_frame(g, s));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str().rfind("P6\n", 0), 0u);
    const auto img = render_frame(g, s);
    const RenderStyle st;
    // Brick 3 sits on row 0 (even), shifted right by half a brick.
    EXPECT_EQ(img.at(3 * st.brick_w + st.brick_w / 2, 0), st.excited);
    EXPECT_EQ(img.at(1 * st.brick_w, st.brick_h), st.refractory);
    EXPECT_EQ(img.at(0, 0), st.mortar);
}

TEST(Render, WaveRingGrows) {
    const auto g = build_brick_wall(21, 21);
    auto s = WallState::quiescent(g);
    const CellId src = g.id(10, 10);
    s.cells[src] = CellState::excited();
    const auto d = bfs_distances(g, src);
    const auto traj = run(g, s, RuleSpec::classic(), 8);
    for (std::size_t t = 1; t < traj.size(); ++t) {
        std::size_t max_r = 0;
        for (CellId c = 0; c < g.size(); ++c)
            if (traj[t].cells[c].phase == Phase::Excited) max_r = std::max(max_r, d[c]);
        EXPECT_EQ(max_r, t);
    }
}
