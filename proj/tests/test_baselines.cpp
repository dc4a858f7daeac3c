#include <gtest/gtest.h>

#include <algorithm>

#include "economy/baselines.hpp"
#include "economy/evaluation.hpp"
#include "helpers.hpp"

using namespace economy;
using namespace testing_helpers;

namespace {

// Ten series of length 10 on a grid 2,4,...,10; scores[i][g] are given.
struct Fixture {
    Dataset data;
    TimestampGrid grid{{2, 4, 6, 8, 10}, 10};
    ScoredSet set;

    explicit Fixture(std::vector<std::vector<double>> scores) {
        std::vector<std::vector<double>> v;
        std::vector<int> y;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            v.push_back(std::vector<double>(10, 0.0));
            y.push_back(static_cast<int>(i % 2));
        }
        data = make_dataset(v, y);
        set = {&data, std::move(scores)};
    }
};

} // namespace

TEST(SRTrigger, Examples) {
    EXPECT_TRUE(sr_trigger({1, 0, 0}, 0.5, 0.0, 3, 10));
    EXPECT_TRUE(sr_trigger({1, 0, 0}, 0.99, 0.98, 1, 10));
    for (std::size_t t = 1; t <= 10; ++t) EXPECT_FALSE(sr_trigger({0, 0, -1}, 0.9, 0.8, t, 10));
    EXPECT_TRUE(sr_trigger({0.5, 0.5, -1}, 0.9, 0.8, 8, 10));
}

TEST(SRTrigger, ZeroMeansWait) {
    EXPECT_FALSE(sr_trigger({0, 0, 0}, 0.9, 0.8, 5, 10));
    EXPECT_FALSE(sr_trigger({1, 0, -1}, 0.5, 0.0, 5, 10));
}

TEST(SRDecide, NeverTriggerIsForcedAtT) {
    const std::vector<double> s{0.9, 0.1, 0.8, 0.3, 0.2};
    const TimestampGrid grid({2, 4, 6, 8, 10}, 10);
    const auto d = sr_decide({0, 0, -1}, s, grid);
    EXPECT_EQ(d.trigger_time, 10u);
    EXPECT_EQ(d.label, 0);
    const auto first = sr_decide({1, 0, 0}, s, grid);
    EXPECT_EQ(first.trigger_time, 2u);
    EXPECT_EQ(first.label, 1);
}

TEST(SRDecide, UsesChainScores) {
    const TimestampGrid grid({2, 4}, 4);
    const auto chain = stub_chain(grid, [](std::span<const double> x) { return x.size() == 2 ? 0.55 : 0.95; });
    const LabeledSeries s{{0, 0, 0, 0}, 1};
    // p2 = 0.1 at t=2 and 0.9 at t=4: threshold 0.5 between them
    const auto d = sr_decide({0, 1, -0.25}, *chain, s);
    EXPECT_EQ(d.trigger_time, 4u);
}

TEST(SRGrid, FortyOneValues) {
    const auto v = sr_grid_values();
    EXPECT_EQ(v.front(), -1.0);
    EXPECT_EQ(v.back(), 1.0);
    EXPECT_EQ(v[20], 0.0);
    EXPECT_DOUBLE_EQ(v[21], 0.05);
    EXPECT_TRUE(std::is_sorted(v.begin(), v.end()));
}

TEST(SRTune, PerfectChainHighAlphaTriggersFirst) {
    std::vector<std::vector<double>> scores;
    for (int i = 0; i < 10; ++i) scores.push_back(std::vector<double>(5, i % 2 ? 0.9 : 0.1));
    Fixture f(scores);
    const CostModel cm(1.0, 10);
    const auto tuned = sr_tune({&f.set}, f.grid, cm);
    EXPECT_NEAR(tuned.avg_cost, cm.delay(2), 1e-12);
    for (const auto& r : run_sr(tuned.params, f.set, f.grid, cm)) EXPECT_EQ(r.trigger_time, 2u);
}

TEST(SRTune, FreeWaitingDelaysToT) {
    // correct only at T, wrong before
    std::vector<std::vector<double>> scores;
    for (int i = 0; i < 10; ++i) {
        const bool pos = i % 2;
        std::vector<double> row(5, pos ? 0.2 : 0.8);
        row.back() = pos ? 0.9 : 0.1;
        scores.push_back(row);
    }
    Fixture f(scores);
    const CostModel cm(0.0, 10);
    const auto tuned = sr_tune({&f.set}, f.grid, cm);
    EXPECT_EQ(tuned.avg_cost, 0.0);
    for (const auto& r : run_sr(tuned.params, f.set, f.grid, cm)) EXPECT_EQ(r.trigger_time, 10u);
}

TEST(SRTune, LexicographicTieBreakAndGrid) {
    std::vector<std::vector<double>> scores;
    for (int i = 0; i < 10; ++i) scores.push_back(std::vector<double>(5, i % 2 ? 0.9 : 0.1));
    Fixture f(scores);
    const CostModel cm(1.0, 10);
    const auto tuned = sr_tune({&f.set}, f.grid, cm);
    // brute force: the first grid point (ascending g1, g2, g3) attaining the optimum
    const auto v = sr_grid_values();
    SRParams first{};
    bool found = false;
    for (double g1 : v)
        for (double g2 : v)
            for (double g3 : v) {
                if (found) continue;
                const SRParams p{g1, g2, g3};
                if (std::abs(avg_cost(run_sr(p, f.set, f.grid, cm)) - tuned.avg_cost) < 1e-12) {
                    first = p;
                    found = true;
                }
            }
    ASSERT_TRUE(found);
    EXPECT_EQ(tuned.params, first);
    const auto on_grid = [&](double g) { return std::find(v.begin(), v.end(), g) != v.end(); };
    EXPECT_TRUE(on_grid(tuned.params.g1) && on_grid(tuned.params.g2) && on_grid(tuned.params.g3));
}

TEST(SRTune, Deterministic) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> scores(12, std::vector<double>(5));
    for (auto& r : scores)
        for (auto& x : r) x = u(rng);
    Fixture f(scores);
    const CostModel cm(0.3, 10);
    const auto a = sr_tune({&f.set}, f.grid, cm), b = sr_tune({&f.set}, f.grid, cm);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.avg_cost, b.avg_cost);
    EXPECT_NEAR(a.avg_cost, avg_cost(run_sr(a.params, f.set, f.grid, cm)), 1e-12);
}

TEST(SRTune, EmptyTuningSet) {
    const TimestampGrid grid({2, 4}, 4);
    EXPECT_THROW(sr_tune({}, grid, CostModel(0.1, 4)), DataError);
}
