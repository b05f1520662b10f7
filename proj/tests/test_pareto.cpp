#include <gtest/gtest.h>

#include <cmath>

#include "evimacs/errors.hpp"
#include "evimacs/pareto.hpp"
#include "evimacs/random.hpp"

using namespace evimacs;
using namespace evimacs::pareto;

namespace {

ArchiveEntry entry(std::vector<double> f, std::vector<double> x = {}) {
    ArchiveEntry e;
    e.objectives = std::move(f);
    e.decision = x.empty() ? e.objectives : std::move(x);
    return e;
}

void expect_mutually_nondominated(const ParetoArchive& a) {
    for (const auto& p : a.entries()) {
        for (const auto& q : a.entries()) EXPECT_FALSE(constrained_dominates(p, q));
    }
}

}  // namespace

TEST(Dominates, BasicCases) {
    const std::vector<double> a{1, 2}, b{2, 3}, c{1, 3}, d{2, 2};
    EXPECT_TRUE(dominates(a, b));
    EXPECT_FALSE(dominates(a, a));
    EXPECT_FALSE(dominates(c, d));
    EXPECT_FALSE(dominates(d, c));
}

TEST(Dominates, LengthMismatchIsDomainError) {
    const std::vector<double> a{1, 2}, b{1, 2, 3};
    EXPECT_THROW(dominates(a, b), DomainError);
}

TEST(DominanceIndex, CountsDominators) {
    EXPECT_EQ(dominance_index({{1, 2}, {2, 1}, {3, 3}}), (std::vector<std::size_t>{0, 0, 2}));
    EXPECT_EQ(dominance_index({{5, 5}}), (std::vector<std::size_t>{0}));
    EXPECT_EQ(dominance_index({{1, 1}, {1, 1}, {1, 1}}), (std::vector<std::size_t>{0, 0, 0}));
}

TEST(DominanceIndex, ScaleInvariantOnRandomPopulations) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ObjectiveVector> pop(1 + rng.index(60));
        for (auto& p : pop) p = {rng.uniform(), rng.uniform(), rng.uniform()};
        auto scaled = pop;
        const double k = rng.uniform(0.1, 10.0);
        for (auto& p : scaled)
            for (auto& v : p) v *= k;
        EXPECT_EQ(dominance_index(pop), dominance_index(scaled));
    }
}

TEST(Archive, FirstInsertion) {
    ParetoArchive a;
    a.update(std::vector{entry({1, 1})});
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a.entries()[0].crowding, 0.0);
}

TEST(Archive, DominatingCandidateEvictsIncumbents) {
    ParetoArchive a;
    a.update(std::vector{entry({1, 2}), entry({2, 1})});
    a.update(std::vector{entry({0, 0})});
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a.entries()[0].objectives, (ObjectiveVector{0, 0}));
}

TEST(Archive, NondominatedCandidateJoins) {
    ParetoArchive a;
    a.update(std::vector{entry({1, 2}), entry({2, 1})});
    a.update(std::vector{entry({1.5, 1.5})});
    EXPECT_EQ(a.size(), 3u);
}

TEST(Archive, FeasibleBeatsInfeasible) {
    ParetoArchive a;
    auto bad = entry({0, 0});
    bad.violation = 0.3;
    a.update(std::vector{bad});
    a.update(std::vector{entry({5, 5})});
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a.entries()[0].violation, 0.0);
}

TEST(Archive, DecisionDuplicatesAreDropped) {
    ParetoArchive a;
    a.update(std::vector{entry({1, 2}, {0.5}), entry({1, 2}, {0.5})});
    EXPECT_EQ(a.size(), 1u);
}

TEST(Archive, RandomUpdatesKeepInvariants) {
    Rng rng(11);
    ParetoArchive a(50);
    for (int round = 0; round < 40; ++round) {
        std::vector<ArchiveEntry> batch;
        for (int k = 0; k < 30; ++k) {
            const double t = rng.uniform();
            auto e = entry({t + 0.1 * rng.uniform(), 1.0 - std::sqrt(t) + 0.1 * rng.uniform()},
                           {rng.uniform(), rng.uniform()});
            if (rng.bernoulli(0.1)) e.violation = rng.uniform();
            batch.push_back(e);
        }
        a.update(batch);
        EXPECT_LE(a.size(), 50u);
        expect_mutually_nondominated(a);
    }
    // Idempotence.
    const auto before = a.entries();
    a.update(before);
    ASSERT_EQ(a.entries().size(), before.size());
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(a.entries()[i].decision, before[i].decision);
}

TEST(Archive, PruningKeepsObjectiveExtremes) {
    ParetoArchive a(10);
    std::vector<ArchiveEntry> batch;
    for (int i = 0; i <= 100; ++i) {
        const double t = i / 100.0;
        batch.push_back(entry({t, 1.0 - t}, {t}));
    }
    a.update(batch);
    ASSERT_EQ(a.size(), 10u);
    double lo0 = 1, lo1 = 1;
    for (const auto& e : a.entries()) {
        lo0 = std::min(lo0, e.objectives[0]);
        lo1 = std::min(lo1, e.objectives[1]);
    }
    EXPECT_EQ(lo0, 0.0);
    EXPECT_EQ(lo1, 0.0);
}

TEST(Archive, ScaledObjectivesGiveSameMembership) {
    Rng rng(3);
    std::vector<ArchiveEntry> batch, scaled;
    for (int k = 0; k < 80; ++k) {
        auto e = entry({rng.uniform(), rng.uniform()}, {static_cast<double>(k)});
        batch.push_back(e);
        e.objectives[0] *= 7.0;
        e.objectives[1] *= 7.0;
        scaled.push_back(e);
    }
    ParetoArchive a, b;
    a.update(batch);
    b.update(scaled);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.entries()[i].decision, b.entries()[i].decision);
}

TEST(Crowding, KnownValues) {
    EXPECT_EQ(crowding_factors(std::vector{entry({1, 1})}), (std::vector<double>{0.0}));
    const auto two = crowding_factors(std::vector{entry({0, 1}), entry({1, 1})});
    EXPECT_DOUBLE_EQ(two[0], 0.5);
    EXPECT_DOUBLE_EQ(two[1], 0.5);
    const auto three = crowding_factors(std::vector{entry({0, 1}), entry({0.5, 0.5}), entry({1, 0})});
    EXPECT_GT(three[1], three[0]);
    EXPECT_GT(three[1], three[2]);
}

TEST(Crowding, IsolationOrderStartsWithMostIsolated) {
    ParetoArchive a;
    a.update(std::vector{entry({0, 1}), entry({0.5, 0.5}), entry({1, 0})});
    const auto order = a.isolation_order();
    ASSERT_EQ(order.size(), 3u);
    EXPECT_EQ(a.entries()[order.back()].objectives, (ObjectiveVector{0.5, 0.5}));
}

TEST(DistanceMetric, SelfAndShift) {
    std::vector<ObjectiveVector> ref;
    for (int i = 0; i < 50; ++i) ref.push_back({i / 49.0, 1.0 - std::sqrt(i / 49.0)});
    EXPECT_EQ(distance_metric(ref, ref), 0.0);
    // Shift along f2 by less than the grid spacing: oracle is the exact shift.
    std::vector<ObjectiveVector> shifted;
    for (int i = 0; i <= 1000; ++i) shifted.push_back({i / 1000.0 * 10.0, 3.0});
    std::vector<ObjectiveVector> line;
    for (int i = 0; i <= 1000; ++i) line.push_back({i / 1000.0 * 10.0, 3.0 + 1e-3});
    EXPECT_NEAR(distance_metric(shifted, line), 1e-3, 1e-12);
}

TEST(Export, CsvHasMetadataAndColumns) {
    ParetoArchive a;
    a.update(std::vector{entry({1, 2}, {0.25, 0.5})});
    const auto csv = to_csv(a, {42, "1.0", "abc", 7});
    EXPECT_EQ(csv.rfind("# seed=42", 0), 0u);
    EXPECT_NE(csv.find("decision_0,decision_1,objective_0,objective_1,violation,crowding,origin"), std::string::npos);
    EXPECT_NE(csv.find("perceived"), std::string::npos);
    const auto js = to_json(a, {42, "1.0", "abc", 7});
    EXPECT_NE(js.find("\"evaluations\""), std::string::npos);
}
