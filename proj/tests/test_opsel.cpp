#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "dlfuzz/opsel/opsel.hpp"
#include "support.hpp"

namespace dlfuzz {
namespace {

// Reference valuation evaluated in extended precision, written from the closed form
// alpha/(alpha+x) + alpha*e^(-y) + beta - e^(-z/100).
long double reference_value(long double x, long double y, long double z, long double alpha = 0.5L,
                            long double beta = 0.5L) {
    return alpha / (alpha + x) + alpha * std::exp(-y) + beta - std::exp(-z / 100.0L);
}

TEST(OpValue, InitialOperatorIsWorthOne) {
    EXPECT_EQ(op_value(0, 0, 0, 0.5, 0.5), 1.0);
}

TEST(OpValue, MatchesClosedFormAtHandPickedPoints) {
    // V(1,0,0) = 1/3 + 1/2 + 1/2 - 1; V(0,1,0) = 1/2 + 1/(2e); V(0,0,100) = 2 - 1/e.
    EXPECT_NEAR(op_value(1, 0, 0, 0.5, 0.5), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(op_value(0, 1, 0, 0.5, 0.5), 0.5 + 0.5 / std::exp(1.0), 1e-12);
    EXPECT_NEAR(op_value(0, 0, 100, 0.5, 0.5), 2.0 - 1.0 / std::exp(1.0), 1e-12);
    for (auto [x, y, z] : {std::tuple{3, 2, 50}, std::tuple{10, 0, 1}, std::tuple{0, 7, 400}, std::tuple{250, 3, 9}})
        EXPECT_NEAR(op_value(x, y, z, 0.5, 0.5), static_cast<double>(reference_value(x, y, z)), 1e-12);
}

TEST(OpValue, MonotoneInEachCounter) {
    Rng rng(5);
    std::uniform_int_distribution<int> dx(0, 1000), dy(0, 30), dz(0, 2000);
    for (int i = 0; i < 1000; ++i) {
        const auto x = static_cast<std::uint64_t>(dx(rng));
        const auto y = static_cast<std::uint64_t>(dy(rng));
        const auto z = static_cast<std::uint64_t>(dz(rng));
        const double v = op_value(x, y, z, 0.5, 0.5);
        EXPECT_LT(op_value(x + 1, y, z, 0.5, 0.5), v);
        EXPECT_LT(op_value(x, y + 1, z, 0.5, 0.5), v);
        EXPECT_GT(op_value(x, y, z + 1, 0.5, 0.5), v);
    }
}

TEST(OpValue, BoundedBetweenBetaMinusOneAndTwo) {
    // Each term is bounded: (0,1], (0,1/2], 1/2, -(0,1]; so V lies in (-1/2, 2].
    Rng rng(8);
    std::uniform_int_distribution<int> d(0, 100000);
    for (int i = 0; i < 1000; ++i) {
        double v = op_value(d(rng), d(rng) % 50, d(rng), 0.5, 0.5);
        EXPECT_GT(v, -0.5);
        EXPECT_LE(v, 2.0);
    }
}

TEST(Fitness, IsTheMeanOperatorValue) {
    OperatorTable t(testing::numbered_ops(3));
    t.at("op1").used_times = 1;
    t.at("op2").cov_count = 100;
    SAParams p;
    std::vector<std::string> seq{"op0", "op1", "op2"};
    const double expected = (1.0 + 1.0 / 3.0 + (2.0 - 1.0 / std::exp(1.0))) / 3.0;
    EXPECT_NEAR(fitness(seq, t, p), expected, 1e-12);
}

TEST(Fitness, PermutationInvariant) {
    Rng rng(3);
    auto ops = testing::numbered_ops(8);
    std::uniform_int_distribution<int> d(0, 40);
    for (auto& r : ops) r = OperatorRecord{r.name, std::nullopt, static_cast<std::uint64_t>(d(rng)),
                                          static_cast<std::uint64_t>(d(rng) % 5), static_cast<std::uint64_t>(d(rng))};
    OperatorTable t(ops);
    SAParams p;
    auto names = testing::numbered_names(8);
    for (int trial = 0; trial < 200; ++trial) {
        auto seq = random_subset(names, 1 + trial % 3, rng);
        const double f = fitness(seq, t, p);
        std::sort(seq.begin(), seq.end());
        do {
            EXPECT_NEAR(fitness(seq, t, p), f, 1e-15);
        } while (std::next_permutation(seq.begin(), seq.end()));
    }
}

TEST(Fitness, RejectsEmptyAndUnknown) {
    OperatorTable t(testing::numbered_ops(2));
    SAParams p;
    EXPECT_THROW(fitness(std::vector<std::string>{}, t, p), std::invalid_argument);
    EXPECT_THROW(fitness(std::vector<std::string>{"nope"}, t, p), std::out_of_range);
}

TEST(UpdateStats, ChargesEveryOperatorTheFullDelta) {
    OperatorTable t(testing::numbered_ops(4));
    std::vector<std::string> last{"op0", "op2"};
    update_stats(t, last, 7, true);
    EXPECT_EQ(t.at("op0"), (OperatorRecord{"op0", std::nullopt, 1, 1, 7}));
    EXPECT_EQ(t.at("op2"), (OperatorRecord{"op2", std::nullopt, 1, 1, 7}));
    EXPECT_EQ(t.at("op1"), (OperatorRecord{"op1", std::nullopt, 0, 0, 0}));
    update_stats(t, last, 0, false);
    EXPECT_EQ(t.at("op0"), (OperatorRecord{"op0", std::nullopt, 2, 1, 7}));
    update_stats(t, std::vector<std::string>{}, 5, true);
    EXPECT_EQ(t.at("op3").used_times, 0u);
}

TEST(Metropolis, AlwaysAcceptsImprovements) {
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        EXPECT_TRUE(metropolis_accept(0.0, 100.0, rng));
        EXPECT_TRUE(metropolis_accept(0.25, 0.01, rng));
    }
}

TEST(Metropolis, WorseningAcceptedWithBoltzmannProbability) {
    for (auto [df, t] : {std::pair{-0.1, 100.0}, std::pair{-1.0, 1.0}, std::pair{-0.5, 0.25}}) {
        Rng rng(42);
        const int n = 20000;
        int accepted = 0;
        for (int i = 0; i < n; ++i) accepted += metropolis_accept(df, t, rng) ? 1 : 0;
        const double p = std::exp(df / t);
        const double sigma = std::sqrt(p * (1 - p) / n);
        EXPECT_NEAR(static_cast<double>(accepted) / n, p, 5 * sigma + 1e-9) << "dF=" << df << " T=" << t;
    }
}

TEST(RandomSubset, DistinctMembersOfTheSet) {
    Rng rng(9);
    auto names = testing::numbered_names(10);
    for (std::size_t k = 0; k <= 10; ++k) {
        auto s = random_subset(names, k, rng);
        EXPECT_EQ(s.size(), k);
        std::set<std::string> uniq(s.begin(), s.end());
        EXPECT_EQ(uniq.size(), k);
        for (const auto& n : s) EXPECT_NE(std::find(names.begin(), names.end(), n), names.end());
    }
    EXPECT_THROW(random_subset(names, 11, rng), std::invalid_argument);
}

TEST(RandomSubset, EverySubsetEquallyLikely) {
    // 5 choose 2 = 10 unordered subsets; chi-square with 9 dof, 0.999 quantile 27.88.
    Rng rng(17);
    auto names = testing::numbered_names(5);
    std::map<std::set<std::string>, int> counts;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        auto s = random_subset(names, 2, rng);
        counts[{s.begin(), s.end()}]++;
    }
    ASSERT_EQ(counts.size(), 10u);
    double chi2 = 0.0;
    const double expected = n / 10.0;
    for (const auto& [_, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_LT(chi2, 27.88);
}

TEST(SAParams, Validation) {
    SAParams ok;
    EXPECT_NO_THROW(ok.validate());
    auto bad = ok;
    bad.gamma = 1.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.t_min = 200.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.k_min = 4;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.ns = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    EXPECT_EQ(Json(ok).get<SAParams>(), ok);
    EXPECT_EQ(Json::object().get<SAParams>(), ok);
}

TEST(Annealer, ScheduleLengthFollowsGeometricCooling) {
    OperatorTable t(testing::numbered_ops(20));
    auto names = testing::numbered_names(20);
    SAParams p;
    p.t_min = 1.0;
    Rng rng(1);
    AnnealStats stats;
    simulated_annealing(names, t, p, rng, &stats);
    // 100 * 0.99^n >= 1 holds for n = 0..458.
    EXPECT_EQ(stats.temperature_steps, 459u);
    EXPECT_EQ(stats.evaluations, 4590u);

    p.t_min = 0.01;
    simulated_annealing(names, t, p, rng, &stats);
    EXPECT_EQ(stats.temperature_steps, 917u);
}

TEST(Annealer, ResultIsAValidSequence) {
    OperatorTable t(testing::numbered_ops(20));
    auto names = testing::numbered_names(20);
    SAParams p;
    Rng rng(2);
    std::map<std::size_t, int> sizes;
    for (int i = 0; i < 200; ++i) {
        auto s = simulated_annealing(names, t, p, rng);
        sizes[s.size()]++;
        EXPECT_GE(s.size(), 1u);
        EXPECT_LE(s.size(), 3u);
        std::set<std::string> uniq(s.begin(), s.end());
        EXPECT_EQ(uniq.size(), s.size());
    }
    EXPECT_EQ(sizes.size(), 3u) << "k should range over 1..3";
}

TEST(Annealer, SmallOperatorSetClampsK) {
    OperatorTable t(testing::numbered_ops(2));
    auto names = testing::numbered_names(2);
    SAParams p;
    Rng rng(4);
    for (int i = 0; i < 50; ++i) EXPECT_LE(simulated_annealing(names, t, p, rng).size(), 2u);
    OperatorTable one(testing::numbered_ops(1));
    EXPECT_EQ(simulated_annealing(testing::numbered_names(1), one, p, rng), std::vector<std::string>{"op0"});
}

TEST(Annealer, NeverEndsBelowItsStartInTheVastMajorityOfRuns) {
    auto ops = testing::numbered_ops(20);
    Rng setup(77);
    std::uniform_int_distribution<int> d(0, 30);
    for (auto& r : ops) {
        r.used_times = static_cast<std::uint64_t>(d(setup));
        r.exp_count = static_cast<std::uint64_t>(d(setup) % 4);
        r.cov_count = static_cast<std::uint64_t>(d(setup) * 5);
    }
    OperatorTable t(ops);
    auto names = testing::numbered_names(20);
    SAParams p;
    int improved = 0;
    const int runs = 200;
    for (int i = 0; i < runs; ++i) {
        Rng rng(1000 + i);
        AnnealStats s;
        simulated_annealing(names, t, p, rng, &s);
        if (s.final_fitness >= s.initial_fitness) ++improved;
    }
    EXPECT_GE(improved, runs * 95 / 100);
}

TEST(Annealer, FavoursHighValueOperator) {
    auto ops = testing::numbered_ops(20);
    for (auto& r : ops) r.used_times = 50;
    ops[7].used_times = 0;
    ops[7].cov_count = 300;
    OperatorTable t(ops);
    auto names = testing::numbered_names(20);
    SAParams p;
    int hits = 0;
    for (int i = 0; i < 500; ++i) {
        Rng rng(i);
        auto s = simulated_annealing(names, t, p, rng);
        if (std::find(s.begin(), s.end(), "op7") != s.end()) ++hits;
    }
    EXPECT_GE(hits, 300);
}

TEST(Annealer, NeighborhoodVariantProducesValidSequences) {
    OperatorTable t(testing::numbered_ops(6));
    auto names = testing::numbered_names(6);
    SAParams p;
    p.neighborhood_moves = true;
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        auto s = simulated_annealing(names, t, p, rng);
        std::set<std::string> uniq(s.begin(), s.end());
        EXPECT_EQ(uniq.size(), s.size());
        EXPECT_GE(s.size(), 1u);
    }
}

TEST(OpsSelection, RepairReturnsPreviousOperatorsWithoutCharging) {
    OperatorTable t(testing::numbered_ops(5));
    const auto before = t;
    SelectionRequest req;
    req.repair_pending = true;
    req.last_ops = {"op3", "op1"};
    req.delta_cov = 9;
    req.exception_occurred = true;
    Rng rng(1);
    SAParams p;
    EXPECT_EQ(ops_selection(req, testing::numbered_names(5), t, p, rng), req.last_ops);
    EXPECT_EQ(t, before);

    req.last_ops.clear();
    EXPECT_THROW(ops_selection(req, testing::numbered_names(5), t, p, rng), std::logic_error);
}

TEST(OpsSelection, ChargesPreviousOperatorsThenAnneals) {
    OperatorTable t(testing::numbered_ops(5));
    SelectionRequest req;
    req.last_ops = {"op0", "op4"};
    req.delta_cov = 3;
    req.exception_occurred = true;
    Rng rng(1);
    SAParams p;
    auto s = ops_selection(req, testing::numbered_names(5), t, p, rng);
    EXPECT_FALSE(s.empty());
    EXPECT_EQ(t.at("op0"), (OperatorRecord{"op0", std::nullopt, 1, 1, 3}));
    EXPECT_EQ(t.at("op4"), (OperatorRecord{"op4", std::nullopt, 1, 1, 3}));
    EXPECT_EQ(t.at("op2").used_times, 0u);
}

TEST(OpsSelection, FirstIterationLeavesCountersUntouched) {
    OperatorTable t(testing::numbered_ops(5));
    const auto before = t;
    Rng rng(1);
    SAParams p;
    ops_selection(SelectionRequest{}, testing::numbered_names(5), t, p, rng);
    EXPECT_EQ(t, before);
    EXPECT_THROW(ops_selection(SelectionRequest{}, {}, t, p, rng), std::invalid_argument);
}

TEST(OpsSelection, SameSeedSameSequence) {
    OperatorTable t(testing::numbered_ops(20));
    SAParams p;
    Rng a(123), b(123);
    auto ta = t, tb = t;
    EXPECT_EQ(ops_selection({}, testing::numbered_names(20), ta, p, a),
              ops_selection({}, testing::numbered_names(20), tb, p, b));
}

TEST(OperatorSet, ParsesJsonLines) {
    auto ops = parse_operator_set(
        "# comment\n"
        "{\"name\": \"toy.add\", \"signature\": \"add(a, b)\"}\n"
        "\n"
        "{\"name\": \"toy.relu\"}\n");
    ASSERT_EQ(ops.size(), 2u);
    EXPECT_EQ(ops[0].name, "toy.add");
    EXPECT_EQ(ops[0].signature, std::optional<std::string>("add(a, b)"));
    EXPECT_FALSE(ops[1].signature.has_value());
    EXPECT_EQ(ops[1].used_times, 0u);
}

TEST(OperatorSet, RejectsMalformedInput) {
    EXPECT_THROW(parse_operator_set(""), std::invalid_argument);
    EXPECT_THROW(parse_operator_set("{\"signature\": \"x\"}\n"), std::invalid_argument);
    EXPECT_THROW(parse_operator_set("not json\n"), std::invalid_argument);
    EXPECT_THROW(parse_operator_set("{\"name\": \"a\"}\n{\"name\": \"a\"}\n"), std::invalid_argument);
    EXPECT_THROW(load_operator_set("/nonexistent/ops"), std::runtime_error);
}

TEST(OperatorSet, ShippedSetsLoad) {
    EXPECT_EQ(load_operator_set(testing::source_path("opsets/toy.ops")).size(), 20u);
    EXPECT_GT(load_operator_set(testing::source_path("opsets/pytorch.ops")).size(), 50u);
}

} // namespace
} // namespace dlfuzz
