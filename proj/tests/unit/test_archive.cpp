#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "gsgp/archive.hpp"
#include "gsgp/archive_io.hpp"
#include "gsgp/evolve.hpp"

using namespace gsgp;

namespace {

Dataset make_dataset(std::vector<double> x0, std::vector<double> y) {
    Dataset d;
    d.name = "hand";
    const std::size_t rows = x0.size();
    d.inputs = Matrix(rows, 1, std::move(x0));
    d.targets = std::move(y);
    return d;
}

// Train rows x0 = {1, 2}; test rows x0 = {5}.
SplitDataset hand_split() {
    SplitDataset s;
    s.train = make_dataset({1.0, 2.0}, {0.0, 0.0});
    s.test = make_dataset({5.0}, {1.0});
    return s;
}

ExprTree x0() { return ExprTree::variable(0); }
ExprTree plus(const ExprTree& a, double c) { return ExprTree::binary(Op::Add, a, ExprTree::constant(c)); }

std::vector<double> values(const SemanticVector& s) { return {s.begin(), s.end()}; }

SplitDataset random_split(std::size_t rows, std::size_t features, std::uint64_t seed) {
    return split_70_30(synthetic_dataset(SyntheticKind::FriedmanLike, rows, features, 0.1, seed), seed + 1);
}

} // namespace

TEST(SeedArchive, OneGenerationOfLeaves) {
    const auto split = random_split(60, 3, 1);
    TreeGenConfig cfg;
    cfg.n_features = 3;
    Rng rng(2);
    const auto a = seed_archive(ramped_half_and_half(cfg, 100, rng), split);
    EXPECT_EQ(a.generation_count(), 1u);
    EXPECT_EQ(a.population_size(), 100u);
    EXPECT_EQ(count_records(a), 100u);
    for (const auto& ind : a.generation(0)) {
        EXPECT_TRUE(std::holds_alternative<Leaf>(ind.origin));
        EXPECT_EQ(ind.train_fitness, rmse(ind.train_semantics, a.train_targets()));
        EXPECT_EQ(ind.test_fitness, rmse(ind.test_semantics, a.test_targets()));
    }
}

TEST(SeedArchive, MeanPredictorFitnessIsPopulationStdDev) {
    const auto split = random_split(80, 2, 3);
    const auto& y = split.train.targets;
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    const double pop_std = std::sqrt(ss / static_cast<double>(y.size()));
    const auto a = seed_archive({ExprTree::constant(mean)}, split);
    EXPECT_NEAR(a.generation(0)[0].train_fitness, pop_std, 1e-12);
}

TEST(SeedArchive, Deterministic) {
    const auto split = random_split(40, 2, 4);
    TreeGenConfig cfg;
    cfg.n_features = 2;
    Rng r1(5), r2(5);
    const auto a = seed_archive(ramped_half_and_half(cfg, 20, r1), split);
    const auto b = seed_archive(ramped_half_and_half(cfg, 20, r2), split);
    EXPECT_EQ(archive_to_json(a), archive_to_json(b));
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_EQ(a.generation(0)[i].train_semantics, b.generation(0)[i].train_semantics);
    }
}

TEST(SeedArchive, RegeneratesNonFiniteTrees) {
    SplitDataset s;
    s.train = make_dataset({1e200, 1.0}, {0.0, 1.0});
    s.test = make_dataset({2.0}, {1.0});
    const auto overflow = ExprTree::binary(Op::Mul, x0(), x0());
    EXPECT_THROW((void)seed_archive({overflow}, s), NonFiniteError);
    int calls = 0;
    const auto a = seed_archive({overflow, x0()}, s, [&](std::size_t i) {
        EXPECT_EQ(i, 0u);
        return ++calls < 3 ? overflow : ExprTree::constant(1.0);
    });
    EXPECT_EQ(calls, 3);
    EXPECT_EQ(std::get<Leaf>(a.generation(0)[0].origin).tree, ExprTree::constant(1.0));
    // Retry bound: always failing regenerator gives up after max_retries.
    calls = 0;
    EXPECT_THROW((void)seed_archive({overflow}, s, [&](std::size_t) { ++calls; return overflow; }, 25), NonFiniteError);
    EXPECT_EQ(calls, 25);
}

TEST(SeedArchive, RejectsEmptyAndOutOfRangeTrees) {
    EXPECT_THROW((void)seed_archive({}, hand_split()), ContractError);
    EXPECT_THROW((void)seed_archive({ExprTree::variable(3)}, hand_split()), ContractError);
}

TEST(Crossover, MidpointWithZeroMask) {
    const auto a = seed_archive({x0(), plus(x0(), 2.0)}, hand_split());
    const auto child = apply_crossover(a, {0, 0}, {0, 1}, ExprTree::constant(0.0));
    EXPECT_EQ(values(child.train_semantics), (std::vector<double>{2.0, 3.0}));
    EXPECT_EQ(values(child.test_semantics), (std::vector<double>{6.0}));
    EXPECT_EQ(child.train_fitness, rmse(child.train_semantics, a.train_targets()));
}

TEST(Crossover, SaturatedMaskCopiesFirstParent) {
    const auto a = seed_archive({x0(), plus(x0(), 2.0)}, hand_split());
    const auto child = apply_crossover(a, {0, 0}, {0, 1}, ExprTree::constant(1e9));
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(child.train_semantics[i], a.generation(0)[0].train_semantics[i], 1e-9);
    const auto other = apply_crossover(a, {0, 0}, {0, 1}, ExprTree::constant(-1e9));
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(other.train_semantics[i], a.generation(0)[1].train_semantics[i], 1e-9);
}

TEST(Crossover, IdenticalParentsGiveParentExactly) {
    const auto split = random_split(50, 3, 9);
    TreeGenConfig cfg;
    cfg.n_features = 3;
    Rng rng(10);
    const auto a = seed_archive(ramped_half_and_half(cfg, 10, rng), split);
    for (int i = 0; i < 20; ++i) {
        const auto child = apply_crossover(a, {0, 3}, {0, 3}, gen_tree(cfg, GenMethod::Grow, rng));
        EXPECT_EQ(child.train_semantics, a.generation(0)[3].train_semantics);
        EXPECT_EQ(child.test_semantics, a.generation(0)[3].test_semantics);
    }
}

TEST(Crossover, InvalidReferencesRejected) {
    const auto a = seed_archive({x0(), plus(x0(), 2.0)}, hand_split());
    EXPECT_THROW((void)apply_crossover(a, {0, 0}, {0, 2}, ExprTree::constant(0)), ContractError);
    EXPECT_THROW((void)apply_crossover(a, {1, 0}, {0, 1}, ExprTree::constant(0)), ContractError);
    EXPECT_THROW((void)apply_crossover(a, {0, 0}, {0, 1}, ExprTree::variable(4)), ContractError);
}

TEST(Mutation, ZeroStepAndEqualTreesLeaveParentUnchanged) {
    const auto split = random_split(50, 3, 11);
    TreeGenConfig cfg;
    cfg.n_features = 3;
    Rng rng(12);
    const auto a = seed_archive(ramped_half_and_half(cfg, 10, rng), split);
    const auto r1 = gen_tree(cfg, GenMethod::Full, rng);
    const auto r2 = gen_tree(cfg, GenMethod::Full, rng);
    EXPECT_EQ(apply_mutation(a, {0, 2}, r1, r2, 0.0).train_semantics, a.generation(0)[2].train_semantics);
    EXPECT_EQ(apply_mutation(a, {0, 2}, r1, r1, 0.1).train_semantics, a.generation(0)[2].train_semantics);
    EXPECT_EQ(apply_mutation(a, {0, 2}, r1, r1, 0.1).test_semantics, a.generation(0)[2].test_semantics);
}

TEST(Mutation, SingleTreeFormAddsRawOutput) {
    const auto a = seed_archive({x0()}, hand_split());
    const auto child = apply_mutation(a, make_copy(a, {0, 0}), Mutation{plus(x0(), 10.0), std::nullopt, 0.5});
    // x0 + 0.5 * (x0 + 10)
    EXPECT_EQ(values(child.train_semantics), (std::vector<double>{6.5, 8.0}));
    EXPECT_EQ(values(child.test_semantics), (std::vector<double>{12.5}));
}

TEST(Mutation, InvalidInputsRejected) {
    const auto a = seed_archive({x0()}, hand_split());
    EXPECT_THROW((void)apply_mutation(a, {0, 5}, x0(), x0(), 0.1), ContractError);
    EXPECT_THROW((void)apply_mutation(a, {0, 0}, x0(), x0(), -0.1), ContractError);
    EXPECT_THROW((void)apply_mutation(a, a.generation(0)[0], Mutation{x0(), x0(), 0.1}), ContractError);
}

TEST(GeometricInvariants, RandomOperatorApplications) {
    const auto split = random_split(120, 4, 13);
    TreeGenConfig cfg;
    cfg.n_features = 4;
    Rng rng(14);
    const auto a = seed_archive(ramped_half_and_half(cfg, 30, rng), split);
    std::uniform_int_distribution<std::size_t> pick(0, 29);
    for (int i = 0; i < 300; ++i) {
        const IndividualRef p1{0, pick(rng)}, p2{0, pick(rng)};
        const auto child = apply_crossover(a, p1, p2, gen_tree(cfg, GenMethod::Grow, rng));
        for (std::size_t r = 0; r < child.train_semantics.size(); ++r) {
            const double lo = std::min(a.at(p1).train_semantics[r], a.at(p2).train_semantics[r]);
            const double hi = std::max(a.at(p1).train_semantics[r], a.at(p2).train_semantics[r]);
            ASSERT_GE(child.train_semantics[r], lo);
            ASSERT_LE(child.train_semantics[r], hi);
        }
        const auto m = apply_mutation(a, p1, gen_tree(cfg, GenMethod::Grow, rng), gen_tree(cfg, GenMethod::Grow, rng), 0.1);
        for (std::size_t r = 0; r < m.test_semantics.size(); ++r) {
            ASSERT_LE(std::abs(m.test_semantics[r] - a.at(p1).test_semantics[r]), 0.1);
        }
    }
}

TEST(GeometricInvariants, SaturatedMutationStaysWithinStep) {
    // sigmoid(+big) - sigmoid(-big) == 1 exactly, so the raw sum sits on the bound.
    SplitDataset s;
    s.train = make_dataset({1000.3, 7.77, -3.1e5}, {0, 0, 0});
    s.test = make_dataset({123.456}, {0});
    const auto a = seed_archive({x0()}, s);
    const auto m = apply_mutation(a, {0, 0}, ExprTree::constant(1e6), ExprTree::constant(-1e6), 0.1);
    for (std::size_t r = 0; r < 3; ++r) {
        EXPECT_LE(std::abs(m.train_semantics[r] - a.generation(0)[0].train_semantics[r]), 0.1);
    }
}

TEST(NaiveEval, LeafMatchesTree) {
    const auto split = random_split(30, 2, 15);
    TreeGenConfig cfg;
    cfg.n_features = 2;
    Rng rng(16);
    const auto a = seed_archive(ramped_half_and_half(cfg, 6, rng), split);
    for (std::size_t i = 0; i < 6; ++i) {
        const auto& tree = std::get<Leaf>(a.generation(0)[i].origin).tree;
        for (std::size_t r = 0; r < split.train.rows(); ++r) {
            EXPECT_EQ(naive_eval(a, {0, i}, split.train.inputs.row(r)), eval_tree(tree, split.train.inputs.row(r)));
        }
    }
}

TEST(NaiveEval, OneCrossoverByHand) {
    const ExprTree t1 = x0();
    const ExprTree t2 = plus(ExprTree::binary(Op::Mul, x0(), x0()), -1.0);
    const ExprTree mask = ExprTree::binary(Op::Sub, x0(), ExprTree::constant(1.5));
    Archive a = seed_archive({t1, t2}, hand_split());
    a.append_generation({apply_crossover(a, {0, 0}, {0, 1}, mask), apply_crossover(a, {0, 1}, {0, 0}, mask)});
    for (double x : {1.0, 2.0, 5.0, -0.25}) {
        const double s = 1.0 / (1.0 + std::exp(-(x - 1.5)));
        const double expected = s * x + (1.0 - s) * (x * x - 1.0);
        const std::array<double, 1> in{x};
        EXPECT_NEAR(naive_eval(a, {1, 0}, in), expected, 1e-12);
    }
}

TEST(NaiveEval, MatchesMemoizedSemanticsOnEvolvedArchive) {
    const auto split = split_70_30(synthetic_dataset(SyntheticKind::FriedmanLike, 20, 3, 0.1, 17), 18);
    EvolutionConfig cfg;
    cfg.population_size = 8;
    cfg.generations = 5;
    cfg.distribution = UniformLastK{3};
    cfg.seed = 19;
    Archive a;
    (void)run_evolution(cfg, split, &a);
    ASSERT_EQ(a.generation_count(), 6u);
    for (std::size_t g = 0; g < a.generation_count(); ++g) {
        for (std::size_t i = 0; i < a.population_size(); ++i) {
            const auto& ind = a.generation(g)[i];
            for (std::size_t r = 0; r < split.train.rows(); ++r) {
                const double memo = ind.train_semantics[r];
                EXPECT_NEAR(naive_eval(a, {g, i}, split.train.inputs.row(r)), memo, 1e-9 * (1.0 + std::abs(memo)));
            }
        }
    }
}

TEST(NaiveEval, RefusesBeyondBudget) {
    const auto split = split_70_30(synthetic_dataset(SyntheticKind::Polynomial, 20, 2, 0.0, 20), 21);
    EvolutionConfig cfg;
    cfg.population_size = 8;
    cfg.generations = 6;
    cfg.crossover_rate = 1.0;
    cfg.elitism = false;
    cfg.seed = 22;
    Archive a;
    (void)run_evolution(cfg, split, &a);
    EXPECT_THROW((void)naive_eval(a, {6, 0}, split.train.inputs.row(0), NaiveEvalLimits{4}), ContractError);
    EXPECT_NO_THROW((void)naive_eval(a, {6, 0}, split.train.inputs.row(0)));
}

TEST(Storage, RecordCountIsLinearInGenerations) {
    const auto split = random_split(40, 2, 23);
    std::vector<std::size_t> records;
    for (std::size_t g : {10u, 20u, 40u}) {
        EvolutionConfig cfg;
        cfg.population_size = 25;
        cfg.generations = g;
        cfg.seed = 24;
        Archive a;
        (void)run_evolution(cfg, split, &a);
        EXPECT_EQ(count_records(a), 25 * (g + 1));
        EXPECT_GT(count_nodes(a), count_records(a));
        records.push_back(count_records(a));
    }
    EXPECT_EQ(records[1] - records[0], 25u * 10);
    EXPECT_EQ(records[2] - records[1], 25u * 20);
}

TEST(AppendGeneration, EnforcesShapeAndBackReferences) {
    Archive a = seed_archive({x0(), plus(x0(), 1.0)}, hand_split());
    EXPECT_THROW(a.append_generation({make_copy(a, {0, 0})}), ContractError);
    auto self_ref = make_copy(a, {0, 0});
    std::get<Copy>(self_ref.origin).parent = {1, 0};
    EXPECT_THROW(a.append_generation({self_ref, make_copy(a, {0, 1})}), ContractError);
    auto leaf = a.generation(0)[0];
    EXPECT_THROW(a.append_generation({leaf, make_copy(a, {0, 1})}), ContractError);
    a.append_generation({make_copy(a, {0, 1}), make_copy(a, {0, 0})});
    EXPECT_EQ(a.generation_count(), 2u);
}

TEST(ArchiveJson, RoundTripRecomputesIdenticalSemantics) {
    const auto split = random_split(50, 3, 25);
    for (auto form : {MutationForm::BoundedTwoTree, MutationForm::RawSingleTree}) {
        EvolutionConfig cfg;
        cfg.population_size = 12;
        cfg.generations = 6;
        cfg.distribution = Geometric{0.5};
        cfg.mutation_form = form;
        cfg.mutation_rate = 0.6;
        cfg.seed = 26;
        Archive a;
        (void)run_evolution(cfg, split, &a);
        const auto j = archive_to_json(a);
        const auto b = archive_from_json(nlohmann::json::parse(j.dump()), split);
        ASSERT_EQ(b.generation_count(), a.generation_count());
        for (std::size_t g = 0; g < a.generation_count(); ++g) {
            for (std::size_t i = 0; i < a.population_size(); ++i) {
                EXPECT_EQ(a.generation(g)[i].train_semantics, b.generation(g)[i].train_semantics);
                EXPECT_EQ(a.generation(g)[i].test_semantics, b.generation(g)[i].test_semantics);
                EXPECT_EQ(a.generation(g)[i].mutation, b.generation(g)[i].mutation);
            }
        }
        EXPECT_EQ(archive_to_json(b), j);
    }
}

TEST(ArchiveJson, MalformedDocumentsRejected) {
    const auto split = hand_split();
    EXPECT_THROW((void)archive_from_json(nlohmann::json::object(), split), ParseError);
    auto doc = nlohmann::json::parse(R"({"format":"gsgp-archive","schema_version":1,
        "generations":[[{"origin":"leaf","tree":"x0"}],[{"origin":"copy","parent":[3,0]}]]})");
    EXPECT_THROW((void)archive_from_json(doc, split), ContractError);
    doc["generations"][1][0] = {{"origin", "leaf"}, {"tree", "x0"}};
    EXPECT_THROW((void)archive_from_json(doc, split), ParseError);
}
