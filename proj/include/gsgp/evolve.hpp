#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gsgp/archive.hpp"
#include "gsgp/data.hpp"
#include "gsgp/exprtree.hpp"
#include "gsgp/selection.hpp"

namespace gsgp {

enum class MutationForm {
    BoundedTwoTree, ///< step * (sigmoid(R1) - sigmoid(R2))
    RawSingleTree,  ///< step * R
};

struct EvolutionConfig {
    std::size_t population_size = 100;
    std::size_t generations = 100;
    double crossover_rate = 0.9;
    double mutation_rate = 0.3;
    double mutation_step = 0.1;
    std::size_t tournament_size = 4;
    SelectionDistribution distribution = UniformLastK{1};
    bool elitism = true;
    std::uint64_t seed = 0;
    MutationForm mutation_form = MutationForm::BoundedTwoTree;
    /// Initial and random-tree generation; n_features is taken from the data.
    TreeGenConfig tree_gen{};
    /// Redraws allowed for a tree whose semantics are non-finite.
    std::size_t max_tree_retries = 25;

    void validate() const {
        detail::require(population_size >= 1, "EvolutionConfig: population_size must be positive");
        detail::require(crossover_rate >= 0.0 && crossover_rate <= 1.0, "EvolutionConfig: crossover_rate must be in [0,1]");
        detail::require(mutation_rate >= 0.0 && mutation_rate <= 1.0, "EvolutionConfig: mutation_rate must be in [0,1]");
        detail::require(mutation_step >= 0.0, "EvolutionConfig: mutation_step must be non-negative");
        detail::require(tournament_size >= 1, "EvolutionConfig: tournament_size must be positive");
        gsgp::validate(distribution);
        tree_gen.validate();
    }
};

struct RunResult {
    std::uint64_t seed = 0;
    /// Per generation (0..generations): train RMSE of the best-on-train
    /// individual, and that same individual's test RMSE.
    std::vector<double> best_train_rmse;
    std::vector<double> best_test_rmse;
    IndividualRef best{};
    /// offset_histogram[o] = tournament winners taken o generations behind the previous one.
    std::vector<std::size_t> offset_histogram;
    double seconds = 0.0;

    [[nodiscard]] double final_train_rmse() const { return best_train_rmse.back(); }
    [[nodiscard]] double final_test_rmse() const { return best_test_rmse.back(); }
};

/// Index of the lowest training RMSE in generation `g`, earliest on ties.
[[nodiscard]] inline std::size_t best_index(const Archive& a, std::size_t g) {
    const auto& gen = a.generation(g);
    std::size_t best = 0;
    for (std::size_t i = 1; i < gen.size(); ++i) {
        if (gen[i].train_fitness < gen[best].train_fitness) best = i;
    }
    return best;
}

namespace detail {

template <class Make>
auto retry_non_finite(std::size_t retries, Make&& make) {
    for (std::size_t attempt = 0;; ++attempt) {
        try {
            return make();
        } catch (const NonFiniteError&) {
            if (attempt >= retries) throw;
        }
    }
}

} // namespace detail

/// Appends one generation of cfg.population_size offspring.
///
/// Slot 0 is a copy of the current best when elitism is on. Every other slot
/// is, with probability crossover_rate, the crossover of two selected parents,
/// otherwise a copy of one selected parent; the result is then mutated with
/// probability mutation_rate. `select(archive, rng)` returns a parent.
template <class Selector>
void next_generation(Archive& a, const EvolutionConfig& cfg, Rng& rng, Selector&& select) {
    detail::require(!a.empty(), "next_generation: archive not seeded");
    TreeGenConfig tree_cfg = cfg.tree_gen;
    tree_cfg.n_features = a.n_features();
    auto random_tree = [&] { return gen_tree(tree_cfg, GenMethod::Grow, rng); };
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Individual> offspring;
    offspring.reserve(cfg.population_size);
    if (cfg.elitism) {
        const std::size_t g = a.generation_count() - 1;
        offspring.push_back(make_copy(a, IndividualRef{g, best_index(a, g)}));
    }
    while (offspring.size() < cfg.population_size) {
        Individual child;
        if (unit(rng) < cfg.crossover_rate) {
            const IndividualRef p1 = select(std::as_const(a), rng);
            const IndividualRef p2 = select(std::as_const(a), rng);
            child = detail::retry_non_finite(cfg.max_tree_retries, [&] { return apply_crossover(a, p1, p2, random_tree()); });
        } else {
            child = make_copy(a, select(std::as_const(a), rng));
        }
        if (unit(rng) < cfg.mutation_rate) {
            child = detail::retry_non_finite(cfg.max_tree_retries, [&] {
                Mutation m{random_tree(), std::nullopt, cfg.mutation_step};
                if (cfg.mutation_form == MutationForm::BoundedTwoTree) {
                    m.tree_b = random_tree();
                }
                return apply_mutation(a, child, std::move(m));
            });
        }
        offspring.push_back(std::move(child));
    }
    a.append_generation(std::move(offspring));
}

/// Seeds generation 0 with ramped half-and-half trees.
[[nodiscard]] inline Archive seed_population(const EvolutionConfig& cfg, const SplitDataset& split, Rng& rng) {
    TreeGenConfig tree_cfg = cfg.tree_gen;
    tree_cfg.n_features = split.train.n_features();
    auto trees = ramped_half_and_half(tree_cfg, cfg.population_size, rng);
    auto regenerate = [&](std::size_t i) {
        // Same method and depth slot the tree originally came from.
        TreeGenConfig at = tree_cfg;
        if (at.max_depth >= 2) at.max_depth = 2 + (i / 2) % (tree_cfg.max_depth - 1);
        const GenMethod method = (at.max_depth < 2 || i % 2 == 0) ? GenMethod::Grow : GenMethod::Full;
        return gen_tree(at, method, rng);
    };
    return seed_archive(std::move(trees), split, regenerate, cfg.max_tree_retries);
}

/// Full run: seed, then cfg.generations calls to next_generation. The
/// reported model of each generation is chosen on training error only.
/// When `archive_out` is given it receives the complete archive.
template <class Selector>
[[nodiscard]] RunResult run_evolution(const EvolutionConfig& cfg, const SplitDataset& split, Selector&& select,
                                      Archive* archive_out = nullptr) {
    cfg.validate();
    split.train.validate();
    split.test.validate();
    const auto start = std::chrono::steady_clock::now();
    Rng rng(cfg.seed);
    RunResult result;
    result.seed = cfg.seed;

    Archive a = seed_population(cfg, split, rng);
    auto record = [&] {
        const std::size_t g = a.generation_count() - 1;
        const std::size_t i = best_index(a, g);
        result.best = IndividualRef{g, i};
        result.best_train_rmse.push_back(a.generation(g)[i].train_fitness);
        result.best_test_rmse.push_back(a.generation(g)[i].test_fitness);
    };
    record();

    auto counted = [&](const Archive& arch, Rng& r) {
        const IndividualRef ref = select(arch, r);
        const std::size_t offset = arch.generation_count() - 1 - ref.generation;
        if (result.offset_histogram.size() <= offset) result.offset_histogram.resize(offset + 1, 0);
        ++result.offset_histogram[offset];
        return ref;
    };
    for (std::size_t g = 0; g < cfg.generations; ++g) {
        next_generation(a, cfg, rng, counted);
        record();
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (archive_out != nullptr) {
        *archive_out = std::move(a);
    }
    return result;
}

[[nodiscard]] inline RunResult run_evolution(const EvolutionConfig& cfg, const SplitDataset& split,
                                             Archive* archive_out = nullptr) {
    return run_evolution(cfg, split, TournamentSelector(cfg.distribution, cfg.tournament_size), archive_out);
}

} // namespace gsgp
