#pragma once

/// @file archive.hpp
/// Append-only, generation-indexed store of every individual of a run.
///
/// Individuals after generation 0 are records that point at earlier
/// individuals plus the random trees used by the operator that made them.
/// Their semantics on the train and test rows are computed once, from the
/// parents' stored semantics, so building a child costs O(rows) regardless of
/// how deep its ancestry goes. naive_eval() expands the same records
/// recursively down to generation 0 and exists only as a test oracle.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gsgp/data.hpp"
#include "gsgp/error.hpp"
#include "gsgp/exprtree.hpp"
#include "gsgp/semantics.hpp"

namespace gsgp {

struct IndividualRef {
    std::size_t generation = 0;
    std::size_t index = 0;

    friend auto operator<=>(const IndividualRef&, const IndividualRef&) = default;
};

/// Generation-0 individual: a plain syntax tree.
struct Leaf {
    ExprTree tree;
    friend bool operator==(const Leaf&, const Leaf&) = default;
};

/// Reproduction: same semantics as `parent`, stored as a reference.
struct Copy {
    IndividualRef parent;
    friend bool operator==(const Copy&, const Copy&) = default;
};

/// child = s * first + (1 - s) * second with s = sigmoid(mask(x)).
struct Crossover {
    IndividualRef first;
    IndividualRef second;
    ExprTree mask;
    friend bool operator==(const Crossover&, const Crossover&) = default;
};

/// Applied on top of an origin. With two trees the perturbation is
/// step * (sigmoid(a(x)) - sigmoid(b(x))), bounded by step per row. With a
/// single tree it is step * a(x), unbounded.
struct Mutation {
    ExprTree tree_a;
    std::optional<ExprTree> tree_b;
    double step = 0.0;
    friend bool operator==(const Mutation&, const Mutation&) = default;
};

using Origin = std::variant<Leaf, Copy, Crossover>;

struct Individual {
    Origin origin;
    std::optional<Mutation> mutation;
    SemanticVector train_semantics;
    SemanticVector test_semantics;
    double train_fitness = 0.0;
    double test_fitness = 0.0;
};

class Archive {
  public:
    Archive() = default;

    explicit Archive(const SplitDataset& split)
        : train_inputs_(split.train.inputs),
          test_inputs_(split.test.inputs),
          train_targets_(split.train.targets),
          test_targets_(split.test.targets) {
        detail::require(train_inputs_.cols() == test_inputs_.cols(), "Archive: train/test feature count mismatch");
        detail::require(train_inputs_.rows() >= 1 && test_inputs_.rows() >= 1, "Archive: empty split");
    }

    [[nodiscard]] const Matrix& train_inputs() const noexcept { return train_inputs_; }
    [[nodiscard]] const Matrix& test_inputs() const noexcept { return test_inputs_; }
    [[nodiscard]] const SemanticVector& train_targets() const noexcept { return train_targets_; }
    [[nodiscard]] const SemanticVector& test_targets() const noexcept { return test_targets_; }
    [[nodiscard]] std::size_t n_features() const noexcept { return train_inputs_.cols(); }

    [[nodiscard]] std::size_t generation_count() const noexcept { return generations_.size(); }
    [[nodiscard]] bool empty() const noexcept { return generations_.empty(); }

    /// Size shared by every generation; 0 before seeding.
    [[nodiscard]] std::size_t population_size() const noexcept {
        return generations_.empty() ? 0 : generations_.front().size();
    }

    [[nodiscard]] const std::vector<Individual>& generation(std::size_t g) const {
        detail::require(g < generations_.size(), "Archive: generation out of range");
        return generations_[g];
    }

    [[nodiscard]] const std::vector<Individual>& latest() const {
        detail::require(!generations_.empty(), "Archive: empty archive");
        return generations_.back();
    }

    [[nodiscard]] bool contains(IndividualRef ref) const noexcept {
        return ref.generation < generations_.size() && ref.index < generations_[ref.generation].size();
    }

    [[nodiscard]] const Individual& at(IndividualRef ref) const {
        if (!contains(ref)) {
            throw ContractError("Archive: invalid reference (" + std::to_string(ref.generation) + ", " +
                                std::to_string(ref.index) + ")");
        }
        return generations_[ref.generation][ref.index];
    }

    /// Appends a complete generation. Generation 0 must be all leaves; later
    /// generations may only reference strictly earlier ones.
    void append_generation(std::vector<Individual> individuals) {
        detail::require(!individuals.empty(), "Archive: empty generation");
        if (!generations_.empty()) {
            detail::require(individuals.size() == population_size(), "Archive: generation size differs from population size");
        }
        const std::size_t g = generations_.size();
        for (const auto& ind : individuals) {
            const bool leaf = std::holds_alternative<Leaf>(ind.origin);
            detail::require(leaf == (g == 0), "Archive: generation 0 holds exactly the leaf individuals");
            if (leaf) {
                detail::require(!ind.mutation, "Archive: generation-0 leaves carry no mutation");
            }
            detail::require(ind.train_semantics.size() == train_targets_.size() &&
                                ind.test_semantics.size() == test_targets_.size(),
                            "Archive: semantics length mismatch");
            auto check_parent = [&](IndividualRef p) {
                detail::require(p.generation < g && contains(p), "Archive: parent must be an existing earlier individual");
            };
            if (const auto* c = std::get_if<Copy>(&ind.origin)) {
                check_parent(c->parent);
            } else if (const auto* x = std::get_if<Crossover>(&ind.origin)) {
                check_parent(x->first);
                check_parent(x->second);
            }
        }
        generations_.push_back(std::move(individuals));
    }

  private:
    Matrix train_inputs_;
    Matrix test_inputs_;
    SemanticVector train_targets_;
    SemanticVector test_targets_;
    std::vector<std::vector<Individual>> generations_;
};

namespace detail {

inline void fill_fitness(const Archive& a, Individual& ind) {
    ind.train_fitness = rmse(ind.train_semantics, a.train_targets());
    ind.test_fitness = rmse(ind.test_semantics, a.test_targets());
}

inline std::vector<double> crossover_values(const SemanticVector& first, const SemanticVector& second,
                                            const std::vector<double>& mask_raw) {
    std::vector<double> out(first.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double s = sigmoid(mask_raw[i]);
        const double a = first[i];
        const double b = second[i];
        // b + s (a - b) is exact when a == b; the clamp keeps the child inside
        // [min, max] despite rounding.
        out[i] = std::clamp(b + s * (a - b), std::min(a, b), std::max(a, b));
    }
    return out;
}

inline std::vector<double> mutation_values(const SemanticVector& parent, const Mutation& m, const Matrix& inputs) {
    const auto ra = eval_tree_rows(m.tree_a, inputs);
    std::vector<double> out(parent.size());
    if (!m.tree_b) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = parent[i] + m.step * ra[i];
        }
        return out;
    }
    const auto rb = eval_tree_rows(*m.tree_b, inputs);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double p = parent[i];
        double c = p + m.step * (sigmoid(ra[i]) - sigmoid(rb[i]));
        while (std::abs(c - p) > m.step) {
            c = std::nextafter(c, p);
        }
        out[i] = c;
    }
    return out;
}

} // namespace detail

/// Builds generation 0 from `trees`. A tree whose semantics are non-finite on
/// either split is replaced by `regenerate(i)` up to `max_retries` times; with
/// no regenerator, or when retries run out, NonFiniteError propagates.
[[nodiscard]] inline Archive seed_archive(std::vector<ExprTree> trees, const SplitDataset& split,
                                          const std::function<ExprTree(std::size_t)>& regenerate = {},
                                          std::size_t max_retries = 25) {
    detail::require(!trees.empty(), "seed_archive: no trees");
    Archive a(split);
    std::vector<Individual> gen;
    gen.reserve(trees.size());
    for (std::size_t i = 0; i < trees.size(); ++i) {
        for (std::size_t attempt = 0;; ++attempt) {
            if (trees[i].required_features() > a.n_features()) {
                throw ContractError("seed_archive: tree " + std::to_string(i) + " uses a feature beyond the dataset");
            }
            try {
                Individual ind;
                ind.train_semantics = semantics_of_tree(trees[i], a.train_inputs());
                ind.test_semantics = semantics_of_tree(trees[i], a.test_inputs());
                ind.origin = Leaf{trees[i]};
                detail::fill_fitness(a, ind);
                gen.push_back(std::move(ind));
                break;
            } catch (const NonFiniteError&) {
                if (!regenerate || attempt >= max_retries) {
                    throw;
                }
                trees[i] = regenerate(i);
            }
        }
    }
    a.append_generation(std::move(gen));
    return a;
}

[[nodiscard]] inline Individual apply_crossover(const Archive& a, IndividualRef first, IndividualRef second,
                                                const ExprTree& mask) {
    const Individual& p1 = a.at(first);
    const Individual& p2 = a.at(second);
    detail::require(mask.required_features() <= a.n_features(), "apply_crossover: mask uses a feature beyond the dataset");
    Individual child;
    child.train_semantics = SemanticVector(
        detail::crossover_values(p1.train_semantics, p2.train_semantics, eval_tree_rows(mask, a.train_inputs())));
    child.test_semantics = SemanticVector(
        detail::crossover_values(p1.test_semantics, p2.test_semantics, eval_tree_rows(mask, a.test_inputs())));
    child.origin = Crossover{first, second, mask};
    detail::fill_fitness(a, child);
    return child;
}

/// Reproduction record: semantics copied from `parent`.
[[nodiscard]] inline Individual make_copy(const Archive& a, IndividualRef parent) {
    const Individual& p = a.at(parent);
    Individual child;
    child.origin = Copy{parent};
    child.train_semantics = p.train_semantics;
    child.test_semantics = p.test_semantics;
    child.train_fitness = p.train_fitness;
    child.test_fitness = p.test_fitness;
    return child;
}

/// Applies a mutation on top of an individual that is not yet stored (the
/// result of a crossover or a copy made for the generation being built).
[[nodiscard]] inline Individual apply_mutation(const Archive& a, Individual base, Mutation m) {
    detail::require(!base.mutation, "apply_mutation: individual is already mutated");
    detail::require(!std::holds_alternative<Leaf>(base.origin), "apply_mutation: generation-0 leaves are not mutated in place");
    detail::require(m.step >= 0.0, "apply_mutation: negative step");
    detail::require(m.tree_a.required_features() <= a.n_features() &&
                        (!m.tree_b || m.tree_b->required_features() <= a.n_features()),
                    "apply_mutation: random tree uses a feature beyond the dataset");
    base.train_semantics = SemanticVector(detail::mutation_values(base.train_semantics, m, a.train_inputs()));
    base.test_semantics = SemanticVector(detail::mutation_values(base.test_semantics, m, a.test_inputs()));
    base.mutation = std::move(m);
    detail::fill_fitness(a, base);
    return base;
}

/// Bounded two-tree mutation of a stored individual.
[[nodiscard]] inline Individual apply_mutation(const Archive& a, IndividualRef parent, const ExprTree& r1,
                                               const ExprTree& r2, double step) {
    return apply_mutation(a, make_copy(a, parent), Mutation{r1, r2, step});
}

// ---------------------------------------------------------------------------
// Oracle evaluation by full expansion

struct NaiveEvalLimits {
    /// Maximum number of individual records visited during one expansion.
    std::size_t max_visits = std::size_t{1} << 20;
};

namespace detail {

inline double naive_origin(const Archive& a, const Origin& origin, std::span<const double> x, std::size_t& budget);

inline double naive_at(const Archive& a, IndividualRef ref, std::span<const double> x, std::size_t& budget) {
    if (budget == 0) {
        throw ContractError("naive_eval: expansion budget exceeded; archive too large for the oracle");
    }
    --budget;
    const Individual& ind = a.at(ref);
    double v = naive_origin(a, ind.origin, x, budget);
    if (ind.mutation) {
        const Mutation& m = *ind.mutation;
        if (m.tree_b) {
            v = v + m.step * (sigmoid(eval_tree(m.tree_a, x)) - sigmoid(eval_tree(*m.tree_b, x)));
        } else {
            v = v + m.step * eval_tree(m.tree_a, x);
        }
    }
    return v;
}

inline double naive_origin(const Archive& a, const Origin& origin, std::span<const double> x, std::size_t& budget) {
    if (const auto* leaf = std::get_if<Leaf>(&origin)) {
        return eval_tree(leaf->tree, x);
    }
    if (const auto* copy = std::get_if<Copy>(&origin)) {
        return naive_at(a, copy->parent, x, budget);
    }
    const auto& cx = std::get<Crossover>(origin);
    const double s = sigmoid(eval_tree(cx.mask, x));
    return s * naive_at(a, cx.first, x, budget) + (1.0 - s) * naive_at(a, cx.second, x, budget);
}

} // namespace detail

/// Output of `ref` at input `x`, computed by recursively expanding the
/// operator formulas down to generation-0 trees. Ignores stored semantics.
/// Exponential in the number of generations; throws ContractError once
/// `limits.max_visits` records have been expanded.
[[nodiscard]] inline double naive_eval(const Archive& a, IndividualRef ref, std::span<const double> x,
                                       NaiveEvalLimits limits = {}) {
    std::size_t budget = limits.max_visits;
    return detail::naive_at(a, ref, x, budget);
}

// ---------------------------------------------------------------------------
// Storage accounting

struct StorageStats {
    std::size_t records = 0;        ///< individuals stored
    std::size_t tree_nodes = 0;     ///< syntax-tree nodes held by those records
    std::size_t semantic_values = 0; ///< doubles of memoized train+test semantics
    std::size_t bytes = 0;          ///< approximate heap + inline footprint

    [[nodiscard]] std::size_t nodes() const noexcept { return records + tree_nodes; }
};

[[nodiscard]] inline StorageStats storage_stats(const Archive& a) {
    StorageStats s;
    for (std::size_t g = 0; g < a.generation_count(); ++g) {
        for (const auto& ind : a.generation(g)) {
            ++s.records;
            if (const auto* leaf = std::get_if<Leaf>(&ind.origin)) {
                s.tree_nodes += leaf->tree.size();
            } else if (const auto* cx = std::get_if<Crossover>(&ind.origin)) {
                s.tree_nodes += cx->mask.size();
            }
            if (ind.mutation) {
                s.tree_nodes += ind.mutation->tree_a.size();
                if (ind.mutation->tree_b) s.tree_nodes += ind.mutation->tree_b->size();
            }
            s.semantic_values += ind.train_semantics.size() + ind.test_semantics.size();
        }
    }
    s.bytes = s.records * sizeof(Individual) + s.tree_nodes * sizeof(Node) + s.semantic_values * sizeof(double);
    return s;
}

/// Individual records plus the random-tree nodes they store.
[[nodiscard]] inline std::size_t count_nodes(const Archive& a) { return storage_stats(a).nodes(); }

[[nodiscard]] inline std::size_t count_records(const Archive& a) { return storage_stats(a).records; }

} // namespace gsgp
