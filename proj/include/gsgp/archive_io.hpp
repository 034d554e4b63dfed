#pragma once

/// @file archive_io.hpp
/// JSON form of an Archive. Only the structure is written (payloads, parent
/// references, random trees as s-expressions); semantics and fitness are
/// recomputed against a dataset split on load.
///
///   {
///     "format": "gsgp-archive", "schema_version": 1,
///     "n_features": 5, "population_size": 100,
///     "generations": [
///       [ {"origin": "leaf", "tree": "(+ x0 0.5)"}, ... ],
///       [ {"origin": "copy", "parent": [0, 3]},
///         {"origin": "crossover", "first": [0, 1], "second": [0, 7], "mask": "(* x1 x2)",
///          "mutation": {"step": 0.1, "tree_a": "x0", "tree_b": "(- x1 0.3)"}}, ... ]
///     ]
///   }

#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsgp/archive.hpp"
#include "gsgp/error.hpp"

namespace gsgp {

inline constexpr int kArchiveSchemaVersion = 1;

namespace detail {

inline nlohmann::json ref_json(IndividualRef r) { return nlohmann::json::array({r.generation, r.index}); }

inline IndividualRef ref_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw ParseError("archive json: reference must be [generation, index]");
    return IndividualRef{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

} // namespace detail

[[nodiscard]] inline nlohmann::json archive_to_json(const Archive& a) {
    nlohmann::json gens = nlohmann::json::array();
    for (std::size_t g = 0; g < a.generation_count(); ++g) {
        nlohmann::json gen = nlohmann::json::array();
        for (const auto& ind : a.generation(g)) {
            nlohmann::json rec;
            if (const auto* leaf = std::get_if<Leaf>(&ind.origin)) {
                rec["origin"] = "leaf";
                rec["tree"] = to_string(leaf->tree);
            } else if (const auto* copy = std::get_if<Copy>(&ind.origin)) {
                rec["origin"] = "copy";
                rec["parent"] = detail::ref_json(copy->parent);
            } else {
                const auto& cx = std::get<Crossover>(ind.origin);
                rec["origin"] = "crossover";
                rec["first"] = detail::ref_json(cx.first);
                rec["second"] = detail::ref_json(cx.second);
                rec["mask"] = to_string(cx.mask);
            }
            if (ind.mutation) {
                nlohmann::json m;
                m["step"] = ind.mutation->step;
                m["tree_a"] = to_string(ind.mutation->tree_a);
                if (ind.mutation->tree_b) m["tree_b"] = to_string(*ind.mutation->tree_b);
                rec["mutation"] = std::move(m);
            }
            gen.push_back(std::move(rec));
        }
        gens.push_back(std::move(gen));
    }
    return nlohmann::json{{"format", "gsgp-archive"},
                          {"schema_version", kArchiveSchemaVersion},
                          {"n_features", a.n_features()},
                          {"population_size", a.population_size()},
                          {"generations", std::move(gens)}};
}

/// Rebuilds an archive from its JSON form, recomputing all semantics on `split`.
[[nodiscard]] inline Archive archive_from_json(const nlohmann::json& j, const SplitDataset& split) {
    try {
        if (j.value("format", std::string{}) != "gsgp-archive") throw ParseError("archive json: not a gsgp-archive document");
        if (j.at("schema_version").get<int>() != kArchiveSchemaVersion) throw ParseError("archive json: unsupported schema_version");
        const auto& gens = j.at("generations");
        if (!gens.is_array() || gens.empty()) throw ParseError("archive json: no generations");

        std::vector<ExprTree> leaves;
        for (const auto& rec : gens[0]) {
            if (rec.at("origin").get<std::string>() != "leaf") throw ParseError("archive json: generation 0 must be leaves");
            leaves.push_back(parse_tree(rec.at("tree").get<std::string>()));
        }
        Archive a = seed_archive(std::move(leaves), split);
        for (std::size_t g = 1; g < gens.size(); ++g) {
            std::vector<Individual> gen;
            for (const auto& rec : gens[g]) {
                const auto origin = rec.at("origin").get<std::string>();
                Individual ind;
                if (origin == "copy") {
                    ind = make_copy(a, detail::ref_from_json(rec.at("parent")));
                } else if (origin == "crossover") {
                    ind = apply_crossover(a, detail::ref_from_json(rec.at("first")), detail::ref_from_json(rec.at("second")),
                                          parse_tree(rec.at("mask").get<std::string>()));
                } else {
                    throw ParseError("archive json: unexpected origin \"" + origin + "\" after generation 0");
                }
                if (rec.contains("mutation")) {
                    const auto& m = rec.at("mutation");
                    Mutation mut{parse_tree(m.at("tree_a").get<std::string>()), std::nullopt, m.at("step").get<double>()};
                    if (m.contains("tree_b")) mut.tree_b = parse_tree(m.at("tree_b").get<std::string>());
                    ind = apply_mutation(a, std::move(ind), std::move(mut));
                }
                gen.push_back(std::move(ind));
            }
            a.append_generation(std::move(gen));
        }
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("archive json: ") + e.what());
    }
}

} // namespace gsgp
