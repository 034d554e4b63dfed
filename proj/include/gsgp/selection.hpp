#pragma once

/// @file selection.hpp
/// Multi-generational tournament selection.
///
/// While building generation `current`, each tournament entrant first draws
/// a source generation in [0, current-1] from a SelectionDistribution, then a
/// uniform individual inside it. UniformLastK(1) is plain GSGP tournament
/// selection over the previous generation.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "gsgp/archive.hpp"
#include "gsgp/error.hpp"

namespace gsgp {

/// Uniform over the last k generations (all of them when fewer exist).
struct UniformLastK {
    std::size_t k = 1;
    friend bool operator==(const UniformLastK&, const UniformLastK&) = default;
};

/// Offset o >= 0 behind the previous generation with probability p (1-p)^o;
/// offsets beyond the history land on generation 0.
struct Geometric {
    double p = 0.5;
    friend bool operator==(const Geometric&, const Geometric&) = default;
};

using SelectionDistribution = std::variant<UniformLastK, Geometric>;

inline void validate(const SelectionDistribution& d) {
    if (const auto* u = std::get_if<UniformLastK>(&d)) {
        detail::require(u->k >= 1, "UniformLastK: k must be positive");
    } else {
        const double p = std::get<Geometric>(d).p;
        detail::require(p > 0.0 && p < 1.0, "Geometric: p must lie in (0,1)");
    }
}

/// "u:<k>" or "g:<p>".
[[nodiscard]] inline std::string to_string(const SelectionDistribution& d) {
    if (const auto* u = std::get_if<UniformLastK>(&d)) {
        return "u:" + std::to_string(u->k);
    }
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), std::get<Geometric>(d).p);
    return "g:" + std::string(buf, end);
}

[[nodiscard]] inline SelectionDistribution parse_distribution(std::string_view text) {
    auto fail = [&] {
        throw ParseError("invalid selection distribution \"" + std::string(text) + "\" (expected u:<k> or g:<p>)");
    };
    if (text.size() < 3 || text[1] != ':') fail();
    const auto arg = text.substr(2);
    const char* first = arg.data();
    const char* last = arg.data() + arg.size();
    SelectionDistribution d;
    if (text[0] == 'u') {
        std::size_t k = 0;
        auto [p, ec] = std::from_chars(first, last, k);
        if (ec != std::errc{} || p != last || k == 0) fail();
        d = UniformLastK{k};
    } else if (text[0] == 'g') {
        double prob = 0.0;
        auto [p, ec] = std::from_chars(first, last, prob);
        if (ec != std::errc{} || p != last || !(prob > 0.0 && prob < 1.0)) fail();
        d = Geometric{prob};
    } else {
        fail();
    }
    return d;
}

/// Unclamped geometric offset: P(o) = p (1-p)^o, o = 0, 1, 2, ...
[[nodiscard]] inline std::size_t sample_geometric_offset(double p, Rng& rng) {
    std::geometric_distribution<std::size_t> offset(p);
    return offset(rng);
}

/// Generation to draw one tournament entrant from, when building generation
/// `current` (>= 1). Always in [0, current-1].
[[nodiscard]] inline std::size_t sample_source_generation(const SelectionDistribution& d, std::size_t current, Rng& rng) {
    detail::require(current >= 1, "sample_source_generation: nothing to select from before generation 1");
    if (const auto* u = std::get_if<UniformLastK>(&d)) {
        const std::size_t hi = current - 1;
        const std::size_t lo = current > u->k ? current - u->k : 0;
        if (lo == hi) {
            return hi; // no draw, so k = 1 consumes exactly the randomness of standard selection
        }
        std::uniform_int_distribution<std::size_t> gen(lo, hi);
        return gen(rng);
    }
    const std::size_t offset = sample_geometric_offset(std::get<Geometric>(d).p, rng);
    return offset >= current ? 0 : current - 1 - offset;
}

/// Entrant with the lowest training RMSE; ties go to the earliest entrant.
[[nodiscard]] inline IndividualRef best_of(const Archive& a, std::span<const IndividualRef> entrants) {
    detail::require(!entrants.empty(), "best_of: no entrants");
    IndividualRef best = entrants.front();
    double best_fitness = a.at(best).train_fitness;
    for (auto ref : entrants.subspan(1)) {
        const double f = a.at(ref).train_fitness;
        if (f < best_fitness) {
            best = ref;
            best_fitness = f;
        }
    }
    return best;
}

/// Tournament of `size` entrants drawn with replacement from the archive
/// while building generation a.generation_count().
[[nodiscard]] inline IndividualRef tournament_select(const Archive& a, const SelectionDistribution& d, std::size_t size,
                                                     Rng& rng) {
    detail::require(!a.empty(), "tournament_select: empty archive");
    detail::require(size >= 1, "tournament_select: tournament size must be positive");
    const std::size_t current = a.generation_count();
    IndividualRef best{};
    double best_fitness = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
        const std::size_t g = sample_source_generation(d, current, rng);
        std::uniform_int_distribution<std::size_t> pick(0, a.generation(g).size() - 1);
        const IndividualRef ref{g, pick(rng)};
        const double f = a.at(ref).train_fitness;
        if (i == 0 || f < best_fitness) {
            best = ref;
            best_fitness = f;
        }
    }
    return best;
}

/// Callable form used by the generational loop.
class TournamentSelector {
  public:
    TournamentSelector(SelectionDistribution d, std::size_t size) : distribution_(d), size_(size) {
        validate(distribution_);
        detail::require(size_ >= 1, "TournamentSelector: tournament size must be positive");
    }

    IndividualRef operator()(const Archive& a, Rng& rng) const { return tournament_select(a, distribution_, size_, rng); }

    [[nodiscard]] const SelectionDistribution& distribution() const noexcept { return distribution_; }
    [[nodiscard]] std::size_t size() const noexcept { return size_; }

  private:
    SelectionDistribution distribution_;
    std::size_t size_;
};

} // namespace gsgp
