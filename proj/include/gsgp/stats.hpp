#pragma once

/// @file stats.hpp
/// Median and the two-sided Wilcoxon rank-sum (Mann-Whitney U) test used to
/// compare final test errors of two strategies.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "gsgp/error.hpp"

namespace gsgp {

/// Mean of the two central order statistics for even lengths.
[[nodiscard]] inline double median(std::span<const double> values) {
    detail::require(!values.empty(), "median: empty input");
    std::vector<double> v(values.begin(), values.end());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

enum class RankSumMethod { Exact, NormalApprox };

struct RankSumResult {
    /// U for the first sample: its rank sum minus n1 (n1 + 1) / 2.
    double u_statistic = 0.0;
    /// Two-sided.
    double p_value = 1.0;
    RankSumMethod method = RankSumMethod::Exact;
    /// Every value in both samples is identical; p is 1 by convention.
    bool degenerate = false;
};

/// Midranks (1-based) of `values`, with sum of (t^3 - t) over tie groups.
struct Ranking {
    std::vector<double> ranks;
    double tie_term = 0.0;
    bool has_ties = false;
};

[[nodiscard]] inline Ranking midranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    Ranking r;
    r.ranks.resize(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + 1 + j); // mean of positions i+1..j
        for (std::size_t k = i; k < j; ++k) r.ranks[order[k]] = rank;
        const double t = static_cast<double>(j - i);
        if (j - i > 1) {
            r.has_ties = true;
            r.tie_term += t * t * t - t;
        }
        i = j;
    }
    return r;
}

/// Number of ways to pick `k` of the ranks 1..n with each possible U value,
/// where U = rank sum - k (k + 1) / 2. Index = U, length k (n - k) + 1.
[[nodiscard]] inline std::vector<double> exact_u_counts(std::size_t k, std::size_t n) {
    detail::require(k <= n, "exact_u_counts: k exceeds n");
    const std::size_t max_u = k * (n - k);
    // ways[j][u]: subsets of size j of the ranks seen so far; U offset by the
    // minimum rank sum of a size-j subset, which shifts by j when a rank is skipped.
    std::vector<std::vector<double>> ways(k + 1, std::vector<double>(max_u + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t item = 1; item <= n; ++item) {
        const std::size_t jmax = std::min(k, item);
        for (std::size_t j = jmax; j >= 1; --j) {
            // Taking `item` as the j-th smallest chosen rank adds item - j to U.
            const std::size_t add = item - j;
            if (add > max_u) continue;
            for (std::size_t u = max_u; u + 1 > add; --u) {
                ways[j][u] += ways[j - 1][u - add];
                if (u == 0) break;
            }
        }
    }
    return ways[k];
}

[[nodiscard]] inline double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// Uses the exact null distribution when the smaller sample has at most 10
/// values and there are no ties; otherwise the normal approximation with
/// tie and continuity corrections.
[[nodiscard]] inline RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b) {
    detail::require(!a.empty() && !b.empty(), "rank_sum_test: both samples must be non-empty");
    const std::size_t n1 = a.size();
    const std::size_t n2 = b.size();
    const std::size_t n = n1 + n2;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const Ranking ranking = midranks(pooled);

    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < n1; ++i) rank_sum_a += ranking.ranks[i];
    RankSumResult r;
    const double dn1 = static_cast<double>(n1);
    const double dn2 = static_cast<double>(n2);
    r.u_statistic = rank_sum_a - dn1 * (dn1 + 1.0) / 2.0;

    const bool all_equal = std::all_of(pooled.begin(), pooled.end(), [&](double v) { return v == pooled.front(); });
    if (all_equal) {
        r.degenerate = true;
        r.p_value = 1.0;
        r.method = RankSumMethod::NormalApprox;
        return r;
    }

    if (std::min(n1, n2) <= 10 && !ranking.has_ties) {
        r.method = RankSumMethod::Exact;
        // Distribution of U for a sample of size k; U_a and U for the smaller
        // sample have the same two-sided tail structure by symmetry.
        const std::size_t k = std::min(n1, n2);
        const auto counts = exact_u_counts(k, n);
        const double u_small = n1 <= n2 ? r.u_statistic : dn1 * dn2 - r.u_statistic;
        const auto u = static_cast<std::size_t>(std::llround(u_small));
        const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        double lower = 0.0;
        for (std::size_t i = 0; i <= u; ++i) lower += counts[i];
        double upper = 0.0;
        for (std::size_t i = u; i < counts.size(); ++i) upper += counts[i];
        r.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / total);
        return r;
    }

    r.method = RankSumMethod::NormalApprox;
    const double dn = static_cast<double>(n);
    const double mean = dn1 * dn2 / 2.0;
    const double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - ranking.tie_term / (dn * (dn - 1.0)));
    const double z = (std::abs(r.u_statistic - mean) - 0.5) / std::sqrt(var);
    r.p_value = z <= 0.0 ? 1.0 : std::min(1.0, 2.0 * normal_upper_tail(z));
    return r;
}

} // namespace gsgp
