#pragma once

/// @file data.hpp
/// Dataset loading, 70/30 splitting and synthetic benchmark generators.
///
/// CSV format: comma separated, optional single header line, last column is
/// the regression target. Files without any comma are split on whitespace so
/// UCI `.dat` files (tab separated) load unchanged.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gsgp/error.hpp"
#include "gsgp/matrix.hpp"

namespace gsgp {

struct Dataset {
    std::string name;
    Matrix inputs;
    std::vector<double> targets;

    [[nodiscard]] std::size_t rows() const noexcept { return targets.size(); }
    [[nodiscard]] std::size_t n_features() const noexcept { return inputs.cols(); }

    void validate() const {
        detail::require(rows() >= 2, "Dataset: at least two rows required");
        detail::require(n_features() >= 1, "Dataset: at least one feature required");
        detail::require(inputs.rows() == targets.size(), "Dataset: inputs/targets row mismatch");
        for (double v : inputs.data()) {
            detail::require(std::isfinite(v), "Dataset: non-finite input value");
        }
        for (double v : targets) {
            detail::require(std::isfinite(v), "Dataset: non-finite target value");
        }
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct SplitDataset {
    Dataset train;
    Dataset test;
    std::uint64_t split_seed = 0;
    std::vector<std::size_t> train_rows; // indices into the source dataset
    std::vector<std::size_t> test_rows;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line, bool comma) {
    std::vector<std::string_view> out;
    if (comma) {
        std::size_t start = 0;
        while (true) {
            const auto pos = line.find(',', start);
            out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
    } else {
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
            if (i >= line.size()) break;
            const std::size_t start = i;
            while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

} // namespace detail

/// Loads a numeric table whose last column is the target. Data rows in error
/// messages are 1-based and exclude the header.
[[nodiscard]] inline Dataset load_csv(const std::filesystem::path& path, bool has_header) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("load_csv: cannot open " + path.string());
    }
    std::vector<double> values;
    std::vector<double> targets;
    std::size_t cols = 0;
    std::size_t row = 0;
    std::size_t line_no = 0;
    bool header_pending = has_header;
    int comma = -1; // unknown until the first data line
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const auto content = detail::trim(line);
        if (content.empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        ++row;
        if (comma < 0) comma = content.find(',') != std::string_view::npos ? 1 : 0;
        const auto fields = detail::split_fields(content, comma == 1);
        if (cols == 0) {
            if (fields.size() < 2) {
                throw ParseError("load_csv: " + path.string() + ": row " + std::to_string(row) +
                                 " needs at least two columns");
            }
            cols = fields.size();
        } else if (fields.size() != cols) {
            throw ParseError("load_csv: " + path.string() + ": ragged row " + std::to_string(row) + " (line " +
                             std::to_string(line_no) + "): expected " + std::to_string(cols) + " columns, got " +
                             std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const auto f = fields[c];
            double v = 0.0;
            const auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc{} || end != f.data() + f.size() || !std::isfinite(v)) {
                throw ParseError("load_csv: " + path.string() + ": non-numeric cell \"" + std::string(f) + "\" at row " +
                                 std::to_string(row) + ", column " + std::to_string(c + 1) + " (line " +
                                 std::to_string(line_no) + ")");
            }
            if (c + 1 == fields.size()) {
                targets.push_back(v);
            } else {
                values.push_back(v);
            }
        }
    }
    if (row == 0) {
        throw ParseError("load_csv: " + path.string() + ": no data rows");
    }
    Dataset d;
    d.name = path.stem().string();
    d.inputs = Matrix(row, cols - 1, std::move(values));
    d.targets = std::move(targets);
    return d;
}

/// Writes `d` as CSV (header x0..xN-1,y). Values use shortest round-trip form,
/// so load_csv(write_csv(d)) reproduces every value bit-for-bit.
inline void write_csv(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError("write_csv: cannot open " + path.string());
    }
    for (std::size_t c = 0; c < d.n_features(); ++c) {
        out << 'x' << c << ',';
    }
    out << "y\n";
    char buf[32];
    auto put = [&](double v) {
        const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        out.write(buf, end - buf);
    };
    for (std::size_t r = 0; r < d.rows(); ++r) {
        for (double v : d.inputs.row(r)) {
            put(v);
            out << ',';
        }
        put(d.targets[r]);
        out << '\n';
    }
}

/// Selects rows of `d` into a new dataset, in the given order.
[[nodiscard]] inline Dataset subset(const Dataset& d, std::span<const std::size_t> rows, std::string name) {
    Dataset out;
    out.name = std::move(name);
    out.inputs = Matrix(rows.size(), d.n_features());
    out.targets.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = d.inputs.row(rows[i]);
        std::copy(src.begin(), src.end(), out.inputs.row(i).begin());
        out.targets.push_back(d.targets[rows[i]]);
    }
    return out;
}

/// Train size is round-half-up of 0.7 * rows.
[[nodiscard]] constexpr std::size_t train_size_70(std::size_t rows) noexcept { return (7 * rows + 5) / 10; }

[[nodiscard]] inline SplitDataset split_70_30(const Dataset& d, std::uint64_t seed) {
    detail::require(d.rows() >= 2, "split_70_30: at least two rows required");
    std::vector<std::size_t> perm(d.rows());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::size_t n_train = train_size_70(d.rows());
    SplitDataset s;
    s.split_seed = seed;
    s.train_rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test_rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    s.train = subset(d, s.train_rows, d.name + ".train");
    s.test = subset(d, s.test_rows, d.name + ".test");
    return s;
}

enum class SyntheticKind { FriedmanLike, Polynomial };

/// Deterministic test fixtures.
///  - Polynomial: x ~ U[-1,1], y = x0^2 + x1 (y = x0^2 with one feature).
///  - FriedmanLike: x ~ U[0,1], y = 10 sin(pi x0 x1) + 20 (x2 - 0.5)^2 + 10 x3 + 5 x4,
///    using only the terms whose features exist.
/// Gaussian noise with standard deviation `noise` is added to y.
[[nodiscard]] inline Dataset synthetic_dataset(SyntheticKind kind, std::size_t rows, std::size_t n_features, double noise,
                                               std::uint64_t seed) {
    detail::require(rows >= 2, "synthetic_dataset: at least two rows required");
    detail::require(n_features >= 1, "synthetic_dataset: at least one feature required");
    std::mt19937_64 rng(seed);
    const bool poly = kind == SyntheticKind::Polynomial;
    std::uniform_real_distribution<double> u(poly ? -1.0 : 0.0, 1.0);
    std::normal_distribution<double> eps(0.0, 1.0);
    Dataset d;
    d.name = poly ? "polynomial" : "friedman";
    d.inputs = Matrix(rows, n_features);
    d.targets.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        auto x = d.inputs.row(r);
        for (auto& v : x) v = u(rng);
        double y = 0.0;
        if (poly) {
            y = x[0] * x[0] + (n_features > 1 ? x[1] : 0.0);
        } else {
            if (n_features > 1) y += 10.0 * std::sin(std::numbers::pi * x[0] * x[1]);
            else y += 10.0 * std::sin(std::numbers::pi * x[0]);
            if (n_features > 2) y += 20.0 * (x[2] - 0.5) * (x[2] - 0.5);
            if (n_features > 3) y += 10.0 * x[3];
            if (n_features > 4) y += 5.0 * x[4];
        }
        if (noise > 0.0) y += noise * eps(rng);
        d.targets[r] = y;
    }
    return d;
}

} // namespace gsgp
