#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gsgp/error.hpp"
#include "gsgp/exprtree.hpp"
#include "gsgp/matrix.hpp"

namespace gsgp {

/// Outputs of a program on a fixed, ordered set of input rows. Entries are
/// always finite.
class SemanticVector {
  public:
    SemanticVector() = default;

    explicit SemanticVector(std::vector<double> values) : values_(std::move(values)) {
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                throw NonFiniteError("non-finite semantic value", i);
            }
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] bool empty() const noexcept { return values_.empty(); }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] auto begin() const noexcept { return values_.begin(); }
    [[nodiscard]] auto end() const noexcept { return values_.end(); }

    friend bool operator==(const SemanticVector&, const SemanticVector&) = default;

  private:
    std::vector<double> values_;
};

[[nodiscard]] inline double sigmoid(double v) noexcept { return 1.0 / (1.0 + std::exp(-v)); }

[[nodiscard]] inline double rmse(std::span<const double> pred, std::span<const double> target) {
    detail::require(pred.size() == target.size(), "rmse: length mismatch");
    detail::require(!pred.empty(), "rmse: empty vectors");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(pred.size()));
}

[[nodiscard]] inline double rmse(const SemanticVector& pred, const SemanticVector& target) {
    return rmse(pred.values(), target.values());
}

/// Entry i is eval_tree(t, inputs.row(i)). Throws NonFiniteError naming the
/// first offending row.
[[nodiscard]] inline SemanticVector semantics_of_tree(const ExprTree& t, const Matrix& inputs) {
    return SemanticVector(eval_tree_rows(t, inputs));
}

} // namespace gsgp
