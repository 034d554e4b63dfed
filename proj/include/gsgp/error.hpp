#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gsgp {

/// Raised when a caller breaks a documented precondition (bad index, size
/// mismatch, empty input, invalid reference).
class ContractError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// A program produced NaN or Inf on some input row.
class NonFiniteError : public std::runtime_error {
  public:
    NonFiniteError(const std::string& what, std::size_t row)
        : std::runtime_error(what + " (row " + std::to_string(row) + ")"), row_(row) {}

    [[nodiscard]] std::size_t row() const noexcept { return row_; }

  private:
    std::size_t row_;
};

/// Malformed input file or configuration string.
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool condition, const char* message) {
    if (!condition) {
        throw ContractError(message);
    }
}
} // namespace detail

} // namespace gsgp
