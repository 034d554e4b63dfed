#pragma once

/// @file exprtree.hpp
/// Plain syntax trees over {+, -, *, protected /}, used for the initial
/// population and for the random trees consumed by the semantic operators.
///
/// Trees are stored as a flat prefix-ordered node array. They are immutable
/// once built and cheap to share by value.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gsgp/error.hpp"
#include "gsgp/matrix.hpp"

namespace gsgp {

using Rng = std::mt19937_64;

enum class Op : std::uint8_t { Constant, Variable, Add, Sub, Mul, Div };

[[nodiscard]] constexpr bool is_terminal(Op op) noexcept { return op == Op::Constant || op == Op::Variable; }

/// Denominators with magnitude at or below this make protected division return 1.
inline constexpr double kProtectedDivThreshold = 1e-9;

[[nodiscard]] inline double protected_div(double a, double b) noexcept {
    return std::abs(b) <= kProtectedDivThreshold ? 1.0 : a / b;
}

struct Node {
    Op op = Op::Constant;
    std::uint32_t feature = 0;
    double value = 0.0;

    friend bool operator==(const Node&, const Node&) = default;
};

class ExprTree {
  public:
    ExprTree() : nodes_{Node{}} {}

    [[nodiscard]] static ExprTree constant(double v) {
        ExprTree t;
        t.nodes_ = {Node{Op::Constant, 0, v}};
        return t;
    }

    [[nodiscard]] static ExprTree variable(std::uint32_t index) {
        ExprTree t;
        t.nodes_ = {Node{Op::Variable, index, 0.0}};
        return t;
    }

    [[nodiscard]] static ExprTree binary(Op op, const ExprTree& left, const ExprTree& right) {
        detail::require(!is_terminal(op), "ExprTree::binary: operator expected");
        ExprTree t;
        t.nodes_.clear();
        t.nodes_.reserve(1 + left.size() + right.size());
        t.nodes_.push_back(Node{op, 0, 0.0});
        t.nodes_.insert(t.nodes_.end(), left.nodes_.begin(), left.nodes_.end());
        t.nodes_.insert(t.nodes_.end(), right.nodes_.begin(), right.nodes_.end());
        return t;
    }

    /// Builds from a prefix node sequence; throws ContractError if it is not a single well-formed tree.
    [[nodiscard]] static ExprTree from_prefix(std::vector<Node> nodes) {
        std::size_t pending = 1;
        for (const auto& n : nodes) {
            detail::require(pending > 0, "ExprTree: trailing nodes after complete tree");
            pending = is_terminal(n.op) ? pending - 1 : pending + 1;
        }
        detail::require(!nodes.empty() && pending == 0, "ExprTree: incomplete prefix sequence");
        ExprTree t;
        t.nodes_ = std::move(nodes);
        return t;
    }

    [[nodiscard]] std::span<const Node> nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

    /// A lone leaf has depth 0.
    [[nodiscard]] std::size_t depth() const {
        std::size_t pos = 0;
        return depth_at(pos);
    }

    /// Largest variable index + 1, or 0 when the tree has no variables.
    [[nodiscard]] std::size_t required_features() const noexcept {
        std::size_t n = 0;
        for (const auto& node : nodes_) {
            if (node.op == Op::Variable) {
                n = std::max<std::size_t>(n, node.feature + 1);
            }
        }
        return n;
    }

    /// Depth of every leaf, in left-to-right order.
    [[nodiscard]] std::vector<std::size_t> leaf_depths() const {
        std::vector<std::size_t> out;
        std::vector<std::size_t> open; // remaining child slots per open operator
        for (const auto& node : nodes_) {
            const std::size_t d = open.size();
            if (is_terminal(node.op)) {
                out.push_back(d);
                while (!open.empty() && --open.back() == 0) {
                    open.pop_back();
                }
            } else {
                open.push_back(2);
            }
        }
        return out;
    }

    friend bool operator==(const ExprTree&, const ExprTree&) = default;

  private:
    [[nodiscard]] std::size_t depth_at(std::size_t& pos) const {
        const Node& n = nodes_[pos++];
        if (is_terminal(n.op)) {
            return 0;
        }
        const std::size_t l = depth_at(pos);
        const std::size_t r = depth_at(pos);
        return 1 + std::max(l, r);
    }

    std::vector<Node> nodes_;
};

namespace detail {

inline double eval_at(std::span<const Node> nodes, std::size_t& pos, std::span<const double> x) {
    const Node& n = nodes[pos++];
    switch (n.op) {
    case Op::Constant:
        return n.value;
    case Op::Variable:
        return x[n.feature];
    default:
        break;
    }
    const double a = eval_at(nodes, pos, x);
    const double b = eval_at(nodes, pos, x);
    switch (n.op) {
    case Op::Add:
        return a + b;
    case Op::Sub:
        return a - b;
    case Op::Mul:
        return a * b;
    default:
        return protected_div(a, b);
    }
}

// Column-wise evaluation over all rows of `inputs`; writes into `out`.
inline void eval_rows_at(std::span<const Node> nodes, std::size_t& pos, const Matrix& inputs, std::vector<double>& out) {
    const Node& n = nodes[pos++];
    const std::size_t m = inputs.rows();
    out.resize(m);
    if (n.op == Op::Constant) {
        std::fill(out.begin(), out.end(), n.value);
        return;
    }
    if (n.op == Op::Variable) {
        for (std::size_t i = 0; i < m; ++i) {
            out[i] = inputs(i, n.feature);
        }
        return;
    }
    std::vector<double> rhs;
    eval_rows_at(nodes, pos, inputs, out);
    eval_rows_at(nodes, pos, inputs, rhs);
    switch (n.op) {
    case Op::Add:
        for (std::size_t i = 0; i < m; ++i) out[i] += rhs[i];
        break;
    case Op::Sub:
        for (std::size_t i = 0; i < m; ++i) out[i] -= rhs[i];
        break;
    case Op::Mul:
        for (std::size_t i = 0; i < m; ++i) out[i] *= rhs[i];
        break;
    default:
        for (std::size_t i = 0; i < m; ++i) out[i] = protected_div(out[i], rhs[i]);
        break;
    }
}

} // namespace detail

/// Evaluates `t` at a single input point.
[[nodiscard]] inline double eval_tree(const ExprTree& t, std::span<const double> x) {
    if (t.required_features() > x.size()) {
        throw ContractError("eval_tree: variable index " + std::to_string(t.required_features() - 1) +
                            " out of range for input of length " + std::to_string(x.size()));
    }
    std::size_t pos = 0;
    return detail::eval_at(t.nodes(), pos, x);
}

/// Evaluates `t` on every row of `inputs`.
[[nodiscard]] inline std::vector<double> eval_tree_rows(const ExprTree& t, const Matrix& inputs) {
    if (t.required_features() > inputs.cols()) {
        throw ContractError("eval_tree: variable index " + std::to_string(t.required_features() - 1) +
                            " out of range for " + std::to_string(inputs.cols()) + " features");
    }
    std::vector<double> out;
    std::size_t pos = 0;
    detail::eval_rows_at(t.nodes(), pos, inputs, out);
    return out;
}

// ---------------------------------------------------------------------------
// Text form: prefix s-expressions, e.g. "(+ x0 (* x1 0.25))".
// Constants are written in shortest round-trip form so parsing is exact.

namespace detail {

inline void append_double(std::string& s, double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    s.append(buf, end);
}

inline void to_string_at(std::span<const Node> nodes, std::size_t& pos, std::string& s) {
    const Node& n = nodes[pos++];
    switch (n.op) {
    case Op::Constant:
        append_double(s, n.value);
        return;
    case Op::Variable:
        s += 'x';
        s += std::to_string(n.feature);
        return;
    case Op::Add:
        s += "(+ ";
        break;
    case Op::Sub:
        s += "(- ";
        break;
    case Op::Mul:
        s += "(* ";
        break;
    case Op::Div:
        s += "(/ ";
        break;
    }
    to_string_at(nodes, pos, s);
    s += ' ';
    to_string_at(nodes, pos, s);
    s += ')';
}

} // namespace detail

[[nodiscard]] inline std::string to_string(const ExprTree& t) {
    std::string s;
    std::size_t pos = 0;
    detail::to_string_at(t.nodes(), pos, s);
    return s;
}

[[nodiscard]] inline ExprTree parse_tree(std::string_view text) {
    std::vector<Node> nodes;
    std::size_t i = 0;
    auto skip_ws = [&] {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n')) ++i;
    };
    auto fail = [&](const char* why) {
        throw ParseError(std::string("parse_tree: ") + why + " at offset " + std::to_string(i) + " in \"" +
                         std::string(text) + "\"");
    };
    int open = 0;
    while (true) {
        skip_ws();
        if (i >= text.size()) break;
        const char c = text[i];
        if (c == '(') {
            ++i;
            ++open;
            skip_ws();
            if (i >= text.size()) fail("missing operator");
            Op op{};
            switch (text[i]) {
            case '+': op = Op::Add; break;
            case '-': op = Op::Sub; break;
            case '*': op = Op::Mul; break;
            case '/': op = Op::Div; break;
            default: fail("unknown operator");
            }
            ++i;
            nodes.push_back(Node{op, 0, 0.0});
        } else if (c == ')') {
            if (--open < 0) fail("unbalanced ')'");
            ++i;
        } else if (c == 'x') {
            ++i;
            std::uint32_t idx = 0;
            auto [p, ec] = std::from_chars(text.data() + i, text.data() + text.size(), idx);
            if (ec != std::errc{}) fail("bad variable index");
            i = static_cast<std::size_t>(p - text.data());
            nodes.push_back(Node{Op::Variable, idx, 0.0});
        } else {
            double v = 0.0;
            auto [p, ec] = std::from_chars(text.data() + i, text.data() + text.size(), v);
            if (ec != std::errc{}) fail("bad constant");
            i = static_cast<std::size_t>(p - text.data());
            nodes.push_back(Node{Op::Constant, 0, v});
        }
    }
    if (open != 0) fail("unbalanced '('");
    try {
        return ExprTree::from_prefix(std::move(nodes));
    } catch (const ContractError& e) {
        throw ParseError(std::string("parse_tree: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Random generation

struct TreeGenConfig {
    std::size_t max_depth = 4;
    std::size_t n_features = 1;
    double constant_min = -1.0;
    double constant_max = 1.0;
    double p_constant = 0.3;

    void validate() const {
        detail::require(n_features >= 1, "TreeGenConfig: n_features must be positive");
        detail::require(p_constant >= 0.0 && p_constant <= 1.0, "TreeGenConfig: p_constant must be in [0,1]");
        detail::require(constant_min <= constant_max, "TreeGenConfig: empty constant range");
    }
};

enum class GenMethod { Grow, Full };

namespace detail {

inline constexpr std::size_t kFunctionCount = 4;

inline void gen_terminal(const TreeGenConfig& cfg, Rng& rng, std::vector<Node>& out) {
    std::bernoulli_distribution pick_constant(cfg.p_constant);
    if (pick_constant(rng)) {
        std::uniform_real_distribution<double> value(cfg.constant_min, cfg.constant_max);
        out.push_back(Node{Op::Constant, 0, value(rng)});
    } else {
        std::uniform_int_distribution<std::uint32_t> feature(0, static_cast<std::uint32_t>(cfg.n_features - 1));
        out.push_back(Node{Op::Variable, feature(rng), 0.0});
    }
}

inline void gen_at(const TreeGenConfig& cfg, GenMethod method, std::size_t depth, Rng& rng, std::vector<Node>& out) {
    bool terminal = depth >= cfg.max_depth;
    if (!terminal && method == GenMethod::Grow) {
        // Grow picks uniformly among functions and terminal symbols (variables + constant).
        const double terminals = static_cast<double>(cfg.n_features + 1);
        std::bernoulli_distribution pick_terminal(terminals / (terminals + kFunctionCount));
        terminal = pick_terminal(rng);
    }
    if (terminal) {
        gen_terminal(cfg, rng, out);
        return;
    }
    static constexpr Op kOps[kFunctionCount] = {Op::Add, Op::Sub, Op::Mul, Op::Div};
    std::uniform_int_distribution<std::size_t> op(0, kFunctionCount - 1);
    out.push_back(Node{kOps[op(rng)], 0, 0.0});
    gen_at(cfg, method, depth + 1, rng, out);
    gen_at(cfg, method, depth + 1, rng, out);
}

} // namespace detail

/// Full puts every leaf at exactly `cfg.max_depth`; Grow may stop earlier, including at the root.
[[nodiscard]] inline ExprTree gen_tree(const TreeGenConfig& cfg, GenMethod method, Rng& rng) {
    cfg.validate();
    std::vector<Node> nodes;
    detail::gen_at(cfg, method, 0, rng, nodes);
    return ExprTree::from_prefix(std::move(nodes));
}

/// Ramped half-and-half: even indices use Grow, odd use Full; within each
/// method, depths cycle over 2..max_depth. With max_depth < 2 every tree is
/// Grow at max_depth.
[[nodiscard]] inline std::vector<ExprTree> ramped_half_and_half(const TreeGenConfig& cfg, std::size_t count, Rng& rng) {
    detail::require(count >= 1, "ramped_half_and_half: count must be positive");
    cfg.validate();
    std::vector<ExprTree> trees;
    trees.reserve(count);
    if (cfg.max_depth < 2) {
        for (std::size_t i = 0; i < count; ++i) {
            trees.push_back(gen_tree(cfg, GenMethod::Grow, rng));
        }
        return trees;
    }
    constexpr std::size_t kMinDepth = 2;
    const std::size_t n_depths = cfg.max_depth - kMinDepth + 1;
    for (std::size_t i = 0; i < count; ++i) {
        const GenMethod method = i % 2 == 0 ? GenMethod::Grow : GenMethod::Full;
        TreeGenConfig at = cfg;
        at.max_depth = kMinDepth + (i / 2) % n_depths;
        trees.push_back(gen_tree(at, method, rng));
    }
    return trees;
}

} // namespace gsgp
