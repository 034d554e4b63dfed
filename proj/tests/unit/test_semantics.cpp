#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "gsgp/semantics.hpp"

using namespace gsgp;

TEST(Sigmoid, KnownPoints) {
    EXPECT_EQ(sigmoid(0.0), 0.5);
    EXPECT_NEAR(sigmoid(1e9), 1.0, 1e-12);
    EXPECT_EQ(sigmoid(-1e9), 0.0);
    for (double v : {0.1, 1.0, 10.0}) {
        EXPECT_NEAR(sigmoid(v) + sigmoid(-v), 1.0, 1e-15);
    }
}

TEST(Sigmoid, MonotoneAndInsideUnitInterval) {
    double prev = sigmoid(-30.0);
    for (double v = -30.0; v <= 30.0; v += 0.01) {
        const double s = sigmoid(v);
        EXPECT_GT(s, 0.0);
        EXPECT_LT(s, 1.0);
        EXPECT_GE(s, prev);
        prev = s;
    }
}

TEST(Rmse, Examples) {
    const SemanticVector a({1.0, 2.0, 3.0});
    EXPECT_EQ(rmse(a, a), 0.0);
    // sqrt((9 + 16) / 2) = sqrt(12.5)
    EXPECT_NEAR(rmse(SemanticVector({0.0, 0.0}), SemanticVector({3.0, 4.0})), 3.5355339059327378, 1e-15);
}

TEST(Rmse, ContractViolations) {
    EXPECT_THROW((void)rmse(SemanticVector({1.0}), SemanticVector({1.0, 2.0})), ContractError);
    EXPECT_THROW((void)rmse(SemanticVector(), SemanticVector()), ContractError);
}

TEST(Rmse, MetricProperties) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n(0.0, 5.0);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t m = 1 + trial % 17;
        std::vector<double> a(m), b(m), c(m);
        for (std::size_t i = 0; i < m; ++i) {
            a[i] = n(rng);
            b[i] = n(rng);
            c[i] = n(rng);
        }
        const double ab = rmse(a, b);
        EXPECT_EQ(ab, rmse(b, a));
        EXPECT_LE(rmse(a, c), ab + rmse(b, c) + 1e-12);
        EXPECT_GT(ab, 0.0);
        // permutation invariance
        std::vector<std::size_t> perm(m);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> pa(m), pb(m);
        for (std::size_t i = 0; i < m; ++i) {
            pa[i] = a[perm[i]];
            pb[i] = b[perm[i]];
        }
        EXPECT_NEAR(rmse(pa, pb), ab, 1e-12);
    }
}

TEST(SemanticVector, RejectsNonFinite) {
    try {
        (void)SemanticVector({1.0, std::numeric_limits<double>::quiet_NaN()});
        FAIL() << "expected NonFiniteError";
    } catch (const NonFiniteError& e) {
        EXPECT_EQ(e.row(), 1u);
    }
}

TEST(SemanticsOfTree, ConstantAndVariable) {
    Matrix x(3, 2, {1, 10, 2, 20, 3, 30});
    const auto c = semantics_of_tree(ExprTree::constant(4.25), x);
    EXPECT_EQ(std::vector<double>(c.begin(), c.end()), (std::vector<double>{4.25, 4.25, 4.25}));
    const auto v = semantics_of_tree(ExprTree::variable(1), x);
    EXPECT_EQ(std::vector<double>(v.begin(), v.end()), (std::vector<double>{10, 20, 30}));
}

TEST(SemanticsOfTree, MatchesRowLoop) {
    Rng rng(5);
    Matrix x(5, 3);
    std::uniform_real_distribution<double> u(-2, 2);
    for (std::size_t r = 0; r < 5; ++r)
        for (auto& v : x.row(r)) v = u(rng);
    // (x0 * x2) - (x1 / 0.5) + 7 nodes
    const auto t = ExprTree::binary(Op::Sub, ExprTree::binary(Op::Mul, ExprTree::variable(0), ExprTree::variable(2)),
                                    ExprTree::binary(Op::Div, ExprTree::variable(1), ExprTree::constant(0.5)));
    ASSERT_EQ(t.size(), 7u);
    const auto s = semantics_of_tree(t, x);
    for (std::size_t r = 0; r < 5; ++r) {
        EXPECT_EQ(s[r], eval_tree(t, x.row(r)));
        EXPECT_DOUBLE_EQ(s[r], x(r, 0) * x(r, 2) - x(r, 1) / 0.5);
    }
}

TEST(SemanticsOfTree, FlagsNonFiniteRow) {
    Matrix x(3, 1, {1.0, 1e300, 2.0});
    const auto t = ExprTree::binary(Op::Mul, ExprTree::variable(0), ExprTree::variable(0));
    try {
        (void)semantics_of_tree(t, x);
        FAIL() << "expected NonFiniteError";
    } catch (const NonFiniteError& e) {
        EXPECT_EQ(e.row(), 1u);
    }
}
