#include "common.hpp"

#include <gtest/gtest.h>

using namespace eds;
using namespace testing_support;

namespace {

Form<Rat> random_form(std::mt19937_64& g, int n, int q) {
    Form<Rat> f(q);
    for (const auto& I : combinations(n, q)) f.add(I, small_rat(g, -2, 2));
    return f;
}

// Leibniz expansion of det, independent of the elimination used by the library.
Rat leibniz_det(const std::vector<Vec>& m) {
    std::size_t n = m.size();
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    Rat total = 0;
    do {
        int inv = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (p[i] > p[j]) ++inv;
        Rat t = inv % 2 ? -1 : 1;
        for (std::size_t i = 0; i < n; ++i) t *= m[i][p[i]];
        total += t;
    } while (std::next_permutation(p.begin(), p.end()));
    return total;
}

}  // namespace

TEST(Forms, WedgeIsGradedCommutativeAndAssociative) {
    std::mt19937_64 g(21);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 5;
        int p = 1 + static_cast<int>(g() % 2), q = 1 + static_cast<int>(g() % 2);
        Form<Rat> a = random_form(g, n, p), b = random_form(g, n, q), c = random_form(g, n, 1);
        Form<Rat> ab = wedge(a, b), ba = wedge(b, a);
        EXPECT_EQ(ab, (p * q) % 2 ? -ba : ba);
        EXPECT_EQ(wedge(wedge(a, b), c), wedge(a, wedge(b, c)));
        EXPECT_TRUE(wedge(c, c).empty());
    }
}

TEST(Forms, EvaluationIsDeterminant) {
    std::mt19937_64 g(22);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Vec> m;
        for (int i = 0; i < 4; ++i) m.push_back(random_vec(g, 4));
        Form<Rat> vol(4);
        vol.add({0, 1, 2, 3}, Rat(1));
        EXPECT_EQ(evaluate(vol, m), leibniz_det(m));
        EXPECT_EQ(det(m), leibniz_det(m));
    }
}

TEST(Forms, StructureDSquaredVanishesForLieAlgebra) {
    // so(3): dw1 = -w2^w3 and cyclic.  d(dw) = 0 exactly.
    DslFile f = parse_dsl(R"(
coframe w1 w2 w3;
d w1 = -w2^w3;
d w2 = -w3^w1;
d w3 = -w1^w2;
)");
    for (const auto& dw : f.sys.dw) EXPECT_TRUE(simplify(structure_d(f.sys, dw)).empty());
    // A non-Lie bracket gives a nonzero d^2 somewhere.
    DslFile h = parse_dsl(R"(
coframe w1 w2 w3;
d w1 = -w2^w3;
d w2 = -w1^w3;
d w3 = -w1^w2 - w1^w3;
)");
    bool nonzero = false;
    for (const auto& dw : h.sys.dw) nonzero |= !simplify(structure_d(h.sys, dw)).empty();
    EXPECT_TRUE(nonzero);
}

TEST(Forms, PrintParseRoundTrip) {
    DslFile f = corpus("finsler_prolonged");
    DslFile g = parse_dsl(to_dsl(f.sys));
    ASSERT_EQ(f.sys.dw.size(), g.sys.dw.size());
    for (std::size_t i = 0; i < f.sys.dw.size(); ++i) {
        Form<Expr> diffr = simplify(f.sys.dw[i] - g.sys.dw[i]);
        EXPECT_TRUE(diffr.empty()) << print_form(diffr, f.sys.labels());
    }
    for (std::size_t a = 0; a < f.sys.F.size(); ++a) {
        ASSERT_TRUE(f.sys.F[a] && g.sys.F[a]);
        EXPECT_TRUE(simplify(*f.sys.F[a] - *g.sys.F[a]).empty());
    }
}
