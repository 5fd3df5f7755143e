#include "common.hpp"

#include <gtest/gtest.h>

using namespace eds;
using namespace testing_support;

namespace {

LieSubalgebra preset_h(const std::string& kind, int m) {
    AlgebraSpec a;
    a.m = m;
    for (const auto& v : preset_algebra(kind, m)) {
        Matrix X(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) X[static_cast<std::size_t>(i)].assign(v.begin() + i * m, v.begin() + (i + 1) * m);
        a.basis.push_back(X);
    }
    return algebra_from_spec(a);
}

// First Bianchi kernel written out directly: R^i_{j,kl} = sum_a x_a,kl X_a^i_j
// with sum over cyclic (j,k,l) of R^i_{j,kl} = 0.
std::size_t brute_K0(const LieSubalgebra& h) {
    std::size_t m = static_cast<std::size_t>(h.m), r = h.dim();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t l = k + 1; l < m; ++l) pairs.emplace_back(k, l);
    auto col = [&](std::size_t a, std::size_t k, std::size_t l) -> std::pair<std::size_t, int> {
        if (k == l) return {0, 0};
        int sgn = k < l ? 1 : -1;
        if (k > l) std::swap(k, l);
        std::size_t p = std::find(pairs.begin(), pairs.end(), std::make_pair(k, l)) - pairs.begin();
        return {a * pairs.size() + p, sgn};
    };
    std::size_t cols = r * pairs.size();
    std::vector<Vec> rows;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = j + 1; k < m; ++k)
                for (std::size_t l = k + 1; l < m; ++l) {
                    Vec row(cols);
                    for (auto [x, y, z] : {std::tuple{j, k, l}, std::tuple{k, l, j}, std::tuple{l, j, k}})
                        for (std::size_t a = 0; a < r; ++a) {
                            auto [c, s] = col(a, y, z);
                            if (s != 0) row[c] += h.basis[a][i][x] * s;
                        }
                    rows.push_back(row);
                }
    return cols - dense_kernel(rows, cols).rank;
}

}  // namespace

TEST(HStruct, OrthogonalClosedForms) {
    for (int m = 2; m <= 5; ++m) {
        LieSubalgebra h = preset_h("so", m);
        ASSERT_TRUE(h.closed);
        TorsionFreeAnalysis T = torsion_free_analysis(h);
        EXPECT_EQ(T.kernels.K0_dim, static_cast<std::size_t>(m * m * (m * m - 1) / 12));
        EXPECT_EQ(T.kernels.K1_dim, static_cast<std::size_t>(m * m * (m * m - 1) * (m + 2) / 24));
        EXPECT_EQ(T.kernels.h1_dim, 0u);
        for (int p = 1; p <= m; ++p)
            EXPECT_EQ(T.inv.s[static_cast<std::size_t>(p - 1)], static_cast<std::size_t>(m * (p - 1) * (m - p + 1) / 2));
        EXPECT_TRUE(T.inv.involutive);
        if (m <= 4) EXPECT_EQ(T.kernels.K0_dim, brute_K0(h));
    }
}

TEST(HStruct, GeneralLinearIsInvolutive) {
    for (int m = 2; m <= 3; ++m) {
        LieSubalgebra h = preset_h("gl", m);
        TorsionFreeAnalysis T = torsion_free_analysis(h);
        EXPECT_EQ(T.kernels.K0_dim, brute_K0(h));
        // The Bianchi map gl(m) (x) L2 -> m (x) L3 is onto.
        EXPECT_EQ(Int(T.kernels.K0_dim), m * m * binomial(m, 2) - m * binomial(m, 3));
        std::size_t weighted = 0;
        for (std::size_t p = 0; p < T.inv.s.size(); ++p) weighted += (p + 1) * T.inv.s[p];
        EXPECT_EQ(T.kernels.K1_dim, weighted);
        EXPECT_TRUE(T.inv.involutive);
        // gl(m)^(1) is all of m (x) S^2(m*).
        EXPECT_EQ(Int(T.kernels.h1_dim), m * binomial(m + 1, 2));
    }
}

TEST(HStruct, SpecialUnitary2) {
    TorsionFreeAnalysis T = torsion_free_analysis(algebra_from_spec(corpus("su2").algebra));
    EXPECT_EQ(T.kernels.K0_dim, 5u);
    EXPECT_EQ(T.kernels.K1_dim, 12u);
    EXPECT_EQ(T.inv.s, (std::vector<std::size_t>{0, 3, 2, 0}));
    EXPECT_EQ(T.generality, "depends on 2 functions of 3 variables");
}

TEST(HStruct, TrivialAlgebra) {
    TorsionFreeAnalysis T = torsion_free_analysis(preset_h("zero", 3));
    EXPECT_EQ(T.kernels.K0_dim, 0u);
    EXPECT_EQ(T.kernels.K1_dim, 0u);
    EXPECT_EQ(T.kernels.h1_dim, 0u);
    StructureSystem S = emit_structure_system(preset_h("zero", 3));
    for (const auto& f : S.dw) EXPECT_TRUE(f.empty());
}

TEST(HStruct, EmittedSystemAgrees) {
    for (const char* name : {"so3", "su2", "gl2"}) {
        LieSubalgebra h = algebra_from_spec(corpus(name).algebra);
        TorsionFreeAnalysis T = torsion_free_analysis(h);
        StructureSystem S = emit_structure_system(h, name);
        TypeAAnalysis A = type_A_analyze(S, S.samples.front());
        EXPECT_TRUE(A.jacobi.solvable);
        auto padded = T.inv.s;
        padded.resize(A.inv.s.size());
        EXPECT_EQ(A.inv.s, padded) << name;
        EXPECT_EQ(A.inv.involutive, T.inv.involutive);
        EXPECT_EQ(A.jacobi.kernel_dim, T.kernels.K1_dim);
    }
}

TEST(HStruct, EmittedSo3IsTheVectorFormSystem) {
    StructureSystem S = emit_structure_system(preset_h("so", 3));
    // d eta = -theta ^ eta: each d eta^i has exactly two theta^eta terms.
    for (int i = 0; i < 3; ++i) EXPECT_EQ(S.dw[static_cast<std::size_t>(i)].terms.size(), 2u);
    EXPECT_EQ(S.vars.params.size(), 6u);
}

TEST(HStruct, NotASubalgebra) {
    Matrix E12{{Rat(0), Rat(1)}, {Rat(0), Rat(0)}}, E21{{Rat(0), Rat(0)}, {Rat(1), Rat(0)}};
    LieSubalgebra h = check_subalgebra(2, {E12, E21});
    EXPECT_FALSE(h.closed);
    EXPECT_NE(h.witness.find("[X1, X2]"), std::string::npos);
    EXPECT_THROW(curvature_kernels(h), std::invalid_argument);
    EXPECT_THROW(check_subalgebra(2, {E12, E12}), std::invalid_argument);
}
