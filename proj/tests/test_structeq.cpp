#include "common.hpp"

#include <gtest/gtest.h>

using namespace eds;
using namespace testing_support;

TEST(Jacobi, VanishesOnRandomLieAlgebras) {
    std::mt19937_64 g(51);
    std::vector<std::vector<Matrix>> families{preset("so", 3), preset("gl", 2), upper3(), preset("so", 4)};
    for (int trial = 0; trial < 20; ++trial) {
        const auto& fam = families[static_cast<std::size_t>(trial) % families.size()];
        LieSubalgebra h = random_lie_algebra(g, fam);
        ASSERT_TRUE(h.closed);
        EXPECT_TRUE(all_zero(jacobi_map(structure_forms(h)))) << "trial " << trial;
    }
}

TEST(Jacobi, NonzeroOnCertifiedWitness) {
    // [e1,e2] = e3, [e2,e3] = e3, [e1,e3] = e1: the Jacobi sum is
    // [e1,[e2,e3]] + [e2,[e3,e1]] + [e3,[e1,e2]] = e1 - [e2,e1] + 0 = e1 + e3.
    std::vector<Form<Rat>> dw(3, Form<Rat>(2));
    dw[2].add({0, 1}, Rat(-1));  // c^3_12 = 1
    dw[2].add({1, 2}, Rat(-1));  // c^3_23 = 1
    dw[0].add({0, 2}, Rat(-1));  // c^1_13 = 1
    auto J = jacobi_map(dw);
    EXPECT_FALSE(all_zero(J));
    // Independent evaluation of the cyclic sum on the only triple.
    auto br = [](int x, int y) -> Vec {
        Vec v(3);
        auto set = [&](int a, int b, int k, Rat c) {
            if (x == a && y == b) v[static_cast<std::size_t>(k)] += c;
            if (x == b && y == a) v[static_cast<std::size_t>(k)] -= c;
        };
        set(0, 1, 2, 1);
        set(1, 2, 2, 1);
        set(0, 2, 0, 1);
        return v;
    };
    auto br_vec = [&](int x, const Vec& w) {
        Vec v(3);
        for (int k = 0; k < 3; ++k) {
            Vec b = br(x, k);
            for (int i = 0; i < 3; ++i) v[static_cast<std::size_t>(i)] += w[static_cast<std::size_t>(k)] * b[static_cast<std::size_t>(i)];
        }
        return v;
    };
    Vec s(3);
    for (auto [x, y, z] : {std::tuple{0, 1, 2}, std::tuple{1, 2, 0}, std::tuple{2, 0, 1}}) {
        Vec t = br_vec(x, br(y, z));
        for (int i = 0; i < 3; ++i) s[static_cast<std::size_t>(i)] += t[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < 3; ++i) EXPECT_EQ(J[static_cast<std::size_t>(i)].coeff({0, 1, 2}), s[static_cast<std::size_t>(i)]);
}

TEST(Variant, GradK1) {
    DslFile f = corpus("gradk1");
    VariantAnalysis V = variant_analyze(f.sys, f.sys.samples.front());
    EXPECT_EQ(V.residuals.ddw_verdict(), "holds");
    for (const auto& r : V.residuals.ddw) EXPECT_TRUE(simplify(r).empty());
    EXPECT_EQ(V.inv.s, (std::vector<std::size_t>{1, 0, 0}));
    EXPECT_TRUE(V.applies);
}

TEST(Variant, GradK1ProlongedRule) {
    DslFile f = corpus("gradk1");
    ProlongedSystem P = prolong_structure(f.sys, f.sys.samples.front());
    const StructureSystem& S = P.sys;
    ASSERT_EQ(P.new_frees, 1u);
    std::size_t ib = S.param_index("b");
    ASSERT_TRUE(S.F[ib]);
    const Form<Expr>& db = *S.F[ib];
    // db = w12 + c1 * (multiple of -sin b w1 + cos b w2): the w12 coefficient
    // is 1 and the (w1, w2) part is orthogonal to (cos b, sin b).
    EXPECT_TRUE(is_zero(db.coeff({2}) - Expr(1)));
    for (const auto& p : S.samples) {
        SamplePoint q = p;
        q[S.vars.frees.front()] = Rat(3);
        Rat x = eval(db.coeff({0}), q), y = eval(db.coeff({1}), q);
        Rat s = q.at("s"), c = q.at("c");
        EXPECT_EQ(x * c + y * s, 0);
        EXPECT_NE(x * x + y * y, 0);
    }
    EXPECT_EQ(check_torsion(S).ddw_verdict(), "holds");
}

TEST(Ctft, HessianResidualIsMultipleOfCondition) {
    DslFile f = corpus("hessian_generic");
    ResidualReport R = check_torsion(f.sys);
    EXPECT_EQ(R.dda_verdict(), "fails");
    Expr cond = parse("a' - a*b + K", f.sys.vars);
    // d(dK1) and d(dK2) are (a' - a b + K) times K2 w12, -K1 w12 (up to sign)
    // on the pair (w1, w2); every other residual coefficient vanishes.
    bool saw = false;
    for (const auto& r : R.dda)
        for (const auto& [idx, c] : simplify(r).terms) {
            Fraction q = to_fraction(normalize(c / cond));
            Expr quotient = fraction_to_expr(q);
            EXPECT_TRUE(is_zero(quotient * cond - c));
            std::set<std::string> deps = dependencies(quotient);
            EXPECT_TRUE(deps.count("a") == 0 && deps.count("b") == 0) << print(quotient);
            saw = true;
        }
    EXPECT_TRUE(saw);
    EXPECT_EQ(check_torsion(corpus("hessian_reduced").sys).dda_verdict(), "holds");
    for (const auto& r : check_torsion(corpus("hessian_reduced").sys).dda) EXPECT_TRUE(simplify(r).empty());
}

TEST(Variant, RicciGradientResidualsVanishModuloTrace) {
    DslFile f = corpus("ricci_gradient");
    ResidualReport R = check_torsion(f.sys);
    Expr b33 = parse("-b11 - b22", f.sys.vars);
    for (const auto& r : R.ddw)
        for (const auto& [idx, c] : r.terms) {
            // substitute b33 = -b11 - b22 by evaluating on a grid of points
            for (int t = 0; t < 3; ++t) {
                SamplePoint p = f.sys.samples[static_cast<std::size_t>(t % 2)];
                p["b11"] = Rat(t + 1);
                p["b22"] = Rat(2 - 3 * t);
                p["b33"] = eval(b33, p);
                EXPECT_EQ(eval(c, p), 0);
            }
        }
    VariantAnalysis V = variant_analyze(f.sys, f.sys.samples.front());
    EXPECT_EQ(V.inv.s, (std::vector<std::size_t>{3, 2, 0, 0, 0, 0}));
    EXPECT_EQ(V.inv.dim_prolongation, 7u);
    EXPECT_TRUE(V.g.exists);
}

TEST(TypeA, PolarCodimsMatchPointIdeal) {
    // c(E_k) of the Upsilon/Psi ideal is n k + c_k along the lifted flag.
    for (const char* name : {"finsler_base", "constricci_two_equal"}) {
        DslFile f = corpus(name);
        const SamplePoint& p = f.sys.samples.front();
        TypeAAnalysis A = type_A_analyze(f.sys, p);
        std::size_t n = f.sys.n();
        PointIdeal I = jacobi_point_ideal(n, A.data.g);
        // The library's flag lives in effective coordinates; extend to V.
        Flag full;
        for (const auto& v : A.inv.flag) {
            Vec w(n);
            for (std::size_t k = 0; k < A.inv.effective.size(); ++k) w[static_cast<std::size_t>(A.inv.effective[k])] = v[k];
            full.push_back(w);
        }
        for (std::size_t k = 0; k < n; ++k)
            if (std::find(A.inv.effective.begin(), A.inv.effective.end(), static_cast<int>(k)) == A.inv.effective.end()) {
                Vec w(n);
                w[k] = 1;
                full.push_back(w);
            }
        auto E = lift_flag(n, A.data.g.size(), full);
        for (std::size_t k = 0; k < n; ++k) {
            std::vector<Vec> Ek(E.begin(), E.begin() + static_cast<long>(k));
            std::size_t want = n * k + A.polar_codims[k];
            EXPECT_EQ(static_cast<std::size_t>(polar_space(I, Ek).c), want) << name << " k=" << k;
        }
    }
}

TEST(TypeA, TwoEqualEigenvaluesNotInvolutive) {
    DslFile f = corpus("constricci_two_equal");
    TypeAAnalysis A = type_A_analyze(f.sys, f.sys.samples.front());
    EXPECT_TRUE(A.jacobi.solvable);
    EXPECT_FALSE(A.inv.involutive);
    EXPECT_EQ(A.polar_codims, (std::vector<std::size_t>{0, 0, 2, 2, 2, 2}));
    EXPECT_EQ(A.polar_sum, 8u);
    EXPECT_EQ(A.codim, 9u);
}

TEST(TypeA, ProlongingFinslerBaseGivesBianchiSystem) {
    DslFile f = corpus("finsler_base");
    ProlongedSystem P = prolong_structure(f.sys, f.sys.samples.front());
    EXPECT_EQ(P.new_frees, 7u);
    InvolutivityReport r = cartan_test(free_tableau(P.sys, P.sys.samples.front()));
    EXPECT_EQ(r.s, (std::vector<std::size_t>{3, 3, 1}));
    EXPECT_TRUE(r.involutive);
}

TEST(Counts, ClassicalInvariantCount) {
    std::vector<std::size_t> s{0, 3, 3, 0, 0, 0};
    for (long k = 1; k <= 5; ++k) {
        EXPECT_EQ(invariant_count(0, s, k), Int(k * (k + 1) * (k + 5) / 2));
        // sum_j C(k+j-1, j) s_j written out
        Int direct = 0;
        for (long j = 1; j <= 6; ++j) direct += binomial(k + j - 1, j) * static_cast<long>(s[static_cast<std::size_t>(j - 1)]);
        EXPECT_EQ(invariant_count(0, s, k), direct);
        EXPECT_EQ(dim_Mk(6, 0, s, k), 6 + invariant_count(0, s, k + 1));
    }
}

TEST(Errors, NamedCauses) {
    DslFile f = corpus("gradk1");
    SamplePoint bad = f.sys.samples.front();
    bad["s"] = 0;
    bad["c"] = 1;
    bad["K"] = 0;
    EXPECT_NO_THROW(free_tableau(f.sys, bad));
    StructureSystem nos = f.sys;
    nos.samples.clear();
    EXPECT_THROW(analyze_structure(nos, {}), std::invalid_argument);
    EXPECT_THROW(prolong_structure(corpus("hessian_reduced").sys, corpus("hessian_reduced").sys.samples.front()),
                 std::invalid_argument);
    SamplePoint off = f.sys.samples.front();
    off["s"] = 1;  // s^2 + c^2 != 1
    StructureSystem wrong = f.sys;
    wrong.samples = {off};
    EXPECT_THROW(check_samples(wrong), std::invalid_argument);
}
