#pragma once
// Torsion-free H-structures: a matrix Lie algebra h in gl(m), its curvature
// spaces K0(h) and K1(h), the first prolongation h(1), and the TYPE_A
// structure system on m + h whose analysis must agree with them.

#include "eds/dsl.hpp"
#include "eds/structeq.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace eds {

using Matrix = std::vector<Vec>;

inline Matrix mat_mul(const Matrix& a, const Matrix& b) {
    std::size_t m = a.size();
    Matrix c(m, Vec(m));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < m; ++k) {
            if (sgn(a[i][k]) == 0) continue;
            for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][k] * b[k][j];
        }
    return c;
}

inline Vec flatten(const Matrix& a) {
    Vec v;
    for (const auto& r : a) v.insert(v.end(), r.begin(), r.end());
    return v;
}

struct LieSubalgebra {
    int m = 0;
    std::vector<Matrix> basis;
    // [X_b, X_c] = sum_a C[a][b][c] X_a
    std::vector<std::vector<Vec>> C;
    bool closed = false;
    std::string witness;  // first bracket outside the span
    std::size_t dim() const { return basis.size(); }
};

inline LieSubalgebra check_subalgebra(int m, const std::vector<Matrix>& basis) {
    LieSubalgebra h;
    h.m = m;
    h.basis = basis;
    std::size_t r = basis.size(), mm = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
    std::vector<Vec> flat;
    for (const auto& X : basis) {
        if (static_cast<int>(X.size()) != m) throw std::invalid_argument("matrices must be square of equal size");
        for (const auto& row : X)
            if (static_cast<int>(row.size()) != m) throw std::invalid_argument("matrices must be square of equal size");
        flat.push_back(flatten(X));
    }
    if (rank_of(mm, flat) != r) throw std::invalid_argument("dependent basis");
    // Solve sum_a x_a X_a = [X_b, X_c]: columns are the basis matrices.
    Mat A(mm, r);
    for (std::size_t a = 0; a < r; ++a)
        for (std::size_t k = 0; k < mm; ++k) A(k, a) = flat[a][k];
    h.C.assign(r, std::vector<Vec>(r, Vec(r)));
    h.closed = true;
    for (std::size_t b = 0; b < r; ++b)
        for (std::size_t c = b + 1; c < r; ++c) {
            Vec br = flatten(mat_mul(basis[b], basis[c])), q = flatten(mat_mul(basis[c], basis[b]));
            for (std::size_t k = 0; k < mm; ++k) br[k] -= q[k];
            AffineSolution s = solve_affine(A, br);
            if (!s.solvable) {
                if (h.closed) h.witness = "[X" + std::to_string(b + 1) + ", X" + std::to_string(c + 1) + "] is not in the span";
                h.closed = false;
                continue;
            }
            for (std::size_t a = 0; a < r; ++a) {
                h.C[a][b][c] = s.particular[a];
                h.C[a][c][b] = -s.particular[a];
            }
        }
    return h;
}

struct CurvatureKernels {
    FormTableau K0;  // q = 2, W = h, V = m
    std::size_t K0_dim = 0, K1_dim = 0, h1_dim = 0;
};

// K0 = kernel of h (x) L2 -> m (x) L3, R^a |-> sum_a X_a^i_j R^a ^ e^j.
inline FormTableau curvature_K0(const LieSubalgebra& h) {
    int m = h.m, r = static_cast<int>(h.dim());
    Combos c2(m, 2), c3(m, 3);
    std::size_t cols = static_cast<std::size_t>(r) * c2.size();
    std::map<std::size_t, std::map<std::size_t, Rat>> rows;
    Index K;
    for (int a = 0; a < r; ++a)
        for (std::size_t I = 0; I < c2.size(); ++I)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    const Rat& x = h.basis[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                    if (sgn(x) == 0) continue;
                    int s = merge_sign(c2.lex[I], {j}, K);
                    if (s == 0) continue;
                    Rat& cell = rows[static_cast<std::size_t>(i) * c3.size() + c3.lex_rank.at(K)]
                                    [static_cast<std::size_t>(a) * c2.size() + I];
                    cell += s > 0 ? x : Rat(-x);
                }
    Echelon e(cols);
    for (const auto& [key, row] : rows) {
        SparseVec sv;
        for (const auto& [c, x] : row)
            if (sgn(x) != 0) sv.emplace_back(c, x);
        e.insert(sv);
    }
    return FormTableau{r, m, 2, e.kernel_basis(cols)};
}

// h as a q = 1 tableau in m (x) m*.
inline FormTableau algebra_tableau(const LieSubalgebra& h) {
    FormTableau t{h.m, h.m, 1, {}};
    for (const auto& X : h.basis) t.gens.push_back(flatten(X));
    return t;
}

inline CurvatureKernels curvature_kernels(const LieSubalgebra& h) {
    if (!h.closed) throw std::invalid_argument("not a subalgebra: " + h.witness);
    CurvatureKernels k;
    k.K0 = curvature_K0(h);
    k.K0_dim = k.K0.gens.size();
    k.K1_dim = prolongation_dim(k.K0);
    k.h1_dim = prolongation_dim(algebra_tableau(h));
    return k;
}

struct TorsionFreeAnalysis {
    CurvatureKernels kernels;
    InvolutivityReport inv;
    std::string generality;
};

inline TorsionFreeAnalysis torsion_free_analysis(const LieSubalgebra& h, std::uint64_t seed = 0, int retries = 8) {
    TorsionFreeAnalysis T;
    T.kernels = curvature_kernels(h);
    T.inv = cartan_test(T.kernels.K0, seed, retries);
    T.generality = generality_sentence(T.inv.s);
    return T;
}

// d eta^i = -X_a^i_j theta^a ^ eta^j,
// d theta^a = -1/2 C^a_bc theta^b ^ theta^c + sum_t k_t B_t^a,
// with B_t a basis of K0 and k_t the curvature coordinates.
inline StructureSystem emit_structure_system(const LieSubalgebra& h, const std::string& name = "hstruct") {
    CurvatureKernels k = curvature_kernels(h);
    int m = h.m, r = static_cast<int>(h.dim());
    StructureSystem S;
    S.name = name;
    S.mode = Mode::TYPE_A;
    for (int i = 1; i <= m; ++i) S.coframe.push_back("eta" + std::to_string(i));
    for (int a = 1; a <= r; ++a) S.coframe.push_back("theta" + std::to_string(a));
    for (std::size_t t = 1; t <= k.K0_dim; ++t) S.vars.params.push_back("k" + std::to_string(t));
    auto eta = [](int i) { return Form<Expr>::basis(i); };
    auto theta = [m](int a) { return Form<Expr>::basis(m + a); };
    for (int i = 0; i < m; ++i) {
        Form<Expr> f(2);
        for (int a = 0; a < r; ++a)
            for (int j = 0; j < m; ++j) {
                const Rat& x = h.basis[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                if (sgn(x) != 0) f += wedge(theta(a), eta(j)).scaled(Expr(Rat(-x)));
            }
        S.dw.push_back(f);
    }
    Combos c2(m, 2);
    for (int a = 0; a < r; ++a) {
        Form<Expr> f(2);
        for (int b = 0; b < r; ++b)
            for (int c = b + 1; c < r; ++c) {
                const Rat& x = h.C[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)][static_cast<std::size_t>(c)];
                if (sgn(x) != 0) f += wedge(theta(b), theta(c)).scaled(Expr(Rat(-x)));
            }
        for (std::size_t t = 0; t < k.K0_dim; ++t) {
            Expr kt = S.vars.var(S.vars.params[t]);
            for (std::size_t I = 0; I < c2.size(); ++I) {
                const Rat& x = k.K0.gens[t][static_cast<std::size_t>(a) * c2.size() + I];
                if (sgn(x) != 0) f.add(c2.lex[I], kt * Expr(x));
            }
        }
        S.dw.push_back(f);
    }
    S.F.assign(S.vars.params.size(), std::nullopt);
    SamplePoint p;
    for (std::size_t t = 0; t < k.K0_dim; ++t) p[S.vars.params[t]] = Rat(static_cast<long>(t + 2));
    S.samples.push_back(p);
    return S;
}

inline LieSubalgebra algebra_from_spec(const AlgebraSpec& a) { return check_subalgebra(a.m, a.basis); }

}  // namespace eds
