#pragma once
// Helpers shared by the unit tests and the acceptance binary.

#include "eds/report.hpp"

#include <random>
#include <string>

#ifndef EDS_CORPUS_DIR
#define EDS_CORPUS_DIR "corpus"
#endif

namespace testing_support {

using namespace eds;

inline std::string corpus_file(const std::string& name) { return std::string(EDS_CORPUS_DIR) + "/" + name + ".eds"; }

inline DslFile corpus(const std::string& name) { return load_dsl(corpus_file(name)); }

// Plain fraction-field Gaussian elimination, written out independently of the
// sparse engine in linalg.hpp.  Returns the rank and a kernel basis.
struct DenseResult {
    std::size_t rank = 0;
    std::vector<Vec> kernel;
};

inline DenseResult dense_kernel(std::vector<Vec> a, std::size_t cols) {
    std::vector<int> pivot_of_col(cols, -1);
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < a.size(); ++c) {
        std::size_t p = r;
        while (p < a.size() && a[p][c] == 0) ++p;
        if (p == a.size()) continue;
        std::swap(a[p], a[r]);
        Rat inv = 1 / a[r][c];
        for (auto& x : a[r]) x *= inv;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (i == r || a[i][c] == 0) continue;
            Rat f = a[i][c];
            for (std::size_t j = 0; j < cols; ++j) a[i][j] -= f * a[r][j];
        }
        pivot_of_col[c] = static_cast<int>(r);
        ++r;
    }
    DenseResult out;
    out.rank = r;
    for (std::size_t fcol = 0; fcol < cols; ++fcol) {
        if (pivot_of_col[fcol] >= 0) continue;
        Vec v(cols);
        v[fcol] = 1;
        for (std::size_t c = 0; c < cols; ++c)
            if (pivot_of_col[c] >= 0) v[c] = -a[static_cast<std::size_t>(pivot_of_col[c])][fcol];
        out.kernel.push_back(v);
    }
    return out;
}

inline Rat small_rat(std::mt19937_64& g, int lo = -3, int hi = 3) {
    return Rat(std::uniform_int_distribution<int>(lo, hi)(g));
}

inline Vec random_vec(std::mt19937_64& g, std::size_t n, int lo = -3, int hi = 3) {
    Vec v(n);
    for (auto& x : v) x = small_rat(g, lo, hi);
    return v;
}

// Dimension of the first prolongation of a q = 1 tableau, by brute force:
// unknowns P^a_{ij} for all i, j with the symmetry P^a_{ij} = P^a_{ji} and
// P^a_{i.} in A for every i.
inline std::size_t brute_prolongation_dim(const FormTableau& t) {
    std::size_t m = static_cast<std::size_t>(t.m), n = static_cast<std::size_t>(t.n);
    std::size_t cols = m * n * n;
    auto col = [&](std::size_t a, std::size_t i, std::size_t j) { return (a * n + i) * n + j; };
    std::vector<Vec> rows;
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                Vec r(cols);
                r[col(a, i, j)] = 1;
                r[col(a, j, i)] = -1;
                rows.push_back(r);
            }
    // Annihilator of A in W (x) V*, computed as the kernel of the generator matrix.
    std::vector<Vec> ann = dense_kernel(t.gens, m * n).kernel;
    for (const auto& l : ann)
        for (std::size_t i = 0; i < n; ++i) {
            Vec r(cols);
            for (std::size_t a = 0; a < m; ++a)
                for (std::size_t j = 0; j < n; ++j) r[col(a, i, j)] = l[a * n + j];
            rows.push_back(r);
        }
    return cols - dense_kernel(rows, cols).rank;
}

inline FormTableau random_tableau(std::mt19937_64& g, int m, int n, std::size_t k) {
    FormTableau t{m, n, 1, {}};
    for (std::size_t i = 0; i < k; ++i) {
        Vec v(static_cast<std::size_t>(m * n));
        for (auto& x : v) x = (g() % 3 == 0) ? small_rat(g, -2, 2) : Rat(0);
        t.gens.push_back(v);
    }
    return t;
}

// Symmetric n x n matrices as a tableau in R^n (x) (R^n)*.
inline FormTableau symmetric_tableau(int n) {
    FormTableau t{n, n, 1, {}};
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            Vec v(static_cast<std::size_t>(n * n));
            v[static_cast<std::size_t>(i * n + j)] = 1;
            v[static_cast<std::size_t>(j * n + i)] = 1;
            t.gens.push_back(v);
        }
    return t;
}

// Random Lie algebras: a random change of basis applied to a matrix algebra,
// with the structure constants read off by check_subalgebra.
inline std::vector<Form<Rat>> structure_forms(const LieSubalgebra& h) {
    int r = static_cast<int>(h.dim());
    std::vector<Form<Rat>> dw;
    for (int a = 0; a < r; ++a) {
        Form<Rat> f(2);
        for (int b = 0; b < r; ++b)
            for (int c = b + 1; c < r; ++c)
                f.add({b, c}, -h.C[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)][static_cast<std::size_t>(c)]);
        dw.push_back(f);
    }
    return dw;
}

inline Matrix combo(const std::vector<Matrix>& basis, const Vec& coeffs) {
    std::size_t m = basis.front().size();
    Matrix X(m, Vec(m));
    for (std::size_t t = 0; t < basis.size(); ++t)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) X[i][j] += coeffs[t] * basis[t][i][j];
    return X;
}

inline std::vector<Matrix> preset(const std::string& kind, int m) {
    std::vector<Matrix> out;
    for (const auto& v : preset_algebra(kind, m)) {
        Matrix X(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) X[static_cast<std::size_t>(i)].assign(v.begin() + i * m, v.begin() + (i + 1) * m);
        out.push_back(X);
    }
    return out;
}

// Upper triangular 3x3 matrices: a solvable algebra.
inline std::vector<Matrix> upper3() {
    std::vector<Matrix> out;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            Matrix X(3, Vec(3));
            X[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
            out.push_back(X);
        }
    return out;
}

// A random invertible recombination of a matrix Lie algebra basis.
inline LieSubalgebra random_lie_algebra(std::mt19937_64& g, const std::vector<Matrix>& fam) {
    std::vector<Matrix> basis;
    while (true) {
        basis.clear();
        for (std::size_t k = 0; k < fam.size(); ++k) basis.push_back(combo(fam, random_vec(g, fam.size(), -2, 2)));
        std::vector<Vec> flat;
        for (const auto& X : basis) flat.push_back(flatten(X));
        if (rank_of(flat.front().size(), flat) == fam.size()) break;
    }
    return check_subalgebra(static_cast<int>(basis.front().size()), basis);
}

inline std::vector<Vec> span_plus(std::vector<Vec> e, const Vec& v) {
    e.push_back(v);
    return e;
}

}  // namespace testing_support
