#pragma once
// Exact linear algebra over Q: incremental row echelon forms, canonical
// reduced echelon bases, kernels, subspace sums and intersections, affine
// solves.

#include "eds/rat.hpp"

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace eds {

using Vec = std::vector<Rat>;
using SparseVec = std::vector<std::pair<std::size_t, Rat>>;  // sorted by index, no zeros

inline SparseVec to_sparse(const Vec& v) {
    SparseVec s;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (sgn(v[i]) != 0) s.emplace_back(i, v[i]);
    return s;
}

inline Vec to_dense(const SparseVec& s, std::size_t n) {
    Vec v(n);
    for (const auto& [i, x] : s) v[i] = x;
    return v;
}

inline bool is_zero_vec(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](const Rat& x) { return sgn(x) == 0; });
}

struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<Rat> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c) {}
    static Mat from_rows(const std::vector<Vec>& rs, std::size_t ncols) {
        Mat m(rs.size(), ncols);
        for (std::size_t i = 0; i < rs.size(); ++i) {
            if (rs[i].size() != ncols) throw std::invalid_argument("row length mismatch");
            for (std::size_t j = 0; j < ncols; ++j) m(i, j) = rs[i][j];
        }
        return m;
    }
    Rat& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    const Rat& operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
    Vec row(std::size_t i) const { return Vec(a.begin() + i * cols, a.begin() + (i + 1) * cols); }
    Mat transpose() const {
        Mat t(cols, rows);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }
    Vec operator*(const Vec& v) const {
        if (v.size() != cols) throw std::invalid_argument("dimension mismatch in Mat*Vec");
        Vec r(rows);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j)
                if (sgn((*this)(i, j)) != 0 && sgn(v[j]) != 0) r[i] += (*this)(i, j) * v[j];
        return r;
    }
    Mat operator*(const Mat& o) const {
        if (cols != o.rows) throw std::invalid_argument("dimension mismatch in Mat*Mat");
        Mat r(rows, o.cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t k = 0; k < cols; ++k) {
                const Rat& x = (*this)(i, k);
                if (sgn(x) == 0) continue;
                for (std::size_t j = 0; j < o.cols; ++j) r(i, j) += x * o(k, j);
            }
        return r;
    }
    bool operator==(const Mat& o) const { return rows == o.rows && cols == o.cols && a == o.a; }
};

inline Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
}

// Row echelon form built one row at a time. Rows are stored sparsely with a
// leading 1; a dense workspace makes each reduction linear in the row width.
class Echelon {
public:
    explicit Echelon(std::size_t ncols) : ncols_(ncols), pivot_row_(ncols, -1), work_(ncols) {}

    std::size_t ncols() const { return ncols_; }
    std::size_t rank() const { return rows_.size(); }
    const std::vector<SparseVec>& rows() const { return rows_; }
    bool is_pivot(std::size_t c) const { return pivot_row_[c] >= 0; }

    // Returns the reduced form of v against the current rows.
    SparseVec reduce(const SparseVec& v) {
        if (v.empty()) return {};
        for (const auto& [i, x] : v) {
            if (i >= ncols_) throw std::out_of_range("column index out of range");
            work_[i] = x;
        }
        std::size_t lo = v.front().first;
        std::size_t hi = v.back().first;
        for (std::size_t c = lo; c <= hi && c < ncols_; ++c) {
            if (sgn(work_[c]) == 0 || pivot_row_[c] < 0) continue;
            Rat f = work_[c];
            for (const auto& [j, y] : rows_[static_cast<std::size_t>(pivot_row_[c])]) {
                work_[j] -= f * y;
                if (j > hi) hi = j;
            }
        }
        SparseVec out;
        for (std::size_t c = lo; c <= hi && c < ncols_; ++c) {
            if (sgn(work_[c]) != 0) {
                out.emplace_back(c, work_[c]);
                work_[c] = 0;
            }
        }
        return out;
    }

    // Inserts v; returns true when v was independent of the existing rows.
    bool insert(const SparseVec& v) {
        SparseVec r = reduce(v);
        if (r.empty()) return false;
        Rat inv = 1 / r.front().second;
        for (auto& e : r) e.second *= inv;
        pivot_row_[r.front().first] = static_cast<long>(rows_.size());
        rows_.push_back(std::move(r));
        reduced_ = false;
        return true;
    }
    bool insert(const Vec& v) { return insert(to_sparse(v)); }

    // Converts to the reduced row echelon form: pivots sorted, pivot columns
    // cleared in every other row.
    void finalize() {
        if (reduced_) return;
        std::sort(rows_.begin(), rows_.end(),
                  [](const SparseVec& a, const SparseVec& b) { return a.front().first < b.front().first; });
        for (std::size_t r = 0; r < rows_.size(); ++r) pivot_row_[rows_[r].front().first] = static_cast<long>(r);
        for (std::size_t k = rows_.size(); k-- > 0;) {
            SparseVec& row = rows_[k];
            bool needs = false;
            for (std::size_t t = 1; t < row.size(); ++t)
                if (pivot_row_[row[t].first] >= 0) { needs = true; break; }
            if (!needs) continue;
            std::size_t hi = row.back().first;
            for (const auto& [i, x] : row) work_[i] = x;
            for (std::size_t t = 1; t < row.size(); ++t) {
                std::size_t c = row[t].first;
                if (pivot_row_[c] < 0 || sgn(work_[c]) == 0) continue;
                Rat f = work_[c];
                for (const auto& [j, y] : rows_[static_cast<std::size_t>(pivot_row_[c])]) {
                    work_[j] -= f * y;
                    if (j > hi) hi = j;
                }
            }
            SparseVec out;
            for (std::size_t c = row.front().first; c <= hi; ++c)
                if (sgn(work_[c]) != 0) {
                    out.emplace_back(c, work_[c]);
                    work_[c] = 0;
                }
            row = std::move(out);
        }
        reduced_ = true;
    }

    std::vector<std::size_t> pivots() {
        finalize();
        std::vector<std::size_t> p;
        for (const auto& r : rows_) p.push_back(r.front().first);
        return p;
    }

    // Null space basis of the stacked rows (canonical: one vector per free column).
    std::vector<Vec> kernel_basis(std::size_t ncols_used) {
        finalize();
        std::vector<Vec> ker;
        for (std::size_t f = 0; f < ncols_used; ++f) {
            if (pivot_row_[f] >= 0) continue;
            Vec v(ncols_used);
            v[f] = 1;
            for (const auto& row : rows_) {
                std::size_t p = row.front().first;
                if (p >= ncols_used) continue;
                auto it = std::lower_bound(row.begin(), row.end(), f,
                                           [](const auto& e, std::size_t c) { return e.first < c; });
                if (it != row.end() && it->first == f) v[p] = -it->second;
            }
            ker.push_back(std::move(v));
        }
        return ker;
    }

private:
    std::size_t ncols_;
    std::vector<SparseVec> rows_;
    std::vector<long> pivot_row_;
    std::vector<Rat> work_;
    bool reduced_ = true;
};

// A linear subspace of Q^n kept in canonical reduced echelon form, so two
// subspaces are equal iff their bases are equal.
struct Subspace {
    std::size_t ambient = 0;
    std::vector<Vec> basis;

    std::size_t dim() const { return basis.size(); }
    bool operator==(const Subspace& o) const { return ambient == o.ambient && basis == o.basis; }

    static Subspace span(std::size_t ambient, const std::vector<Vec>& vs) {
        Echelon e(ambient);
        for (const auto& v : vs) {
            if (v.size() != ambient) throw std::invalid_argument("vector length differs from ambient dimension");
            e.insert(v);
        }
        e.finalize();
        Subspace s;
        s.ambient = ambient;
        for (const auto& r : e.rows()) s.basis.push_back(to_dense(r, ambient));
        return s;
    }
    static Subspace whole(std::size_t n) {
        std::vector<Vec> vs;
        for (std::size_t i = 0; i < n; ++i) {
            Vec v(n);
            v[i] = 1;
            vs.push_back(v);
        }
        return span(n, vs);
    }
    bool contains(const Vec& v) const {
        Echelon e(ambient);
        for (const auto& b : basis) e.insert(b);
        return e.reduce(to_sparse(v)).empty();
    }
};

struct RrefResult {
    std::size_t rank = 0;
    Subspace row_space;
    Subspace kernel;
    std::vector<std::size_t> pivots;
};

inline RrefResult rref(const Mat& m) {
    Echelon e(m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) e.insert(m.row(i));
    RrefResult r;
    r.rank = e.rank();
    r.pivots = e.pivots();
    r.row_space.ambient = m.cols;
    for (const auto& row : e.rows()) r.row_space.basis.push_back(to_dense(row, m.cols));
    r.kernel = Subspace::span(m.cols, e.kernel_basis(m.cols));
    return r;
}

inline std::size_t rank(const Mat& m) {
    Echelon e(m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) e.insert(m.row(i));
    return e.rank();
}

inline std::size_t rank_of(std::size_t ncols, const std::vector<Vec>& rows) {
    Echelon e(ncols);
    for (const auto& r : rows) e.insert(r);
    return e.rank();
}

// Vectors u with b.u = 0 for every basis vector b.
inline Subspace annihilator(const Subspace& s) {
    Echelon e(s.ambient);
    for (const auto& b : s.basis) e.insert(b);
    return Subspace::span(s.ambient, e.kernel_basis(s.ambient));
}

inline Subspace sum(const Subspace& a, const Subspace& b) {
    if (a.ambient != b.ambient) throw std::invalid_argument("ambient dimension mismatch");
    std::vector<Vec> vs = a.basis;
    vs.insert(vs.end(), b.basis.begin(), b.basis.end());
    return Subspace::span(a.ambient, vs);
}

inline Subspace intersect(const Subspace& a, const Subspace& b) {
    if (a.ambient != b.ambient) throw std::invalid_argument("ambient dimension mismatch");
    Subspace na = annihilator(a), nb = annihilator(b);
    return annihilator(sum(na, nb));
}

struct AffineSolution {
    bool solvable = false;
    Vec particular;
    Subspace kernel;
    std::size_t rank = 0;          // rank of the coefficient matrix
    std::size_t augmented_rank = 0;  // rank of (coeff | rhs)
};

// Solves sum_j rows[i][j] x_j = rhs[i] exactly. Rows are sparse over ncols unknowns.
inline AffineSolution solve_affine_sparse(std::size_t ncols, const std::vector<SparseVec>& rows,
                                          const Vec& rhs, bool want_kernel = true) {
    if (rows.size() != rhs.size()) throw std::invalid_argument("rhs length differs from row count");
    Echelon e(ncols + 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        SparseVec r = rows[i];
        if (sgn(rhs[i]) != 0) r.emplace_back(ncols, rhs[i]);
        e.insert(r);
    }
    e.finalize();
    AffineSolution s;
    s.augmented_rank = e.rank();
    s.rank = e.rank();
    s.solvable = true;
    for (const auto& r : e.rows())
        if (r.front().first == ncols) {
            s.solvable = false;
            s.rank = e.rank() - 1;
        }
    s.kernel.ambient = ncols;
    if (!s.solvable) return s;
    s.particular.assign(ncols, Rat(0));
    for (const auto& r : e.rows())
        if (r.back().first == ncols) s.particular[r.front().first] = r.back().second;
    if (want_kernel) s.kernel = Subspace::span(ncols, e.kernel_basis(ncols));
    return s;
}

inline AffineSolution solve_affine(const Mat& coeff, const Vec& rhs) {
    if (coeff.rows != rhs.size()) throw std::invalid_argument("rhs length differs from row count");
    std::vector<SparseVec> rows;
    for (std::size_t i = 0; i < coeff.rows; ++i) rows.push_back(to_sparse(coeff.row(i)));
    return solve_affine_sparse(coeff.cols, rows, rhs);
}

}  // namespace eds
