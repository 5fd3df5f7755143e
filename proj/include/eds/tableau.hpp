#pragma once
// Tableaux of W-valued q-forms on V: flag restrictions, characters,
// prolongation and Cartan's test.

#include "eds/exterior.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace eds {

// q-subsets of {0..n-1} with lexicographic and colexicographic ranks.
struct Combos {
    int n = 0, q = 0;
    std::vector<Index> lex;
    std::map<Index, std::size_t> lex_rank;
    std::vector<std::size_t> colex_rank;  // by lex rank

    Combos() = default;
    Combos(int n_, int q_) : n(n_), q(q_), lex(combinations(n_, q_)) {
        for (std::size_t i = 0; i < lex.size(); ++i) lex_rank[lex[i]] = i;
        std::vector<std::size_t> order(lex.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::lexicographical_compare(lex[a].rbegin(), lex[a].rend(), lex[b].rbegin(), lex[b].rend());
        });
        colex_rank.assign(lex.size(), 0);
        for (std::size_t r = 0; r < order.size(); ++r) colex_rank[order[r]] = r;
    }
    std::size_t size() const { return lex.size(); }
};

// Generators are flattened: entry a*C(n,q) + rank(I) is the coefficient of
// w_a (x) e^I.
struct FormTableau {
    int m = 0, n = 0, q = 1;
    std::vector<Vec> gens;

    std::size_t ncomp() const { return static_cast<std::size_t>(binomial(n, q).get_si()); }
    std::size_t width() const { return static_cast<std::size_t>(m) * ncomp(); }

    static FormTableau from_forms(int m, int n, int q, const std::vector<std::vector<Form<Rat>>>& gs) {
        FormTableau t{m, n, q, {}};
        Combos cb(n, q);
        for (const auto& g : gs) {
            if (static_cast<int>(g.size()) != m) throw std::invalid_argument("generator has the wrong number of components");
            Vec v(t.width());
            for (int a = 0; a < m; ++a)
                for (const auto& [idx, c] : g[static_cast<std::size_t>(a)].terms) {
                    if (static_cast<int>(idx.size()) != q) throw std::invalid_argument("generator component of wrong degree");
                    v[static_cast<std::size_t>(a) * cb.size() + cb.lex_rank.at(idx)] = c;
                }
            t.gens.push_back(std::move(v));
        }
        return t;
    }

    std::size_t dim() const { return rank_of(width(), gens); }

    // Canonical echelon basis.
    std::vector<Vec> basis() const { return Subspace::span(width(), gens).basis; }
};

// Drops frame directions that no generator involves. Returns the kept
// directions (in original numbering).
inline std::vector<int> effective_directions(const FormTableau& b) {
    Combos cb(b.n, b.q);
    std::vector<bool> used(static_cast<std::size_t>(b.n), false);
    for (const auto& g : b.gens)
        for (std::size_t a = 0; a < static_cast<std::size_t>(b.m); ++a)
            for (std::size_t i = 0; i < cb.size(); ++i)
                if (sgn(g[a * cb.size() + i]) != 0)
                    for (int j : cb.lex[i]) used[static_cast<std::size_t>(j)] = true;
    std::vector<int> keep;
    for (int j = 0; j < b.n; ++j)
        if (used[static_cast<std::size_t>(j)]) keep.push_back(j);
    return keep;
}

inline FormTableau restrict_directions(const FormTableau& b, const std::vector<int>& keep) {
    int ne = static_cast<int>(keep.size());
    Combos cb(b.n, b.q), ce(ne, b.q);
    FormTableau r{b.m, ne, b.q, {}};
    for (const auto& g : b.gens) {
        Vec v(r.width());
        for (std::size_t a = 0; a < static_cast<std::size_t>(b.m); ++a)
            for (std::size_t i = 0; i < ce.size(); ++i) {
                Index orig;
                for (int j : ce.lex[i]) orig.push_back(keep[static_cast<std::size_t>(j)]);
                v[a * ce.size() + i] = g[a * cb.size() + cb.lex_rank.at(orig)];
            }
        if (!is_zero_vec(v)) r.gens.push_back(std::move(v));
    }
    return r;
}

// A flag is an ordered basis f_1..f_n of V; E_p = span(f_1..f_p).
using Flag = std::vector<Vec>;

inline Flag coordinate_flag(int n, const std::vector<int>& perm) {
    Flag f;
    for (int i = 0; i < n; ++i) {
        Vec v(static_cast<std::size_t>(n));
        v[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = 1;
        f.push_back(v);
    }
    return f;
}

// c_p = dim of the restriction of B to Lambda^q(E_p), p = 1..n.
inline std::vector<std::size_t> restriction_dims(const FormTableau& b, const Flag& flag) {
    if (static_cast<int>(flag.size()) != b.n) throw std::invalid_argument("flag length differs from dim V");
    {
        std::vector<Vec> cols = flag;
        if (rank_of(static_cast<std::size_t>(b.n), cols) != static_cast<std::size_t>(b.n))
            throw std::invalid_argument("singular flag");
    }
    Combos cb(b.n, b.q);
    std::size_t N = cb.size();
    // minors[I] lists (J, det F[J,I]) with F[r][c] = flag[c][r].
    std::vector<std::vector<std::pair<std::size_t, Rat>>> minors(N);
    for (std::size_t I = 0; I < N; ++I)
        for (std::size_t J = 0; J < N; ++J) {
            std::vector<Vec> sub;
            for (int r : cb.lex[J]) {
                Vec row;
                for (int c : cb.lex[I]) row.push_back(flag[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)]);
                sub.push_back(row);
            }
            Rat d = b.q == 0 ? Rat(1) : det(sub);
            if (sgn(d) != 0) minors[I].emplace_back(J, d);
        }
    std::size_t M = static_cast<std::size_t>(b.m);
    Echelon e(M * N);
    for (const auto& g : b.gens) {
        std::vector<std::pair<std::size_t, Rat>> row;
        for (std::size_t I = 0; I < N; ++I)
            for (std::size_t a = 0; a < M; ++a) {
                Rat s = 0;
                for (const auto& [J, d] : minors[I]) {
                    const Rat& x = g[a * N + J];
                    if (sgn(x) != 0) s += x * d;
                }
                if (sgn(s) != 0) row.emplace_back(cb.colex_rank[I] * M + a, s);
            }
        std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        e.insert(row);
    }
    std::vector<std::size_t> c(static_cast<std::size_t>(b.n), 0);
    for (int p = 1; p <= b.n; ++p) {
        std::size_t limit = M * static_cast<std::size_t>(binomial(p, b.q).get_si());
        std::size_t k = 0;
        for (const auto& r : e.rows())
            if (r.front().first < limit) ++k;
        c[static_cast<std::size_t>(p - 1)] = k;
    }
    return c;
}

inline std::vector<std::size_t> characters_from_cumulative(const std::vector<std::size_t>& c) {
    std::vector<std::size_t> s(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) s[i] = c[i] - (i ? c[i - 1] : 0);
    return s;
}

// Sum of i*s_i, i from 1.
inline std::size_t cartan_bound(const std::vector<std::size_t>& s) {
    std::size_t b = 0;
    for (std::size_t i = 0; i < s.size(); ++i) b += (i + 1) * s[i];
    return b;
}

// B(1) = kernel of B (x) V* -> W (x) Lambda^{q+1} V*, returned as a q = 1
// tableau with values in W (x) Lambda^q V*: component ((a,I), j).
inline FormTableau prolong(const FormTableau& b) {
    std::vector<Vec> B = b.basis();
    std::size_t d = B.size(), n = static_cast<std::size_t>(b.n), M = static_cast<std::size_t>(b.m);
    Combos cb(b.n, b.q), cq(b.n, b.q + 1);
    FormTableau out{static_cast<int>(M * cb.size()), b.n, 1, {}};
    if (d == 0) return out;
    // Rows indexed by (a, K); unknown x_{t j} at column t*n + j.
    std::map<std::size_t, std::map<std::size_t, Rat>> rows;
    for (std::size_t t = 0; t < d; ++t)
        for (std::size_t a = 0; a < M; ++a)
            for (std::size_t I = 0; I < cb.size(); ++I) {
                const Rat& x = B[t][a * cb.size() + I];
                if (sgn(x) == 0) continue;
                for (std::size_t j = 0; j < n; ++j) {
                    Index K;
                    int s = merge_sign({static_cast<int>(j)}, cb.lex[I], K);
                    if (s == 0) continue;
                    Rat& cell = rows[a * cq.size() + cq.lex_rank.at(K)][t * n + j];
                    cell += s > 0 ? x : Rat(-x);
                }
            }
    Echelon e(d * n);
    for (const auto& [key, r] : rows) {
        SparseVec sv;
        for (const auto& [c, x] : r)
            if (sgn(x) != 0) sv.emplace_back(c, x);
        e.insert(sv);
    }
    for (const auto& x : e.kernel_basis(d * n)) {
        Vec v(out.width());
        for (std::size_t t = 0; t < d; ++t)
            for (std::size_t j = 0; j < n; ++j) {
                const Rat& c = x[t * n + j];
                if (sgn(c) == 0) continue;
                for (std::size_t w = 0; w < M * cb.size(); ++w)
                    if (sgn(B[t][w]) != 0) v[w * n + j] += c * B[t][w];
            }
        out.gens.push_back(std::move(v));
    }
    return out;
}

inline std::size_t prolongation_dim(const FormTableau& b) { return prolong(b).gens.size(); }

struct InvolutivityReport {
    std::vector<int> effective;       // kept directions of V
    std::vector<std::size_t> c;       // cumulative, effective dimension
    std::vector<std::size_t> s;       // s_1..s_n padded to dim V
    std::size_t dim = 0;
    std::size_t dim_prolongation = 0;
    std::size_t bound = 0;
    bool involutive = false;
    Flag flag;                        // in effective coordinates
    std::size_t flags_tried = 0;
    std::size_t retries_used = 0;
};

struct FlagSearch {
    Flag flag;
    std::vector<std::size_t> c;
    std::size_t tried = 0, retries_used = 0;
};

// Lex-maximal cumulative sequence over the coordinate flag, all coordinate
// permutations when n <= 6, and seeded random integer flags. Stops early once
// the sequence reaches `target_bound` (no flag can do better).
inline FlagSearch generic_flag_search(const FormTableau& b, std::uint64_t seed, int retries,
                                      std::size_t target_bound = 0) {
    FlagSearch best;
    auto consider = [&](const Flag& f) {
        ++best.tried;
        auto c = restriction_dims(b, f);
        if (best.flag.empty() || c > best.c) {
            best.c = c;
            best.flag = f;
        }
        return target_bound > 0 && cartan_bound(characters_from_cumulative(best.c)) == target_bound;
    };
    std::vector<int> perm(static_cast<std::size_t>(b.n));
    std::iota(perm.begin(), perm.end(), 0);
    if (b.n == 0) {
        best.c = {};
        return best;
    }
    if (consider(coordinate_flag(b.n, perm))) return best;
    if (b.n <= 6)
        while (std::next_permutation(perm.begin(), perm.end()))
            if (consider(coordinate_flag(b.n, perm))) return best;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dist(-5, 5);
    for (int k = 0; k < retries; ++k) {
        Flag f;
        do {
            f.assign(static_cast<std::size_t>(b.n), Vec(static_cast<std::size_t>(b.n)));
            for (auto& v : f)
                for (auto& x : v) x = dist(rng);
        } while (rank_of(static_cast<std::size_t>(b.n), f) != static_cast<std::size_t>(b.n));
        ++best.retries_used;
        if (consider(f)) return best;
    }
    return best;
}

inline InvolutivityReport cartan_test(const FormTableau& b, std::uint64_t seed = 0, int retries = 8) {
    if (retries < 1) throw std::invalid_argument("retries must be at least 1");
    InvolutivityReport r;
    r.effective = effective_directions(b);
    FormTableau e = restrict_directions(b, r.effective);
    r.dim = e.dim();
    r.dim_prolongation = prolongation_dim(e);
    FlagSearch fs = generic_flag_search(e, seed, retries, r.dim_prolongation);
    r.c = fs.c;
    r.flag = fs.flag;
    r.flags_tried = fs.tried;
    r.retries_used = fs.retries_used;
    r.s = characters_from_cumulative(r.c);
    r.bound = cartan_bound(r.s);
    r.s.resize(static_cast<std::size_t>(b.n), 0);
    if (r.dim_prolongation > r.bound) throw std::logic_error("prolongation exceeds the Cartan bound");
    r.involutive = r.dim_prolongation == r.bound;
    return r;
}

inline std::string involutivity_verdict(const InvolutivityReport& r) {
    return r.involutive ? "involutive" : "not involutive (certified up to flag search)";
}

struct BinomialRow {
    int k;
    std::size_t computed, formula;
};

// dim B^(k-1) against sum_j C(j+k-2, k-1) s_j for an involutive q = 1 tableau.
inline std::vector<BinomialRow> binomial_dim_check(const FormTableau& b, int k_max, std::uint64_t seed = 0) {
    if (b.q != 1) throw std::invalid_argument("binomial formula applies to q = 1 tableaux");
    InvolutivityReport r = cartan_test(b, seed);
    if (!r.involutive) throw std::invalid_argument("formula valid only for involutive tableaux");
    FormTableau cur = restrict_directions(b, r.effective);
    std::vector<BinomialRow> out;
    for (int k = 1; k <= k_max; ++k) {
        if (k > 1) cur = prolong(cur);
        std::size_t f = 0;
        for (std::size_t j = 1; j <= r.s.size(); ++j)
            f += r.s[j - 1] * static_cast<std::size_t>(binomial(static_cast<long>(j) + k - 2, k - 1).get_si());
        out.push_back({k, cur.dim(), f});
    }
    return out;
}

// Tableau of linear maps f: V -> W whose graphs annihilate the generators.
// Generators live on the frame (w_0..w_{m-1}, v_0..v_{n-1}); each term must
// carry exactly one W index.
inline FormTableau tableau_of_graded_subspace(int m, int n, const std::vector<Form<Rat>>& gens) {
    // Unknown f^a_j at column a*n + j; condition sum_a f^a ^ phi_a = 0.
    std::size_t cols = static_cast<std::size_t>(m * n);
    std::vector<SparseVec> rows;
    for (const auto& g : gens) {
        std::map<Index, std::map<std::size_t, Rat>> eq;
        for (const auto& [idx, c] : g.terms) {
            int nw = 0;
            for (int x : idx)
                if (x < m) ++nw;
            if (nw != 1) throw std::invalid_argument("generator terms must be linear in W*");
            int a = idx.front();
            Index phi;
            for (std::size_t t = 1; t < idx.size(); ++t) phi.push_back(idx[t] - m);
            for (int j = 0; j < n; ++j) {
                Index K;
                int s = merge_sign({j}, phi, K);
                if (s == 0) continue;
                eq[K][static_cast<std::size_t>(a * n + j)] += s > 0 ? c : Rat(-c);
            }
        }
        for (const auto& [K, r] : eq) {
            SparseVec sv;
            for (const auto& [col, x] : r)
                if (sgn(x) != 0) sv.emplace_back(col, x);
            if (!sv.empty()) rows.push_back(sv);
        }
    }
    Echelon e(cols);
    for (const auto& r : rows) e.insert(r);
    FormTableau t{m, n, 1, e.kernel_basis(cols)};
    return t;
}

}  // namespace eds
