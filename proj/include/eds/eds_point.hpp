#pragma once
// Constant-coefficient exterior ideals at a point: integral elements, polar
// spaces, flag characters and the Cartan-ordinary test.

#include "eds/tableau.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace eds {

struct PointIdeal {
    int N = 0;
    std::vector<Form<Rat>> gens;

    void check() const {
        for (const auto& g : gens) {
            if (g.degree < 1) throw std::invalid_argument("ideal generators must have positive degree");
            for (const auto& [idx, c] : g.terms)
                for (int x : idx)
                    if (x < 0 || x >= N) throw std::invalid_argument("generator index out of range");
        }
    }
};

// Span of g ^ e^J over generators g and monomials J, reduced to a basis.
inline std::vector<Form<Rat>> algebraic_degree_part(const PointIdeal& ideal, int q) {
    std::vector<Form<Rat>> out;
    if (q < 1 || q > ideal.N) return out;
    Combos cq(ideal.N, q);
    Echelon e(cq.size());
    for (const auto& g : ideal.gens) {
        if (g.degree > q) continue;
        for (const auto& J : combinations(ideal.N, q - g.degree)) {
            Form<Rat> w = wedge(g, Form<Rat>::monomial(J, Rat(1)));
            SparseVec v;
            for (const auto& [idx, c] : w.terms) v.emplace_back(cq.lex_rank.at(idx), c);
            std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            e.insert(v);
        }
    }
    e.finalize();
    for (const auto& r : e.rows()) {
        Form<Rat> f(q);
        for (const auto& [i, c] : r) f.add(cq.lex[i], c);
        out.push_back(f);
    }
    return out;
}

inline std::vector<Vec> pick(const std::vector<Vec>& vs, const Index& I) {
    std::vector<Vec> out;
    for (int i : I) out.push_back(vs[static_cast<std::size_t>(i)]);
    return out;
}

inline void require_independent(int N, const std::vector<Vec>& e) {
    for (const auto& v : e)
        if (static_cast<int>(v.size()) != N) throw std::invalid_argument("vector length differs from ambient dimension");
    if (rank_of(static_cast<std::size_t>(N), e) != e.size()) throw std::invalid_argument("dependent basis");
}

// Every generator of degree <= p vanishes on every subset of the basis.
inline bool is_integral(const PointIdeal& ideal, const std::vector<Vec>& e) {
    require_independent(ideal.N, e);
    int p = static_cast<int>(e.size());
    for (const auto& g : ideal.gens) {
        if (g.degree > p) continue;
        for (const auto& I : combinations(p, g.degree))
            if (sgn(evaluate(g, pick(e, I))) != 0) return false;
    }
    return true;
}

struct PolarSpace {
    Subspace H;
    int c = 0;
};

// H(E) = { v : g(v, e_I) = 0 for every generator g and (deg g - 1)-subset I }.
inline PolarSpace polar_space(const PointIdeal& ideal, const std::vector<Vec>& e) {
    if (!is_integral(ideal, e)) throw std::invalid_argument("element is not integral");
    int p = static_cast<int>(e.size());
    std::size_t N = static_cast<std::size_t>(ideal.N);
    Echelon rows(N);
    for (const auto& g : ideal.gens) {
        if (g.degree > p + 1) continue;
        for (const auto& I : combinations(p, g.degree - 1)) {
            Form<Rat> f = g;
            auto args = pick(e, I);
            for (auto it = args.rbegin(); it != args.rend(); ++it) f = contract(f, *it);
            // equals g(., e_I) up to sign
            Vec v(N);
            for (const auto& [idx, c] : f.terms) v[static_cast<std::size_t>(idx[0])] = c;
            rows.insert(v);
        }
    }
    PolarSpace ps;
    ps.H = Subspace::span(N, rows.kernel_basis(N));
    ps.c = static_cast<int>(N - ps.H.dim());
    return ps;
}

// Polar space from the definition: contract the whole degree-(p+1) part.
inline Subspace polar_space_by_definition(const PointIdeal& ideal, const std::vector<Vec>& e) {
    int p = static_cast<int>(e.size());
    std::size_t N = static_cast<std::size_t>(ideal.N);
    Echelon rows(N);
    for (const auto& phi : algebraic_degree_part(ideal, p + 1)) {
        Form<Rat> f = phi;
        for (auto it = e.rbegin(); it != e.rend(); ++it) f = contract(f, *it);
        Vec v(N);
        for (const auto& [idx, c] : f.terms) v[static_cast<std::size_t>(idx[0])] = c;
        rows.insert(v);
    }
    return Subspace::span(N, rows.kernel_basis(N));
}

struct FlagReport {
    std::vector<int> c;   // c(E_0) .. c(E_{n-1})
    std::vector<int> s;   // s_0 .. s_n
    int bound = 0;
    std::optional<int> codim;  // set when the integral-element equations are affine
    int linear_rank = 0;
    bool nonlinear = false;
    std::string verdict;  // ordinary | not_ordinary | inconclusive
};

// E_i = span of the first i vectors of the element basis.
inline FlagReport flag_characters(const PointIdeal& ideal, const std::vector<Vec>& e) {
    int n = static_cast<int>(e.size());
    FlagReport r;
    int last_dim = 0;
    for (int i = 0; i < n; ++i) {
        std::vector<Vec> Ei(e.begin(), e.begin() + i);
        if (!is_integral(ideal, Ei)) throw std::invalid_argument("flag member E_" + std::to_string(i) + " is not integral");
        PolarSpace ps = polar_space(ideal, Ei);
        r.c.push_back(ps.c);
        last_dim = static_cast<int>(ps.H.dim());
    }
    if (!is_integral(ideal, e)) throw std::invalid_argument("flag member E_" + std::to_string(n) + " is not integral");
    if (n == 0) {
        r.s = {0};
        return r;
    }
    r.s.push_back(r.c[0]);
    for (int i = 1; i < n; ++i) r.s.push_back(r.c[static_cast<std::size_t>(i)] - r.c[static_cast<std::size_t>(i - 1)]);
    r.s.push_back(last_dim - n);
    for (int x : r.c) r.bound += x;
    return r;
}

// Standard basis vectors completing e to a basis, chosen greedily.
inline std::vector<Vec> default_transverse(int N, const std::vector<Vec>& e) {
    Echelon ech(static_cast<std::size_t>(N));
    for (const auto& v : e) ech.insert(v);
    std::vector<Vec> out;
    for (int j = 0; j < N; ++j) {
        Vec v(static_cast<std::size_t>(N));
        v[static_cast<std::size_t>(j)] = 1;
        if (ech.insert(v)) out.push_back(v);
    }
    return out;
}

struct VarietyChart {
    bool affine = true;
    int linear_rank = 0;
};

// Pulls the generators back to the graph e_i + sum_a q_{a i} f_a and sorts the
// resulting polynomial equations in q into linear and higher-order parts.
inline VarietyChart integral_variety_codim(const PointIdeal& ideal, const std::vector<Vec>& e,
                                           const std::vector<Vec>& transverse) {
    int n = static_cast<int>(e.size());
    int k = static_cast<int>(transverse.size());
    std::vector<Vec> all = e;
    all.insert(all.end(), transverse.begin(), transverse.end());
    if (static_cast<int>(all.size()) != ideal.N) throw std::invalid_argument("element plus transverse directions must span");
    require_independent(ideal.N, all);
    if (!is_integral(ideal, e)) throw std::invalid_argument("element is not integral");
    std::size_t nq = static_cast<std::size_t>(n * k);
    Echelon lin(nq);
    VarietyChart out;
    for (const auto& g : ideal.gens) {
        int d = g.degree;
        if (d > n) continue;
        for (const auto& I : combinations(n, d)) {
            // Each slot takes e_i (choice -1) or f_a; monomial = product of q_{a i}.
            std::map<std::vector<std::size_t>, Rat> poly;
            std::vector<int> choice(static_cast<std::size_t>(d), -1);
            while (true) {
                std::vector<Vec> args;
                std::vector<std::size_t> mono;
                for (int s = 0; s < d; ++s) {
                    int ch = choice[static_cast<std::size_t>(s)];
                    int i = I[static_cast<std::size_t>(s)];
                    if (ch < 0) args.push_back(e[static_cast<std::size_t>(i)]);
                    else {
                        args.push_back(transverse[static_cast<std::size_t>(ch)]);
                        mono.push_back(static_cast<std::size_t>(ch * n + i));
                    }
                }
                Rat v = evaluate(g, args);
                if (sgn(v) != 0) {
                    std::sort(mono.begin(), mono.end());
                    poly[mono] += v;
                }
                int s = 0;
                while (s < d) {
                    int& ch = choice[static_cast<std::size_t>(s)];
                    if (++ch < k) break;
                    ch = -1;
                    ++s;
                }
                if (s == d) break;
            }
            SparseVec row;
            for (const auto& [mono, c] : poly) {
                if (sgn(c) == 0) continue;
                if (mono.size() == 1) row.emplace_back(mono[0], c);
                else if (mono.size() > 1) out.affine = false;
            }
            std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            lin.insert(row);
        }
    }
    out.linear_rank = static_cast<int>(lin.rank());
    return out;
}

inline FlagReport ordinary_test(const PointIdeal& ideal, const std::vector<Vec>& e,
                                const std::optional<std::vector<Vec>>& transverse = std::nullopt) {
    FlagReport r = flag_characters(ideal, e);
    VarietyChart ch = integral_variety_codim(ideal, e, transverse ? *transverse : default_transverse(ideal.N, e));
    r.linear_rank = ch.linear_rank;
    r.nonlinear = !ch.affine;
    if (ch.affine) {
        r.codim = ch.linear_rank;
        r.verdict = *r.codim == r.bound ? "ordinary" : "not_ordinary";
    } else {
        r.verdict = ch.linear_rank > r.bound ? "not_ordinary" : "inconclusive";
    }
    return r;
}

}  // namespace eds
