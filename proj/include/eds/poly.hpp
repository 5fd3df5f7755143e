#pragma once
// Dense-exponent multivariate polynomials over Q in a fixed list of
// indeterminates, ordered graded-lexicographically (index 0 most significant).

#include "eds/rat.hpp"

#include <map>
#include <stdexcept>
#include <vector>

namespace eds {

using Mono = std::vector<int>;

struct GrlexLess {
    bool operator()(const Mono& a, const Mono& b) const {
        long da = 0, db = 0;
        for (int x : a) da += x;
        for (int x : b) db += x;
        if (da != db) return da < db;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i] != b[i]) return a[i] < b[i];
        return false;
    }
};

// Terms sorted ascending; the leading term is the last one.
using Poly = std::map<Mono, Rat, GrlexLess>;

namespace poly {

inline Poly constant(const Rat& c, std::size_t nvars) {
    Poly p;
    if (sgn(c) != 0) p.emplace(Mono(nvars, 0), c);
    return p;
}

inline Poly variable(std::size_t i, std::size_t nvars) {
    Mono m(nvars, 0);
    m[i] = 1;
    Poly p;
    p.emplace(m, Rat(1));
    return p;
}

inline void add_term(Poly& p, const Mono& m, const Rat& c) {
    if (sgn(c) == 0) return;
    auto [it, inserted] = p.emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (sgn(it->second) == 0) p.erase(it);
    }
}

inline Poly add(const Poly& a, const Poly& b) {
    Poly r = a;
    for (const auto& [m, c] : b) add_term(r, m, c);
    return r;
}

inline Poly sub(const Poly& a, const Poly& b) {
    Poly r = a;
    for (const auto& [m, c] : b) add_term(r, m, -c);
    return r;
}

inline Poly scale(const Poly& a, const Rat& c) {
    if (sgn(c) == 0) return {};
    Poly r;
    for (const auto& [m, x] : a) r.emplace_hint(r.end(), m, x * c);
    return r;
}

inline Poly mul(const Poly& a, const Poly& b) {
    Poly r;
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) {
            Mono m(ma.size());
            for (std::size_t i = 0; i < m.size(); ++i) m[i] = ma[i] + mb[i];
            add_term(r, m, ca * cb);
        }
    return r;
}

inline Poly power(const Poly& a, long n, std::size_t nvars) {
    Poly r = constant(1, nvars), base = a;
    while (n > 0) {
        if (n & 1) r = mul(r, base);
        n >>= 1;
        if (n) base = mul(base, base);
    }
    return r;
}

inline bool is_constant(const Poly& p) {
    if (p.empty()) return true;
    if (p.size() != 1) return false;
    for (int x : p.begin()->first)
        if (x) return false;
    return true;
}

inline const Rat& leading_coeff(const Poly& p) { return p.rbegin()->second; }

inline Poly monic(const Poly& p) {
    if (p.empty()) return p;
    Rat lc = leading_coeff(p);
    return scale(p, 1 / lc);
}

// Exact quotient a/b; throws if b does not divide a.
inline Poly divide_exact(const Poly& a, const Poly& b) {
    if (b.empty()) throw std::domain_error("polynomial division by zero");
    Poly q, r = a;
    const auto& [lmb, lcb] = *b.rbegin();
    while (!r.empty()) {
        const auto& [lmr, lcr] = *r.rbegin();
        Mono m(lmr.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
            m[i] = lmr[i] - lmb[i];
            if (m[i] < 0) throw std::domain_error("inexact polynomial division");
        }
        Rat c = lcr / lcb;
        Poly t;
        t.emplace(m, c);
        q = add(q, t);
        r = sub(r, mul(t, b));
    }
    return q;
}

inline int degree_in(const Poly& p, std::size_t v) {
    int d = -1;
    for (const auto& [m, c] : p) d = std::max(d, m[v]);
    return d;
}

// Coefficients of p as a polynomial in variable v.
inline std::map<int, Poly> coefficients_in(const Poly& p, std::size_t v) {
    std::map<int, Poly> out;
    for (const auto& [m, c] : p) {
        Mono k = m;
        int e = k[v];
        k[v] = 0;
        out[e].emplace(k, c);
    }
    return out;
}

inline Poly shift(const Poly& p, std::size_t v, int e) {
    Poly r;
    for (const auto& [m, c] : p) {
        Mono k = m;
        k[v] += e;
        r.emplace(k, c);
    }
    return r;
}

Poly gcd(const Poly& a, const Poly& b);

inline Poly content_in(const Poly& p, std::size_t v) {
    Poly g;
    for (const auto& [e, c] : coefficients_in(p, v)) {
        g = gcd(g, c);
        if (is_constant(g) && !g.empty()) break;
    }
    return g;
}

inline Poly pseudo_remainder(const Poly& a, const Poly& b, std::size_t v) {
    int db = degree_in(b, v);
    Poly lb = coefficients_in(b, v)[db];
    Poly r = a;
    while (!r.empty()) {
        int dr = degree_in(r, v);
        if (dr < db) break;
        Poly lr = coefficients_in(r, v)[dr];
        r = sub(mul(lb, r), mul(shift(lr, v, dr - db), b));
    }
    return r;
}

// Greatest common divisor over Q, normalized monic; gcd(0,0) = 0.
inline Poly gcd(const Poly& a, const Poly& b) {
    if (a.empty()) return monic(b);
    if (b.empty()) return monic(a);
    std::size_t n = a.begin()->first.size();
    if (is_constant(a) || is_constant(b)) return constant(1, n);
    long v = -1;
    for (std::size_t i = n; i-- > 0;)
        if (degree_in(a, i) > 0 || degree_in(b, i) > 0) {
            v = static_cast<long>(i);
            break;
        }
    if (v < 0) return constant(1, n);
    std::size_t x = static_cast<std::size_t>(v);
    if (degree_in(a, x) == 0) return gcd(a, content_in(b, x));
    if (degree_in(b, x) == 0) return gcd(content_in(a, x), b);
    Poly ca = content_in(a, x), cb = content_in(b, x);
    Poly pa = divide_exact(a, ca), pb = divide_exact(b, cb);
    Poly g = gcd(ca, cb);
    if (degree_in(pa, x) < degree_in(pb, x)) std::swap(pa, pb);
    while (!pb.empty()) {
        Poly r = pseudo_remainder(pa, pb, x);
        pa = pb;
        if (r.empty()) break;
        if (degree_in(r, x) == 0) {
            pa = constant(1, n);
            break;
        }
        pb = divide_exact(r, content_in(r, x));
    }
    Poly h = divide_exact(pa, content_in(pa, x));
    return monic(mul(g, h));
}

}  // namespace poly
}  // namespace eds
