#pragma once
// Exterior algebra on a frame and the structure-equation exterior derivative.
// Coefficients live on strictly increasing index tuples.

#include "eds/linalg.hpp"
#include "eds/symexpr.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace eds {

using Index = std::vector<int>;

inline bool coeff_is_zero(const Rat& c) { return sgn(c) == 0; }
inline bool coeff_is_zero(const Expr& c) { return c.is_const_zero(); }

template <class C>
struct Form {
    int degree = 0;
    std::map<Index, C> terms;

    Form() = default;
    explicit Form(int q) : degree(q) {}

    static Form scalar(const C& c) {
        Form f(0);
        if (!coeff_is_zero(c)) f.terms[{}] = c;
        return f;
    }
    static Form basis(int i) {
        Form f(1);
        f.terms[{i}] = C(1);
        return f;
    }
    static Form monomial(const Index& idx, const C& c) {
        Form f(static_cast<int>(idx.size()));
        f.add(idx, c);
        return f;
    }

    bool empty() const { return terms.empty(); }
    C coeff(const Index& idx) const {
        auto it = terms.find(idx);
        return it == terms.end() ? C(0) : it->second;
    }
    void add(const Index& idx, const C& c) {
        if (coeff_is_zero(c)) return;
        auto it = terms.find(idx);
        if (it == terms.end()) terms.emplace(idx, c);
        else {
            it->second = it->second + c;
            if (coeff_is_zero(it->second)) terms.erase(it);
        }
    }
    Form& operator+=(const Form& o) {
        if (!o.empty() && !empty() && o.degree != degree) throw std::invalid_argument("adding forms of different degree");
        if (empty()) degree = o.degree;
        for (const auto& [k, c] : o.terms) add(k, c);
        return *this;
    }
    Form operator+(const Form& o) const {
        Form r = *this;
        r += o;
        return r;
    }
    Form scaled(const C& s) const {
        Form r(degree);
        if (coeff_is_zero(s)) return r;
        for (const auto& [k, c] : terms) r.add(k, c * s);
        return r;
    }
    Form operator-() const { return scaled(C(-1)); }
    Form operator-(const Form& o) const { return *this + (-o); }
    bool operator==(const Form& o) const { return terms == o.terms && (degree == o.degree || empty()); }
};

// Sign of the permutation sorting the concatenation of two increasing tuples,
// or 0 if they share an index.
inline int merge_sign(const Index& a, const Index& b, Index& out) {
    out.clear();
    out.reserve(a.size() + b.size());
    long inv = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i] < b[j])) out.push_back(a[i++]);
        else if (i == a.size() || b[j] < a[i]) {
            inv += static_cast<long>(a.size() - i);
            out.push_back(b[j++]);
        } else return 0;
    }
    return (inv % 2) ? -1 : 1;
}

template <class C>
Form<C> wedge(const Form<C>& x, const Form<C>& y) {
    Form<C> r(x.degree + y.degree);
    Index m;
    for (const auto& [a, ca] : x.terms)
        for (const auto& [b, cb] : y.terms) {
            int s = merge_sign(a, b, m);
            if (s == 0) continue;
            C prod = ca * cb;
            r.add(m, s > 0 ? prod : C(-1) * prod);
        }
    return r;
}

// Interior product with a vector given in frame coordinates.
template <class C>
Form<C> contract(const Form<C>& f, const Vec& v) {
    if (f.degree < 1) throw std::invalid_argument("contraction of a degree-0 form");
    Form<C> r(f.degree - 1);
    for (const auto& [idx, c] : f.terms)
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const Rat& x = v.at(static_cast<std::size_t>(idx[k]));
            if (sgn(x) == 0) continue;
            Index rest;
            for (std::size_t t = 0; t < idx.size(); ++t)
                if (t != k) rest.push_back(idx[t]);
            Rat s = (k % 2) ? Rat(-x) : x;
            r.add(rest, c * C(s));
        }
    return r;
}

inline Rat det(std::vector<Vec> m) {
    std::size_t n = m.size();
    Rat d = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && sgn(m[p][c]) == 0) ++p;
        if (p == n) return 0;
        if (p != c) {
            std::swap(m[p], m[c]);
            d = -d;
        }
        d *= m[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            if (sgn(m[r][c]) == 0) continue;
            Rat f = m[r][c] / m[c][c];
            for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
        }
    }
    return d;
}

// phi(v_1, ..., v_q) for a Rat-coefficient form.
inline Rat evaluate(const Form<Rat>& f, const std::vector<Vec>& vs) {
    if (static_cast<int>(vs.size()) != f.degree) throw std::invalid_argument("argument count differs from degree");
    Rat s = 0;
    std::size_t q = vs.size();
    for (const auto& [idx, c] : f.terms) {
        std::vector<Vec> m(q, Vec(q));
        for (std::size_t a = 0; a < q; ++a)
            for (std::size_t b = 0; b < q; ++b) m[a][b] = vs[a][static_cast<std::size_t>(idx[b])];
        s += c * det(m);
    }
    return s;
}

inline Form<Rat> evaluate_form(const Form<Expr>& f, const SamplePoint& p) {
    Form<Rat> r(f.degree);
    Evaluator ev(p);
    for (const auto& [k, c] : f.terms) r.add(k, ev(c));
    return r;
}

inline Form<Expr> to_expr_form(const Form<Rat>& f) {
    Form<Expr> r(f.degree);
    for (const auto& [k, c] : f.terms) r.add(k, Expr(c));
    return r;
}

// Normalizes every coefficient and drops the ones that vanish identically.
inline Form<Expr> simplify(const Form<Expr>& f) {
    Form<Expr> r(f.degree);
    for (const auto& [k, c] : f.terms) {
        Expr n = normalize(c);
        if (!n.is_const_zero()) r.terms.emplace(k, n);
    }
    return r;
}

// All strictly increasing q-tuples from 0..n-1, in lexicographic order.
inline std::vector<Index> combinations(int n, int q) {
    std::vector<Index> out;
    if (q < 0 || q > n) return out;
    Index c(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) c[static_cast<std::size_t>(i)] = i;
    while (true) {
        out.push_back(c);
        int i = q - 1;
        while (i >= 0 && c[static_cast<std::size_t>(i)] == n - q + i) --i;
        if (i < 0) break;
        ++c[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < q; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

inline std::string index_label(const Index& idx, const std::vector<std::string>& labels) {
    std::string s;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i) s += "^";
        s += labels.at(static_cast<std::size_t>(idx[i]));
    }
    return s;
}

inline std::string print_form(const Form<Expr>& f, const std::vector<std::string>& labels) {
    if (f.empty()) return "0";
    std::string s;
    for (const auto& [k, c] : f.terms) {
        std::string cs = print(c), t;
        bool neg = false;
        if (c.is_const() && c.value() < 0) {
            neg = true;
            cs = print(Expr(Rat(-c.value())));
        }
        bool one = cs == "1";
        if (k.empty()) t = cs.find_first_of(" +-*/") == std::string::npos ? cs : "(" + cs + ")";
        else if (one) t = index_label(k, labels);
        else if (cs.find_first_of(" +-/") == std::string::npos) t = cs + "*" + index_label(k, labels);
        else t = "(" + cs + ")*" + index_label(k, labels);
        if (s.empty()) s = neg ? "-" + t : t;
        else s += (neg ? " - " : " + ") + t;
    }
    return s;
}

// ---------------------------------------------------------- structure systems

enum class Mode { CTFT, VARIANT, TYPE_A };

inline std::string mode_name(Mode m) {
    switch (m) {
        case Mode::CTFT: return "CTFT";
        case Mode::VARIANT: return "VARIANT";
        case Mode::TYPE_A: return "TYPE_A";
    }
    return "?";
}

// dw^i = -1/2 C^i_jk w^j ^ w^k is stored as the 2-form dw[i]; its coefficient on
// (j,k), j<k, is -C^i_jk. Labels n.. n+r-1 are the formal extras beta^rho.
struct StructureSystem {
    std::string name;
    Mode mode = Mode::CTFT;
    std::vector<std::string> coframe;
    VarTable vars;
    std::vector<Form<Expr>> dw;
    std::vector<std::optional<Form<Expr>>> F;  // per param
    std::vector<std::optional<Form<Expr>>> G;  // per free
    std::vector<Expr> relations;               // each means expr = 0
    std::vector<SamplePoint> samples;

    std::size_t n() const { return coframe.size(); }
    std::size_t s() const { return vars.params.size(); }
    std::size_t r() const { return vars.frees.size(); }
    std::vector<std::string> labels() const {
        std::vector<std::string> l = coframe;
        for (const auto& b : vars.frees) l.push_back("beta_" + b);
        return l;
    }
    Expr C(int i, int j, int k) const {
        if (j == k) return Expr(0);
        if (j < k) return -dw.at(static_cast<std::size_t>(i)).coeff({j, k});
        return dw.at(static_cast<std::size_t>(i)).coeff({k, j});
    }
    std::size_t param_index(const std::string& p) const {
        for (std::size_t a = 0; a < vars.params.size(); ++a)
            if (vars.params[a] == p) return a;
        throw std::invalid_argument("unknown parameter '" + p + "'");
    }
    std::size_t free_index(const std::string& p) const {
        for (std::size_t a = 0; a < vars.frees.size(); ++a)
            if (vars.frees[a] == p) return a;
        throw std::invalid_argument("unknown free derivative '" + p + "'");
    }
};

// How d(b^rho) is rewritten for free derivatives.
enum class BetaMode { Formal, GPlusBeta };

class StructureD {
public:
    StructureD(const StructureSystem& sys, BetaMode mode) : sys_(sys), mode_(mode) {}

    Form<Expr> d_coefficient(const Expr& c) {
        Form<Expr> r(1);
        if (c.is_const()) return r;
        for (const auto& v : dependencies(c)) {
            Expr dc = diff(c, v, sys_.vars);
            if (is_zero_cheap(dc)) continue;
            r += differential(v).scaled(dc);
        }
        return r;
    }

    Form<Expr> d_basis(const Index& idx) {
        Form<Expr> r(static_cast<int>(idx.size()) + 1);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            int lab = idx[k];
            if (lab >= static_cast<int>(sys_.n()))
                throw std::invalid_argument("exterior derivative of a formal extra is not defined");
            Form<Expr> left = Form<Expr>::scalar(Expr(1));
            for (std::size_t t = 0; t < k; ++t) left = wedge(left, Form<Expr>::basis(idx[t]));
            Form<Expr> right = Form<Expr>::scalar(Expr(1));
            for (std::size_t t = k + 1; t < idx.size(); ++t) right = wedge(right, Form<Expr>::basis(idx[t]));
            Form<Expr> term = wedge(wedge(left, sys_.dw.at(static_cast<std::size_t>(lab))), right);
            r += (k % 2) ? -term : term;
        }
        return r;
    }

    Form<Expr> operator()(const Form<Expr>& f) {
        Form<Expr> r(f.degree + 1);
        for (const auto& [idx, c] : f.terms) {
            Form<Expr> basis = Form<Expr>::monomial(idx, Expr(1));
            r += wedge(d_coefficient(c), basis);
            if (!idx.empty()) r += d_basis(idx).scaled(c);
        }
        return r;
    }

private:
    static bool is_zero_cheap(const Expr& e) { return e.is_const_zero(); }

    Form<Expr> differential(const std::string& v) {
        if (sys_.vars.is_param(v)) {
            const auto& f = sys_.F.at(sys_.param_index(v));
            if (!f) throw std::invalid_argument("no rule for d" + v);
            return *f;
        }
        std::size_t rho = sys_.free_index(v);
        Form<Expr> beta = Form<Expr>::basis(static_cast<int>(sys_.n() + rho));
        if (mode_ == BetaMode::GPlusBeta && sys_.G.at(rho)) return *sys_.G[rho] + beta;
        return beta;
    }

    const StructureSystem& sys_;
    BetaMode mode_;
};

inline Form<Expr> structure_d(const StructureSystem& sys, const Form<Expr>& f, BetaMode mode = BetaMode::Formal) {
    StructureD d(sys, mode);
    return d(f);
}

}  // namespace eds
