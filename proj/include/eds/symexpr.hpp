#pragma once
// Symbolic expressions over declared parameters, free derivatives and unary
// opaque function symbols. Trees are immutable and shared; light folding
// happens at construction, canonical P/Q forms on demand.

#include "eds/poly.hpp"
#include "eds/rat.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace eds {

// Indeterminate kinds in canonical order.
enum class SymKind : int { Param = 0, Free = 1, Function = 2, FormalDerivative = 3 };

struct Sym {
    SymKind kind = SymKind::Param;
    std::string name;
    int order = 0;    // derivative order for function symbols
    std::string arg;  // argument variable for function symbols

    bool is_function() const { return kind == SymKind::Function || kind == SymKind::FormalDerivative; }
    // Name used in sample points: a, a', a'', ...
    std::string key() const { return name + std::string(static_cast<std::size_t>(order), '\''); }
    bool operator<(const Sym& o) const {
        if (kind != o.kind) return kind < o.kind;
        if (name != o.name) return name < o.name;
        if (order != o.order) return order < o.order;
        return arg < o.arg;
    }
    bool operator==(const Sym& o) const {
        return kind == o.kind && name == o.name && order == o.order && arg == o.arg;
    }
};

class Expr;

struct ExprNode {
    enum class Op { Const, Var, Func, Add, Mul, Pow };
    Op op = Op::Const;
    Rat c;
    Sym sym;
    std::vector<Expr> kids;
    long exp = 0;
};

class Expr {
public:
    using Op = ExprNode::Op;

    Expr() : p_(zero_node()) {}
    Expr(const Rat& c) : p_(make_const(c)) {}
    Expr(long c) : p_(make_const(Rat(c))) {}
    Expr(int c) : p_(make_const(Rat(c))) {}

    static Expr var(const std::string& name, SymKind kind = SymKind::Param) {
        auto n = std::make_shared<ExprNode>();
        n->op = Op::Var;
        n->sym.kind = kind;
        n->sym.name = name;
        return Expr(n);
    }
    static Expr func(const std::string& name, const std::string& arg, int order = 0) {
        auto n = std::make_shared<ExprNode>();
        n->op = Op::Func;
        n->sym.kind = order == 0 ? SymKind::Function : SymKind::FormalDerivative;
        n->sym.name = name;
        n->sym.order = order;
        n->sym.arg = arg;
        return Expr(n);
    }
    static Expr add(std::vector<Expr> terms);
    static Expr mul(std::vector<Expr> factors);
    static Expr pow(const Expr& base, long n);

    const ExprNode& node() const { return *p_; }
    const ExprNode* id() const { return p_.get(); }
    Op op() const { return p_->op; }
    bool is_const() const { return p_->op == Op::Const; }
    bool is_const_zero() const { return is_const() && sgn(p_->c) == 0; }
    bool is_const_one() const { return is_const() && p_->c == 1; }
    const Rat& value() const { return p_->c; }

    bool structurally_equal(const Expr& o) const;

private:
    explicit Expr(std::shared_ptr<const ExprNode> p) : p_(std::move(p)) {}
    static std::shared_ptr<const ExprNode> make_const(const Rat& c) {
        auto n = std::make_shared<ExprNode>();
        n->op = Op::Const;
        n->c = c;
        return n;
    }
    static std::shared_ptr<const ExprNode> zero_node() {
        static const std::shared_ptr<const ExprNode> z = make_const(Rat(0));
        return z;
    }
    std::shared_ptr<const ExprNode> p_;
};

inline Expr Expr::add(std::vector<Expr> terms) {
    std::vector<Expr> out;
    Rat c = 0;
    for (auto& t : terms) {
        if (t.op() == Op::Add) {
            for (const auto& k : t.node().kids) {
                if (k.is_const()) c += k.value();
                else out.push_back(k);
            }
        } else if (t.is_const()) {
            c += t.value();
        } else {
            out.push_back(t);
        }
    }
    if (sgn(c) != 0) out.push_back(Expr(c));
    if (out.empty()) return Expr(0);
    if (out.size() == 1) return out[0];
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Add;
    n->kids = std::move(out);
    return Expr(n);
}

inline Expr Expr::mul(std::vector<Expr> factors) {
    std::vector<Expr> out;
    Rat c = 1;
    for (auto& f : factors) {
        if (f.op() == Op::Mul) {
            for (const auto& k : f.node().kids) {
                if (k.is_const()) c *= k.value();
                else out.push_back(k);
            }
        } else if (f.is_const()) {
            c *= f.value();
        } else {
            out.push_back(f);
        }
    }
    if (sgn(c) == 0) return Expr(0);
    if (out.empty()) return Expr(c);
    if (c != 1) out.insert(out.begin(), Expr(c));
    if (out.size() == 1) return out[0];
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Mul;
    n->kids = std::move(out);
    return Expr(n);
}

inline Expr Expr::pow(const Expr& base, long e) {
    if (e == 0) return Expr(1);
    if (e == 1) return base;
    if (base.is_const()) {
        const Rat& b = base.value();
        if (sgn(b) == 0) {
            if (e < 0) throw std::domain_error("division by zero");
            return Expr(0);
        }
        Rat r = 1;
        Rat bb = e > 0 ? b : 1 / b;
        for (long i = 0; i < (e > 0 ? e : -e); ++i) r *= bb;
        return Expr(r);
    }
    if (base.op() == Op::Pow) return pow(base.node().kids[0], base.node().exp * e);
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Pow;
    n->kids = {base};
    n->exp = e;
    return Expr(n);
}

inline bool Expr::structurally_equal(const Expr& o) const {
    const ExprNode& a = node();
    const ExprNode& b = o.node();
    if (&a == &b) return true;
    if (a.op != b.op) return false;
    switch (a.op) {
        case Op::Const: return a.c == b.c;
        case Op::Var:
        case Op::Func: return a.sym == b.sym;
        case Op::Pow:
            if (a.exp != b.exp) return false;
            [[fallthrough]];
        default:
            if (a.kids.size() != b.kids.size()) return false;
            for (std::size_t i = 0; i < a.kids.size(); ++i)
                if (!a.kids[i].structurally_equal(b.kids[i])) return false;
            return true;
    }
}

inline Expr operator+(const Expr& a, const Expr& b) { return Expr::add({a, b}); }
inline Expr operator-(const Expr& a) { return Expr::mul({Expr(-1), a}); }
inline Expr operator-(const Expr& a, const Expr& b) { return Expr::add({a, -b}); }
inline Expr operator*(const Expr& a, const Expr& b) { return Expr::mul({a, b}); }
inline Expr operator/(const Expr& a, const Expr& b) { return Expr::mul({a, Expr::pow(b, -1)}); }
inline Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }

// ---------------------------------------------------------------- printing

namespace detail {

inline bool is_negative_term(const Expr& e) {
    if (e.is_const()) return sgn(e.value()) < 0;
    if (e.op() == Expr::Op::Mul) {
        const auto& k = e.node().kids[0];
        return k.is_const() && sgn(k.value()) < 0;
    }
    return false;
}

inline bool is_atom(const Expr& e) {
    if (e.op() == Expr::Op::Var || e.op() == Expr::Op::Func) return true;
    return e.is_const() && sgn(e.value()) >= 0 && is_integer(e.value());
}

}  // namespace detail

inline std::string print(const Expr& e);

inline std::string print_factor(const Expr& e) {
    std::string s = print(e);
    if (e.op() == Expr::Op::Add || (e.is_const() && !detail::is_atom(e))) return "(" + s + ")";
    return s;
}

inline std::string print_power_base(const Expr& e) {
    std::string s = print(e);
    return detail::is_atom(e) ? s : "(" + s + ")";
}

inline std::string print(const Expr& e) {
    using Op = Expr::Op;
    const ExprNode& n = e.node();
    switch (n.op) {
        case Op::Const: return to_string(n.c);
        case Op::Var: return n.sym.name;
        case Op::Func: return n.sym.key() + "(" + n.sym.arg + ")";
        case Op::Pow: {
            if (n.exp < 0) {
                Expr pos = Expr::pow(n.kids[0], -n.exp);
                return "1/" + (pos.op() == Op::Pow ? print_power_base(n.kids[0]) + "^" + std::to_string(-n.exp)
                                                   : print_power_base(pos));
            }
            return print_power_base(n.kids[0]) + "^" + std::to_string(n.exp);
        }
        case Op::Add: {
            std::string s;
            for (std::size_t i = 0; i < n.kids.size(); ++i) {
                const Expr& k = n.kids[i];
                if (i == 0) s = print(k);
                else if (detail::is_negative_term(k)) s += " - " + print(-k);
                else s += " + " + print(k);
            }
            return s;
        }
        case Op::Mul: {
            std::string s;
            std::size_t start = 0;
            bool empty = true;
            if (n.kids[0].is_const()) {
                const Rat& c = n.kids[0].value();
                start = 1;
                if (c == -1) s = "-";
                else {
                    s = to_string(c);
                    empty = false;
                }
            }
            for (std::size_t i = start; i < n.kids.size(); ++i) {
                const Expr& k = n.kids[i];
                if (k.op() == Op::Pow && k.node().exp < 0) {
                    Expr pos = Expr::pow(k.node().kids[0], -k.node().exp);
                    if (empty) s += "1";
                    s += "/" + (pos.op() == Op::Pow ? print_power_base(k.node().kids[0]) + "^" +
                                                          std::to_string(-k.node().exp)
                                                    : print_power_base(pos));
                } else {
                    if (!empty) s += "*";
                    s += print_factor(k);
                }
                empty = false;
            }
            return s;
        }
    }
    return "?";
}

// --------------------------------------------------------------- variables

struct FuncDecl {
    std::string name;
    std::string arg;
    std::optional<Expr> rule;  // derivative with respect to arg
};

struct VarTable {
    std::vector<std::string> params;
    std::vector<std::string> frees;
    std::vector<FuncDecl> funcs;

    bool is_param(const std::string& n) const { return std::find(params.begin(), params.end(), n) != params.end(); }
    bool is_free(const std::string& n) const { return std::find(frees.begin(), frees.end(), n) != frees.end(); }
    bool is_variable(const std::string& n) const { return is_param(n) || is_free(n); }
    const FuncDecl* func(const std::string& n) const {
        for (const auto& f : funcs)
            if (f.name == n) return &f;
        return nullptr;
    }
    bool declared(const std::string& n) const { return is_variable(n) || func(n) != nullptr; }
    SymKind kind_of(const std::string& n) const { return is_free(n) ? SymKind::Free : SymKind::Param; }
    Expr var(const std::string& n) const {
        if (!is_variable(n)) throw std::invalid_argument("undeclared variable '" + n + "'");
        return Expr::var(n, kind_of(n));
    }
};

// ------------------------------------------------------------- traversal

inline void collect_syms(const Expr& e, std::set<Sym>& out, std::set<const ExprNode*>& seen) {
    if (!seen.insert(e.id()).second) return;
    const ExprNode& n = e.node();
    if (n.op == Expr::Op::Var || n.op == Expr::Op::Func) out.insert(n.sym);
    for (const auto& k : n.kids) collect_syms(k, out, seen);
}

inline std::set<Sym> syms_of(const Expr& e) {
    std::set<Sym> out;
    std::set<const ExprNode*> seen;
    collect_syms(e, out, seen);
    return out;
}

// Variables whose differential is needed for d(e): plain variables and the
// arguments of function symbols.
inline std::set<std::string> dependencies(const Expr& e) {
    std::set<std::string> out;
    for (const auto& s : syms_of(e)) out.insert(s.is_function() ? s.arg : s.name);
    return out;
}

// ------------------------------------------------------------ differentiation

class Differentiator {
public:
    Differentiator(const VarTable& vt, std::string var) : vt_(vt), var_(std::move(var)) {
        if (!vt_.is_variable(var_)) throw std::invalid_argument("undeclared variable '" + var_ + "'");
    }

    Expr operator()(const Expr& e) {
        auto it = memo_.find(e.id());
        if (it != memo_.end()) return it->second;
        Expr r = compute(e);
        memo_.emplace(e.id(), r);
        keep_.push_back(e);
        return r;
    }

private:
    Expr compute(const Expr& e) {
        using Op = Expr::Op;
        const ExprNode& n = e.node();
        switch (n.op) {
            case Op::Const: return Expr(0);
            case Op::Var: return Expr(n.sym.name == var_ ? 1 : 0);
            case Op::Func: {
                if (n.sym.arg != var_) return Expr(0);
                const FuncDecl* f = vt_.func(n.sym.name);
                if (n.sym.order == 0 && f && f->rule) return *f->rule;
                return Expr::func(n.sym.name, n.sym.arg, n.sym.order + 1);
            }
            case Op::Add: {
                std::vector<Expr> t;
                for (const auto& k : n.kids) t.push_back((*this)(k));
                return Expr::add(t);
            }
            case Op::Mul: {
                std::vector<Expr> terms;
                for (std::size_t i = 0; i < n.kids.size(); ++i) {
                    Expr d = (*this)(n.kids[i]);
                    if (d.is_const_zero()) continue;
                    std::vector<Expr> f;
                    for (std::size_t j = 0; j < n.kids.size(); ++j) f.push_back(i == j ? d : n.kids[j]);
                    terms.push_back(Expr::mul(f));
                }
                return Expr::add(terms);
            }
            case Op::Pow: {
                Expr d = (*this)(n.kids[0]);
                if (d.is_const_zero()) return Expr(0);
                return Expr::mul({Expr(Rat(n.exp)), Expr::pow(n.kids[0], n.exp - 1), d});
            }
        }
        return Expr(0);
    }

    const VarTable& vt_;
    std::string var_;
    std::unordered_map<const ExprNode*, Expr> memo_;
    std::vector<Expr> keep_;
};

inline Expr diff(const Expr& e, const std::string& var, const VarTable& vt) {
    Differentiator d(vt, var);
    return d(e);
}

// ---------------------------------------------------------------- evaluation

using SamplePoint = std::map<std::string, Rat>;

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Evaluator {
public:
    explicit Evaluator(const SamplePoint& p) : p_(p) {}
    Rat operator()(const Expr& e) {
        auto it = memo_.find(e.id());
        if (it != memo_.end()) return it->second;
        Rat r = compute(e);
        memo_.emplace(e.id(), r);
        keep_.push_back(e);
        return r;
    }

private:
    Rat compute(const Expr& e) {
        using Op = Expr::Op;
        const ExprNode& n = e.node();
        switch (n.op) {
            case Op::Const: return n.c;
            case Op::Var:
            case Op::Func: {
                auto it = p_.find(n.sym.key());
                if (it == p_.end()) throw EvalError("missing assignment for '" + n.sym.key() + "'");
                return it->second;
            }
            case Op::Add: {
                Rat s = 0;
                for (const auto& k : n.kids) s += (*this)(k);
                return s;
            }
            case Op::Mul: {
                Rat s = 1;
                for (const auto& k : n.kids) s *= (*this)(k);
                return s;
            }
            case Op::Pow: {
                Rat b = (*this)(n.kids[0]);
                if (sgn(b) == 0 && n.exp < 0) throw EvalError("division by zero in '" + print(e) + "'");
                Rat r = 1;
                Rat bb = n.exp > 0 ? b : (sgn(b) ? 1 / b : Rat(0));
                for (long i = 0; i < (n.exp > 0 ? n.exp : -n.exp); ++i) r *= bb;
                return r;
            }
        }
        return 0;
    }
    const SamplePoint& p_;
    std::unordered_map<const ExprNode*, Rat> memo_;
    std::vector<Expr> keep_;
};

inline Rat eval(const Expr& e, const SamplePoint& p) {
    Evaluator ev(p);
    return ev(e);
}

// ------------------------------------------------------------ canonical form

// P/Q over a sorted indeterminate list; after normalize(), gcd(P,Q) = 1 and Q
// is monic in graded-lex order.
struct Fraction {
    std::vector<Sym> vars;
    Poly num, den;
};

class FractionBuilder {
public:
    explicit FractionBuilder(std::vector<Sym> vars) : vars_(std::move(vars)) {
        for (std::size_t i = 0; i < vars_.size(); ++i) index_[vars_[i]] = i;
    }
    std::pair<Poly, Poly> operator()(const Expr& e) {
        auto it = memo_.find(e.id());
        if (it != memo_.end()) return it->second;
        auto r = compute(e);
        memo_.emplace(e.id(), r);
        keep_.push_back(e);
        return r;
    }

private:
    std::pair<Poly, Poly> compute(const Expr& e) {
        using Op = Expr::Op;
        std::size_t k = vars_.size();
        const ExprNode& n = e.node();
        Poly one = poly::constant(1, k);
        switch (n.op) {
            case Op::Const: return {poly::constant(n.c, k), one};
            case Op::Var:
            case Op::Func: return {poly::variable(index_.at(n.sym), k), one};
            case Op::Add: {
                Poly p, q = one;
                for (const auto& c : n.kids) {
                    auto [a, b] = (*this)(c);
                    if (b == q) p = poly::add(p, a);
                    else if (poly::is_constant(b) && poly::is_constant(q)) {
                        Rat rb = b.begin()->second, rq = q.begin()->second;
                        p = poly::add(poly::scale(p, rb), poly::scale(a, rq));
                        q = poly::scale(q, rb);
                    } else {
                        p = poly::add(poly::mul(p, b), poly::mul(a, q));
                        q = poly::mul(q, b);
                    }
                }
                return {p, q};
            }
            case Op::Mul: {
                Poly p = one, q = one;
                for (const auto& c : n.kids) {
                    auto [a, b] = (*this)(c);
                    p = poly::mul(p, a);
                    q = poly::mul(q, b);
                }
                return {p, q};
            }
            case Op::Pow: {
                auto [a, b] = (*this)(n.kids[0]);
                if (n.exp >= 0) return {poly::power(a, n.exp, k), poly::power(b, n.exp, k)};
                if (a.empty()) throw std::domain_error("division by zero in '" + print(e) + "'");
                return {poly::power(b, -n.exp, k), poly::power(a, -n.exp, k)};
            }
        }
        return {Poly{}, one};
    }
    std::vector<Sym> vars_;
    std::map<Sym, std::size_t> index_;
    std::unordered_map<const ExprNode*, std::pair<Poly, Poly>> memo_;
    std::vector<Expr> keep_;
};

inline Fraction to_fraction(const Expr& e, bool reduce = true) {
    auto s = syms_of(e);
    Fraction f;
    f.vars.assign(s.begin(), s.end());
    FractionBuilder b(f.vars);
    auto [p, q] = b(e);
    if (reduce && !p.empty()) {
        Poly g = poly::gcd(p, q);
        if (!poly::is_constant(g)) {
            p = poly::divide_exact(p, g);
            q = poly::divide_exact(q, g);
        }
    }
    if (p.empty()) q = poly::constant(1, f.vars.size());
    Rat lc = poly::leading_coeff(q);
    f.num = poly::scale(p, 1 / lc);
    f.den = poly::scale(q, 1 / lc);
    return f;
}

inline bool is_zero(const Expr& e) {
    if (e.is_const()) return sgn(e.value()) == 0;
    auto s = syms_of(e);
    FractionBuilder b(std::vector<Sym>(s.begin(), s.end()));
    return b(e).first.empty();
}

inline Expr poly_to_expr(const Poly& p, const std::vector<Sym>& vars) {
    std::vector<Expr> terms;
    for (auto it = p.rbegin(); it != p.rend(); ++it) {
        std::vector<Expr> f{Expr(it->second)};
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (!it->first[i]) continue;
            const Sym& s = vars[i];
            Expr x = s.is_function() ? Expr::func(s.name, s.arg, s.order) : Expr::var(s.name, s.kind);
            f.push_back(Expr::pow(x, it->first[i]));
        }
        terms.push_back(Expr::mul(f));
    }
    return Expr::add(terms);
}

inline Expr fraction_to_expr(const Fraction& f) {
    Expr n = poly_to_expr(f.num, f.vars);
    if (poly::is_constant(f.den)) return n;
    return Expr::mul({n, Expr::pow(poly_to_expr(f.den, f.vars), -1)});
}

inline Expr normalize(const Expr& e) {
    if (e.is_const()) return e;
    return fraction_to_expr(to_fraction(e));
}

inline std::string canonical_string(const Expr& e) { return print(normalize(e)); }

// Number of terms in the canonical numerator and denominator; used as a size guard.
inline std::size_t term_count(const Expr& e) {
    if (e.is_const()) return 1;
    Fraction f = to_fraction(e, false);
    return f.num.size() + f.den.size();
}

}  // namespace eds
