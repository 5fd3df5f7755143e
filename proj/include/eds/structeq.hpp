#pragma once
// Structure equations: d^2 = 0 residuals, the G-system for free derivatives,
// the tableau of free derivatives, the Jacobi map and Jacobi-manifold test,
// prolongation of structure equations and invariant counts.

#include "eds/eds_point.hpp"
#include "eds/tableau.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace eds {

// ------------------------------------------------------------ sample points

inline void check_samples(const StructureSystem& sys) {
    for (std::size_t k = 0; k < sys.samples.size(); ++k)
        for (const auto& rel : sys.relations) {
            Rat v = eval(rel, sys.samples[k]);
            if (sgn(v) != 0)
                throw std::invalid_argument("sample " + std::to_string(k + 1) + " violates relation " + print(rel) +
                                            " = 0 (value " + to_string(v) + ")");
        }
}

inline std::string describe_sample(const SamplePoint& p) {
    std::string s = "{";
    bool first = true;
    for (const auto& [k, v] : p) {
        if (!first) s += ", ";
        first = false;
        s += k + ": " + to_string(v);
    }
    return s + "}";
}

// Rebuilds variable nodes so their kind matches the table (used when frees
// become params after prolongation).
inline Expr rekind(const Expr& e, const VarTable& vt) {
    using Op = Expr::Op;
    const ExprNode& n = e.node();
    switch (n.op) {
        case Op::Const:
        case Op::Func: return e;
        case Op::Var: return vt.is_variable(n.sym.name) ? vt.var(n.sym.name) : e;
        case Op::Add:
        case Op::Mul: {
            std::vector<Expr> k;
            for (const auto& c : n.kids) k.push_back(rekind(c, vt));
            return n.op == Op::Add ? Expr::add(k) : Expr::mul(k);
        }
        case Op::Pow: return Expr::pow(rekind(n.kids[0], vt), n.exp);
    }
    return e;
}

inline Form<Expr> rekind(const Form<Expr>& f, const VarTable& vt) {
    Form<Expr> r(f.degree);
    for (const auto& [k, c] : f.terms) r.add(k, rekind(c, vt));
    return r;
}

// --------------------------------------------------------------- residuals

struct IdentityVerdict {
    std::string name;     // d(dw1), d(dK), ...
    std::string verdict;  // holds | holds_at_samples | absorbed | fails
    std::string witness;
};

struct ResidualReport {
    std::vector<Form<Expr>> ddw, dda;
    std::vector<IdentityVerdict> ddw_verdicts, dda_verdicts;

    static std::string combine(const std::vector<IdentityVerdict>& vs) {
        bool fails = false, samples = false, absorbed = false;
        for (const auto& v : vs) {
            fails |= v.verdict == "fails";
            samples |= v.verdict == "holds_at_samples";
            absorbed |= v.verdict == "absorbed";
        }
        if (fails) return "fails";
        if (absorbed) return "absorbed";
        if (samples) return "holds_at_samples";
        return "holds";
    }
    std::string ddw_verdict() const { return combine(ddw_verdicts); }
    std::string dda_verdict() const { return combine(dda_verdicts); }
};

inline bool vanishes_at_samples(const Expr& c, const std::vector<SamplePoint>& samples) {
    if (samples.empty()) return false;
    try {
        for (const auto& p : samples)
            if (sgn(eval(c, p)) != 0) return false;
    } catch (const EvalError&) {
        return false;
    }
    return true;
}

inline IdentityVerdict classify_residual(const std::string& name, const Form<Expr>& res,
                                         const std::vector<std::string>& labels,
                                         const std::vector<SamplePoint>& samples) {
    IdentityVerdict v{name, "holds", ""};
    for (const auto& [idx, c] : res.terms) {
        if (c.is_const_zero() || is_zero(c)) continue;
        if (vanishes_at_samples(c, samples)) {
            v.verdict = "holds_at_samples";
            continue;
        }
        v.verdict = "fails";
        v.witness = "coefficient of " + index_label(idx, labels) + ": " + canonical_string(c);
        return v;
    }
    return v;
}

struct GSolution;
inline GSolution solve_for_G(const StructureSystem& sys);

// d(dw^i) and d(da^alpha) with the formal extras beta kept. Failure is a verdict.
inline ResidualReport check_torsion(const StructureSystem& sys);

// ------------------------------------------------------- symbolic elimination

// sum_c rows[i][c] x_c = rhs[i]
struct SymbolicSystem {
    std::size_t ncols = 0;
    std::vector<std::map<std::size_t, Expr>> rows;
    std::vector<Expr> rhs;
};

struct SymbolicSolution {
    bool ok = false;          // elimination finished without degeneracy
    bool consistent = false;
    std::vector<Expr> particular;
    std::vector<std::vector<Expr>> kernel;
    std::string reason;
};

// Fraction-field Gauss-Jordan elimination. A pivot that vanishes at a sample
// point, or an entry that grows past max_terms, aborts the attempt.
inline SymbolicSolution solve_symbolic(const SymbolicSystem& sys, const std::vector<SamplePoint>& samples,
                                       std::size_t max_cols = 64, std::size_t max_terms = 2000) {
    SymbolicSolution out;
    std::size_t nc = sys.ncols;
    if (nc > max_cols) {
        out.reason = "too many unknowns for symbolic elimination";
        return out;
    }
    std::vector<std::vector<Expr>> M;
    for (std::size_t i = 0; i < sys.rows.size(); ++i) {
        std::vector<Expr> row(nc + 1, Expr(0));
        bool any = false;
        for (const auto& [c, e] : sys.rows[i]) {
            row[c] = normalize(e);
            any |= !row[c].is_const_zero();
        }
        row[nc] = normalize(sys.rhs[i]);
        any |= !row[nc].is_const_zero();
        if (any) M.push_back(std::move(row));
    }
    std::vector<std::size_t> pivcol;
    std::size_t rank = 0;
    for (std::size_t col = 0; col < nc && rank < M.size(); ++col) {
        std::size_t best = M.size();
        std::size_t best_size = 0;
        for (std::size_t r = rank; r < M.size(); ++r) {
            const Expr& e = M[r][col];
            if (e.is_const_zero()) continue;
            std::size_t sz = e.is_const() ? 0 : term_count(e);
            if (best == M.size() || sz < best_size) {
                best = r;
                best_size = sz;
            }
            if (sz == 0) break;
        }
        if (best == M.size()) continue;
        std::swap(M[rank], M[best]);
        Expr piv = M[rank][col];
        if (!piv.is_const()) {
            try {
                for (const auto& p : samples)
                    if (sgn(eval(piv, p)) == 0) {
                        out.reason = "pivot " + canonical_string(piv) + " vanishes at a sample point";
                        return out;
                    }
            } catch (const EvalError& e) {
                out.reason = e.what();
                return out;
            }
        }
        if (!piv.is_const_one()) {
            Expr inv = piv.is_const() ? Expr(Rat(1 / piv.value())) : Expr::pow(piv, -1);
            for (std::size_t c = col; c <= nc; ++c)
                if (!M[rank][c].is_const_zero()) M[rank][c] = normalize(M[rank][c] * inv);
        }
        for (std::size_t r = 0; r < M.size(); ++r) {
            if (r == rank || M[r][col].is_const_zero()) continue;
            Expr f = M[r][col];
            for (std::size_t c = col; c <= nc; ++c) {
                if (M[rank][c].is_const_zero()) continue;
                M[r][c] = normalize(M[r][c] - f * M[rank][c]);
                if (!M[r][c].is_const() && term_count(M[r][c]) > max_terms) {
                    out.reason = "expression swell during elimination";
                    return out;
                }
            }
        }
        pivcol.push_back(col);
        ++rank;
    }
    out.ok = true;
    out.consistent = true;
    for (std::size_t r = rank; r < M.size(); ++r) {
        const Expr& e = M[r][nc];
        if (e.is_const_zero()) continue;
        // A leftover that vanishes on the relation variety is not an obstruction.
        if (!vanishes_at_samples(e, samples)) {
            out.consistent = false;
            out.reason = "inconsistent: " + canonical_string(e) + " = 0";
            return out;
        }
    }
    out.particular.assign(nc, Expr(0));
    std::vector<bool> is_piv(nc, false);
    for (std::size_t r = 0; r < rank; ++r) {
        out.particular[pivcol[r]] = M[r][nc];
        is_piv[pivcol[r]] = true;
    }
    for (std::size_t f = 0; f < nc; ++f) {
        if (is_piv[f]) continue;
        std::vector<Expr> v(nc, Expr(0));
        v[f] = Expr(1);
        for (std::size_t r = 0; r < rank; ++r)
            if (!M[r][f].is_const_zero()) v[pivcol[r]] = normalize(-M[r][f]);
        out.kernel.push_back(std::move(v));
    }
    return out;
}

inline AffineSolution evaluate_and_solve(const SymbolicSystem& sys, const SamplePoint& p) {
    Evaluator ev(p);
    std::vector<SparseVec> rows;
    Vec rhs;
    for (std::size_t i = 0; i < sys.rows.size(); ++i) {
        SparseVec sv;
        for (const auto& [c, e] : sys.rows[i]) {
            Rat x = ev(e);
            if (sgn(x) != 0) sv.emplace_back(c, x);
        }
        rows.push_back(std::move(sv));
        rhs.push_back(ev(sys.rhs[i]));
    }
    return solve_affine_sparse(sys.ncols, rows, rhs);
}

// ------------------------------------------------------------- the G-system

struct GSolution {
    bool exists = false;
    bool sample_certified = false;
    bool symbolic = false;
    std::vector<Form<Expr>> G;                   // particular solution, one 1-form per free
    std::vector<std::vector<Form<Expr>>> kernel;  // symbolic kernel, when available
    std::size_t kernel_dim = 0;
    std::size_t rank = 0, augmented_rank = 0;    // at the first sample
    std::vector<AffineSolution> numeric;         // per sample
    std::string note;
};

// Unknown G^rho_j sits at column rho*n + j. Rows: each (alpha, a<b) component
// of d(F^alpha) after beta^rho -> G^rho_j w^j, then d of every relation.
inline SymbolicSystem build_G_system(const StructureSystem& sys, const std::vector<Form<Expr>>& dda) {
    std::size_t n = sys.n(), r = sys.r();
    SymbolicSystem S;
    S.ncols = r * n;
    auto add_row = [&](std::map<std::size_t, Expr> row, const Expr& constant) {
        S.rows.push_back(std::move(row));
        S.rhs.push_back(-constant);
    };
    for (const auto& res : dda) {
        std::map<Index, std::map<std::size_t, Expr>> coef;
        std::map<Index, Expr> constant;
        for (const auto& [idx, c] : res.terms) {
            if (idx.size() != 2) throw std::logic_error("residual of wrong degree");
            bool b0 = idx[0] >= static_cast<int>(n), b1 = idx[1] >= static_cast<int>(n);
            if (b0 && b1) throw std::invalid_argument("rule for a parameter is not linear in the free derivatives");
            if (!b0 && !b1) {
                constant[idx] = constant[idx] + c;
                continue;
            }
            int i = idx[0];
            std::size_t rho = static_cast<std::size_t>(idx[1]) - n;
            for (std::size_t j = 0; j < n; ++j) {
                if (static_cast<int>(j) == i) continue;
                Index key = i < static_cast<int>(j) ? Index{i, static_cast<int>(j)} : Index{static_cast<int>(j), i};
                Expr term = i < static_cast<int>(j) ? c : -c;
                Expr& cell = coef[key][rho * n + j];
                cell = cell + term;
            }
        }
        for (const auto& K : combinations(static_cast<int>(n), 2)) {
            auto ci = coef.find(K);
            auto ki = constant.find(K);
            if (ci == coef.end() && ki == constant.end()) continue;
            add_row(ci == coef.end() ? std::map<std::size_t, Expr>{} : ci->second,
                    ki == constant.end() ? Expr(0) : ki->second);
        }
    }
    StructureD d(sys, BetaMode::Formal);
    for (const auto& rel : sys.relations) {
        Form<Expr> dr = d.d_coefficient(rel);
        for (std::size_t j = 0; j < n; ++j) {
            std::map<std::size_t, Expr> row;
            for (std::size_t rho = 0; rho < r; ++rho) {
                Expr c = dr.coeff({static_cast<int>(n + rho)});
                if (!c.is_const_zero()) row[rho * n + j] = c;
            }
            add_row(row, dr.coeff({static_cast<int>(j)}));
        }
    }
    return S;
}

inline std::vector<Form<Expr>> g_forms(const std::vector<Expr>& x, std::size_t n, std::size_t r) {
    std::vector<Form<Expr>> out;
    for (std::size_t rho = 0; rho < r; ++rho) {
        Form<Expr> f(1);
        for (std::size_t j = 0; j < n; ++j) f.add({static_cast<int>(j)}, x[rho * n + j]);
        out.push_back(f);
    }
    return out;
}

inline std::vector<Form<Expr>> param_residuals(const StructureSystem& sys) {
    std::vector<Form<Expr>> out;
    StructureD d(sys, BetaMode::Formal);
    for (std::size_t a = 0; a < sys.s(); ++a) {
        if (!sys.F[a]) throw std::invalid_argument("no rule for d" + sys.vars.params[a]);
        out.push_back(simplify(d(*sys.F[a])));
    }
    return out;
}

inline GSolution solve_for_G(const StructureSystem& sys, const std::vector<Form<Expr>>& dda) {
    if (sys.mode != Mode::VARIANT) throw std::invalid_argument("the G-system is defined for VARIANT systems");
    if (sys.samples.empty()) throw std::invalid_argument("VARIANT analysis needs sample points");
    std::size_t n = sys.n(), r = sys.r();
    SymbolicSystem S = build_G_system(sys, dda);
    GSolution g;
    g.sample_certified = true;
    for (const auto& p : sys.samples) {
        AffineSolution a = evaluate_and_solve(S, p);
        if (g.numeric.empty()) {
            g.rank = a.rank;
            g.augmented_rank = a.augmented_rank;
            g.kernel_dim = a.solvable ? a.kernel.dim() : 0;
        }
        if (!a.solvable) {
            g.sample_certified = false;
            if (g.note.empty())
                g.note = "unsolvable at " + describe_sample(p) + ": rank " + std::to_string(a.rank) +
                         " < augmented rank " + std::to_string(a.augmented_rank);
        }
        g.numeric.push_back(std::move(a));
    }
    g.exists = g.sample_certified;
    if (!g.exists) return g;
    SymbolicSolution sol = solve_symbolic(S, sys.samples);
    if (sol.ok && sol.consistent && sol.kernel.size() == g.kernel_dim) {
        g.symbolic = true;
        g.G = g_forms(sol.particular, n, r);
        for (const auto& k : sol.kernel) g.kernel.push_back(g_forms(k, n, r));
    } else if (!sol.reason.empty()) {
        g.note = "symbolic elimination skipped: " + sol.reason;
    }
    return g;
}

inline GSolution solve_for_G(const StructureSystem& sys) { return solve_for_G(sys, param_residuals(sys)); }

inline ResidualReport check_torsion(const StructureSystem& sys) {
    check_samples(sys);
    ResidualReport rep;
    auto labels = sys.labels();
    if (sys.mode == Mode::TYPE_A) return rep;
    StructureD d(sys, BetaMode::Formal);
    for (std::size_t i = 0; i < sys.n(); ++i) {
        rep.ddw.push_back(simplify(d(sys.dw[i])));
        rep.ddw_verdicts.push_back(classify_residual("d(d" + sys.coframe[i] + ")", rep.ddw.back(), labels, sys.samples));
    }
    rep.dda = param_residuals(sys);
    std::optional<GSolution> g;
    for (std::size_t a = 0; a < sys.s(); ++a) {
        std::string name = "d(d" + sys.vars.params[a] + ")";
        IdentityVerdict v = classify_residual(name, rep.dda[a], labels, sys.samples);
        if (sys.mode == Mode::VARIANT && v.verdict == "fails") {
            if (!g) g = solve_for_G(sys, rep.dda);
            if (g->exists) v = {name, "absorbed", ""};
            else v.witness += " (G-system: " + g->note + ")";
        }
        rep.dda_verdicts.push_back(v);
    }
    return rep;
}

inline bool verdict_ok(const std::string& v) { return v != "fails"; }

// --------------------------------------------------- tableau of free derivatives

// Directions in the free derivatives allowed by the relations at p.
inline std::vector<Vec> free_directions(const StructureSystem& sys, const SamplePoint& p) {
    std::size_t r = sys.r();
    Echelon e(r);
    for (const auto& rel : sys.relations) {
        Vec row(r);
        for (std::size_t rho = 0; rho < r; ++rho) row[rho] = eval(diff(rel, sys.vars.frees[rho], sys.vars), p);
        e.insert(row);
    }
    return e.kernel_basis(r);
}

inline FormTableau free_tableau(const StructureSystem& sys, const SamplePoint& p) {
    if (sys.mode != Mode::VARIANT) throw std::invalid_argument("free tableau is defined for VARIANT systems");
    std::size_t n = sys.n(), s = sys.s(), r = sys.r();
    for (const auto& rel : sys.relations)
        if (sgn(eval(rel, p)) != 0) throw std::invalid_argument("sample point violates relation " + print(rel) + " = 0");
    // dF[a][rho] = dF^a/db^rho at p, as a 1-form.
    std::vector<std::vector<Form<Rat>>> dF(s, std::vector<Form<Rat>>(r));
    for (std::size_t a = 0; a < s; ++a) {
        if (!sys.F[a]) throw std::invalid_argument("no rule for d" + sys.vars.params[a]);
        for (std::size_t rho = 0; rho < r; ++rho) {
            Form<Expr> der(1);
            for (const auto& [idx, c] : sys.F[a]->terms) der.add(idx, diff(c, sys.vars.frees[rho], sys.vars));
            dF[a][rho] = evaluate_form(der, p);
        }
    }
    auto dirs = free_directions(sys, p);
    std::vector<std::vector<Form<Rat>>> gens;
    for (const auto& v : dirs) {
        std::vector<Form<Rat>> g(s, Form<Rat>(1));
        for (std::size_t a = 0; a < s; ++a)
            for (std::size_t rho = 0; rho < r; ++rho)
                if (sgn(v[rho]) != 0) g[a] += dF[a][rho].scaled(v[rho]);
        gens.push_back(g);
    }
    FormTableau t = FormTableau::from_forms(static_cast<int>(s), static_cast<int>(n), 1, gens);
    if (t.dim() != dirs.size())
        throw std::invalid_argument("degenerate point " + describe_sample(p) + ": tableau of free derivatives has dimension " +
                                    std::to_string(t.dim()) + " < " + std::to_string(dirs.size()));
    return t;
}

// ------------------------------------------------------------ the Jacobi map

// c is given as the 2-forms dw^i = -1/2 c^i_jk w^j^w^k. Returns the 3-forms
// J^i = sum_{j<k<l} (c^i_jm c^m_kl + c^i_km c^m_lj + c^i_lm c^m_jk) w^jkl.
inline std::vector<Form<Rat>> jacobi_map(const std::vector<Form<Rat>>& dw) {
    int n = static_cast<int>(dw.size());
    auto c = [&](int i, int j, int k) -> Rat {
        if (j == k) return 0;
        if (j < k) return -dw[static_cast<std::size_t>(i)].coeff({j, k});
        return dw[static_cast<std::size_t>(i)].coeff({k, j});
    };
    std::vector<Form<Rat>> J;
    for (int i = 0; i < n; ++i) {
        Form<Rat> f(3);
        for (const auto& K : combinations(n, 3)) {
            int j = K[0], k = K[1], l = K[2];
            Rat s = 0;
            for (int m = 0; m < n; ++m) s += c(i, j, m) * c(m, k, l) + c(i, k, m) * c(m, l, j) + c(i, l, m) * c(m, j, k);
            f.add(K, s);
        }
        J.push_back(f);
    }
    return J;
}

inline bool all_zero(const std::vector<Form<Rat>>& fs) {
    for (const auto& f : fs)
        if (!f.empty()) return false;
    return true;
}

// ------------------------------------------------------------ TYPE_A analysis

// d(w^J) with dw^i replaced by the constant 2-forms omega[i].
inline Form<Rat> d_constant(const std::vector<Form<Rat>>& omega, const Index& idx) {
    Form<Rat> r(static_cast<int>(idx.size()) + 1);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        Index left(idx.begin(), idx.begin() + static_cast<long>(k));
        Index right(idx.begin() + static_cast<long>(k) + 1, idx.end());
        Form<Rat> term = wedge(wedge(Form<Rat>::monomial(left, Rat(1)), omega[static_cast<std::size_t>(idx[k])]),
                               Form<Rat>::monomial(right, Rat(1)));
        r += (k % 2) ? -term : term;
    }
    return r;
}

template <class C>
Form<C> d_constant_expr(const std::vector<Form<C>>& omega, const Index& idx) {
    Form<C> r(static_cast<int>(idx.size()) + 1);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        Index left(idx.begin(), idx.begin() + static_cast<long>(k));
        Index right(idx.begin() + static_cast<long>(k) + 1, idx.end());
        Form<C> term = wedge(wedge(Form<C>::monomial(left, C(1)), omega[static_cast<std::size_t>(idx[k])]),
                             Form<C>::monomial(right, C(1)));
        r += (k % 2) ? -term : term;
    }
    return r;
}

struct JacobiCheck {
    bool solvable = false;              // J(T(p)) lies in the image: p is on a Jacobi manifold
    bool J_zero = false;                // J of the structure constants at p
    std::size_t kernel_dim = 0;
    std::size_t rank = 0, augmented_rank = 0;
    AffineSolution solution;            // unknown R^t_m at column t*n + m
};

struct TypeAData {
    std::vector<Vec> tangent;                   // basis of T_pA in parameter coordinates
    std::vector<std::vector<Form<Expr>>> dOmega;  // dOmega[alpha][i] = d(dw^i)/da^alpha
    std::vector<std::vector<Form<Rat>>> g;      // g[t][i]
};

inline TypeAData type_A_data(const StructureSystem& sys, const SamplePoint& p) {
    if (sys.mode != Mode::TYPE_A) throw std::invalid_argument("expected a TYPE_A system");
    std::size_t n = sys.n(), s = sys.s();
    for (const auto& rel : sys.relations)
        if (sgn(eval(rel, p)) != 0) throw std::invalid_argument("sample point violates relation " + print(rel) + " = 0");
    TypeAData D;
    Echelon jac(s);
    for (const auto& rel : sys.relations) {
        Vec row(s);
        for (std::size_t a = 0; a < s; ++a) row[a] = eval(diff(rel, sys.vars.params[a], sys.vars), p);
        jac.insert(row);
    }
    D.tangent = jac.kernel_basis(s);
    D.dOmega.assign(s, std::vector<Form<Expr>>(n));
    std::vector<std::vector<Form<Rat>>> dOm(s, std::vector<Form<Rat>>(n));
    for (std::size_t a = 0; a < s; ++a)
        for (std::size_t i = 0; i < n; ++i) {
            Form<Expr> f(2);
            for (const auto& [idx, c] : sys.dw[i].terms) f.add(idx, diff(c, sys.vars.params[a], sys.vars));
            D.dOmega[a][i] = f;
            dOm[a][i] = evaluate_form(f, p);
        }
    for (const auto& tv : D.tangent) {
        std::vector<Form<Rat>> gt(n, Form<Rat>(2));
        for (std::size_t a = 0; a < s; ++a)
            if (sgn(tv[a]) != 0)
                for (std::size_t i = 0; i < n; ++i) gt[i] += dOm[a][i].scaled(tv[a]);
        D.g.push_back(gt);
    }
    return D;
}

// sum_{t,m} R^t_m w^m ^ g_t^i + K^i = 0 with K^i the constant part of d(dw^i).
template <class C>
void build_R_rows(std::size_t n, const std::vector<std::vector<Form<C>>>& g, const std::vector<Form<C>>& omega,
                  std::map<std::pair<std::size_t, Index>, std::map<std::size_t, C>>& coef,
                  std::map<std::pair<std::size_t, Index>, C>& constant) {
    for (std::size_t i = 0; i < n; ++i) {
        Form<C> K(3);
        for (const auto& [idx, c] : omega[i].terms) K += d_constant_expr(omega, idx).scaled(c);
        for (const auto& [idx, c] : K.terms) constant[{i, idx}] = c;
    }
    Index out;
    for (std::size_t t = 0; t < g.size(); ++t)
        for (std::size_t i = 0; i < n; ++i)
            for (const auto& [idx, c] : g[t][i].terms)
                for (std::size_t m = 0; m < n; ++m) {
                    int sgn_ = merge_sign({static_cast<int>(m)}, idx, out);
                    if (sgn_ == 0) continue;
                    auto& cell = coef[{i, out}][t * n + m];
                    cell = cell + (sgn_ > 0 ? c : C(-1) * c);
                }
}

inline JacobiCheck jacobi_manifold_check(const StructureSystem& sys, const SamplePoint& p, const TypeAData& D) {
    std::size_t n = sys.n(), d = D.g.size();
    std::vector<Form<Rat>> omega;
    for (std::size_t i = 0; i < n; ++i) omega.push_back(evaluate_form(sys.dw[i], p));
    std::map<std::pair<std::size_t, Index>, std::map<std::size_t, Rat>> coef;
    std::map<std::pair<std::size_t, Index>, Rat> constant;
    build_R_rows<Rat>(n, D.g, omega, coef, constant);
    std::set<std::pair<std::size_t, Index>> keys;
    for (const auto& [k, v] : coef) keys.insert(k);
    for (const auto& [k, v] : constant) keys.insert(k);
    std::vector<SparseVec> rows;
    Vec rhs;
    for (const auto& k : keys) {
        SparseVec sv;
        if (auto it = coef.find(k); it != coef.end())
            for (const auto& [c, x] : it->second)
                if (sgn(x) != 0) sv.emplace_back(c, x);
        rows.push_back(std::move(sv));
        auto ct = constant.find(k);
        rhs.push_back(ct == constant.end() ? Rat(0) : Rat(-ct->second));
    }
    JacobiCheck jc;
    jc.solution = solve_affine_sparse(d * n, rows, rhs);
    jc.solvable = jc.solution.solvable;
    jc.rank = jc.solution.rank;
    jc.augmented_rank = jc.solution.augmented_rank;
    jc.kernel_dim = d * n - jc.rank;
    jc.J_zero = all_zero(jacobi_map(omega));
    return jc;
}

struct TypeAAnalysis {
    TypeAData data;
    JacobiCheck jacobi;
    FormTableau tableau;
    InvolutivityReport inv;
    std::vector<std::size_t> polar_codims;  // c_0 .. c_{n-1} along the generic flag
    std::size_t polar_sum = 0;
    std::size_t codim = 0;                  // codimension of the integral elements
    bool applies = false;
};

inline TypeAAnalysis type_A_analyze(const StructureSystem& sys, const SamplePoint& p, std::uint64_t seed = 0,
                                    int retries = 8) {
    TypeAAnalysis A;
    std::size_t n = sys.n();
    A.data = type_A_data(sys, p);
    A.tableau = FormTableau::from_forms(static_cast<int>(n), static_cast<int>(n), 2, A.data.g);
    if (A.tableau.dim() != A.data.tangent.size())
        throw std::invalid_argument("degenerate point " + describe_sample(p) + ": structure functions are not injective on T_pA");
    A.jacobi = jacobi_manifold_check(sys, p, A.data);
    A.inv = cartan_test(A.tableau, seed, retries);
    if (A.jacobi.kernel_dim != A.inv.dim_prolongation)
        throw std::logic_error("R-system kernel differs from the prolongation");
    std::size_t d = A.inv.dim;
    A.codim = n * d - A.inv.dim_prolongation;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t ck = 0;
        if (k > 0 && !A.inv.c.empty()) ck = A.inv.c[std::min(k, A.inv.c.size()) - 1];
        A.polar_codims.push_back(ck);
        A.polar_sum += ck;
    }
    A.applies = A.jacobi.solvable && A.inv.involutive;
    return A;
}

// The ideal {Upsilon^i, Psi^i} on the linearized space with coordinates
// pi^i_j (index i*n+j), eta^j (n^2+j) and pi^t (n^2+n+t).
inline PointIdeal jacobi_point_ideal(std::size_t n, const std::vector<std::vector<Form<Rat>>>& g) {
    std::size_t d = g.size();
    PointIdeal I;
    I.N = static_cast<int>(n * n + n + d);
    int eta0 = static_cast<int>(n * n), pi0 = static_cast<int>(n * n + n);
    for (std::size_t i = 0; i < n; ++i) {
        Form<Rat> ups(2);
        for (std::size_t j = 0; j < n; ++j)
            ups += wedge(Form<Rat>::basis(static_cast<int>(i * n + j)), Form<Rat>::basis(eta0 + static_cast<int>(j)));
        I.gens.push_back(ups);
        Form<Rat> psi(3);
        for (std::size_t t = 0; t < d; ++t) {
            Form<Rat> gi(2);
            for (const auto& [idx, c] : g[t][i].terms) gi.add({eta0 + idx[0], eta0 + idx[1]}, c);
            psi += wedge(Form<Rat>::basis(pi0 + static_cast<int>(t)), gi);
        }
        if (!psi.empty()) I.gens.push_back(psi);
    }
    return I;
}

// Lifts a flag of V into the eta-directions of the ideal above.
inline std::vector<Vec> lift_flag(std::size_t n, std::size_t d, const Flag& flag) {
    std::vector<Vec> out;
    for (const auto& f : flag) {
        Vec v(n * n + n + d);
        for (std::size_t j = 0; j < n; ++j) v[n * n + j] = f[j];
        out.push_back(v);
    }
    return out;
}

// ------------------------------------------------------- VARIANT / CTFT analysis

struct VariantAnalysis {
    ResidualReport residuals;
    GSolution g;
    FormTableau tableau;
    InvolutivityReport inv;
    bool applies = false;
};

inline VariantAnalysis variant_analyze(const StructureSystem& sys, const SamplePoint& p, std::uint64_t seed = 0,
                                       int retries = 8) {
    VariantAnalysis V;
    V.residuals = check_torsion(sys);
    V.g = solve_for_G(sys, V.residuals.dda);
    V.tableau = free_tableau(sys, p);
    V.inv = cartan_test(V.tableau, seed, retries);
    V.applies = verdict_ok(V.residuals.ddw_verdict()) && V.g.exists && V.inv.involutive;
    return V;
}

inline bool ctft_applies(const ResidualReport& r) {
    return verdict_ok(r.ddw_verdict()) && verdict_ok(r.dda_verdict());
}

// ------------------------------------------------------------ prolongation

struct ProlongedSystem {
    StructureSystem sys;
    bool symbolic = false;  // false: the new rules hold to first order at the base sample only
    std::size_t new_frees = 0;
};

inline std::vector<std::string> fresh_names(const StructureSystem& sys, const std::string& stem, std::size_t k) {
    std::vector<std::string> out;
    int i = 1;
    while (out.size() < k) {
        std::string nm = stem + std::to_string(i++);
        bool taken = sys.vars.declared(nm) || std::find(sys.coframe.begin(), sys.coframe.end(), nm) != sys.coframe.end();
        if (!taken) out.push_back(nm);
    }
    return out;
}

inline ProlongedSystem prolong_structure(const StructureSystem& sys, const SamplePoint& p, std::uint64_t seed = 0) {
    if (sys.mode == Mode::CTFT) throw std::invalid_argument("already free of derivatives");
    std::size_t n = sys.n();
    ProlongedSystem out;
    StructureSystem& P = out.sys;
    P.name = sys.name + "_prolonged";
    P.mode = Mode::VARIANT;
    P.coframe = sys.coframe;
    P.vars.funcs = sys.vars.funcs;
    P.vars.params = sys.vars.params;

    if (sys.mode == Mode::VARIANT) {
        VariantAnalysis V = variant_analyze(sys, p, seed);
        if (!V.g.exists) throw std::invalid_argument("the G-system has no solution");
        if (!V.inv.involutive) throw std::invalid_argument("tableau of free derivatives is not involutive");
        std::size_t r = sys.r();
        // Kernel of the homogeneous G-system at p: the prolongation A(1).
        std::size_t k = V.g.kernel_dim;
        if (k != V.inv.dim_prolongation) throw std::logic_error("G-system kernel differs from the prolongation");
        auto cs = fresh_names(sys, "c", k);
        for (const auto& b : sys.vars.frees) P.vars.params.push_back(b);
        P.vars.frees = cs;
        std::vector<Expr> cvars;
        for (const auto& c : cs) cvars.push_back(P.vars.var(c));
        std::vector<Form<Expr>> part;
        std::vector<std::vector<Form<Expr>>> ker;
        std::size_t base = std::find(sys.samples.begin(), sys.samples.end(), p) - sys.samples.begin();
        if (V.g.symbolic) {
            out.symbolic = true;
            part = V.g.G;
            ker = V.g.kernel;
        } else {
            const AffineSolution& a = V.g.numeric.at(base < sys.samples.size() ? base : 0);
            std::vector<Expr> x;
            for (const auto& v : a.particular) x.push_back(Expr(v));
            part = g_forms(x, n, r);
            for (const auto& kv : a.kernel.basis) {
                std::vector<Expr> y;
                for (const auto& v : kv) y.push_back(Expr(v));
                ker.push_back(g_forms(y, n, r));
            }
        }
        for (const auto& f : sys.F) P.F.push_back(rekind(*f, P.vars));
        for (std::size_t rho = 0; rho < r; ++rho) {
            Form<Expr> f = part[rho];
            for (std::size_t t = 0; t < k; ++t) f += ker[t][rho].scaled(cvars[t]);
            P.F.push_back(rekind(simplify(f), P.vars));
        }
    } else {
        TypeAAnalysis A = type_A_analyze(sys, p, seed);
        if (!A.jacobi.solvable) throw std::invalid_argument("not a Jacobi manifold at the sample point");
        if (!A.inv.involutive) throw std::invalid_argument("tableau is not involutive");
        std::size_t d = A.data.g.size(), s = sys.s();
        std::size_t k = A.jacobi.kernel_dim;
        P.vars.frees = fresh_names(sys, "c", k);
        std::vector<Expr> cvars;
        for (const auto& c : P.vars.frees) cvars.push_back(P.vars.var(c));
        // R^t_m: symbolic when the parametrization is affine and the system is small.
        std::vector<Expr> R(d * n, Expr(0));
        bool affine = sys.relations.empty();
        if (affine) {
            std::vector<std::vector<Form<Expr>>> g(d, std::vector<Form<Expr>>(n, Form<Expr>(2)));
            for (std::size_t t = 0; t < d; ++t)
                for (std::size_t a = 0; a < s; ++a)
                    if (sgn(A.data.tangent[t][a]) != 0)
                        for (std::size_t i = 0; i < n; ++i) g[t][i] += A.data.dOmega[a][i].scaled(Expr(A.data.tangent[t][a]));
            std::map<std::pair<std::size_t, Index>, std::map<std::size_t, Expr>> coef;
            std::map<std::pair<std::size_t, Index>, Expr> constant;
            build_R_rows<Expr>(n, g, sys.dw, coef, constant);
            SymbolicSystem S;
            S.ncols = d * n;
            std::set<std::pair<std::size_t, Index>> keys;
            for (const auto& [kk, v] : coef) keys.insert(kk);
            for (const auto& [kk, v] : constant) keys.insert(kk);
            for (const auto& kk : keys) {
                S.rows.push_back(coef.count(kk) ? coef[kk] : std::map<std::size_t, Expr>{});
                S.rhs.push_back(constant.count(kk) ? -constant[kk] : Expr(0));
            }
            SymbolicSolution sol = solve_symbolic(S, sys.samples.empty() ? std::vector<SamplePoint>{p} : sys.samples);
            if (sol.ok && sol.consistent && sol.kernel.size() == k) {
                out.symbolic = true;
                R = sol.particular;
                for (std::size_t u = 0; u < k; ++u)
                    for (std::size_t c = 0; c < d * n; ++c)
                        if (!sol.kernel[u][c].is_const_zero()) R[c] = R[c] + cvars[u] * sol.kernel[u][c];
            }
        }
        if (!out.symbolic) {
            for (std::size_t c = 0; c < d * n; ++c) R[c] = Expr(A.jacobi.solution.particular[c]);
            for (std::size_t u = 0; u < k; ++u)
                for (std::size_t c = 0; c < d * n; ++c)
                    if (sgn(A.jacobi.solution.kernel.basis[u][c]) != 0)
                        R[c] = R[c] + cvars[u] * Expr(A.jacobi.solution.kernel.basis[u][c]);
        }
        for (std::size_t a = 0; a < s; ++a) {
            Form<Expr> f(1);
            for (std::size_t t = 0; t < d; ++t)
                if (sgn(A.data.tangent[t][a]) != 0)
                    for (std::size_t m = 0; m < n; ++m) f.add({static_cast<int>(m)}, R[t * n + m] * Expr(A.data.tangent[t][a]));
            P.F.push_back(rekind(simplify(f), P.vars));
        }
    }
    for (const auto& w : sys.dw) P.dw.push_back(rekind(w, P.vars));
    for (const auto& rel : sys.relations) P.relations.push_back(rekind(rel, P.vars));
    P.G.assign(P.vars.frees.size(), std::nullopt);
    auto extend = [&](SamplePoint q) {
        for (const auto& c : P.vars.frees) q[c] = 0;
        return q;
    };
    if (out.symbolic)
        for (const auto& q : sys.samples) P.samples.push_back(extend(q));
    else
        P.samples.push_back(extend(p));
    out.new_frees = P.vars.frees.size();
    return out;
}

// ------------------------------------------------------------------ counting

// s0 + sum_j C(k+j-1, j) s_j
inline Int invariant_count(std::size_t s0, const std::vector<std::size_t>& s, long k) {
    if (k < 0) throw std::invalid_argument("k must be nonnegative");
    Int total = static_cast<long>(s0);
    for (std::size_t j = 1; j <= s.size(); ++j)
        total += binomial(k + static_cast<long>(j) - 1, static_cast<long>(j)) * Int(static_cast<long>(s[j - 1]));
    return total;
}

// n + C(k,0) s0 + sum_j C(k+j, j) s_j
inline Int dim_Mk(std::size_t n, std::size_t s0, const std::vector<std::size_t>& s, long k) {
    if (k < 0) throw std::invalid_argument("k must be nonnegative");
    Int total = static_cast<long>(n + s0);
    for (std::size_t j = 1; j <= s.size(); ++j)
        total += binomial(k + static_cast<long>(j), static_cast<long>(j)) * Int(static_cast<long>(s[j - 1]));
    return total;
}

// Characters of the k-th prolongation of an involutive tableau:
// s^(k)_i = sum_{j>=i} C(k+j-i-1, k-1) s_j.
inline std::vector<std::size_t> prolonged_characters(const std::vector<std::size_t>& s, long k) {
    if (k == 0) return s;
    std::vector<std::size_t> out(s.size(), 0);
    for (std::size_t i = 1; i <= s.size(); ++i)
        for (std::size_t j = i; j <= s.size(); ++j)
            out[i - 1] += s[j - 1] * static_cast<std::size_t>(binomial(k + static_cast<long>(j - i) - 1, k - 1).get_si());
    return out;
}

// Number of parameters minus the rank of the parameter relations at p.
inline std::size_t effective_param_count(const StructureSystem& sys, const SamplePoint& p) {
    std::size_t s = sys.s();
    Echelon e(s);
    for (const auto& rel : sys.relations) {
        Vec row(s);
        for (std::size_t a = 0; a < s; ++a) row[a] = eval(diff(rel, sys.vars.params[a], sys.vars), p);
        e.insert(row);
    }
    return s - e.rank();
}

inline std::string generality_sentence(const std::vector<std::size_t>& s, std::size_t s0 = 0) {
    for (std::size_t q = s.size(); q >= 1; --q) {
        std::size_t x = s[q - 1];
        if (x == 0) continue;
        std::ostringstream os;
        os << "depends on " << x << (x == 1 ? " function of " : " functions of ") << q
           << (q == 1 ? " variable" : " variables");
        return os.str();
    }
    std::ostringstream os;
    os << "depends on " << s0 << (s0 == 1 ? " constant" : " constants");
    return os.str();
}

}  // namespace eds
