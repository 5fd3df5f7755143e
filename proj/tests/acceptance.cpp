// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "common.hpp"

#include <chrono>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace eds;
using namespace testing_support;

namespace {

using Sizes = std::vector<std::size_t>;

struct Check {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    template <class A, class B>
    void equal(const A& got, const B& want, const std::string& what) {
        if (got == want) return;
        std::ostringstream os;
        os << what << ": got " << show(got) << ", want " << show(want);
        failures.push_back(os.str());
    }

    template <class T>
    static std::string show(const T& x) {
        std::ostringstream os;
        if constexpr (std::is_same_v<T, Sizes>) {
            os << "(";
            for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
            os << ")";
        } else if constexpr (std::is_same_v<T, Json>) {
            os << x.dump();
        } else {
            os << x;
        }
        return os.str();
    }
};

Sizes padded(Sizes s, std::size_t n) {
    s.resize(n, 0);
    return s;
}

Sizes json_sizes(const Json& j) { return j.get<Sizes>(); }

Json report(const std::string& name) { return analyze_file(corpus(name), {}); }

// ---------------------------------------------------------------- 1-11

void riemannian(Check& ck) {
    for (long m = 2; m <= 5; ++m) {
        auto t0 = std::chrono::steady_clock::now();
        TorsionFreeAnalysis T = torsion_free_analysis(algebra_from_spec(corpus("so" + std::to_string(m)).algebra));
        std::string tag = "so(" + std::to_string(m) + ")";
        Sizes s;
        for (long p = 1; p <= m; ++p) s.push_back(static_cast<std::size_t>(m * (p - 1) * (m - p + 1) / 2));
        ck.equal(T.inv.s, s, tag + " characters");
        ck.equal(T.kernels.K0_dim, static_cast<std::size_t>(m * m * (m * m - 1) / 12), tag + " dim K0");
        ck.equal(T.kernels.K1_dim, static_cast<std::size_t>(m * m * (m * m - 1) * (m + 2) / 24), tag + " dim K1");
        ck.expect(T.inv.involutive, tag + " involutive");
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ck.expect(secs < 60, tag + " took " + std::to_string(secs) + " s");
    }
}

void special_unitary(Check& ck) {
    TorsionFreeAnalysis T = torsion_free_analysis(algebra_from_spec(corpus("su2").algebra));
    ck.equal(T.kernels.K0_dim, 5u, "dim K0");
    ck.equal(T.inv.s, Sizes{0, 3, 2, 0}, "characters");
    ck.equal(T.kernels.K1_dim, 12u, "dim K1");
    ck.expect(T.inv.involutive, "involutive");
    ck.expect(T.generality.find("2 functions of 3 variables") != std::string::npos, "generality: " + T.generality);
}

void segre(Check& ck) {
    const long m = 3;
    Json r = report("segre3");
    Sizes s = json_sizes(r["characters"]["s"]);
    Sizes want;
    for (long k = 1; k <= m + 1; ++k) want.push_back(static_cast<std::size_t>((k - 1) * (m * m - (k - 4) * m - 2 * k + 3)));
    std::size_t dimA = static_cast<std::size_t>(m * (m + 1) * (m * m + 4 * m + 1) / 6);
    std::size_t dimA1 = static_cast<std::size_t>(m * (m + 1) * (m + 2) * (m * m + 5 * m + 2) / 12);
    ck.equal(r["characters"]["effective"].size(), 6u, "effective dimension");
    ck.equal(padded(s, 6), padded(want, 6), "characters");
    ck.equal(s, padded(want, s.size()), "characters beyond the effective block");
    ck.equal(r["dims"]["tableau"].get<std::size_t>(), dimA, "dim A");
    ck.equal(r["dims"]["prolongation"].get<std::size_t>(), dimA1, "dim A(1)");
    ck.equal(dimA, 44u, "dim A formula at m = 3");
    ck.equal(dimA1, 130u, "dim A(1) formula at m = 3");
    std::size_t sum = 0, wsum = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        sum += s[k];
        wsum += (k + 1) * s[k];
    }
    ck.equal(sum, dimA, "sum of characters");
    ck.equal(wsum, dimA1, "weighted sum of characters");
    ck.equal(r["verdict"], Json("involutive"), "verdict");
}

void einstein_weyl(Check& ck) {
    Json r = report("einstein_weyl");
    ck.equal(r["identities"]["jacobi"], Json("solvable"), "Jacobi manifold check");
    Sizes s = json_sizes(r["characters"]["s"]);
    ck.equal(s, padded({0, 4}, s.size()), "characters");
    ck.equal(r["verdict"], Json("involutive"), "verdict");
    ck.expect(r["generality"].get<std::string>().find("4 functions of 2 variables") != std::string::npos,
              "generality: " + r["generality"].dump());
}

void finsler(Check& ck) {
    const std::vector<std::pair<std::string, Sizes>> cases{{"finsler_base", {0, 2, 1}},
                                                           {"finsler_prolonged", {3, 3, 1}},
                                                           {"finsler_landsberg", {2, 2, 0}},
                                                           {"finsler_kbasic", {3, 3, 0}},
                                                           {"finsler_constk", {2, 2, 0}}};
    for (const auto& [name, want] : cases) {
        Json r = report(name);
        Sizes s = json_sizes(r["characters"]["s"]);
        ck.equal(s, padded(want, s.size()), name + " characters");
        ck.equal(r["verdict"], Json("involutive"), name + " verdict");
    }
}

void unit_gradient(Check& ck) {
    DslFile f = corpus("gradk1");
    ResidualReport R = check_torsion(f.sys);
    for (const auto& r : R.ddw) ck.expect(simplify(r).empty(), "ddw residual " + print_form(r, f.sys.coframe));
    const SamplePoint& p = f.sys.samples.front();
    ck.equal(cartan_test(free_tableau(f.sys, p)).s, Sizes{1, 0, 0}, "free tableau characters");

    // The prolonged rule is db = w12 + (something) * (-sin b w1 + cos b w2):
    // unit w12 coefficient and (w1, w2) part orthogonal to (cos b, sin b).
    ProlongedSystem P = prolong_structure(f.sys, p);
    const StructureSystem& S = P.sys;
    ck.equal(P.new_frees, 1u, "new free derivatives");
    const Form<Expr>& db = *S.F[S.param_index("b")];
    ck.expect(is_zero(db.coeff({2}) - Expr(1)), "w12 coefficient of db is " + print(db.coeff({2})));
    for (const auto& q0 : S.samples)
        for (int c1 : {-2, 1, 5}) {
            SamplePoint q = q0;
            q[S.vars.frees.front()] = Rat(c1);
            Rat x = eval(db.coeff({0}), q), y = eval(db.coeff({1}), q);
            ck.expect(x * q.at("c") + y * q.at("s") == 0, "db not along (-sin b, cos b)");
            ck.expect(x * x + y * y != 0, "db has no (w1, w2) part");
        }
    ck.equal(check_torsion(S).ddw_verdict(), std::string("holds"), "prolonged ddw");
}

void hessian(Check& ck) {
    DslFile f = corpus("hessian_generic");
    ResidualReport R = check_torsion(f.sys);
    Expr cond = parse("a' - a*b + K", f.sys.vars);
    std::size_t nonzero = 0;
    for (const auto& r : R.dda)
        for (const auto& [idx, c] : simplify(r).terms) {
            Expr quotient = fraction_to_expr(to_fraction(normalize(c / cond)));
            ck.expect(is_zero(quotient * cond - c), "residual " + print(c) + " is not a multiple");
            std::set<std::string> deps = dependencies(quotient);
            ck.expect(!deps.count("a") && !deps.count("b") && !deps.count("a'"),
                      "quotient " + print(quotient) + " still involves a, b");
            ++nonzero;
        }
    ck.expect(nonzero > 0, "generic system has a nonzero residual");
    DslFile g = corpus("hessian_reduced");
    for (const auto& r : check_torsion(g.sys).dda) ck.expect(simplify(r).empty(), "reduced residual nonzero");
}

void ricci_gradient(Check& ck) {
    Json r = report("ricci_gradient");
    Sizes s = json_sizes(r["characters"]["s"]);
    ck.equal(s, padded({3, 2}, s.size()), "characters");
    ck.equal(r["dims"]["prolongation"].get<std::size_t>(), 7u, "dim A(1)");
    ck.equal(r["theorem"], Json("applies"), "theorem verdict");
}

void constant_ricci(Check& ck) {
    Json d = report("constricci_distinct");
    Sizes s = json_sizes(d["characters"]["s"]);
    ck.equal(s, padded({0, 3}, s.size()), "distinct characters");
    ck.equal(d["verdict"], Json("involutive"), "distinct verdict");

    Json t = report("constricci_two_equal");
    ck.expect(t["verdict"].get<std::string>().rfind("not involutive", 0) == 0, "two-equal verdict " + t["verdict"].dump());
    ck.equal(json_sizes(t["characters"]["polar_codims"]), Sizes{0, 0, 2, 2, 2, 2}, "two-equal polar codims");
    ck.equal(t["dims"]["polar_sum"].get<std::size_t>(), 8u, "two-equal polar sum");
    ck.equal(t["dims"]["codim"].get<std::size_t>(), 9u, "two-equal codimension");

    Json p = report("constricci_two_equal_prolonged");
    s = json_sizes(p["characters"]["s"]);
    ck.equal(s, padded({2}, s.size()), "prolonged characters");
    ck.equal(p["theorem"], Json("applies"), "prolonged theorem verdict");
}

void three_metrics(Check& ck) {
    Json r = report("so3_metrics");
    Sizes s = json_sizes(r["characters"]["s"]);
    ck.expect(s.size() >= 3 && s[1] == 3 && s[2] == 3, "s2 = s3 = 3, got " + Check::show(s));
    ck.equal(r["verdict"], Json("involutive"), "verdict");
    const Json& counts = r["invariant_counts"];
    for (long k = 1; k <= 5; ++k) {
        Json want = k * (k + 1) * (k + 5) / 2;
        ck.equal(counts[static_cast<std::size_t>(k - 1)]["count"], want, "invariant count k=" + std::to_string(k));
    }
}

void point_ideals(Check& ck) {
    for (int n : {2, 3}) {
        DslFile f = corpus("lagrangian" + std::to_string(n));
        FlagReport r = ordinary_test(f.point.ideal, f.point.element, f.point.transverse);
        std::string tag = "Lagrangian n=" + std::to_string(n);
        std::vector<int> s(static_cast<std::size_t>(n + 1), 1);
        s[0] = 0;
        ck.equal(r.verdict, std::string("ordinary"), tag + " verdict");
        ck.equal(r.bound, n * (n - 1) / 2, tag + " bound");
        ck.expect(r.codim && *r.codim == n * (n - 1) / 2, tag + " codimension");
        ck.expect(r.s == s, tag + " characters");
    }
    DslFile fr = corpus("frobenius");
    FlagReport r = ordinary_test(fr.point.ideal, fr.point.element, fr.point.transverse);
    ck.equal(r.verdict, std::string("ordinary"), "Frobenius verdict");
    // s0 counts the 1-forms of the ideal, all other characters vanish.
    ck.equal(r.s.front(), static_cast<int>(fr.point.ideal.gens.size()), "Frobenius s0");
    for (std::size_t i = 1; i < r.s.size(); ++i) ck.equal(r.s[i], 0, "Frobenius s" + std::to_string(i));
    DslFile no = corpus("nonordinary_example");
    FlagReport x = ordinary_test(no.point.ideal, no.point.element, no.point.transverse);
    ck.equal(x.bound, 1, "non-ordinary bound");
    ck.expect(x.codim && *x.codim == 2, "non-ordinary codimension");
    ck.equal(x.verdict, std::string("not_ordinary"), "non-ordinary verdict");
}

// ---------------------------------------------------------------- 12

struct NamedTableau {
    std::string name;
    FormTableau t;
};

std::vector<NamedTableau> corpus_tableaux() {
    std::vector<NamedTableau> out;
    for (const auto& e : load_manifest(EDS_CORPUS_DIR)) {
        DslFile f = load_dsl(std::string(EDS_CORPUS_DIR) + "/" + e.file);
        if (f.kind == DslFile::Algebra) {
            LieSubalgebra h = algebra_from_spec(f.algebra);
            if (h.closed) out.push_back({e.name, curvature_kernels(h).K0});
        } else if (f.kind == DslFile::Structure && !f.sys.samples.empty()) {
            const SamplePoint& p = f.sys.samples.front();
            if (f.sys.mode == Mode::VARIANT) out.push_back({e.name, free_tableau(f.sys, p)});
            if (f.sys.mode == Mode::TYPE_A) {
                int n = static_cast<int>(f.sys.n());
                out.push_back({e.name, FormTableau::from_forms(n, n, 2, type_A_data(f.sys, p).g)});
            }
        }
    }
    return out;
}

// Dimension of the k-th prolongation of an involutive tableau through the
// q = 1 tableau B(1) when B itself carries 2-form values.
void binomial_and_shift(Check& ck, bool binomial_part) {
    for (const auto& [name, t] : corpus_tableaux()) {
        InvolutivityReport r = cartan_test(t);
        if (!r.involutive) continue;
        FormTableau b = restrict_directions(t, r.effective);
        Sizes s(r.s.begin(), r.s.begin() + static_cast<long>(r.effective.size()));
        FormTableau b1 = prolong(b);
        if (!binomial_part) {
            InvolutivityReport r1 = cartan_test(b1);
            ck.equal(r1.s, prolonged_characters(s, 1), name + " characters of B(1)");
            continue;
        }
        if (t.q == 1) {
            for (const auto& row : binomial_dim_check(t, 3))
                ck.equal(row.computed, row.formula, name + " k=" + std::to_string(row.k));
        } else {
            // B(1) is a q = 1 tableau, involutive with shifted characters.
            if (b.dim() > 200) continue;
            for (const auto& row : binomial_dim_check(b1, 3))
                ck.equal(row.computed, row.formula, name + " (first prolongation) k=" + std::to_string(row.k));
        }
    }
}

void jacobi(Check& ck) {
    std::mt19937_64 g(12);
    std::vector<std::vector<Matrix>> families{preset("so", 3), preset("gl", 2), upper3(), preset("so", 4),
                                              preset("gl", 3)};
    for (int trial = 0; trial < 20; ++trial) {
        LieSubalgebra h = random_lie_algebra(g, families[static_cast<std::size_t>(trial) % families.size()]);
        ck.expect(h.closed, "random algebra " + std::to_string(trial) + " not closed");
        ck.expect(all_zero(jacobi_map(structure_forms(h))), "J nonzero on Lie algebra " + std::to_string(trial));
    }
    // [e1,e2] = e3, [e2,e3] = e3, [e1,e3] = e1 has cyclic sum e1 + e3.
    std::vector<Form<Rat>> dw(3, Form<Rat>(2));
    dw[2].add({0, 1}, Rat(-1));
    dw[2].add({1, 2}, Rat(-1));
    dw[0].add({0, 2}, Rat(-1));
    auto J = jacobi_map(dw);
    ck.expect(J[0].coeff({0, 1, 2}) == 1 && J[1].coeff({0, 1, 2}) == 0 && J[2].coeff({0, 1, 2}) == 1,
              "J on the non-Jacobi witness is not e1 + e3");
}

void prolong_oracle(Check& ck) {
    std::mt19937_64 g(1234);
    for (int trial = 0; trial < 50; ++trial) {
        int m = 1 + static_cast<int>(g() % 3), n = 1 + static_cast<int>(g() % 3);
        FormTableau t = random_tableau(g, m, n, 1 + g() % static_cast<std::size_t>(m * n));
        ck.equal(prolongation_dim(t), brute_prolongation_dim(t), "trial " + std::to_string(trial));
    }
}

void polar_extension(Check& ck) {
    std::mt19937_64 g(99);
    std::size_t entries = 0;
    for (const auto& e : load_manifest(EDS_CORPUS_DIR)) {
        DslFile f = load_dsl(std::string(EDS_CORPUS_DIR) + "/" + e.file);
        if (f.kind != DslFile::Point) continue;
        ++entries;
        const auto& el = f.point.element;
        std::size_t N = static_cast<std::size_t>(f.point.ideal.N);
        for (std::size_t i = 0; i < el.size(); ++i) {
            std::vector<Vec> Ei(el.begin(), el.begin() + static_cast<long>(i));
            Subspace H = polar_space(f.point.ideal, Ei).H;
            for (int t = 0; t < 40; ++t) {
                Vec v = random_vec(g, N, -2, 2);
                if (t % 2 == 0 && H.dim() > 0) {
                    v.assign(N, Rat(0));
                    for (const auto& b : H.basis)
                        for (std::size_t k = 0; k < N; ++k) v[k] += small_rat(g) * b[k];
                }
                std::vector<Vec> ext = span_plus(Ei, v);
                if (rank_of(N, ext) != i + 1) continue;
                ck.expect(H.contains(v) == is_integral(f.point.ideal, ext), e.name + " at E_" + std::to_string(i));
            }
        }
    }
    ck.expect(entries >= 4, "fewer than four point-ideal entries");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
        {"1  Riemannian so(m), m = 2..5", riemannian},
        {"2  su(2) in gl(4)", special_unitary},
        {"3  Segre m = 3", segre},
        {"4  Einstein-Weyl", einstein_weyl},
        {"5  Finsler family", finsler},
        {"6  unit-gradient surfaces", unit_gradient},
        {"7  Hessian-type torsion", hessian},
        {"8  Ricci-gradient metrics", ricci_gradient},
        {"9  constant Ricci eigenvalues", constant_ricci},
        {"10 general 3D metrics", three_metrics},
        {"11 point-ideal suite", point_ideals},
        {"12 property suites",
         [](Check& ck) {
             const std::vector<std::pair<std::string, std::function<void(Check&)>>> parts{
                 {"(a) binomial formula", [](Check& c) { binomial_and_shift(c, true); }},
                 {"(b) shift identity", [](Check& c) { binomial_and_shift(c, false); }},
                 {"(c) Jacobi map", jacobi},
                 {"(d) prolongation oracle", prolong_oracle},
                 {"(e) polar extension", polar_extension}};
             for (const auto& [label, fn] : parts) {
                 Check sub;
                 fn(sub);
                 for (const auto& f : sub.failures) ck.failures.push_back(label + " " + f);
             }
         }},
    };
    int failed = 0;
    for (const auto& [label, fn] : criteria) {
        Check ck;
        auto t0 = std::chrono::steady_clock::now();
        try {
            fn(ck);
        } catch (const std::exception& e) {
            ck.failures.push_back(std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ostringstream os;
        os.precision(2);
        os << std::fixed << secs;
        std::cout << (ck.failures.empty() ? "PASS " : "FAIL ") << label << " (" << os.str() << " s)\n";
        for (const auto& f : ck.failures) std::cout << "     " << f << "\n";
        failed += !ck.failures.empty();
    }
    std::cout << (12 - failed) << "/12 criteria passed\n";
    return failed ? 1 : 0;
}
