#pragma once
// Analysis reports, their JSON and text forms, and the corpus runner.

#include "eds/dsl.hpp"
#include "eds/hstruct.hpp"
#include "eds/structeq.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fnmatch.h>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace eds {

using Json = nlohmann::ordered_json;

inline Json rat_json(const Rat& r) {
    if (is_integer(r) && r.get_num().fits_slong_p()) return r.get_num().get_si();
    return to_string(r);
}

inline Json int_json(const Int& z) {
    if (z.fits_slong_p()) return z.get_si();
    return z.get_str();
}

inline Json vec_json(const std::vector<std::size_t>& v) {
    Json a = Json::array();
    for (auto x : v) a.push_back(x);
    return a;
}

inline Json flag_json(const Flag& f) {
    Json a = Json::array();
    for (const auto& v : f) {
        Json row = Json::array();
        for (const auto& x : v) row.push_back(rat_json(x));
        a.push_back(row);
    }
    return a;
}

inline Json counts_json(std::size_t s0, const std::vector<std::size_t>& s, int kmax = 5) {
    Json a = Json::array();
    for (long k = 1; k <= kmax; ++k) a.push_back(Json{{"k", k}, {"count", int_json(invariant_count(s0, s, k))}});
    return a;
}

inline Json characters_json(const InvolutivityReport& r) {
    Json c;
    c["s"] = vec_json(r.s);
    c["c"] = vec_json(r.c);
    Json eff = Json::array();
    for (int x : r.effective) eff.push_back(x);
    c["effective"] = eff;
    c["flag"] = flag_json(r.flag);
    return c;
}

struct AnalyzeOptions {
    std::uint64_t seed = 0;
    int retries = 8;
};

inline Json analyze_structure(const StructureSystem& sys, const AnalyzeOptions& o) {
    Json r;
    r["mode"] = mode_name(sys.mode);
    check_samples(sys);
    if (sys.mode == Mode::CTFT) {
        ResidualReport res = check_torsion(sys);
        Json id;
        id["ddw"] = res.ddw_verdict();
        id["dda"] = res.dda_verdict();
        for (const auto* vs : {&res.ddw_verdicts, &res.dda_verdicts})
            for (const auto& v : *vs)
                if (v.verdict == "fails") id["witness"].push_back(v.name + " " + v.witness);
        r["identities"] = id;
        bool ok = ctft_applies(res);
        r["verdict"] = ok ? "applies" : "does not apply";
        r["theorem"] = r["verdict"];
        r["invariant_counts"] = counts_json(sys.s(), {});
        return r;
    }
    if (sys.samples.empty()) throw std::invalid_argument("sample points are required for " + mode_name(sys.mode) + " analysis");
    const SamplePoint& p = sys.samples.front();
    if (sys.mode == Mode::VARIANT) {
        VariantAnalysis V = variant_analyze(sys, p, o.seed, o.retries);
        Json id;
        id["ddw"] = V.residuals.ddw_verdict();
        id["dda"] = V.residuals.dda_verdict();
        id["G"] = !V.g.exists ? "fails" : V.g.symbolic ? "exists" : "exists_at_samples";
        for (const auto& v : V.residuals.ddw_verdicts)
            if (v.verdict == "fails") id["witness"].push_back(v.name + " " + v.witness);
        if (!V.g.exists) id["witness"].push_back(V.g.note);
        r["identities"] = id;
        r["characters"] = characters_json(V.inv);
        std::size_t s0 = effective_param_count(sys, p);
        r["characters"]["s0"] = s0;
        r["dims"] = Json{{"tableau", V.inv.dim},
                         {"prolongation", V.inv.dim_prolongation},
                         {"bound", V.inv.bound},
                         {"G_kernel", V.g.kernel_dim}};
        r["verdict"] = involutivity_verdict(V.inv);
        r["theorem"] = V.applies ? "applies" : "does not apply";
        r["generality"] = generality_sentence(V.inv.s, s0);
        r["invariant_counts"] = counts_json(s0, V.inv.s);
        for (std::size_t k = 1; k < sys.samples.size(); ++k) {
            FormTableau t = free_tableau(sys, sys.samples[k]);
            if (cartan_test(t, o.seed, o.retries).s != V.inv.s)
                r["notes"].push_back("characters differ at sample " + std::to_string(k + 1));
        }
        r["notes"].push_back("rank constancy near the sample point is assumed");
        return r;
    }
    TypeAAnalysis A = type_A_analyze(sys, p, o.seed, o.retries);
    Json id;
    id["jacobi"] = A.jacobi.solvable ? "solvable" : "unsolvable";
    id["J_zero"] = A.jacobi.J_zero;
    r["identities"] = id;
    r["characters"] = characters_json(A.inv);
    r["characters"]["polar_codims"] = vec_json(A.polar_codims);
    r["dims"] = Json{{"tableau", A.inv.dim},
                     {"prolongation", A.inv.dim_prolongation},
                     {"bound", A.inv.bound},
                     {"codim", A.codim},
                     {"polar_sum", A.polar_sum},
                     {"R_kernel", A.jacobi.kernel_dim}};
    r["verdict"] = involutivity_verdict(A.inv);
    r["theorem"] = A.applies ? "applies" : "does not apply";
    r["generality"] = generality_sentence(A.inv.s);
    r["invariant_counts"] = counts_json(0, A.inv.s);
    r["notes"].push_back("rank constancy near the sample point is assumed");
    return r;
}

inline Json analyze_algebra(const AlgebraSpec& a, const AnalyzeOptions& o) {
    Json r;
    r["mode"] = "HSTRUCT";
    LieSubalgebra h = algebra_from_spec(a);
    Json id;
    id["subalgebra"] = h.closed ? "holds" : "fails";
    if (!h.closed) {
        id["witness"].push_back(h.witness);
        r["identities"] = id;
        r["verdict"] = "not a subalgebra";
        return r;
    }
    TorsionFreeAnalysis T = torsion_free_analysis(h, o.seed, o.retries);
    StructureSystem S = emit_structure_system(h, a.name);
    TypeAAnalysis A = type_A_analyze(S, S.samples.front(), o.seed, o.retries);
    std::vector<std::size_t> padded = T.inv.s;
    padded.resize(A.inv.s.size(), 0);
    bool agrees = A.inv.s == padded && A.inv.involutive == T.inv.involutive && A.jacobi.solvable;
    id["emitted_system"] = agrees ? "agrees" : "disagrees";
    r["identities"] = id;
    r["characters"] = characters_json(T.inv);
    r["dims"] = Json{{"K0", T.kernels.K0_dim},
                     {"K1", T.kernels.K1_dim},
                     {"h1", T.kernels.h1_dim},
                     {"prolongation", T.inv.dim_prolongation},
                     {"bound", T.inv.bound}};
    r["verdict"] = involutivity_verdict(T.inv);
    r["generality"] = T.generality;
    r["invariant_counts"] = counts_json(0, T.inv.s);
    return r;
}

inline Json analyze_point(const PointSpec& pt) {
    Json r;
    r["mode"] = "POINT";
    FlagReport f = ordinary_test(pt.ideal, pt.element, pt.transverse);
    Json ch;
    Json s = Json::array(), c = Json::array();
    for (int x : f.s) s.push_back(x);
    for (int x : f.c) c.push_back(x);
    ch["s"] = s;
    ch["c"] = c;
    r["characters"] = ch;
    Json dims{{"bound", f.bound}, {"linear_rank", f.linear_rank}};
    if (f.codim) dims["codim"] = *f.codim;
    r["dims"] = dims;
    r["verdict"] = f.verdict;
    return r;
}

inline Json analyze_file(const DslFile& f, const AnalyzeOptions& o) {
    Json body;
    switch (f.kind) {
        case DslFile::Structure: body = analyze_structure(f.sys, o); break;
        case DslFile::Algebra: body = analyze_algebra(f.algebra, o); break;
        case DslFile::Point: body = analyze_point(f.point); break;
    }
    Json r;
    r["entry"] = f.name;
    for (auto it = body.begin(); it != body.end(); ++it) r[it.key()] = it.value();
    r["seed"] = o.seed;
    return r;
}

// ---------------------------------------------------------------- emitters

inline void flatten_json(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten_json(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (j.is_array() && std::all_of(j.begin(), j.end(), [](const Json& x) { return x.is_primitive(); })) {
        std::string s;
        for (const auto& x : j) {
            if (!s.empty()) s += " ";
            s += x.is_string() ? x.get<std::string>() : x.dump();
        }
        out.emplace_back(prefix, s);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten_json(j[i], prefix + "[" + std::to_string(i) + "]", out);
    } else {
        out.emplace_back(prefix, j.is_string() ? j.get<std::string>() : j.dump());
    }
}

inline std::string to_text(const Json& report) {
    std::vector<std::pair<std::string, std::string>> rows;
    flatten_json(report, "", rows);
    std::ostringstream os;
    for (const auto& [k, v] : rows) os << k << ":" << (v.empty() ? "" : " " + v) << "\n";
    return os.str();
}

// ------------------------------------------------------------------ corpus

struct CorpusEntry {
    std::string name, file, citation;
    Json expected;
};

inline std::vector<CorpusEntry> load_manifest(const std::string& dir) {
    std::ifstream in(dir + "/manifest.json");
    if (!in) throw std::runtime_error("cannot open " + dir + "/manifest.json");
    Json m = Json::parse(in);
    std::vector<CorpusEntry> out;
    for (const auto& e : m.at("entries")) {
        CorpusEntry c;
        c.name = e.at("name").get<std::string>();
        c.file = e.at("file").get<std::string>();
        c.citation = e.at("citation").get<std::string>();
        c.expected = e.value("expected", Json::object());
        if (c.citation.empty()) throw std::runtime_error("entry '" + c.name + "' has no citation");
        out.push_back(std::move(c));
    }
    return out;
}

// Every expected field must be present in the report with an equal value.
inline void diff_expected(const Json& expected, const Json& got, const std::string& path, std::vector<std::string>& out) {
    if (expected.is_object()) {
        for (auto it = expected.begin(); it != expected.end(); ++it) {
            std::string p = path.empty() ? it.key() : path + "." + it.key();
            if (!got.is_object() || !got.contains(it.key())) {
                out.push_back(p + ": expected " + it.value().dump() + " got nothing");
                continue;
            }
            diff_expected(it.value(), got.at(it.key()), p, out);
        }
        return;
    }
    if (expected != got) out.push_back(path + ": expected " + expected.dump() + " got " + got.dump());
}

struct EntryResult {
    std::string name;
    Json report;
    std::vector<std::string> diffs;
    std::string error;
    bool parse_error = false;
    long ms = 0;
    bool pass() const { return error.empty() && diffs.empty(); }
};

inline EntryResult run_entry(const CorpusEntry& e, const std::string& dir, const AnalyzeOptions& o) {
    EntryResult r;
    r.name = e.name;
    auto t0 = std::chrono::steady_clock::now();
    try {
        DslFile f = load_dsl(dir + "/" + e.file);
        f.name = e.name;
        r.report = analyze_file(f, o);
        diff_expected(e.expected, r.report, "", r.diffs);
    } catch (const ParseError& ex) {
        r.parse_error = true;
        r.error = e.file + ": " + ex.what();
    } catch (const std::exception& ex) {
        r.error = ex.what();
    }
    r.ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline bool glob_match(const std::string& pattern, const std::string& name) {
    return pattern.empty() || fnmatch(pattern.c_str(), name.c_str(), 0) == 0;
}

// Results come back in manifest order whatever the number of workers.
inline std::vector<EntryResult> run_corpus(const std::string& dir, const std::string& filter, const AnalyzeOptions& o,
                                           unsigned jobs = 1) {
    std::vector<CorpusEntry> selected;
    for (auto& e : load_manifest(dir))
        if (glob_match(filter, e.name)) selected.push_back(std::move(e));
    std::vector<EntryResult> results(selected.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < selected.size(); i = next++) results[i] = run_entry(selected[i], dir, o);
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, selected.size()))));
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < jobs; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return results;
}

}  // namespace eds
