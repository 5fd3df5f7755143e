// eds: command-line front end for the structure-equation and tableau analyses.

#include "eds/report.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>

#ifndef EDS_CORPUS_DIR
#define EDS_CORPUS_DIR "corpus"
#endif

using namespace eds;

namespace {

struct Common {
    std::string file;
    std::string format = "text";
    std::uint64_t seed = 0;
    bool timing = false;
};

std::uint64_t default_seed() {
    const char* s = std::getenv("EDS_SEED");
    if (!s || !*s) return 0;
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        throw CLI::ValidationError("EDS_SEED", "not a nonnegative integer");
    }
}

void emit(const Json& r, const std::string& format) {
    if (format == "json") std::cout << r.dump(2) << "\n";
    else std::cout << to_text(r);
}

Json tableau_json(const FormTableau& t, const AnalyzeOptions& o) {
    InvolutivityReport inv = cartan_test(t, o.seed, o.retries);
    Json r;
    r["tableau"] = Json{{"W", t.m}, {"V", t.n}, {"q", t.q}, {"generators", t.gens.size()}};
    r["characters"] = characters_json(inv);
    r["dims"] = Json{{"tableau", inv.dim}, {"prolongation", inv.dim_prolongation}, {"bound", inv.bound}};
    r["verdict"] = involutivity_verdict(inv);
    r["flags_tried"] = inv.flags_tried;
    if (t.q == 1 && inv.involutive) {
        Json rows = Json::array();
        for (const auto& b : binomial_dim_check(t, 3, o.seed))
            rows.push_back(Json{{"k", b.k}, {"computed", b.computed}, {"formula", b.formula}});
        r["prolongation_dims"] = rows;
    }
    return r;
}

DslFile load_input(const std::string& path) {
    if (!std::filesystem::is_regular_file(path)) throw CLI::ValidationError("FILE", "cannot open '" + path + "'");
    return load_dsl(path);
}

int cmd_check(const Common& c) {
    auto t0 = std::chrono::steady_clock::now();
    DslFile f = load_input(c.file);
    Json r = analyze_file(f, {c.seed, 8});
    if (c.timing)
        r["ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    emit(r, c.format);
    return 0;
}

int cmd_tableau(const Common& c) {
    DslFile f = load_input(c.file);
    AnalyzeOptions o{c.seed, 8};
    FormTableau t;
    if (f.kind == DslFile::Algebra) t = curvature_kernels(algebra_from_spec(f.algebra)).K0;
    else if (f.kind == DslFile::Structure && f.sys.mode == Mode::VARIANT) {
        if (f.sys.samples.empty()) throw std::invalid_argument("sample points are required");
        t = free_tableau(f.sys, f.sys.samples.front());
    } else if (f.kind == DslFile::Structure && f.sys.mode == Mode::TYPE_A) {
        if (f.sys.samples.empty()) throw std::invalid_argument("sample points are required");
        auto D = type_A_data(f.sys, f.sys.samples.front());
        t = FormTableau::from_forms(static_cast<int>(f.sys.n()), static_cast<int>(f.sys.n()), 2, D.g);
    } else {
        throw std::invalid_argument("no tableau for this input (CTFT systems and point ideals have none)");
    }
    Json r;
    r["entry"] = f.name;
    Json body = tableau_json(t, o);
    for (auto it = body.begin(); it != body.end(); ++it) r[it.key()] = it.value();
    r["seed"] = c.seed;
    emit(r, c.format);
    return 0;
}

int cmd_point(const Common& c) {
    DslFile f = load_input(c.file);
    if (f.kind != DslFile::Point) throw std::invalid_argument("expected an ideal with an element");
    Json r = analyze_file(f, {c.seed, 8});
    emit(r, c.format);
    return 0;
}

int cmd_hstruct(const Common& c, bool show_system) {
    DslFile f = load_input(c.file);
    if (f.kind != DslFile::Algebra) throw std::invalid_argument("expected an algebra declaration");
    Json r = analyze_file(f, {c.seed, 8});
    emit(r, c.format);
    if (show_system) std::cout << to_dsl(emit_structure_system(algebra_from_spec(f.algebra), f.name));
    return r["identities"]["subalgebra"] == "holds" ? 0 : 1;
}

int cmd_prolong(const Common& c, int k) {
    DslFile f = load_input(c.file);
    if (f.kind != DslFile::Structure) throw std::invalid_argument("expected a structure system");
    StructureSystem cur = f.sys;
    for (int step = 1; step <= k; ++step) {
        if (cur.samples.empty()) throw std::invalid_argument("sample points are required");
        ProlongedSystem P = prolong_structure(cur, cur.samples.front(), c.seed);
        cur = P.sys;
        InvolutivityReport inv = cartan_test(free_tableau(cur, cur.samples.front()), c.seed);
        std::cout << "# step " << step << ": " << P.new_frees << " new free derivatives, s =";
        for (auto x : inv.s) std::cout << ' ' << x;
        std::cout << (P.symbolic ? "" : " (rules valid at the base sample only)") << "\n";
    }
    std::cout << to_dsl(cur);
    return 0;
}

int cmd_corpus(const std::string& dir, const std::string& filter, const Common& c, unsigned jobs) {
    auto results = run_corpus(dir, filter, {c.seed, 8}, jobs);
    int failed = 0;
    bool parse_failure = false;
    Json all = Json::array();
    for (const auto& r : results) {
        if (!r.pass()) ++failed;
        parse_failure |= r.parse_error;
        Json j = r.report.is_null() ? Json{{"entry", r.name}} : r.report;
        if (c.timing) j["ms"] = r.ms;
        j["pass"] = r.pass();
        if (!r.error.empty()) j["error"] = r.error;
        for (const auto& d : r.diffs) j["diff"].push_back(d);
        all.push_back(j);
    }
    if (c.format == "json") {
        std::cout << Json{{"entries", all}, {"passed", results.size() - static_cast<std::size_t>(failed)},
                          {"failed", failed}}
                         .dump(2)
                  << "\n";
    } else {
        for (const auto& r : results) {
            std::cout << (r.pass() ? "PASS " : "FAIL ") << r.name;
            if (c.timing) std::cout << " (" << r.ms << " ms)";
            std::cout << "\n";
            if (!r.error.empty()) std::cout << "  error: " << r.error << "\n";
            for (const auto& d : r.diffs) std::cout << "  " << d << "\n";
        }
        std::cout << results.size() << (results.size() == 1 ? " entry" : " entries") << ", " << failed << " failed\n";
    }
    if (parse_failure) return 2;
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Involutivity analysis for exterior differential systems"};
    app.require_subcommand(1);
    Common c;
    int k = 1;
    bool show_system = false;
    std::string dir = EDS_CORPUS_DIR, filter;
    unsigned jobs = 1;

    auto add_common = [&](CLI::App* s, bool file) {
        if (file) s->add_option("FILE", c.file, "input file")->required();
        s->add_option("--format", c.format, "text or json")->check(CLI::IsMember({"text", "json"}));
        s->add_option("--seed", c.seed, "seed for the random flag search");
        s->add_flag("--timing", c.timing, "report wall-clock time");
    };
    auto* check = app.add_subcommand("check", "analyze a structure system, algebra or ideal");
    add_common(check, true);
    auto* tab = app.add_subcommand("tableau", "characters and prolongation of the associated tableau");
    add_common(tab, true);
    auto* point = app.add_subcommand("point", "Cartan test for an ideal at an integral element");
    add_common(point, true);
    auto* prol = app.add_subcommand("prolong", "prolong a structure system");
    add_common(prol, true);
    prol->add_option("--k", k, "number of prolongations")->check(CLI::Range(1, 8));
    auto* hs = app.add_subcommand("hstruct", "torsion-free H-structure analysis");
    add_common(hs, true);
    hs->add_flag("--system", show_system, "also print the emitted structure system");
    auto* corpus = app.add_subcommand("corpus", "golden corpus");
    corpus->require_subcommand(1);
    auto* run = corpus->add_subcommand("run", "run corpus entries against their expected values");
    add_common(run, false);
    run->add_option("--filter", filter, "glob on entry names");
    run->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1u, 256u));
    run->add_option("--dir", dir, "corpus directory");

    try {
        c.seed = default_seed();
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*check) return cmd_check(c);
        if (*tab) return cmd_tableau(c);
        if (*point) return cmd_point(c);
        if (*prol) return cmd_prolong(c, k);
        if (*hs) return cmd_hstruct(c, show_system);
        if (*run) return cmd_corpus(dir, filter, c, jobs);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << c.file << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
