#pragma once
// The declarative input language. A file holds one of: a structure system,
// a matrix Lie algebra, or a constant-coefficient ideal with an element.
//
//   name finsler_base;
//   coframe w1 w2 w3;
//   param I J K;
//   d w1 = -w2^w3;
//   sample { I: 1, J: 2, K: 3 };

#include "eds/eds_point.hpp"
#include "eds/parser.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace eds {

struct AlgebraSpec {
    std::string name;
    int m = 0;
    std::vector<std::vector<Vec>> basis;  // m x m matrices, row major
};

struct PointSpec {
    std::vector<std::string> coords;
    PointIdeal ideal;
    std::vector<Vec> element;
    std::optional<std::vector<Vec>> transverse;
};

struct DslFile {
    enum Kind { Structure, Algebra, Point } kind = Structure;
    std::string name;
    StructureSystem sys;
    AlgebraSpec algebra;
    PointSpec point;
};

inline std::vector<Vec> preset_algebra(const std::string& kind, int m) {
    if (m < 1) throw std::invalid_argument("algebra dimension must be positive");
    auto E = [m](int i, int j) {
        std::vector<Vec> X(static_cast<std::size_t>(m), Vec(static_cast<std::size_t>(m)));
        X[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
        return X;
    };
    std::vector<std::vector<Vec>> out;
    if (kind == "gl") {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) out.push_back(E(i, j));
    } else if (kind == "so") {
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                auto X = E(i, j);
                X[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = -1;
                out.push_back(X);
            }
    } else if (kind != "zero") {
        throw std::invalid_argument("unknown preset '" + kind + "' (expected so, gl or zero)");
    }
    std::vector<Vec> flat;
    for (auto& X : out) {
        Vec v;
        for (auto& row : X) v.insert(v.end(), row.begin(), row.end());
        flat.push_back(v);
    }
    return flat;
}

class DslParser {
public:
    explicit DslParser(const std::string& text) : toks_(tokenize(text)) {}

    DslFile parse() {
        split();
        // Declarations first, so rules may refer to names declared later.
        for (auto& st : stmts_) declare(st);
        finish_declarations();
        for (auto& st : stmts_) define(st);
        return finish();
    }

private:
    struct Stmt {
        std::size_t begin, end;  // token range, end at ';'
    };

    const Token& tok(std::size_t i) const { return toks_[i]; }
    [[noreturn]] void fail(const Token& t, const std::string& msg) const { throw ParseError(t.line, t.col, msg); }
    bool punct(std::size_t i, const char* p) const { return toks_[i].kind == Token::Punct && toks_[i].text == p; }

    void split() {
        std::size_t start = 0;
        int depth = 0;
        for (std::size_t i = 0; i < toks_.size(); ++i) {
            const Token& t = toks_[i];
            if (t.kind == Token::End) {
                if (depth) fail(t, "unbalanced brackets");
                if (i != start) fail(t, "expected ';'");
                break;
            }
            if (t.kind != Token::Punct) continue;
            if (t.text == "{" || t.text == "[" || t.text == "(") ++depth;
            else if (t.text == "}" || t.text == "]" || t.text == ")") {
                if (--depth < 0) fail(t, "unbalanced '" + t.text + "'");
            } else if (t.text == ";" && depth == 0) {
                if (i == start) fail(t, "empty statement");
                stmts_.push_back({start, i});
                start = i + 1;
            }
        }
    }

    std::string keyword(const Stmt& st) const {
        const Token& t = tok(st.begin);
        if (t.kind != Token::Ident) fail(t, "expected a statement keyword");
        return t.text;
    }

    std::vector<std::string> names(const Stmt& st, std::size_t from) {
        std::vector<std::string> out;
        for (std::size_t i = from; i < st.end; ++i) {
            const Token& t = tok(i);
            if (punct(i, ",")) continue;
            if (t.kind != Token::Ident || t.text.find('\'') != std::string::npos) fail(t, "expected a name");
            if (used_.count(t.text)) fail(t, "'" + t.text + "' is already declared");
            used_.insert(t.text);
            out.push_back(t.text);
        }
        if (out.empty()) fail(tok(st.begin), "expected at least one name");
        return out;
    }

    void declare(const Stmt& st) {
        std::string kw = keyword(st);
        const Token& t0 = tok(st.begin);
        if (kw == "name") {
            if (st.end != st.begin + 2 || tok(st.begin + 1).kind != Token::Ident) fail(t0, "expected 'name <identifier>'");
            out_.name = tok(st.begin + 1).text;
        } else if (kw == "coframe") {
            for (const auto& n : names(st, st.begin + 1)) out_.sys.coframe.push_back(n);
        } else if (kw == "param") {
            for (const auto& n : names(st, st.begin + 1)) out_.sys.vars.params.push_back(n);
        } else if (kw == "free") {
            for (const auto& n : names(st, st.begin + 1)) out_.sys.vars.frees.push_back(n);
        } else if (kw == "coords") {
            for (const auto& n : names(st, st.begin + 1)) out_.point.coords.push_back(n);
        } else if (kw == "function") {
            // function NAME ( ARG ) [derivative EXPR]
            std::size_t i = st.begin + 1;
            if (i + 3 >= st.end || tok(i).kind != Token::Ident || !punct(i + 1, "(") || tok(i + 2).kind != Token::Ident ||
                !punct(i + 3, ")"))
                fail(t0, "expected 'function name(arg)'");
            const std::string& nm = tok(i).text;
            if (used_.count(nm)) fail(tok(i), "'" + nm + "' is already declared");
            used_.insert(nm);
            out_.sys.vars.funcs.push_back({nm, tok(i + 2).text, std::nullopt});
            if (i + 4 < st.end) {
                if (tok(i + 4).text != "derivative") fail(tok(i + 4), "expected 'derivative'");
                if (i + 5 >= st.end) fail(tok(i + 4), "expected an expression after 'derivative'");
            }
        } else if (kw == "mode") {
            if (st.end != st.begin + 2) fail(t0, "expected 'mode ctft|variant|type_a'");
            const Token& m = tok(st.begin + 1);
            if (m.text == "ctft") mode_ = Mode::CTFT;
            else if (m.text == "variant") mode_ = Mode::VARIANT;
            else if (m.text == "type_a") mode_ = Mode::TYPE_A;
            else fail(m, "unknown mode '" + m.text + "'");
        } else if (kw == "let" || kw == "relation" || kw == "d" || kw == "sample" || kw == "algebra" ||
                   kw == "ideal" || kw == "element" || kw == "transverse") {
            return;
        } else {
            fail(t0, "unknown statement '" + kw + "'");
        }
    }

    void finish_declarations() {
        auto& s = out_.sys;
        for (const auto& f : s.vars.funcs)
            if (!s.vars.is_variable(f.arg))
                throw std::invalid_argument("function '" + f.name + "' has undeclared argument '" + f.arg + "'");
        for (std::size_t i = 0; i < s.coframe.size(); ++i) scope_.forms[s.coframe[i]] = static_cast<int>(i);
        const auto& cs = out_.point.coords;
        for (std::size_t i = 0; i < cs.size(); ++i) {
            scope_.forms["d" + cs[i]] = static_cast<int>(i);
            scope_.vectors[cs[i]] = static_cast<int>(i);
        }
        scope_.vector_dim = cs.size();
        scope_.vars = &s.vars;
        s.dw.assign(s.coframe.size(), Form<Expr>(2));
        dw_set_.assign(s.coframe.size(), false);
        s.F.assign(s.vars.params.size(), std::nullopt);
        s.G.assign(s.vars.frees.size(), std::nullopt);
    }

    Value value(std::size_t from, std::size_t to) {
        Token end_tok = tok(to);
        std::vector<Token> sub(toks_.begin() + static_cast<long>(from), toks_.begin() + static_cast<long>(to));
        Token e;
        e.kind = Token::End;
        e.line = end_tok.line;
        e.col = end_tok.col;
        sub.push_back(e);
        ExprParser p(sub, 0, scope_);
        Value v = p.expr();
        if (p.peek().kind != Token::End) fail(p.peek(), "unexpected '" + p.peek().text + "'");
        return v;
    }

    Expr scalar(std::size_t from, std::size_t to) {
        if (from >= to) fail(tok(from), "expected an expression");
        Value v = value(from, to);
        if (v.kind != Value::Scalar) fail(tok(from), "expected a scalar expression");
        return v.s;
    }

    Rat constant(std::size_t from, std::size_t to) {
        Expr e = scalar(from, to);
        if (!e.is_const()) {
            Expr n = normalize(e);
            if (!n.is_const()) fail(tok(from), "expected a constant");
            return n.value();
        }
        return e.value();
    }

    Form<Expr> form(std::size_t from, std::size_t to, int degree) {
        if (from >= to) fail(tok(from), "expected an expression");
        Value v = value(from, to);
        if (v.kind == Value::Scalar && v.s.is_const_zero()) return Form<Expr>(degree);
        if (v.kind != Value::FormV) fail(tok(from), "expected a " + std::to_string(degree) + "-form");
        if (!v.f.empty() && v.f.degree != degree) fail(tok(from), "expected a " + std::to_string(degree) + "-form");
        Form<Expr> f = v.f;
        f.degree = degree;
        return f;
    }

    // Items separated by top-level commas inside { ... } starting at i.
    std::vector<std::pair<std::size_t, std::size_t>> braced_items(std::size_t i, std::size_t end, std::size_t& after) {
        if (i >= end || !punct(i, "{")) fail(tok(i), "expected '{'");
        std::vector<std::pair<std::size_t, std::size_t>> items;
        int depth = 0;
        std::size_t start = i + 1;
        for (std::size_t k = i; k < end; ++k) {
            if (tok(k).kind != Token::Punct) continue;
            const std::string& p = tok(k).text;
            if (p == "{" || p == "(" || p == "[") ++depth;
            else if (p == "}" || p == ")" || p == "]") {
                if (--depth == 0) {
                    if (k > start) items.emplace_back(start, k);
                    after = k + 1;
                    return items;
                }
            } else if (p == "," && depth == 1) {
                if (k == start) fail(tok(k), "empty item");
                items.emplace_back(start, k);
                start = k + 1;
            }
        }
        fail(tok(i), "unterminated '{'");
    }

    void define(const Stmt& st) {
        std::string kw = keyword(st);
        const Token& t0 = tok(st.begin);
        auto& s = out_.sys;
        if (kw == "let") {
            if (st.begin + 3 > st.end || tok(st.begin + 1).kind != Token::Ident || !punct(st.begin + 2, "="))
                fail(t0, "expected 'let name = expression'");
            const std::string& nm = tok(st.begin + 1).text;
            if (used_.count(nm) || scope_.lets.count(nm)) fail(tok(st.begin + 1), "'" + nm + "' is already declared");
            scope_.lets[nm] = scalar(st.begin + 3, st.end);
        } else if (kw == "function") {
            std::size_t i = st.begin + 1;
            if (i + 4 < st.end) {
                auto* f = const_cast<FuncDecl*>(s.vars.func(tok(i).text));
                f->rule = scalar(i + 5, st.end);
            }
        } else if (kw == "relation") {
            std::size_t eq = st.end;
            for (std::size_t k = st.begin + 1; k < st.end; ++k)
                if (punct(k, "=")) eq = k;
            Expr rel = eq == st.end ? scalar(st.begin + 1, st.end) : scalar(st.begin + 1, eq) - scalar(eq + 1, st.end);
            s.relations.push_back(rel);
        } else if (kw == "d") {
            if (st.begin + 3 > st.end || tok(st.begin + 1).kind != Token::Ident || !punct(st.begin + 2, "="))
                fail(t0, "expected 'd name = expression'");
            const Token& target = tok(st.begin + 1);
            if (auto it = scope_.forms.find(target.text); it != scope_.forms.end() && !s.coframe.empty()) {
                std::size_t i = static_cast<std::size_t>(it->second);
                if (dw_set_[i]) fail(target, "d" + target.text + " given twice");
                s.dw[i] = form(st.begin + 3, st.end, 2);
                dw_set_[i] = true;
            } else if (s.vars.is_param(target.text)) {
                std::size_t a = s.param_index(target.text);
                if (s.F[a]) fail(target, "d" + target.text + " given twice");
                s.F[a] = form(st.begin + 3, st.end, 1);
            } else if (s.vars.is_free(target.text)) {
                fail(target, "free derivative '" + target.text + "' takes no rule");
            } else {
                fail(target, "unknown identifier '" + target.text + "'");
            }
        } else if (kw == "sample") {
            std::size_t after = 0;
            auto items = braced_items(st.begin + 1, st.end, after);
            if (after != st.end) fail(tok(after), "unexpected '" + tok(after).text + "'");
            SamplePoint p;
            for (auto [a, b] : items) {
                if (b < a + 3 || tok(a).kind != Token::Ident || !punct(a + 1, ":")) fail(tok(a), "expected 'name: value'");
                std::string key = tok(a).text;
                std::string base = key.substr(0, key.find('\''));
                if (!s.vars.declared(base)) fail(tok(a), "unknown identifier '" + key + "'");
                if (p.count(key)) fail(tok(a), "'" + key + "' assigned twice");
                p[key] = constant(a + 2, b);
            }
            s.samples.push_back(p);
        } else if (kw == "algebra") {
            define_algebra(st);
        } else if (kw == "ideal") {
            std::size_t after = 0;
            auto items = braced_items(st.begin + 1, st.end, after);
            if (after != st.end) fail(tok(after), "unexpected '" + tok(after).text + "'");
            out_.point.ideal.N = static_cast<int>(out_.point.coords.size());
            for (auto [a, b] : items) {
                Value v = value(a, b);
                if (v.kind != Value::FormV || v.f.empty()) fail(tok(a), "ideal generators must be nonzero forms");
                Form<Rat> g(v.f.degree);
                for (const auto& [idx, c] : v.f.terms) {
                    Expr n = normalize(c);
                    if (!n.is_const()) fail(tok(a), "ideal generators must have constant coefficients");
                    g.add(idx, n.value());
                }
                out_.point.ideal.gens.push_back(g);
            }
            has_ideal_ = true;
        } else if (kw == "element" || kw == "transverse") {
            std::size_t after = 0;
            auto items = braced_items(st.begin + 1, st.end, after);
            if (after != st.end) fail(tok(after), "unexpected '" + tok(after).text + "'");
            std::vector<Vec> vs;
            for (auto [a, b] : items) {
                Value v = value(a, b);
                if (v.kind != Value::Vector) fail(tok(a), "expected a vector such as @x");
                vs.push_back(v.v);
            }
            if (kw == "element") out_.point.element = vs;
            else out_.point.transverse = vs;
        }
    }

    // algebra NAME dim M basis { [r;r;..], ... }   or   algebra NAME preset so|gl|zero M
    void define_algebra(const Stmt& st) {
        std::size_t i = st.begin + 1;
        if (i + 2 >= st.end || tok(i).kind != Token::Ident) fail(tok(st.begin), "expected 'algebra name ...'");
        AlgebraSpec& A = out_.algebra;
        A.name = tok(i).text;
        has_algebra_ = true;
        if (tok(i + 1).text == "preset") {
            if (i + 4 != st.end || tok(i + 3).kind != Token::Number) fail(tok(i + 1), "expected 'preset kind m'");
            A.m = std::stoi(tok(i + 3).text);
            try {
                for (const auto& v : preset_algebra(tok(i + 2).text, A.m)) A.basis.push_back(unflatten(v, A.m));
            } catch (const std::invalid_argument& e) {
                fail(tok(i + 2), e.what());
            }
            return;
        }
        if (tok(i + 1).text != "dim" || tok(i + 2).kind != Token::Number) fail(tok(i + 1), "expected 'dim m'");
        A.m = std::stoi(tok(i + 2).text);
        std::size_t k = i + 3;
        if (k >= st.end || tok(k).text != "basis") fail(tok(k), "expected 'basis'");
        std::size_t after = 0;
        auto items = braced_items(k + 1, st.end, after);
        if (after != st.end) fail(tok(after), "unexpected '" + tok(after).text + "'");
        for (auto [a, b] : items) {
            if (!punct(a, "[") || !punct(b - 1, "]")) fail(tok(a), "expected a matrix '[a, b; c, d]'");
            std::vector<Vec> rows(1);
            std::size_t start = a + 1;
            for (std::size_t t = a + 1; t < b; ++t) {
                bool last = t == b - 1;
                if (punct(t, ",") || punct(t, ";") || last) {
                    if (t == start) fail(tok(t), "empty matrix entry");
                    rows.back().push_back(constant(start, t));
                    start = t + 1;
                    if (punct(t, ";")) rows.emplace_back();
                }
            }
            if (static_cast<int>(rows.size()) != A.m) fail(tok(a), "matrix must have " + std::to_string(A.m) + " rows");
            for (const auto& r : rows)
                if (static_cast<int>(r.size()) != A.m) fail(tok(a), "matrix rows must have " + std::to_string(A.m) + " entries");
            A.basis.push_back(rows);
        }
    }

    static std::vector<Vec> unflatten(const Vec& v, int m) {
        std::vector<Vec> X(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i)
            X[static_cast<std::size_t>(i)].assign(v.begin() + i * m, v.begin() + (i + 1) * m);
        return X;
    }

    DslFile finish() {
        auto& s = out_.sys;
        s.name = out_.name;
        if (has_algebra_) {
            out_.kind = DslFile::Algebra;
            return out_;
        }
        if (has_ideal_) {
            out_.kind = DslFile::Point;
            out_.point.ideal.check();
            return out_;
        }
        if (s.coframe.empty()) throw std::invalid_argument("no coframe, algebra or ideal declared");
        for (std::size_t i = 0; i < s.coframe.size(); ++i)
            if (!dw_set_[i]) throw std::invalid_argument("missing rule for d" + s.coframe[i]);
        bool any_rule = false, all_rules = true;
        for (const auto& f : s.F) {
            any_rule |= f.has_value();
            all_rules &= f.has_value();
        }
        if (mode_) s.mode = *mode_;
        else if (!s.vars.frees.empty()) s.mode = Mode::VARIANT;
        else if (!any_rule && !s.vars.params.empty()) s.mode = Mode::TYPE_A;
        else s.mode = Mode::CTFT;
        if (s.mode == Mode::TYPE_A && any_rule) throw std::invalid_argument("TYPE_A systems give no rules for parameters");
        if (s.mode != Mode::TYPE_A && !all_rules) {
            for (std::size_t a = 0; a < s.F.size(); ++a)
                if (!s.F[a]) throw std::invalid_argument("missing rule for d" + s.vars.params[a]);
        }
        if (s.mode != Mode::VARIANT && !s.vars.frees.empty())
            throw std::invalid_argument("free derivatives require mode variant");
        return out_;
    }

    std::vector<Token> toks_;
    std::vector<Stmt> stmts_;
    std::set<std::string> used_;
    Scope scope_;
    DslFile out_;
    std::vector<bool> dw_set_;
    std::optional<Mode> mode_;
    bool has_algebra_ = false, has_ideal_ = false;
};

inline DslFile parse_dsl(const std::string& text) {
    DslParser p(text);
    return p.parse();
}

inline DslFile load_dsl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    DslFile f = parse_dsl(ss.str());
    if (f.name.empty()) {
        std::string base = path.substr(path.find_last_of('/') + 1);
        f.name = base.substr(0, base.find('.'));
        f.sys.name = f.name;
    }
    return f;
}

// Writes a structure system back in the input language.
inline std::string to_dsl(const StructureSystem& s) {
    std::ostringstream os;
    auto list = [&](const char* kw, const std::vector<std::string>& xs) {
        if (xs.empty()) return;
        os << kw;
        for (const auto& x : xs) os << ' ' << x;
        os << ";\n";
    };
    os << "name " << s.name << ";\n";
    os << "mode " << (s.mode == Mode::CTFT ? "ctft" : s.mode == Mode::VARIANT ? "variant" : "type_a") << ";\n";
    list("coframe", s.coframe);
    list("param", s.vars.params);
    list("free", s.vars.frees);
    for (const auto& f : s.vars.funcs) {
        os << "function " << f.name << "(" << f.arg << ")";
        if (f.rule) os << " derivative " << print(*f.rule);
        os << ";\n";
    }
    for (const auto& r : s.relations) os << "relation " << print(r) << " = 0;\n";
    auto labels = s.coframe;
    for (std::size_t i = 0; i < s.n(); ++i) os << "d " << s.coframe[i] << " = " << print_form(s.dw[i], labels) << ";\n";
    for (std::size_t a = 0; a < s.s(); ++a)
        if (s.F[a]) os << "d " << s.vars.params[a] << " = " << print_form(*s.F[a], labels) << ";\n";
    for (const auto& p : s.samples) {
        os << "sample {";
        bool first = true;
        for (const auto& [k, v] : p) {
            os << (first ? " " : ", ") << k << ": " << to_string(v);
            first = false;
        }
        os << " };\n";
    }
    return os.str();
}

}  // namespace eds
