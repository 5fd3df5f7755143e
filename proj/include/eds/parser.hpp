#pragma once
// Recursive-descent parser for the expression language shared by the DSL.
// Values are scalars (Expr), forms on a frame, or vectors in frame coordinates.

#include "eds/exterior.hpp"

#include <cctype>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace eds {

class ParseError : public std::runtime_error {
public:
    ParseError(int line, int col, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg),
          line(line), col(col) {}
    int line, col;
};

struct Token {
    enum Kind { Ident, Number, Punct, End } kind = End;
    std::string text;
    int line = 1, col = 1;
};

inline std::vector<Token> tokenize(const std::string& src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto adv = [&](std::size_t k = 1) {
        for (std::size_t t = 0; t < k && i < src.size(); ++t, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else ++col;
        }
    };
    while (i < src.size()) {
        char ch = src[i];
        if (std::isspace(static_cast<unsigned char>(ch))) {
            adv();
            continue;
        }
        if (ch == '#') {
            while (i < src.size() && src[i] != '\n') adv();
            continue;
        }
        Token t;
        t.line = line;
        t.col = col;
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
            while (j < src.size() && src[j] == '\'') ++j;
            t.kind = Token::Ident;
            t.text = src.substr(i, j - i);
            adv(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(ch))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            t.kind = Token::Number;
            t.text = src.substr(i, j - i);
            adv(j - i);
        } else if (std::string("+-*/^(){}[],;:=@").find(ch) != std::string::npos) {
            t.kind = Token::Punct;
            t.text = std::string(1, ch);
            adv();
        } else {
            throw ParseError(line, col, std::string("unexpected character '") + ch + "'");
        }
        out.push_back(t);
    }
    Token end;
    end.line = line;
    end.col = col;
    out.push_back(end);
    return out;
}

struct Value {
    enum Kind { Scalar, FormV, Vector } kind = Scalar;
    Expr s;
    Form<Expr> f;
    Vec v;
};

// Name resolution for one parse.
struct Scope {
    const VarTable* vars = nullptr;
    std::map<std::string, Expr> lets;
    std::map<std::string, int> forms;    // frame 1-forms by name
    std::map<std::string, int> vectors;  // frame vectors, written @name
    std::size_t vector_dim = 0;
};

class ExprParser {
public:
    ExprParser(const std::vector<Token>& toks, std::size_t pos, const Scope& scope)
        : t_(toks), pos_(pos), sc_(scope) {}

    std::size_t pos() const { return pos_; }
    const Token& peek() const { return t_[pos_]; }

    Value expr() {
        Value v = term();
        while (is("+") || is("-")) {
            bool minus = is("-");
            next();
            Value w = term();
            v = add(v, minus ? negate(w) : w);
        }
        return v;
    }

    Expr scalar() {
        const Token& at = peek();
        Value v = expr();
        if (v.kind != Value::Scalar) fail(at, "expected a scalar expression");
        return v.s;
    }

private:
    bool is(const char* p) const { return t_[pos_].kind == Token::Punct && t_[pos_].text == p; }
    const Token& next() { return t_[pos_++]; }
    [[noreturn]] void fail(const Token& t, const std::string& msg) const { throw ParseError(t.line, t.col, msg); }

    Value term() {
        Value v = unary();
        while (is("*") || is("/")) {
            const Token& op = next();
            Value w = unary();
            v = op.text == "*" ? multiply(v, w, op) : divide(v, w, op);
        }
        return v;
    }

    Value unary() {
        if (is("-")) {
            next();
            return negate(unary());
        }
        if (is("+")) {
            next();
            return unary();
        }
        return power();
    }

    Value power() {
        Value b = primary();
        if (is("^")) {
            const Token& op = next();
            const Token& at = peek();
            Value e = unary();
            if (b.kind == Value::FormV || e.kind == Value::FormV) {
                if (b.kind != Value::FormV || e.kind != Value::FormV) fail(op, "'^' between a form and a non-form");
                Value r;
                r.kind = Value::FormV;
                r.f = wedge(b.f, e.f);
                return r;
            }
            if (b.kind != Value::Scalar || e.kind != Value::Scalar) fail(op, "invalid operands for '^'");
            if (!e.s.is_const() || !is_integer(e.s.value())) fail(at, "exponent must be an integer constant");
            Value r;
            r.s = Expr::pow(b.s, e.s.value().get_num().get_si());
            return r;
        }
        return b;
    }

    Value primary() {
        const Token& t = peek();
        if (t.kind == Token::Number) {
            next();
            Value v;
            v.s = Expr(Rat(Int(t.text)));
            return v;
        }
        if (t.kind == Token::Ident) {
            next();
            return identifier(t);
        }
        if (is("(")) {
            next();
            Value v = expr();
            if (!is(")")) fail(peek(), "expected ')'");
            next();
            return v;
        }
        if (is("@")) {
            next();
            const Token& n = peek();
            if (n.kind != Token::Ident) fail(n, "expected a coordinate name after '@'");
            next();
            auto it = sc_.vectors.find(n.text);
            if (it == sc_.vectors.end()) fail(n, "unknown identifier '@" + n.text + "'");
            Value v;
            v.kind = Value::Vector;
            v.v.assign(sc_.vector_dim, Rat(0));
            v.v[static_cast<std::size_t>(it->second)] = 1;
            return v;
        }
        if (t.kind == Token::End) fail(t, "unexpected end of input");
        fail(t, "unexpected '" + t.text + "'");
    }

    Value identifier(const Token& t) {
        std::string name = t.text;
        std::size_t prime = name.find('\'');
        std::string base = prime == std::string::npos ? name : name.substr(0, prime);
        int order = prime == std::string::npos ? 0 : static_cast<int>(name.size() - prime);
        const VarTable* vt = sc_.vars;
        if (vt) {
            if (const FuncDecl* f = vt->func(base)) {
                if (is("(")) {
                    next();
                    const Token& a = peek();
                    if (a.kind != Token::Ident || a.text != f->arg)
                        fail(a, "function '" + base + "' takes the argument '" + f->arg + "'");
                    next();
                    if (!is(")")) fail(peek(), "expected ')'");
                    next();
                }
                if (order > 0 && f->rule) fail(t, "'" + base + "' has a derivative rule; write it out instead");
                Value v;
                v.s = Expr::func(base, f->arg, order);
                return v;
            }
        }
        if (order > 0) fail(t, "unknown identifier '" + name + "'");
        if (is("(")) fail(peek(), "'" + name + "' is not a declared function");
        if (vt && vt->is_variable(name)) {
            Value v;
            v.s = vt->var(name);
            return v;
        }
        if (auto it = sc_.lets.find(name); it != sc_.lets.end()) {
            Value v;
            v.s = it->second;
            return v;
        }
        if (auto it = sc_.forms.find(name); it != sc_.forms.end()) {
            Value v;
            v.kind = Value::FormV;
            v.f = Form<Expr>::basis(it->second);
            return v;
        }
        fail(t, "unknown identifier '" + name + "'");
    }

    static Value negate(const Value& v) {
        Value r = v;
        if (v.kind == Value::Scalar) r.s = -v.s;
        else if (v.kind == Value::FormV) r.f = -v.f;
        else
            for (auto& x : r.v) x = -x;
        return r;
    }

    Value add(const Value& a, const Value& b) {
        // A literal zero scalar adds to anything.
        if (a.kind == Value::Scalar && a.s.is_const_zero() && b.kind != Value::Scalar) return b;
        if (b.kind == Value::Scalar && b.s.is_const_zero() && a.kind != Value::Scalar) return a;
        if (a.kind != b.kind) fail(peek(), "adding values of different kinds");
        Value r = a;
        if (a.kind == Value::Scalar) r.s = a.s + b.s;
        else if (a.kind == Value::FormV) {
            if (!a.f.empty() && !b.f.empty() && a.f.degree != b.f.degree) fail(peek(), "adding forms of different degree");
            r.f = a.f + b.f;
        } else
            for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] += b.v[i];
        return r;
    }

    Value multiply(const Value& a, const Value& b, const Token& op) {
        if (a.kind == Value::Scalar && b.kind == Value::Scalar) {
            Value r;
            r.s = a.s * b.s;
            return r;
        }
        const Value& s = a.kind == Value::Scalar ? a : b;
        const Value& o = a.kind == Value::Scalar ? b : a;
        if (s.kind != Value::Scalar) fail(op, "use '^' to multiply forms");
        Value r = o;
        if (o.kind == Value::FormV) r.f = o.f.scaled(s.s);
        else {
            if (!s.s.is_const()) fail(op, "vector coefficients must be constants");
            for (auto& x : r.v) x *= s.s.value();
        }
        return r;
    }

    Value divide(const Value& a, const Value& b, const Token& op) {
        if (b.kind != Value::Scalar) fail(op, "division by a non-scalar");
        if (b.s.is_const_zero()) fail(op, "division by zero");
        Expr inv = Expr::pow(b.s, -1);
        Value r = a;
        if (a.kind == Value::Scalar) r.s = a.s * inv;
        else if (a.kind == Value::FormV) r.f = a.f.scaled(inv);
        else {
            if (!inv.is_const()) fail(op, "vector coefficients must be constants");
            for (auto& x : r.v) x *= inv.value();
        }
        return r;
    }

    const std::vector<Token>& t_;
    std::size_t pos_;
    const Scope& sc_;
};

// Parses a complete scalar expression over the given variables.
inline Expr parse(const std::string& text, const VarTable& vars, const std::map<std::string, Expr>& lets = {}) {
    auto toks = tokenize(text);
    Scope sc;
    sc.vars = &vars;
    sc.lets = lets;
    ExprParser p(toks, 0, sc);
    Expr e = p.scalar();
    const Token& t = p.peek();
    if (t.kind != Token::End) throw ParseError(t.line, t.col, "unexpected '" + t.text + "'");
    return e;
}

}  // namespace eds
