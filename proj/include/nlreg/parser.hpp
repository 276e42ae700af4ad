#pragma once

// Infix parser for model expressions.
//
// Grammar (precedence low to high): add/sub, mul/div, unary minus, pow.
// pow is right-associative and written ^ or **.  Functions: exp, log, sqrt,
// sin, cos, cube, abs.  Parameters are written theta[i] or t<i>; variables
// come from a caller-supplied ordered name list.  Unary minus applied to a
// numeric literal folds into a negative constant so that printed models
// round-trip node for node.

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "nlreg/errors.hpp"
#include "nlreg/expr.hpp"

namespace nlreg {

namespace detail {

enum class TokKind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, LBracket, RBracket, End };

struct Token {
    TokKind kind;
    double number = 0.0;
    std::string text;
    std::size_t pos = 0;
};

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

  private:
    void advance() {
        while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
        tok_ = Token{TokKind::End, 0.0, "", i_};
        if (i_ >= src_.size()) return;
        char c = src_[i_];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[i_ + 1])))) {
            double v = 0.0;
            const char* first = src_.data() + i_;
            const char* last = src_.data() + src_.size();
            auto res = std::from_chars(first, last, v);
            if (res.ec != std::errc{})
                throw ParseError("malformed number", i_);
            tok_ = Token{TokKind::Number, v, std::string(first, res.ptr), i_};
            i_ = static_cast<std::size_t>(res.ptr - src_.data());
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i_;
            while (j < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
                ++j;
            tok_ = Token{TokKind::Ident, 0.0, std::string(src_.substr(i_, j - i_)), i_};
            i_ = j;
            return;
        }
        switch (c) {
            case '+': tok_.kind = TokKind::Plus; ++i_; return;
            case '-': tok_.kind = TokKind::Minus; ++i_; return;
            case '*':
                if (i_ + 1 < src_.size() && src_[i_ + 1] == '*') {
                    tok_.kind = TokKind::Caret;  // ** is a pow synonym
                    i_ += 2;
                } else {
                    tok_.kind = TokKind::Star;
                    ++i_;
                }
                return;
            case '/': tok_.kind = TokKind::Slash; ++i_; return;
            case '^': tok_.kind = TokKind::Caret; ++i_; return;
            case '(': tok_.kind = TokKind::LParen; ++i_; return;
            case ')': tok_.kind = TokKind::RParen; ++i_; return;
            case '[': tok_.kind = TokKind::LBracket; ++i_; return;
            case ']': tok_.kind = TokKind::RBracket; ++i_; return;
            default:
                throw ParseError(std::string("unexpected character '") + c + "'", i_);
        }
    }

    std::string_view src_;
    std::size_t i_ = 0;
    Token tok_;
};

inline bool parse_param_short(const std::string& name, int& index) {
    // t<digits>, e.g. t0, t12
    if (name.size() < 2 || name[0] != 't') return false;
    int v = 0;
    auto res = std::from_chars(name.data() + 1, name.data() + name.size(), v);
    if (res.ec != std::errc{} || res.ptr != name.data() + name.size()) return false;
    index = v;
    return true;
}

inline bool lookup_function(const std::string& name, UnaryOp& op) {
    if (name == "exp") { op = UnaryOp::Exp; return true; }
    if (name == "log") { op = UnaryOp::Log; return true; }
    if (name == "sqrt") { op = UnaryOp::Sqrt; return true; }
    if (name == "sin") { op = UnaryOp::Sin; return true; }
    if (name == "cos") { op = UnaryOp::Cos; return true; }
    if (name == "cube") { op = UnaryOp::Cube; return true; }
    if (name == "abs") { op = UnaryOp::Abs; return true; }
    return false;
}

class Parser {
  public:
    Parser(std::string_view src, const std::vector<std::string>& vars)
        : lex_(src), vars_(vars) {
        for (const auto& v : vars) {
            UnaryOp dummy;
            int dummy_i;
            if (v == "theta" || parse_param_short(v, dummy_i) || lookup_function(v, dummy))
                throw Error("variable name '" + v + "' collides with reserved syntax");
        }
    }

    Expr parse() {
        Expr e = expression();
        const Token& t = lex_.peek();
        if (t.kind != TokKind::End)
            throw ParseError("trailing input after expression", t.pos);
        return e;
    }

  private:
    Expr expression() {
        Expr e = term();
        for (;;) {
            TokKind k = lex_.peek().kind;
            if (k == TokKind::Plus) {
                lex_.take();
                e = binary(BinaryOp::Add, e, term());
            } else if (k == TokKind::Minus) {
                lex_.take();
                e = binary(BinaryOp::Sub, e, term());
            } else {
                return e;
            }
        }
    }

    Expr term() {
        Expr e = unary_expr();
        for (;;) {
            TokKind k = lex_.peek().kind;
            if (k == TokKind::Star) {
                lex_.take();
                e = binary(BinaryOp::Mul, e, unary_expr());
            } else if (k == TokKind::Slash) {
                lex_.take();
                e = binary(BinaryOp::Div, e, unary_expr());
            } else {
                return e;
            }
        }
    }

    Expr unary_expr() {
        if (lex_.peek().kind == TokKind::Minus) {
            lex_.take();
            Expr e = unary_expr();
            // -3.93 is one literal, not neg(3.93)
            if (is_constant(e)) return constant(-e.root().value);
            return unary(UnaryOp::Neg, e);
        }
        return power();
    }

    Expr power() {
        Expr base = atom();
        if (lex_.peek().kind == TokKind::Caret) {
            lex_.take();
            // right side recurses through unary so 2^-3 and a^b^c work
            return binary(BinaryOp::Pow, base, unary_expr());
        }
        return base;
    }

    Expr atom() {
        Token t = lex_.take();
        switch (t.kind) {
            case TokKind::Number:
                return constant(t.number);
            case TokKind::LParen: {
                Expr e = expression();
                expect(TokKind::RParen, "expected ')'");
                return e;
            }
            case TokKind::Ident:
                return ident(t);
            default:
                throw ParseError("expected a value", t.pos);
        }
    }

    Expr ident(const Token& t) {
        // Declared variables shadow everything else.
        for (std::size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i] == t.text) return variable(static_cast<int>(i));
        if (t.text == "theta") {
            expect(TokKind::LBracket, "expected '[' after theta");
            Token idx = lex_.take();
            if (idx.kind != TokKind::Number || idx.number < 0 ||
                std::floor(idx.number) != idx.number)
                throw ParseError("expected non-negative integer parameter index", idx.pos);
            expect(TokKind::RBracket, "expected ']'");
            return parameter(static_cast<int>(idx.number));
        }
        int pidx = 0;
        if (parse_param_short(t.text, pidx)) return parameter(pidx);
        UnaryOp op;
        if (lookup_function(t.text, op)) {
            expect(TokKind::LParen, "expected '(' after function name");
            Expr arg = expression();
            expect(TokKind::RParen, "expected ')'");
            return unary(op, arg);
        }
        throw ParseError("unknown identifier '" + t.text + "'", t.pos);
    }

    void expect(TokKind k, const char* msg) {
        Token t = lex_.take();
        if (t.kind != k) throw ParseError(msg, t.pos);
    }

    Lexer lex_;
    const std::vector<std::string>& vars_;
};

}  // namespace detail

// Parse `src` against an ordered variable name list.  Unknown identifiers,
// out-of-grammar input, and variable names that collide with parameter or
// function syntax are reported with byte offsets.
inline Expr parse(std::string_view src, const std::vector<std::string>& var_names = {}) {
    detail::Parser p(src, var_names);
    return p.parse();
}

}  // namespace nlreg
