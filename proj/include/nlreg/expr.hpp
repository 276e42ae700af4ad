#pragma once

// Immutable expression trees for scalar models f(x, theta).
//
// A tree node is a constant, a variable x[i], a parameter theta[i], or an
// operator applied to child trees.  Trees are shared (shared_ptr children),
// value-semantic through the Expr wrapper, and never mutated after creation.
// Evaluation maps numeric domain violations to non-finite values; it does not
// throw for finite inputs.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nlreg/errors.hpp"

namespace nlreg {

enum class NodeKind { Constant, Variable, Parameter, Unary, Binary };

enum class UnaryOp { Neg, Exp, Log, Sqrt, Sin, Cos, Cube, Abs };

enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    NodeKind kind;
    // Constant payload.
    double value = 0.0;
    // Variable / parameter payload.
    int index = -1;
    // Operator payloads.
    UnaryOp uop = UnaryOp::Neg;
    BinaryOp bop = BinaryOp::Add;
    NodePtr a;  // unary child or binary lhs
    NodePtr b;  // binary rhs
};

// Value wrapper so expressions copy and compare like ordinary values.
class Expr {
  public:
    Expr() = default;
    explicit Expr(NodePtr n) : node_(std::move(n)) {}

    const ExprNode& root() const {
        if (!node_) throw Error("empty expression");
        return *node_;
    }
    const NodePtr& ptr() const { return node_; }
    bool empty() const { return node_ == nullptr; }

  private:
    NodePtr node_;
};

// ---- node construction ------------------------------------------------

inline Expr constant(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Constant;
    n->value = v;
    return Expr(std::move(n));
}

inline Expr variable(int i) {
    if (i < 0) throw Error("variable index must be non-negative");
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Variable;
    n->index = i;
    return Expr(std::move(n));
}

inline Expr parameter(int i) {
    if (i < 0) throw Error("parameter index must be non-negative");
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Parameter;
    n->index = i;
    return Expr(std::move(n));
}

// Raw constructors: build exactly the requested node.  The parser uses these
// so that the literal structure of the input is preserved.
inline Expr unary(UnaryOp op, const Expr& a) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Unary;
    n->uop = op;
    n->a = a.ptr();
    if (!n->a) throw Error("unary operand is empty");
    return Expr(std::move(n));
}

inline Expr binary(BinaryOp op, const Expr& a, const Expr& b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Binary;
    n->bop = op;
    n->a = a.ptr();
    n->b = b.ptr();
    if (!n->a || !n->b) throw Error("binary operand is empty");
    return Expr(std::move(n));
}

inline bool is_constant(const Expr& e, double v) {
    return !e.empty() && e.root().kind == NodeKind::Constant && e.root().value == v;
}

inline bool is_constant(const Expr& e) {
    return !e.empty() && e.root().kind == NodeKind::Constant;
}

// True for constants holding an integral value; pow with such an exponent is
// differentiated by the power rule and treated as structure by the rewriter.
inline bool is_integer_constant(const Expr& e) {
    if (!is_constant(e)) return false;
    double v = e.root().value;
    return std::isfinite(v) && std::floor(v) == v && std::abs(v) <= 1e9;
}

// ---- folding constructors ---------------------------------------------
//
// Identity/annihilator rules only: 0+g, g+0, g-0, 0*g, g*0, 1*g, g*1, 0/g,
// g/1, g^1, g^0, -(-g), -(c).  Used when deriving new trees (derivatives,
// re-parameterizations) so those stay readable; parsing never folds except
// for unary minus on a literal.

inline Expr fneg(const Expr& a) {
    if (is_constant(a)) return constant(-a.root().value);
    if (a.root().kind == NodeKind::Unary && a.root().uop == UnaryOp::Neg)
        return Expr(a.root().a);
    return unary(UnaryOp::Neg, a);
}

inline Expr fadd(const Expr& a, const Expr& b) {
    if (is_constant(a, 0.0)) return b;
    if (is_constant(b, 0.0)) return a;
    return binary(BinaryOp::Add, a, b);
}

inline Expr fsub(const Expr& a, const Expr& b) {
    if (is_constant(b, 0.0)) return a;
    if (is_constant(a, 0.0)) return fneg(b);
    return binary(BinaryOp::Sub, a, b);
}

inline Expr fmul(const Expr& a, const Expr& b) {
    if (is_constant(a, 0.0) || is_constant(b, 0.0)) return constant(0.0);
    if (is_constant(a, 1.0)) return b;
    if (is_constant(b, 1.0)) return a;
    return binary(BinaryOp::Mul, a, b);
}

inline Expr fdiv(const Expr& a, const Expr& b) {
    if (is_constant(a, 0.0)) return constant(0.0);
    if (is_constant(b, 1.0)) return a;
    return binary(BinaryOp::Div, a, b);
}

inline Expr fpow(const Expr& a, const Expr& b) {
    if (is_constant(b, 1.0)) return a;
    if (is_constant(b, 0.0)) return constant(1.0);
    return binary(BinaryOp::Pow, a, b);
}

// ---- traversal helpers ------------------------------------------------

template <typename F>
void visit_preorder(const Expr& e, F&& f) {
    const ExprNode& n = e.root();
    f(n);
    if (n.a) visit_preorder(Expr(n.a), f);
    if (n.b) visit_preorder(Expr(n.b), f);
}

inline bool contains_parameter(const Expr& e, int i) {
    bool found = false;
    visit_preorder(e, [&](const ExprNode& n) {
        if (n.kind == NodeKind::Parameter && n.index == i) found = true;
    });
    return found;
}

inline int count_parameter(const Expr& e, int i) {
    int c = 0;
    visit_preorder(e, [&](const ExprNode& n) {
        if (n.kind == NodeKind::Parameter && n.index == i) ++c;
    });
    return c;
}

// Number of parameter slots referenced (max index + 1).
inline int parameter_count(const Expr& e) {
    int maxi = -1;
    visit_preorder(e, [&](const ExprNode& n) {
        if (n.kind == NodeKind::Parameter && n.index > maxi) maxi = n.index;
    });
    return maxi + 1;
}

inline int variable_count(const Expr& e) {
    int maxi = -1;
    visit_preorder(e, [&](const ExprNode& n) {
        if (n.kind == NodeKind::Variable && n.index > maxi) maxi = n.index;
    });
    return maxi + 1;
}

// Structural equality: same shape, same ops, identical constant bits.
inline bool equal(const NodePtr& a, const NodePtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case NodeKind::Constant: return a->value == b->value;
        case NodeKind::Variable:
        case NodeKind::Parameter: return a->index == b->index;
        case NodeKind::Unary:
            return a->uop == b->uop && equal(a->a, b->a);
        case NodeKind::Binary:
            return a->bop == b->bop && equal(a->a, b->a) && equal(a->b, b->b);
    }
    return false;
}

inline bool equal(const Expr& a, const Expr& b) { return equal(a.ptr(), b.ptr()); }

// ---- evaluation -------------------------------------------------------

inline double eval_unary(UnaryOp op, double v) {
    switch (op) {
        case UnaryOp::Neg: return -v;
        case UnaryOp::Exp: return std::exp(v);
        case UnaryOp::Log: return std::log(v);
        case UnaryOp::Sqrt: return std::sqrt(v);
        case UnaryOp::Sin: return std::sin(v);
        case UnaryOp::Cos: return std::cos(v);
        case UnaryOp::Cube: return v * v * v;
        case UnaryOp::Abs: return std::abs(v);
    }
    return std::nan("");
}

inline double eval_binary(BinaryOp op, double l, double r) {
    switch (op) {
        case BinaryOp::Add: return l + r;
        case BinaryOp::Sub: return l - r;
        case BinaryOp::Mul: return l * r;
        case BinaryOp::Div: return l / r;
        case BinaryOp::Pow: return std::pow(l, r);
    }
    return std::nan("");
}

inline double evaluate_node(const ExprNode& n, std::span<const double> theta,
                            std::span<const double> x) {
    switch (n.kind) {
        case NodeKind::Constant: return n.value;
        case NodeKind::Variable:
            if (n.index >= static_cast<int>(x.size()))
                throw Error("variable index " + std::to_string(n.index) +
                            " out of range for row of width " + std::to_string(x.size()));
            return x[n.index];
        case NodeKind::Parameter:
            if (n.index >= static_cast<int>(theta.size()))
                throw Error("parameter index " + std::to_string(n.index) +
                            " out of range for theta of length " + std::to_string(theta.size()));
            return theta[n.index];
        case NodeKind::Unary: return eval_unary(n.uop, evaluate_node(*n.a, theta, x));
        case NodeKind::Binary:
            return eval_binary(n.bop, evaluate_node(*n.a, theta, x),
                               evaluate_node(*n.b, theta, x));
    }
    return std::nan("");
}

// Domain violations (log of a negative, 0^-1, ...) surface as NaN/inf in the
// result; callers treat non-finite as "reject this point".
inline double evaluate(const Expr& e, std::span<const double> theta,
                       std::span<const double> x) {
    return evaluate_node(e.root(), theta, x);
}

// ---- symbolic differentiation -----------------------------------------

// d e / d theta[wrt].  Minimal folding keeps the result compact without
// changing value.  abs is rejected when the active parameter sits inside it;
// everywhere else its derivative contribution is zero.
inline Expr differentiate(const Expr& e, int wrt) {
    const ExprNode& n = e.root();
    switch (n.kind) {
        case NodeKind::Constant:
        case NodeKind::Variable:
            return constant(0.0);
        case NodeKind::Parameter:
            return constant(n.index == wrt ? 1.0 : 0.0);
        case NodeKind::Unary: {
            Expr u(n.a);
            if (n.uop == UnaryOp::Abs) {
                if (contains_parameter(u, wrt))
                    throw ModelError("abs is not differentiable; parameter theta[" +
                                     std::to_string(wrt) + "] occurs inside it");
                return constant(0.0);
            }
            Expr du = differentiate(u, wrt);
            switch (n.uop) {
                case UnaryOp::Neg: return fneg(du);
                case UnaryOp::Exp: return fmul(du, unary(UnaryOp::Exp, u));
                case UnaryOp::Log: return fdiv(du, u);
                case UnaryOp::Sqrt:
                    return fdiv(du, fmul(constant(2.0), unary(UnaryOp::Sqrt, u)));
                case UnaryOp::Sin: return fmul(du, unary(UnaryOp::Cos, u));
                case UnaryOp::Cos: return fneg(fmul(du, unary(UnaryOp::Sin, u)));
                case UnaryOp::Cube:
                    return fmul(constant(3.0), fmul(fpow(u, constant(2.0)), du));
                case UnaryOp::Abs: break;  // handled above
            }
            break;
        }
        case NodeKind::Binary: {
            Expr l(n.a), r(n.b);
            Expr dl = differentiate(l, wrt);
            switch (n.bop) {
                case BinaryOp::Add: return fadd(dl, differentiate(r, wrt));
                case BinaryOp::Sub: return fsub(dl, differentiate(r, wrt));
                case BinaryOp::Mul: {
                    Expr dr = differentiate(r, wrt);
                    return fadd(fmul(dl, r), fmul(l, dr));
                }
                case BinaryOp::Div: {
                    Expr dr = differentiate(r, wrt);
                    // (l'r - l r') / r^2
                    return fdiv(fsub(fmul(dl, r), fmul(l, dr)), fpow(r, constant(2.0)));
                }
                case BinaryOp::Pow: {
                    if (is_constant(r)) {
                        // power rule; exact for integer exponents
                        double c = r.root().value;
                        return fmul(constant(c), fmul(fpow(l, constant(c - 1.0)), dl));
                    }
                    Expr dr = differentiate(r, wrt);
                    // f^g * (g' log f + g f'/f)
                    Expr t1 = fmul(dr, unary(UnaryOp::Log, l));
                    Expr t2 = fmul(r, fdiv(dl, l));
                    return fmul(fpow(l, r), fadd(t1, t2));
                }
            }
            break;
        }
    }
    throw Error("differentiate: malformed expression node");
}

// ---- printing ---------------------------------------------------------

// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace detail {

// Precedence levels used for minimal parenthesization: add/sub 1, mul/div 2,
// unary minus 3, pow 4, atoms 5.  Negative constants print with a leading
// '-' so they rank like a unary minus.
inline int print_prec(const ExprNode& n) {
    switch (n.kind) {
        case NodeKind::Constant:
            return (n.value < 0.0 || std::signbit(n.value)) ? 3 : 5;
        case NodeKind::Variable:
        case NodeKind::Parameter:
            return 5;
        case NodeKind::Unary:
            return n.uop == UnaryOp::Neg ? 3 : 5;  // named calls are atoms
        case NodeKind::Binary:
            switch (n.bop) {
                case BinaryOp::Add:
                case BinaryOp::Sub: return 1;
                case BinaryOp::Mul:
                case BinaryOp::Div: return 2;
                case BinaryOp::Pow: return 4;
            }
    }
    return 5;
}

inline const char* unary_name(UnaryOp op) {
    switch (op) {
        case UnaryOp::Neg: return "-";
        case UnaryOp::Exp: return "exp";
        case UnaryOp::Log: return "log";
        case UnaryOp::Sqrt: return "sqrt";
        case UnaryOp::Sin: return "sin";
        case UnaryOp::Cos: return "cos";
        case UnaryOp::Cube: return "cube";
        case UnaryOp::Abs: return "abs";
    }
    return "?";
}

inline void print_node(const ExprNode& n, const std::vector<std::string>& vars,
                       std::string& out) {
    auto child = [&](const NodePtr& c, int min_prec) {
        bool parens = print_prec(*c) < min_prec;
        if (parens) out += '(';
        print_node(*c, vars, out);
        if (parens) out += ')';
    };
    switch (n.kind) {
        case NodeKind::Constant:
            out += format_double(n.value);
            return;
        case NodeKind::Variable:
            if (n.index < static_cast<int>(vars.size()))
                out += vars[n.index];
            else
                out += "x" + std::to_string(n.index);
            return;
        case NodeKind::Parameter:
            out += "t" + std::to_string(n.index);
            return;
        case NodeKind::Unary:
            if (n.uop == UnaryOp::Neg) {
                out += '-';
                child(n.a, 3);
            } else {
                out += unary_name(n.uop);
                out += '(';
                print_node(*n.a, vars, out);
                out += ')';
            }
            return;
        case NodeKind::Binary:
            switch (n.bop) {
                case BinaryOp::Add:
                    child(n.a, 1);
                    out += " + ";
                    child(n.b, 2);  // right add/sub re-associates, parenthesize
                    return;
                case BinaryOp::Sub:
                    child(n.a, 1);
                    out += " - ";
                    child(n.b, 2);
                    return;
                case BinaryOp::Mul:
                    child(n.a, 2);
                    out += "*";
                    child(n.b, 3);
                    return;
                case BinaryOp::Div:
                    child(n.a, 2);
                    out += "/";
                    child(n.b, 3);
                    return;
                case BinaryOp::Pow:
                    child(n.a, 5);  // pow binds tightest, left side takes parens
                    out += "^";
                    child(n.b, 3);  // unary minus allowed bare on the right
                    return;
            }
    }
}

}  // namespace detail

// Canonical text form.  Parsing the output with the same variable names
// yields a structurally identical tree; parameters print as t0, t1, ...
inline std::string to_string(const Expr& e, const std::vector<std::string>& var_names = {}) {
    std::string out;
    detail::print_node(e.root(), var_names, out);
    return out;
}

}  // namespace nlreg
