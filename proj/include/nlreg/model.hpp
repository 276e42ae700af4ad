#pragma once

// Parameterized regression models.
//
// A ParamModel couples an expression over (theta, x) with starting values and
// the precomputed symbolic gradient.  Models typically originate from
// parameterize(), which abstracts the numeric literals of a fitted symbolic
// regression expression into parameters, or from reparameterize(), which
// rewrites a model so one parameter equals the prediction at a chosen input.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "nlreg/dataset.hpp"
#include "nlreg/errors.hpp"
#include "nlreg/expr.hpp"

namespace nlreg {

// A literal deliberately left in place by parameterize().  `position` is the
// ordinal of the literal in a left-to-right depth-first walk, counting every
// literal except integer pow exponents (those are structure, not data).
struct FixedConstant {
    int position;
    double value;
};

struct ParamModel {
    Expr expr;
    std::vector<double> theta0;
    int n_vars = 0;
    std::vector<FixedConstant> fixed_constants;
    std::vector<Expr> gradient;  // gradient[j] = d expr / d theta[j]

    int p() const { return static_cast<int>(theta0.size()); }
};

// Builds the gradient and checks index consistency.  Differentiation errors
// (abs around a parameter) propagate from here.
inline ParamModel make_model(Expr expr, std::vector<double> theta0, int n_vars,
                             std::vector<FixedConstant> fixed = {}) {
    ParamModel m;
    m.expr = std::move(expr);
    m.theta0 = std::move(theta0);
    m.n_vars = n_vars;
    m.fixed_constants = std::move(fixed);
    if (parameter_count(m.expr) > m.p())
        throw Error("model references parameter indices beyond theta0");
    if (variable_count(m.expr) > n_vars)
        throw Error("model references variable indices beyond the declared count");
    m.gradient.reserve(m.p());
    for (int j = 0; j < m.p(); ++j) m.gradient.push_back(differentiate(m.expr, j));
    return m;
}

inline double evaluate(const ParamModel& m, std::span<const double> theta,
                       std::span<const double> x) {
    return evaluate(m.expr, theta, x);
}

// Prediction values over all rows: out[k] = f(x_k, theta).
inline void model_values(const ParamModel& m, const Dataset& d,
                         std::span<const double> theta, std::span<double> out) {
    for (int k = 0; k < d.n; ++k) out[k] = evaluate(m.expr, theta, d.row(k));
}

// Jacobian of the prediction, row-major n x p: out[k*p + j] = df(x_k)/dtheta_j.
inline void model_jacobian(const ParamModel& m, const Dataset& d,
                           std::span<const double> theta, std::span<double> out) {
    const int p = m.p();
    for (int k = 0; k < d.n; ++k)
        for (int j = 0; j < p; ++j)
            out[static_cast<std::size_t>(k) * p + j] =
                evaluate(m.gradient[j], theta, d.row(k));
}

// Gradient of the prediction at a single input.
inline void model_gradient_at(const ParamModel& m, std::span<const double> theta,
                              std::span<const double> x, std::span<double> out) {
    for (int j = 0; j < m.p(); ++j) out[j] = evaluate(m.gradient[j], theta, x);
}

// ---- literal abstraction ----------------------------------------------

namespace detail {

// True when `n` carries a numeric literal anywhere, ignoring integer pow
// exponents (structure).
inline bool has_literal(const NodePtr& n) {
    if (!n) return false;
    if (n->kind == NodeKind::Constant) return true;
    if (n->kind == NodeKind::Binary && n->bop == BinaryOp::Pow &&
        is_integer_constant(Expr(n->b)))
        return has_literal(n->a);
    return has_literal(n->a) || has_literal(n->b);
}

inline bool is_plain_constant(const NodePtr& n) {
    return n && n->kind == NodeKind::Constant;
}

// One additive term that carries its own scale: a bare literal, or a literal
// times/over a literal-free factor, possibly negated.
inline bool scaled_term(const NodePtr& n) {
    if (!n) return false;
    if (is_plain_constant(n)) return true;
    if (n->kind == NodeKind::Unary && n->uop == UnaryOp::Neg) return scaled_term(n->a);
    if (n->kind == NodeKind::Binary && (n->bop == BinaryOp::Mul || n->bop == BinaryOp::Div)) {
        bool ca = is_plain_constant(n->a);
        bool cb = is_plain_constant(n->b);
        if (ca == cb) return false;
        const NodePtr& other = ca ? n->b : n->a;
        return !has_literal(other);
    }
    return false;
}

// Additive chain in which every term is literal-scaled.
inline bool sum_of_scaled_terms(const NodePtr& n) {
    if (!n || n->kind != NodeKind::Binary ||
        (n->bop != BinaryOp::Add && n->bop != BinaryOp::Sub))
        return false;
    auto part = [](const NodePtr& c) {
        if (c->kind == NodeKind::Binary &&
            (c->bop == BinaryOp::Add || c->bop == BinaryOp::Sub))
            return sum_of_scaled_terms(c);
        return scaled_term(c);
    };
    return part(n->a) && part(n->b);
}

// Pattern under which a literal factor is redundant: a product (or quotient)
// of one literal with an additive chain whose terms each carry a literal of
// their own.  The inner literals become parameters, which absorbs the outer
// scale; parameterizing it as well would build an exactly collinear Jacobian.
// Terms without a literal (bare variables) void the pattern.
inline bool mul_add_pattern(const NodePtr& n) {
    if (!n || n->kind != NodeKind::Binary ||
        (n->bop != BinaryOp::Mul && n->bop != BinaryOp::Div))
        return false;
    bool ca = is_plain_constant(n->a);
    bool cb = is_plain_constant(n->b);
    if (ca == cb) return false;
    return sum_of_scaled_terms(ca ? n->b : n->a);
}

struct RewriteState {
    int next_index = 0;
    int literal_ordinal = 0;
    std::vector<double> theta0;
    std::vector<FixedConstant> fixed;
};

inline Expr rewrite_literals(const NodePtr& n, bool can_replace, RewriteState& st) {
    switch (n->kind) {
        case NodeKind::Constant: {
            int ordinal = st.literal_ordinal++;
            if (can_replace) {
                st.theta0.push_back(n->value);
                return parameter(st.next_index++);
            }
            st.fixed.push_back({ordinal, n->value});
            return Expr(n);
        }
        case NodeKind::Variable:
            return Expr(n);
        case NodeKind::Parameter:
            throw Error("parameterize: expression already contains parameters");
        case NodeKind::Unary:
            return unary(n->uop, rewrite_literals(n->a, true, st));
        case NodeKind::Binary: {
            if (n->bop == BinaryOp::Pow && is_integer_constant(Expr(n->b)))
                // integer exponent stays as written; no census entry
                return binary(BinaryOp::Pow, rewrite_literals(n->a, true, st), Expr(n->b));
            bool suppress = mul_add_pattern(n);
            auto sub = [&](const NodePtr& c) {
                bool replace = !(suppress && is_plain_constant(c));
                return rewrite_literals(c, replace, st);
            };
            Expr lhs = sub(n->a);
            Expr rhs = sub(n->b);
            return binary(n->bop, lhs, rhs);
        }
    }
    throw Error("parameterize: malformed expression node");
}

}  // namespace detail

// Replace each numeric literal with a fresh parameter, numbering in
// depth-first left-to-right order, and take the literal values as theta0.
// Exceptions: integer pow exponents stay structure; a literal factor in the
// redundancy pattern above stays fixed and is recorded in fixed_constants.
inline ParamModel parameterize(const Expr& e, int n_vars) {
    detail::RewriteState st;
    Expr rewritten = detail::rewrite_literals(e.ptr(), true, st);
    if (st.theta0.empty())
        throw Error("parameterize: expression has no literals to turn into parameters");
    return make_model(std::move(rewritten), std::move(st.theta0), n_vars,
                      std::move(st.fixed));
}

// ---- pivot re-parameterization ----------------------------------------

struct Reparameterization {
    ParamModel model;  // same parameter count; theta0 holds the pivoted start
    int pivot = -1;    // model parameter equal to f(x0, theta) by construction
};

namespace detail {

// Child-index path (0 = first child, 1 = second) from root to the unique
// occurrence of parameter i, or empty+false if absent.
inline bool find_parameter_path(const NodePtr& n, int i, std::vector<int>& path) {
    if (n->kind == NodeKind::Parameter) return n->index == i;
    if (n->a) {
        path.push_back(0);
        if (find_parameter_path(n->a, i, path)) return true;
        path.pop_back();
    }
    if (n->b) {
        path.push_back(1);
        if (find_parameter_path(n->b, i, path)) return true;
        path.pop_back();
    }
    return false;
}

// Ops we can peel off when solving f = y for a parameter.
inline bool invertible_step(const NodePtr& n, bool& nonlinear) {
    if (n->kind == NodeKind::Binary) {
        switch (n->bop) {
            case BinaryOp::Add:
            case BinaryOp::Sub:
            case BinaryOp::Mul:
            case BinaryOp::Div:
                return true;
            default:
                return false;
        }
    }
    if (n->kind == NodeKind::Unary) {
        switch (n->uop) {
            case UnaryOp::Neg:
                return true;
            case UnaryOp::Exp:
            case UnaryOp::Log:
            case UnaryOp::Sqrt:
                nonlinear = true;
                return true;
            default:
                return false;
        }
    }
    return false;
}

inline Expr substitute_variables(const NodePtr& n, std::span<const double> x0) {
    switch (n->kind) {
        case NodeKind::Variable:
            if (n->index >= static_cast<int>(x0.size()))
                throw Error("variable index out of range for the prediction point");
            return constant(x0[n->index]);
        case NodeKind::Constant:
        case NodeKind::Parameter:
            return Expr(n);
        case NodeKind::Unary:
            return unary(n->uop, substitute_variables(n->a, x0));
        case NodeKind::Binary:
            return binary(n->bop, substitute_variables(n->a, x0),
                          substitute_variables(n->b, x0));
    }
    throw Error("substitute: malformed expression node");
}

inline Expr replace_at_path(const NodePtr& n, std::span<const int> path, const Expr& sub) {
    if (path.empty()) return sub;
    if (path[0] == 0)
        return n->kind == NodeKind::Unary
                   ? unary(n->uop, replace_at_path(n->a, path.subspan(1), sub))
                   : binary(n->bop, replace_at_path(n->a, path.subspan(1), sub), Expr(n->b));
    return binary(n->bop, Expr(n->a), replace_at_path(n->b, path.subspan(1), sub));
}

}  // namespace detail

// Rewrite the model so that one parameter (the pivot) equals the model
// prediction at x0.  The pivot must occur exactly once with only invertible
// operations (add/sub/mul/div, neg, exp/log/sqrt) between it and the root:
// solving f(x, theta) = y for the pivot then substituting x = x0 into the
// solution yields the replacement subtree.  Candidates with a purely
// additive/multiplicative path win over ones passing through exp/log/sqrt;
// remaining ties go to shallower paths, then to the lower index.
inline Reparameterization reparameterize(const ParamModel& m,
                                         std::span<const double> theta_hat,
                                         std::span<const double> x0) {
    if (static_cast<int>(theta_hat.size()) != m.p())
        throw Error("reparameterize: theta_hat length mismatch");

    struct Candidate {
        int index;
        int depth;
        bool nonlinear;
        std::vector<int> path;
    };
    std::vector<Candidate> cands;
    for (int i = 0; i < m.p(); ++i) {
        if (count_parameter(m.expr, i) != 1) continue;
        std::vector<int> path;
        if (!detail::find_parameter_path(m.expr.ptr(), i, path)) continue;
        bool ok = true, nonlinear = false;
        NodePtr cur = m.expr.ptr();
        for (int step : path) {
            if (!detail::invertible_step(cur, nonlinear)) { ok = false; break; }
            cur = (step == 0) ? cur->a : cur->b;
        }
        if (!ok) continue;
        cands.push_back({i, static_cast<int>(path.size()), nonlinear, std::move(path)});
    }
    if (cands.empty())
        throw ModelError("no extractable parameter: every parameter is repeated or "
                         "sits behind a non-invertible operation");
    auto best = std::min_element(cands.begin(), cands.end(),
                                 [](const Candidate& a, const Candidate& b) {
                                     if (a.nonlinear != b.nonlinear) return !a.nonlinear;
                                     if (a.depth != b.depth) return a.depth < b.depth;
                                     return a.index < b.index;
                                 });

    // Peel the path: maintain the solution of f = Y for the subtree that
    // still contains the pivot.  Y starts as the pivot's own parameter node,
    // which in the rewritten model plays the role of the new parameter.
    Expr y = parameter(best->index);
    NodePtr cur = m.expr.ptr();
    for (int step : best->path) {
        if (cur->kind == NodeKind::Unary) {
            switch (cur->uop) {
                case UnaryOp::Neg: y = fneg(y); break;
                case UnaryOp::Exp: y = unary(UnaryOp::Log, y); break;
                case UnaryOp::Log: y = unary(UnaryOp::Exp, y); break;
                case UnaryOp::Sqrt: y = fpow(y, constant(2.0)); break;
                default: throw ModelError("reparameterize: non-invertible op on path");
            }
            cur = cur->a;
            continue;
        }
        Expr sib(step == 0 ? cur->b : cur->a);
        switch (cur->bop) {
            case BinaryOp::Add: y = fsub(y, sib); break;
            case BinaryOp::Sub: y = (step == 0) ? fadd(y, sib) : fsub(sib, y); break;
            case BinaryOp::Mul: y = fdiv(y, sib); break;
            case BinaryOp::Div: y = (step == 0) ? fmul(y, sib) : fdiv(sib, y); break;
            default: throw ModelError("reparameterize: non-invertible op on path");
        }
        cur = (step == 0) ? cur->a : cur->b;
    }

    Expr replacement = detail::substitute_variables(y.ptr(), x0);
    Expr new_expr = detail::replace_at_path(m.expr.ptr(), best->path, replacement);

    std::vector<double> theta0(theta_hat.begin(), theta_hat.end());
    theta0[best->index] = evaluate(m.expr, theta_hat, x0);

    Reparameterization rep;
    rep.model = make_model(std::move(new_expr), std::move(theta0), m.n_vars,
                           m.fixed_constants);
    rep.pivot = best->index;

    // The construction promises f'(x0, theta) = theta[pivot] identically.
    double probe = evaluate(rep.model, rep.model.theta0, x0);
    double want = rep.model.theta0[rep.pivot];
    if (std::isfinite(probe) &&
        std::abs(probe - want) > 1e-10 * (1.0 + std::abs(want)))
        throw ModelError("reparameterize: inversion check failed");
    return rep;
}

}  // namespace nlreg
