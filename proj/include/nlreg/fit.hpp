#pragma once

// Nonlinear least squares by Levenberg-Marquardt, plus the linear
// (first-order) approximations for parameter and prediction uncertainty.
//
// Conventions: residual r_k = y_k - f(x_k, theta); the Jacobian J holds
// derivatives of the *prediction*, J_kj = df(x_k)/dtheta_j; SSR = |r|^2;
// s^2 = SSR / (n - p).  Parameter covariance comes from the column-pivoted
// QR of J at the solution: with J P = Q R and M = P R^{-1} (rows back in
// original parameter order), (J'J)^{-1} = M M' and se_i = s |row_i(M)|.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nlreg/dataset.hpp"
#include "nlreg/distributions.hpp"
#include "nlreg/errors.hpp"
#include "nlreg/model.hpp"

namespace nlreg {

struct FitOptions {
    int max_iterations = 200;
    double tol_f = 1e-10;       // relative SSR decrease
    double tol_x = 1e-8;        // max relative step
    double tol_g = 1e-12;       // gradient max-norm
    double lambda0_scale = 1e-3;  // initial damping = scale * mean(diag(J'J))
    double rank_tol = 1e-12;    // |R_ii| < rank_tol * |R_00| flags deficiency
};

struct FitResult {
    std::vector<double> theta;
    double ssr = 0.0;
    double s2 = 0.0;
    double s = 0.0;
    int n = 0;
    int p = 0;
    int dof = 0;
    bool converged = false;
    int iterations = 0;
    std::vector<double> se;
    Eigen::MatrixXd corr;   // p x p, NaN rows/cols for deficient parameters
    Eigen::MatrixXd r_inv;  // M = P R^{-1}, original parameter order
    bool rank_deficient = false;
    std::vector<int> deficient;  // parameter indices with se = +inf
    std::vector<double> residuals;
};

// Conditional fit outcome (some parameters held fixed).
struct MaskedFit {
    std::vector<double> theta;  // full vector, fixed slots untouched
    double ssr = 0.0;
    bool converged = false;
    // Budget ran out but the SSR was numerically flat over the final quarter
    // of it.  Happens when the minimizer escapes along a ridge toward a
    // degenerate limit model: the SSR converges even though the parameters
    // never settle, so the step-size test cannot fire.  The SSR is then a
    // valid conditional optimum; the parameter vector is not meaningful.
    bool stalled = false;
    int iterations = 0;
};

namespace detail {

inline double ssr_of(const ParamModel& m, const Dataset& d, std::span<const double> theta,
                     std::vector<double>& resid) {
    resid.resize(d.n);
    double ssr = 0.0;
    for (int k = 0; k < d.n; ++k) {
        const double r = d.y[k] - evaluate(m.expr, theta, d.row(k));
        resid[k] = r;
        ssr += r * r;
    }
    return ssr;
}

// One LM run over the parameters enabled in `free_mask`; the others stay at
// their theta_start values.  Every damping trial counts against the
// iteration budget, so total work is bounded.
inline MaskedFit lm_minimize(const ParamModel& m, const Dataset& d,
                             std::span<const double> theta_start,
                             const std::vector<bool>& free_mask, const FitOptions& opt) {
    const int p = m.p();
    if (static_cast<int>(theta_start.size()) != p)
        throw Error("fit: theta_start length mismatch");
    std::vector<int> free_idx;
    for (int j = 0; j < p; ++j)
        if (free_mask[j]) free_idx.push_back(j);
    const int pf = static_cast<int>(free_idx.size());

    MaskedFit out;
    out.theta.assign(theta_start.begin(), theta_start.end());
    std::vector<double> resid;
    out.ssr = ssr_of(m, d, out.theta, resid);
    if (!std::isfinite(out.ssr))
        throw Error("fit: model value is not finite at the starting point");
    if (pf == 0) {  // nothing to optimize: report the SSR at the fixed point
        out.converged = true;
        return out;
    }

    std::vector<double> jrow(p);
    Eigen::MatrixXd J(d.n, pf);
    Eigen::VectorXd r(d.n);
    auto load_jr = [&](const std::vector<double>& th) {
        for (int k = 0; k < d.n; ++k) {
            r(k) = resid[k];
            model_gradient_at(m, th, d.row(k), jrow);
            for (int c = 0; c < pf; ++c) J(k, c) = jrow[free_idx[c]];
        }
    };
    load_jr(out.theta);

    Eigen::MatrixXd jtj = J.transpose() * J;
    Eigen::VectorXd g = J.transpose() * r;  // = -grad(SSR)/2
    double lambda = opt.lambda0_scale * jtj.diagonal().mean();
    if (!(lambda > 0.0) || !std::isfinite(lambda)) lambda = opt.lambda0_scale;

    std::vector<double> trial(out.theta);
    std::vector<double> trial_resid;
    const int stall_mark = (3 * opt.max_iterations) / 4;
    double ssr_at_mark = std::numeric_limits<double>::quiet_NaN();
    while (out.iterations < opt.max_iterations) {
        if (out.iterations == stall_mark) ssr_at_mark = out.ssr;
        if (g.lpNorm<Eigen::Infinity>() < opt.tol_g) {
            out.converged = true;
            break;
        }
        ++out.iterations;
        Eigen::MatrixXd A = jtj;
        A.diagonal().array() += lambda;
        Eigen::VectorXd delta = A.ldlt().solve(g);
        bool ok = delta.allFinite();
        double trial_ssr = std::numeric_limits<double>::infinity();
        if (ok) {
            trial = out.theta;
            for (int c = 0; c < pf; ++c) trial[free_idx[c]] += delta(c);
            trial_ssr = ssr_of(m, d, trial, trial_resid);
            ok = std::isfinite(trial_ssr) && trial_ssr <= out.ssr;
        }
        if (!ok) {
            lambda *= 10.0;
            if (lambda > 1e100) break;  // no acceptable step exists numerically
            continue;
        }
        const double decrease = (out.ssr - trial_ssr) /
                                std::max(out.ssr, std::numeric_limits<double>::min());
        double max_rel_step = 0.0;
        for (int c = 0; c < pf; ++c) {
            const double rel = std::abs(delta(c)) / (std::abs(out.theta[free_idx[c]]) + 1e-12);
            max_rel_step = std::max(max_rel_step, rel);
        }
        out.theta = trial;
        out.ssr = trial_ssr;
        resid.swap(trial_resid);
        lambda = std::max(lambda * 0.1, 1e-300);
        if (decrease < opt.tol_f && max_rel_step < opt.tol_x) {
            out.converged = true;
            break;
        }
        load_jr(out.theta);
        jtj = J.transpose() * J;
        g = J.transpose() * r;
    }
    if (!out.converged && out.iterations >= opt.max_iterations &&
        std::isfinite(ssr_at_mark))
        out.stalled = ssr_at_mark - out.ssr < 1e-8 * (1.0 + out.ssr);

    // At the SSR rounding plateau the accept comparisons above are noise,
    // so a converged endpoint can sit ~sqrt(eps) standard errors off the
    // minimizer even though no further SSR decrease is measurable.  The
    // normal-equations residual is still accurate there: a few undamped
    // Gauss-Newton steps through a QR of J land on the eps-accurate
    // minimizer.  Engaged only for tiny corrections so unstable directions
    // cannot run.
    if (out.converged) {
        for (int q = 0; q < 3; ++q) {
            load_jr(out.theta);
            Eigen::VectorXd delta = J.colPivHouseholderQr().solve(r);
            if (!delta.allFinite()) break;
            double rel = 0.0;
            for (int c = 0; c < pf; ++c)
                rel = std::max(rel, std::abs(delta(c)) /
                                        (std::abs(out.theta[free_idx[c]]) + 1e-12));
            if (rel > 1e-5) break;
            for (int c = 0; c < pf; ++c) out.theta[free_idx[c]] += delta(c);
            const double polished = ssr_of(m, d, out.theta, resid);
            if (!std::isfinite(polished)) {  // left the domain: undo and stop
                for (int c = 0; c < pf; ++c) out.theta[free_idx[c]] -= delta(c);
                ssr_of(m, d, out.theta, resid);
                break;
            }
            out.ssr = polished;
            if (rel < 1e-15) break;
        }
    }
    return out;
}

}  // namespace detail

// Full fit with covariance summary.  Requires n > p so the variance
// estimate has at least one degree of freedom.
inline FitResult fit(const ParamModel& m, const Dataset& d,
                     std::span<const double> theta_start, const FitOptions& opt = {}) {
    const int p = m.p();
    if (d.n <= p)
        throw Error("fit: need more observations (" + std::to_string(d.n) +
                    ") than parameters (" + std::to_string(p) + ")");
    if (d.m != m.n_vars)
        throw Error("fit: dataset has " + std::to_string(d.m) + " variables, model expects " +
                    std::to_string(m.n_vars));

    std::vector<bool> mask(p, true);
    MaskedFit mf = detail::lm_minimize(m, d, theta_start, mask, opt);

    FitResult fr;
    fr.theta = mf.theta;
    fr.ssr = mf.ssr;
    fr.converged = mf.converged;
    fr.iterations = mf.iterations;
    fr.n = d.n;
    fr.p = p;
    fr.dof = d.n - p;
    fr.s2 = fr.ssr / fr.dof;
    fr.s = std::sqrt(fr.s2);
    fr.residuals.resize(d.n);
    detail::ssr_of(m, d, fr.theta, fr.residuals);

    Eigen::MatrixXd J(d.n, p);
    std::vector<double> jrow(p);
    for (int k = 0; k < d.n; ++k) {
        model_gradient_at(m, fr.theta, d.row(k), jrow);
        for (int j = 0; j < p; ++j) J(k, j) = jrow[j];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(J);
    Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const double r00 = std::abs(R(0, 0));
    int rank = 0;
    while (rank < p && std::abs(R(rank, rank)) > opt.rank_tol * r00) ++rank;
    const auto& perm = qr.colsPermutation();

    // Invert the well-determined leading block of R; deficient columns get
    // infinite standard errors and undefined correlations.
    Eigen::MatrixXd rinv_p = Eigen::MatrixXd::Zero(p, p);
    if (rank > 0)
        rinv_p.topLeftCorner(rank, rank) =
            R.topLeftCorner(rank, rank)
                .triangularView<Eigen::Upper>()
                .solve(Eigen::MatrixXd::Identity(rank, rank));
    fr.r_inv = perm * rinv_p;  // rows back in original parameter order

    fr.rank_deficient = rank < p;
    std::vector<bool> is_def(p, false);
    for (int j = rank; j < p; ++j) {
        const int orig = perm.indices()(j);
        is_def[orig] = true;
        fr.deficient.push_back(orig);
    }
    std::sort(fr.deficient.begin(), fr.deficient.end());

    Eigen::MatrixXd cov = fr.r_inv * fr.r_inv.transpose();  // (J'J)^{-1}
    fr.se.resize(p);
    fr.corr = Eigen::MatrixXd::Identity(p, p);
    const double qnan = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < p; ++i)
        fr.se[i] = is_def[i] ? std::numeric_limits<double>::infinity()
                             : fr.s * std::sqrt(cov(i, i));
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            if (i == j) continue;
            fr.corr(i, j) = (is_def[i] || is_def[j])
                                ? qnan
                                : cov(i, j) / std::sqrt(cov(i, i) * cov(j, j));
        }
    return fr;
}

// Minimize over all parameters except `fixed_index`, held at `fixed_value`.
// With p = 1 there is nothing left to optimize and the SSR at the fixed
// point is returned directly.
inline MaskedFit fit_with_fixed(const ParamModel& m, const Dataset& d,
                                std::span<const double> theta_start, int fixed_index,
                                double fixed_value, const FitOptions& opt = {}) {
    const int p = m.p();
    if (fixed_index < 0 || fixed_index >= p) throw Error("fit_with_fixed: bad index");
    std::vector<double> start(theta_start.begin(), theta_start.end());
    start[fixed_index] = fixed_value;
    std::vector<bool> mask(p, true);
    mask[fixed_index] = false;
    return detail::lm_minimize(m, d, start, mask, opt);
}

// ---- linear-approximation inference ------------------------------------

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

// theta_i +/- se_i * t(dof, alpha/2)
inline std::vector<Interval> linear_ci(const FitResult& fr, double alpha) {
    const double q = t_quantile(fr.dof, 0.5 * alpha);
    std::vector<Interval> out(fr.p);
    for (int i = 0; i < fr.p; ++i)
        out[i] = {fr.theta[i] - q * fr.se[i], fr.theta[i] + q * fr.se[i]};
    return out;
}

struct PredictionInterval {
    double center = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double rse = 0.0;  // standard error of the predicted mean at this input
};

// Linear-approximation band at one input.  include_noise widens the band
// from the expectation interval (rse * t) to the new-observation interval
// ((rse + s) * t).
inline PredictionInterval linear_prediction(const ParamModel& m, const FitResult& fr,
                                            std::span<const double> x0, double alpha,
                                            bool include_noise) {
    std::vector<double> g(fr.p);
    model_gradient_at(m, fr.theta, x0, g);
    Eigen::Map<const Eigen::VectorXd> gv(g.data(), fr.p);
    const double rse = fr.s * (gv.transpose() * fr.r_inv).norm();
    const double q = t_quantile(fr.dof, 0.5 * alpha);
    const double half = (rse + (include_noise ? fr.s : 0.0)) * q;
    PredictionInterval pi;
    pi.center = evaluate(m.expr, fr.theta, x0);
    pi.lower = pi.center - half;
    pi.upper = pi.center + half;
    pi.rse = rse;
    return pi;
}

}  // namespace nlreg
