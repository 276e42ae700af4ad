#pragma once

// Likelihood profiles for model parameters and model predictions.
//
// For parameter i the profile statistic at a fixed value theta_i is
//
//     tau(theta_i) = sign(theta_i - theta_hat_i) / s
//                    * sqrt(SSR_cond(theta_i) - SSR(theta_hat)),
//
// where SSR_cond re-optimizes all other parameters.  tau is sampled by an
// adaptive walk away from the optimum in both directions: the offset
// multiplier t starts at 1 and grows by the clamped inverse slope
// |tau s^2 / (se_i eps'J_i)| in [1/16, 4], which aims for roughly equal tau
// spacing of 1/step per point.  The walk stops at k_max points, at
// |tau| > tau_max = sqrt(F(1 - tau_max_level, p, n - p)), or when a refit
// fails (truncation).  Splines between tau and theta_i turn the samples
// into confidence intervals.
//
// If any conditional refit lands below the incumbent SSR by more than
// 1e-10 * (1 + SSR), the incumbent was not the optimum: the better point is
// adopted, the full fit is redone, every trace is discarded, and profiling
// restarts.  More than max_restarts adoptions is a hard error.

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlreg/distributions.hpp"
#include "nlreg/errors.hpp"
#include "nlreg/fit.hpp"
#include "nlreg/model.hpp"
#include "nlreg/spline.hpp"

namespace nlreg {

struct ProfileOptions {
    double step = 8.0;           // first offset is se_i / step
    int k_max = 30;              // points per direction
    double tau_max_level = 0.01; // tau_max = sqrt(F(1 - level, p, n - p))
    double tau_cap_override = 0.0;  // > 0 replaces the F-based tau_max
    int max_restarts = 10;
    FitOptions fit;              // options for conditional refits
    bool parallel = true;        // profile parameters concurrently

    // Conditional refits can be much slower than the free fit: large-residual
    // problems converge linearly once the damping settles, and near-degenerate
    // ridges (a parameter escaping toward a flat limit model) crawl for several
    // thousand iterations before the step test fires.  The default full-fit
    // budget cuts both off mid crawl and turns finishable traces into
    // truncated ones.
    ProfileOptions() { fit.max_iterations = 10000; }
};

struct ProfilePoint {
    double tau = 0.0;
    std::vector<double> theta;  // full parameter vector of the conditional fit
};

struct ProfileTrace {
    int param_index = -1;
    std::vector<ProfilePoint> points;  // sorted by tau, anchor (0, theta_hat) included
    CubicSpline tau_to_theta;          // tau -> theta_i
    CubicSpline theta_to_tau;          // theta_i -> tau
    double tau_cap = 0.0;              // tau_max used for this trace
    double tau_lo = 0.0, tau_hi = 0.0; // sampled tau range (signed)
    bool bounded_lo = false;           // walk reached tau_max going down
    bool bounded_hi = false;           // and going up
    bool truncated_lo = false;         // walk ended early (k_max or refit failure)
    bool truncated_hi = false;
    bool monotone = true;              // theta_i strictly increasing along tau
    bool spline_linear_fallback = false;
    int restarts = 0;                  // adoptions performed by the run overall

    double theta_at(const ProfilePoint& pt) const { return pt.theta[param_index]; }
};

namespace detail {

// Outcome of one single-parameter pass: either a finished trace or a better
// optimum that invalidates the incumbent fit.
struct ProfilePass {
    std::optional<ProfileTrace> trace;
    std::vector<double> better_theta;
    double better_ssr = 0.0;
    bool restart = false;
};

inline double tau_max_of(const FitResult& fr, const ProfileOptions& opt) {
    if (opt.tau_cap_override > 0.0) return opt.tau_cap_override;
    return std::sqrt(f_quantile(1.0 - opt.tau_max_level, fr.p, fr.dof));
}

inline ProfilePass profile_pass(const ParamModel& m, const Dataset& d, const FitResult& fr,
                                int i, const ProfileOptions& opt) {
    const int p = m.p();
    const double se = fr.se[i];
    if (!std::isfinite(se) || se <= 0.0)
        throw ModelError("profile: parameter t" + std::to_string(i) +
                         " has no usable standard error");
    if (!(fr.s > 0.0))
        throw ModelError("profile: residual standard error is zero; tau is undefined");

    const double tau_cap = tau_max_of(fr, opt);
    const double adopt_tol = 1e-10 * (1.0 + fr.ssr);

    ProfilePass pass;
    ProfileTrace tr;
    tr.param_index = i;
    tr.tau_cap = tau_cap;
    tr.restarts = 0;

    std::vector<double> resid(d.n), grad(p);
    for (int dir = 0; dir < 2; ++dir) {
        const double sign = dir == 0 ? -1.0 : 1.0;
        const double delta = sign * se / opt.step;
        bool& bounded = dir == 0 ? tr.bounded_lo : tr.bounded_hi;
        bool& truncated = dir == 0 ? tr.truncated_lo : tr.truncated_hi;
        double inv_slope = 1.0;
        double t = 1.0;
        std::vector<double> warm = fr.theta;
        for (int k = 1; k <= opt.k_max; ++k) {
            const double value = fr.theta[i] + delta * t;
            MaskedFit mf;
            try {
                mf = fit_with_fixed(m, d, warm, i, value, opt.fit);
            } catch (const Error&) {
                truncated = true;  // model not evaluable here; stop this side
                break;
            }
            // A stalled refit still carries a valid conditional SSR (the
            // minimizer escaped along a flat ridge; the objective converged
            // even though the parameters did not), so only genuine
            // divergence truncates the trace.
            if (!(mf.converged || mf.stalled) || !std::isfinite(mf.ssr)) {
                truncated = true;
                break;
            }
            if (mf.ssr < fr.ssr - adopt_tol) {
                pass.restart = true;
                pass.better_theta = mf.theta;
                pass.better_ssr = mf.ssr;
                return pass;
            }
            warm = mf.theta;
            const double tau = sign * std::sqrt(std::max(mf.ssr - fr.ssr, 0.0)) / fr.s;
            tr.points.push_back({tau, std::move(mf.theta)});
            if (std::abs(tau) > tau_cap) {
                bounded = true;
                break;
            }
            // eps'J_i at the conditional optimum estimates dSSR_cond/dtheta_i
            // up to a factor -2, giving the local slope of tau
            double eJ = 0.0;
            for (int r = 0; r < d.n; ++r) {
                const auto row = d.row(r);
                eJ += (d.y[r] - evaluate(m.expr, warm, row)) *
                      evaluate(m.gradient[i], warm, row);
            }
            const double denom = se * eJ;
            if (!std::isfinite(denom) || std::abs(denom) < 1e-300)
                inv_slope = 4.0;
            else
                inv_slope = std::clamp(std::abs(tau * fr.s2 / denom), 1.0 / 16.0, 4.0);
            t += inv_slope;
            if (k == opt.k_max) truncated = true;  // budget exhausted below tau_max
        }
    }

    tr.points.push_back({0.0, fr.theta});  // anchor at the optimum
    std::sort(tr.points.begin(), tr.points.end(),
              [](const ProfilePoint& a, const ProfilePoint& b) { return a.tau < b.tau; });
    if (tr.points.size() < 2)
        throw ModelError("profile: no usable points for parameter t" + std::to_string(i));

    tr.tau_lo = tr.points.front().tau;
    tr.tau_hi = tr.points.back().tau;
    std::vector<double> taus, thetas;
    taus.reserve(tr.points.size());
    thetas.reserve(tr.points.size());
    for (const auto& pt : tr.points) {
        taus.push_back(pt.tau);
        thetas.push_back(pt.theta[i]);
    }
    for (std::size_t k = 1; k < thetas.size(); ++k)
        if (thetas[k] <= thetas[k - 1]) tr.monotone = false;

    tr.tau_to_theta = CubicSpline(taus, thetas);
    tr.theta_to_tau = CubicSpline(thetas, taus);
    tr.spline_linear_fallback =
        tr.tau_to_theta.linear_fallback() || tr.theta_to_tau.linear_fallback();
    pass.trace = std::move(tr);
    return pass;
}

}  // namespace detail

// Profile one parameter.  On restarts `fr` is refit from the adopted point,
// so the caller sees the corrected optimum; the returned trace belongs to
// the final fit.
inline ProfileTrace profile_parameter(const ParamModel& m, const Dataset& d, FitResult& fr,
                                      int i, const ProfileOptions& opt = {}) {
    if (i < 0 || i >= m.p()) throw Error("profile: parameter index out of range");
    int restarts = 0;
    for (;;) {
        detail::ProfilePass pass = detail::profile_pass(m, d, fr, i, opt);
        if (!pass.restart) {
            pass.trace->restarts = restarts;
            return std::move(*pass.trace);
        }
        if (++restarts > opt.max_restarts)
            throw ModelError("profile: better optimum adopted more than " +
                             std::to_string(opt.max_restarts) +
                             " times; fit does not stabilize");
        fr = fit(m, d, pass.better_theta, opt.fit);
    }
}

struct ProfileSet {
    FitResult fit;  // incumbent after any restarts
    std::vector<ProfileTrace> traces;
    int restarts = 0;
};

// Profile every parameter against one shared fit.  Parameter passes run
// concurrently; any pass that finds a better optimum cancels the round,
// the fit is redone from the best candidate, and all traces are recomputed.
inline ProfileSet profile_all(const ParamModel& m, const Dataset& d, const FitResult& start,
                              const ProfileOptions& opt = {}) {
    ProfileSet set;
    set.fit = start;
    const int p = m.p();
    for (;;) {
        std::vector<detail::ProfilePass> passes(p);
        if (opt.parallel && p > 1) {
            std::vector<std::future<detail::ProfilePass>> jobs;
            jobs.reserve(p);
            for (int i = 0; i < p; ++i)
                jobs.push_back(std::async(std::launch::async, [&, i] {
                    return detail::profile_pass(m, d, set.fit, i, opt);
                }));
            for (int i = 0; i < p; ++i) passes[i] = jobs[i].get();
        } else {
            for (int i = 0; i < p; ++i)
                passes[i] = detail::profile_pass(m, d, set.fit, i, opt);
        }
        int best = -1;
        for (int i = 0; i < p; ++i)
            if (passes[i].restart && (best < 0 || passes[i].better_ssr < passes[best].better_ssr))
                best = i;
        if (best < 0) {
            set.traces.clear();
            for (int i = 0; i < p; ++i) {
                passes[i].trace->restarts = set.restarts;
                set.traces.push_back(std::move(*passes[i].trace));
            }
            return set;
        }
        if (++set.restarts > opt.max_restarts)
            throw ModelError("profile: better optimum adopted more than " +
                             std::to_string(opt.max_restarts) +
                             " times; fit does not stabilize");
        set.fit = fit(m, d, passes[best].better_theta, opt.fit);
    }
}

struct ProfileInterval {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    bool lower_bounded = false;
    bool upper_bounded = false;
};

namespace detail {

// Shared inversion: a side yields a finite bound only if the walk sampled
// at least 3 points there and reached the needed |tau|.
inline ProfileInterval invert_trace(const ProfileTrace& tr, double q) {
    ProfileInterval out;
    int lo_pts = 0, hi_pts = 0;
    for (const auto& pt : tr.points) {
        if (pt.tau < 0.0) ++lo_pts;
        if (pt.tau > 0.0) ++hi_pts;
    }
    if (lo_pts >= 3 && tr.tau_lo <= -q) {
        out.lower = tr.tau_to_theta(-q);
        out.lower_bounded = true;
    }
    if (hi_pts >= 3 && tr.tau_hi >= q) {
        out.upper = tr.tau_to_theta(q);
        out.upper_bounded = true;
    }
    return out;
}

}  // namespace detail

// Confidence interval {theta_i : |tau| <= t(dof, alpha/2)}.  A side whose
// trace never reached the needed |tau| is unbounded at this level.
inline ProfileInterval profile_ci(const ProfileTrace& tr, const FitResult& fr, double alpha) {
    if (!tr.monotone)
        throw ModelError("profile: non-monotone trace for parameter t" +
                         std::to_string(tr.param_index) + "; inspect the exported trace");
    return detail::invert_trace(tr, t_quantile(fr.dof, 0.5 * alpha));
}

struct ProfilePrediction {
    double center = 0.0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    bool lower_bounded = false;
    bool upper_bounded = false;
    double rse = 0.0;
    int pivot = -1;
    int restarts = 0;
};

// Prediction interval at x0 by profiling the pivot of the re-parameterized
// model (the parameter equal to f(x0, theta)).  include_noise widens the
// inversion level by (rse + s)/rse, mirroring the linear full-model band;
// degrees of freedom stay n - p.  Throws ModelError when no parameter can
// be pivoted; callers decide whether to fall back to the linear band.
inline ProfilePrediction profile_prediction_interval(const ParamModel& m, const Dataset& d,
                                                     const FitResult& fr,
                                                     std::span<const double> x0, double alpha,
                                                     bool include_noise,
                                                     const ProfileOptions& opt = {}) {
    Reparameterization rep = reparameterize(m, fr.theta, x0);
    FitResult rfit = fit(rep.model, d, rep.model.theta0, opt.fit);

    double q = t_quantile(fr.dof, 0.5 * alpha);
    const double rse = rfit.se[rep.pivot];
    if (include_noise) {
        if (!(rse > 0.0) || !std::isfinite(rse))
            throw ModelError("profile prediction: pivot standard error unusable");
        q *= (rse + fr.s) / rse;
    }

    // The inversion level can sit far beyond the F-based tau_max (the noise
    // scaling above routinely pushes it there), so the pivot walk gets a cap
    // and point budget sized to reach it.
    ProfileOptions wopt = opt;
    wopt.tau_cap_override = std::max(detail::tau_max_of(rfit, opt), 1.05 * q);
    wopt.k_max = std::max(opt.k_max,
                          static_cast<int>(std::ceil(1.1 * q * opt.step)) + 5);
    ProfileTrace tr = profile_parameter(rep.model, d, rfit, rep.pivot, wopt);
    if (!tr.monotone)
        throw ModelError("profile prediction: non-monotone pivot trace at this input");
    ProfilePrediction out;
    const ProfileInterval iv = detail::invert_trace(tr, q);
    out.lower = iv.lower;
    out.upper = iv.upper;
    out.lower_bounded = iv.lower_bounded;
    out.upper_bounded = iv.upper_bounded;
    out.center = evaluate(m.expr, fr.theta, x0);
    out.rse = rse;
    out.pivot = rep.pivot;
    out.restarts = tr.restarts;
    return out;
}

}  // namespace nlreg
