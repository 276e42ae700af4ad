#pragma once

// Approximate pairwise parameter confidence regions from two likelihood
// profiles.
//
// The construction maps each parameter's tau onto an angle: with
// tau_scale = sqrt(p F(1-alpha, p, n-p)), a point on the region boundary
// satisfies tau_i = cos(phi_i) tau_scale for some angle phi_i, and likewise
// for j.  Along trace j the conditional theta_i values give tau_i as a
// function of tau_j, hence an angle curve g_ij(tau_j / tau_scale); the four
// places where one parameter sits at an extreme (its own tau at +-tau_scale,
// the other at its conditional value) anchor a periodic spline in the
// averaged angle a = (phi_i + phi_j)/2 and separation d = phi_i - phi_j.
// Sweeping a over [-pi, pi] and reading tau_i = cos(a + d/2) tau_scale,
// tau_j = cos(a - d/2) tau_scale traces a closed curve whose tau values are
// mapped back through each trace's tau -> theta spline.  For a linear model
// this reproduces the joint-confidence ellipse exactly (the angle
// separation is then the constant arccos of the parameter correlation).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nlreg/distributions.hpp"
#include "nlreg/errors.hpp"
#include "nlreg/fit.hpp"
#include "nlreg/profile.hpp"

namespace nlreg {

struct ContourPoint {
    double theta_i = 0.0;
    double theta_j = 0.0;
    bool extrapolated = false;  // needed a spline value beyond sampled tau
};

struct ContourCurve {
    int param_i = -1;
    int param_j = -1;
    double alpha = 0.0;
    double tau_scale = 0.0;
    std::vector<ContourPoint> points;  // closed: first and last coincide
    bool extrapolated = false;         // any point flagged
    bool degraded = false;             // a source trace was non-monotone
};

namespace detail {

// A trace can feed a contour at this scale if each side either reached its
// tau cap (mild extrapolation past the sampled range is then tolerable) or
// already covers tau_scale.  An unbounded side short of tau_scale means the
// region is open in that direction and no closed contour exists.
inline void check_contour_coverage(const ProfileTrace& tr, double tau_scale) {
    const double slack = 1e-9;
    if (tr.tau_hi + slack < tau_scale && !tr.bounded_hi)
        throw ModelError("contour: trace for t" + std::to_string(tr.param_index) +
                         " is unbounded above below the requested level");
    if (-tr.tau_lo + slack < tau_scale && !tr.bounded_lo)
        throw ModelError("contour: trace for t" + std::to_string(tr.param_index) +
                         " is unbounded below below the requested level");
}

// Angle curve of parameter a along trace b: for every conditional optimum
// on trace b, map its theta_a component to tau_a units and take the arccos
// of the normalized value.  Spline domain is tau_b / tau_scale.  Knots are
// restricted to the level of interest plus one bracketing point per side;
// a wider window would drag the arccos onto its clamped ends, where the
// kink makes the spline ring.
inline CubicSpline angle_spline(const ProfileTrace& tr_a, const ProfileTrace& tr_b,
                                double tau_scale, bool& extrapolated) {
    const auto& pts = tr_b.points;  // ascending in tau
    const int n = static_cast<int>(pts.size());
    int lo = 0, hi = n - 1;
    while (lo + 1 < n && pts[lo + 1].tau < -tau_scale) ++lo;
    while (hi - 1 >= 0 && pts[hi - 1].tau > tau_scale) --hi;
    if (hi - lo < 1) {
        lo = 0;
        hi = n - 1;
    }
    if (pts.front().tau > -tau_scale || pts.back().tau < tau_scale) extrapolated = true;
    std::vector<double> xs, gs;
    xs.reserve(hi - lo + 1);
    gs.reserve(hi - lo + 1);
    const double a_min = tr_a.theta_to_tau.x_min();
    const double a_max = tr_a.theta_to_tau.x_max();
    for (int k = lo; k <= hi; ++k) {
        const double v = pts[k].theta[tr_a.param_index];
        if (v < a_min || v > a_max) extrapolated = true;
        const double u = tr_a.theta_to_tau(v);
        gs.push_back(std::acos(std::clamp(u / tau_scale, -1.0, 1.0)));
        xs.push_back(pts[k].tau / tau_scale);
    }
    return CubicSpline(xs, gs);
}

}  // namespace detail

// Boundary of the pairwise confidence region for (trace_i, trace_j) at
// level 1 - alpha.  Throws ModelError when a trace cannot cover the level.
inline ContourCurve profile_contour(const FitResult& fr, const ProfileTrace& trace_i,
                                    const ProfileTrace& trace_j, double alpha,
                                    int steps = 100) {
    if (steps < 8) throw Error("contour: steps must be at least 8");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("contour: alpha must lie in (0, 1)");
    ContourCurve cc;
    cc.param_i = trace_i.param_index;
    cc.param_j = trace_j.param_index;
    cc.alpha = alpha;
    cc.tau_scale = std::sqrt(fr.p * f_quantile(1.0 - alpha, fr.p, fr.dof));
    cc.degraded = !trace_i.monotone || !trace_j.monotone;

    detail::check_contour_coverage(trace_i, cc.tau_scale);
    detail::check_contour_coverage(trace_j, cc.tau_scale);

    bool extrap = false;
    const CubicSpline g_ij = detail::angle_spline(trace_i, trace_j, cc.tau_scale, extrap);
    const CubicSpline g_ji = detail::angle_spline(trace_j, trace_i, cc.tau_scale, extrap);

    // Anchors: one pair per trace tip.  Trace i's positive tip fixes
    // phi_i = 0 and phi_j = g_ji(+1); the others follow symmetrically.
    const double anchor[4][2] = {
        {0.0, g_ji(1.0)},
        {g_ij(1.0), 0.0},
        {M_PI, g_ji(-1.0)},
        {g_ij(-1.0), M_PI},
    };
    std::vector<double> as, ds;
    for (const auto& pr : anchor) {
        double a = 0.5 * (pr[0] + pr[1]);
        double dd = pr[0] - pr[1];
        const double sgn = dd < 0.0 ? -1.0 : 1.0;
        as.push_back(sgn * a);
        ds.push_back(sgn * dd);
    }
    as.push_back(as[0] + 2.0 * M_PI);
    ds.push_back(ds[0]);
    const PeriodicCubicSpline sep(as, ds, 2.0 * M_PI);

    const auto theta_of = [&](const ProfileTrace& tr, double tau, bool& flag) {
        if (tau < tr.tau_lo || tau > tr.tau_hi) flag = true;
        return tr.tau_to_theta(tau);
    };
    cc.points.reserve(steps);
    for (int k = 0; k < steps; ++k) {
        const double x = -M_PI + 2.0 * M_PI * k / (steps - 1);
        const double y = sep(x);
        const double tau_i = std::cos(x + 0.5 * y) * cc.tau_scale;
        const double tau_j = std::cos(x - 0.5 * y) * cc.tau_scale;
        ContourPoint pt;
        pt.theta_i = theta_of(trace_i, tau_i, pt.extrapolated);
        pt.theta_j = theta_of(trace_j, tau_j, pt.extrapolated);
        cc.points.push_back(pt);
        extrap = extrap || pt.extrapolated;
    }
    cc.extrapolated = extrap;
    return cc;
}

}  // namespace nlreg
