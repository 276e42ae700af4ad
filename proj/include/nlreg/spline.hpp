#pragma once

// Cubic spline interpolation used by the profile machinery.
//
// CubicSpline: natural boundary (zero second derivative at both ends),
// terminal-segment extrapolation beyond the data range, and an analytic
// inverse lookup that solves the cubic on each bracketing segment.  Inputs
// are sorted and deduplicated (1e-12 on the abscissa); with only two
// distinct points the object degrades to linear interpolation and says so.
//
// PeriodicCubicSpline: value/slope/curvature continuity across a fixed
// period (the contour code uses period 2*pi).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "nlreg/errors.hpp"

namespace nlreg {

namespace detail {

struct KnotSet {
    std::vector<double> x, y;
};

inline KnotSet sorted_unique_knots(const std::vector<double>& xs,
                                   const std::vector<double>& ys, double tol) {
    if (xs.size() != ys.size()) throw Error("spline: x/y length mismatch");
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    KnotSet k;
    for (std::size_t idx : order) {
        if (!std::isfinite(xs[idx]) || !std::isfinite(ys[idx]))
            throw Error("spline: non-finite knot");
        if (!k.x.empty() && xs[idx] - k.x.back() <= tol) continue;  // drop duplicates
        k.x.push_back(xs[idx]);
        k.y.push_back(ys[idx]);
    }
    return k;
}

// Real roots of c3 u^3 + c2 u^2 + c1 u + c0 = 0, Newton-polished.
inline int solve_cubic_real(double c3, double c2, double c1, double c0, double roots[3]) {
    auto polish = [&](double u) {
        for (int i = 0; i < 3; ++i) {
            double f = ((c3 * u + c2) * u + c1) * u + c0;
            double fp = (3.0 * c3 * u + 2.0 * c2) * u + c1;
            if (fp == 0.0) break;
            u -= f / fp;
        }
        return u;
    };
    const double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
    if (scale == 0.0) return 0;
    if (std::abs(c3) < 1e-14 * scale) {
        if (std::abs(c2) < 1e-14 * scale) {
            if (std::abs(c1) < 1e-14 * scale) return 0;
            roots[0] = -c0 / c1;
            return 1;
        }
        const double disc = c1 * c1 - 4.0 * c2 * c0;
        if (disc < 0.0) return 0;
        const double sq = std::sqrt(disc);
        // stable quadratic formula
        const double q = -0.5 * (c1 + (c1 >= 0.0 ? sq : -sq));
        roots[0] = q / c2;
        int cnt = 1;
        if (q != 0.0) roots[cnt++] = c0 / q;
        else roots[cnt++] = 0.0;
        return cnt;
    }
    // monic: u^3 + a u^2 + b u + c
    const double a = c2 / c3, b = c1 / c3, c = c0 / c3;
    const double q = (a * a - 3.0 * b) / 9.0;
    const double r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    const double q3 = q * q * q;
    if (r * r < q3) {
        const double th = std::acos(std::clamp(r / std::sqrt(q3), -1.0, 1.0));
        const double s = -2.0 * std::sqrt(q);
        roots[0] = polish(s * std::cos(th / 3.0) - a / 3.0);
        roots[1] = polish(s * std::cos((th + 2.0 * M_PI) / 3.0) - a / 3.0);
        roots[2] = polish(s * std::cos((th - 2.0 * M_PI) / 3.0) - a / 3.0);
        return 3;
    }
    const double e = -std::copysign(std::cbrt(std::abs(r) + std::sqrt(r * r - q3)), r);
    const double f = (e != 0.0) ? q / e : 0.0;
    roots[0] = polish(e + f - a / 3.0);
    return 1;
}

}  // namespace detail

struct InverseLookup {
    bool found = false;
    double x = 0.0;
    int root_count = 0;  // roots inside the data range; > 1 means non-monotone there
};

class CubicSpline {
  public:
    CubicSpline() = default;

    // `tol` deduplicates abscissae.  Two distinct points give the linear
    // fallback (linear_fallback() reports it); fewer is an error.
    CubicSpline(const std::vector<double>& xs, const std::vector<double>& ys,
                double tol = 1e-12) {
        auto k = detail::sorted_unique_knots(xs, ys, tol);
        x_ = std::move(k.x);
        y_ = std::move(k.y);
        const std::size_t n = x_.size();
        if (n < 2) throw Error("spline: need at least 2 distinct points");
        m_.assign(n, 0.0);
        if (n == 2) {
            linear_ = true;
            return;
        }
        // Tridiagonal system for interior second derivatives, natural ends.
        std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1];
            const double h1 = x_[i + 1] - x_[i];
            diag[i] = 2.0 * (h0 + h1);
            upper[i] = h1;
            rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
        }
        for (std::size_t i = 2; i + 1 < n; ++i) {
            const double w = (x_[i] - x_[i - 1]) / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
            if (i == 1) break;
        }
    }

    bool linear_fallback() const { return linear_; }
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }
    const std::vector<double>& knots_x() const { return x_; }
    const std::vector<double>& knots_y() const { return y_; }

    // Evaluate; outside the range this continues the terminal segment.
    double operator()(double x) const {
        const std::size_t i = segment(x);
        double a, b, c, d;
        coeffs(i, a, b, c, d);
        const double u = x - x_[i];
        return ((d * u + c) * u + b) * u + a;
    }

    double derivative(double x) const {
        const std::size_t i = segment(x);
        double a, b, c, d;
        coeffs(i, a, b, c, d);
        const double u = x - x_[i];
        return (3.0 * d * u + 2.0 * c) * u + b;
    }

    // Solve spline(x) = y inside [x_min, x_max].  With several solutions the
    // one nearest `near` wins and root_count exposes the ambiguity.
    InverseLookup solve(double y, double near) const {
        InverseLookup out;
        const double span_tol = 1e-10 * (x_.back() - x_.front() + 1.0);
        std::vector<double> found;
        for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
            double a, b, c, d;
            coeffs(i, a, b, c, d);
            double roots[3];
            const int cnt = detail::solve_cubic_real(d, c, b, a - y, roots);
            const double h = x_[i + 1] - x_[i];
            for (int r = 0; r < cnt; ++r) {
                if (roots[r] < -span_tol || roots[r] > h + span_tol) continue;
                const double xr = x_[i] + std::clamp(roots[r], 0.0, h);
                bool dup = false;
                for (double f : found)
                    if (std::abs(f - xr) <= span_tol) dup = true;
                if (!dup) found.push_back(xr);
            }
        }
        out.root_count = static_cast<int>(found.size());
        if (found.empty()) return out;
        out.found = true;
        out.x = *std::min_element(found.begin(), found.end(), [&](double a, double b) {
            return std::abs(a - near) < std::abs(b - near);
        });
        return out;
    }

  private:
    std::size_t segment(double x) const {
        if (x_.size() == 2) return 0;
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = static_cast<std::size_t>(it - x_.begin());
        if (i == 0) return 0;
        if (i >= x_.size()) return x_.size() - 2;
        return i - 1;
    }

    void coeffs(std::size_t i, double& a, double& b, double& c, double& d) const {
        const double h = x_[i + 1] - x_[i];
        a = y_[i];
        if (linear_) {
            b = (y_[i + 1] - y_[i]) / h;
            c = d = 0.0;
            return;
        }
        b = (y_[i + 1] - y_[i]) / h - h * (2.0 * m_[i] + m_[i + 1]) / 6.0;
        c = 0.5 * m_[i];
        d = (m_[i + 1] - m_[i]) / (6.0 * h);
    }

    std::vector<double> x_, y_, m_;
    bool linear_ = false;
};

class PeriodicCubicSpline {
  public:
    PeriodicCubicSpline() = default;

    // Knots may include the wrap duplicate (x0 + period); it is dropped.
    PeriodicCubicSpline(const std::vector<double>& xs, const std::vector<double>& ys,
                        double period) : period_(period) {
        if (!(period > 0.0)) throw Error("periodic spline: period must be positive");
        auto k = detail::sorted_unique_knots(xs, ys, 1e-12);
        x_ = std::move(k.x);
        y_ = std::move(k.y);
        if (x_.size() >= 2 && x_.back() - x_.front() >= period - 1e-9) {
            x_.pop_back();
            y_.pop_back();
        }
        const std::size_t n = x_.size();
        if (n < 3) throw Error("periodic spline: need at least 3 distinct points per period");
        if (x_.back() - x_.front() >= period)
            throw Error("periodic spline: knots span more than one period");
        // Cyclic system in the second derivatives; n stays tiny here, so a
        // dense solve is the simplest correct option.
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd rhs(n);
        auto h = [&](std::size_t i) {
            return (i + 1 < n) ? x_[i + 1] - x_[i] : period - (x_.back() - x_.front());
        };
        auto yv = [&](std::size_t i) { return y_[i % n]; };
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t prev = (i + n - 1) % n;
            const double hp = h(prev), hi = h(i);
            A(i, prev) += hp;
            A(i, i) += 2.0 * (hp + hi);
            A(i, (i + 1) % n) += hi;
            rhs(i) = 6.0 * ((yv(i + 1) - yv(i)) / hi - (yv(i) - yv(prev)) / hp);
        }
        Eigen::VectorXd mm = A.partialPivLu().solve(rhs);
        m_.assign(mm.data(), mm.data() + n);
    }

    double operator()(double x) const {
        const std::size_t n = x_.size();
        double u = std::fmod(x - x_.front(), period_);
        if (u < 0.0) u += period_;
        // locate segment in the wrapped coordinate
        std::size_t i = n - 1;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            if (u < x_[k + 1] - x_.front()) { i = k; break; }
        }
        const double xi = x_[i] - x_.front();
        const double hi = (i + 1 < n) ? x_[i + 1] - x_[i] : period_ - (x_.back() - x_.front());
        const double y0 = y_[i], y1 = y_[(i + 1) % n];
        const double m0 = m_[i], m1 = m_[(i + 1) % n];
        const double t = u - xi;
        const double b = (y1 - y0) / hi - hi * (2.0 * m0 + m1) / 6.0;
        const double c = 0.5 * m0;
        const double d = (m1 - m0) / (6.0 * hi);
        return ((d * t + c) * t + b) * t + y0;
    }

  private:
    std::vector<double> x_, y_, m_;
    double period_ = 0.0;
};

}  // namespace nlreg
