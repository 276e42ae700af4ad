// Acceptance suite.  Each test prints exactly one "[criterion N] PASS|FAIL"
// line and enforces its own wall-clock budget.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "nlreg/contour.hpp"
#include "nlreg/identifiability.hpp"
#include "nlreg/parser.hpp"
#include "nlreg/profile.hpp"
#include "nlreg/synth.hpp"
#include "test_support.hpp"

using namespace nlreg;

namespace {

void run_criterion(int number, double seconds_cap, const std::function<void()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body();
    } catch (const std::exception& e) {
        ADD_FAILURE() << "unexpected exception: " << e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(secs, seconds_cap) << "runtime budget exceeded";
    std::cout << "[criterion " << number << "] "
              << (::testing::Test::HasFailure() ? "FAIL" : "PASS") << std::endl;
}

struct PcbProblem {
    ParamModel model;
    Dataset data;
};

PcbProblem load_pcb() {
    PcbProblem pp;
    pp.model = parameterize(
        parse(testsup::read_file(testsup::data_path("models/pcb_hl.txt")), {"age"}), 1);
    pp.data = load_dataset(testsup::data_path("pcb.csv"), {"age"}, "conc",
                           TargetTransform::Log);
    return pp;
}

FitOptions tight_fit() {
    FitOptions fo;
    fo.tol_f = 1e-14;
    fo.tol_x = 1e-12;
    return fo;
}

ProfileOptions tight_profile() {
    ProfileOptions opt;
    // tolerances only; keep the constructor's refit iteration budget
    opt.fit.tol_f = 1e-14;
    opt.fit.tol_x = 1e-12;
    return opt;
}

}  // namespace

// fit quality on the bundled dataset: published residual variance and size
TEST(Acceptance, Criterion1PcbFit) {
    run_criterion(1, 1.0, [] {
        PcbProblem pp = load_pcb();
        FitResult fr = fit(pp.model, pp.data, pp.model.theta0, tight_fit());
        ASSERT_TRUE(fr.converged);
        EXPECT_EQ(fr.p, 3);
        EXPECT_EQ(fr.n, 28);
        EXPECT_NEAR(fr.s2, 0.247, 0.002);
    });
}

// on models linear in the parameters the profile machinery must reproduce
// the closed-form answers: tau is (theta - theta_hat)/se, intervals match
// the t-based ones, prediction bands match the gradient formula
TEST(Acceptance, Criterion2LinearEquivalence) {
    run_criterion(2, 10.0, [] {
        std::mt19937_64 gen = testsup::rng(1001);
        std::uniform_real_distribution<double> ux(0.0, 2.0), uc(-2.0, 2.0);
        std::normal_distribution<double> noise(0.0, 0.3);
        for (int rep = 0; rep < 20; ++rep) {
            const int p = 2 + rep % 2;
            std::vector<std::vector<double>> xr;
            std::vector<double> yv;
            const double c0 = uc(gen), c1 = uc(gen), c2 = uc(gen);
            for (int k = 0; k < 30; ++k) {
                const double x = ux(gen), y = ux(gen);
                if (p == 2) {
                    xr.push_back({x});
                    yv.push_back(c0 * x + c1 + noise(gen));
                } else {
                    xr.push_back({x, y});
                    yv.push_back(c0 * x + c1 * y + c2 + noise(gen));
                }
            }
            Dataset d = testsup::make_dataset(
                p == 2 ? std::vector<std::string>{"x"} : std::vector<std::string>{"x", "y"},
                xr, yv);
            ParamModel m =
                p == 2 ? make_model(parse("t0*x + t1", {"x"}), {0.0, 0.0}, 1)
                       : make_model(parse("t0*x + t1*y + t2", {"x", "y"}), {0.0, 0.0, 0.0}, 2);
            FitResult fr = fit(m, d, m.theta0, tight_fit());
            ASSERT_TRUE(fr.converged);
            ProfileSet set = profile_all(m, d, fr, tight_profile());
            ASSERT_EQ(set.restarts, 0);
            for (int i = 0; i < p; ++i) {
                const ProfileTrace& tr = set.traces[i];
                for (const auto& pt : tr.points) {
                    const double lin = (pt.theta[i] - fr.theta[i]) / fr.se[i];
                    EXPECT_NEAR(pt.tau, lin, 1e-8 * std::max(1.0, std::abs(lin)));
                }
                ProfileInterval pi = profile_ci(tr, fr, 0.05);
                ASSERT_TRUE(pi.lower_bounded && pi.upper_bounded);
                const double q = t_quantile(fr.dof, 0.025);
                const double scale = std::max(1.0, std::abs(fr.theta[i]));
                EXPECT_NEAR(pi.lower, fr.theta[i] - q * fr.se[i], 1e-6 * scale);
                EXPECT_NEAR(pi.upper, fr.theta[i] + q * fr.se[i], 1e-6 * scale);
            }
            const std::vector<double> x0 =
                p == 2 ? std::vector<double>{1.3} : std::vector<double>{1.3, 0.6};
            for (bool wide : {false, true}) {
                PredictionInterval lin = linear_prediction(m, fr, x0, 0.05, wide);
                ProfilePrediction pp = profile_prediction_interval(m, d, fr, x0, 0.05,
                                                                  wide, tight_profile());
                ASSERT_TRUE(pp.lower_bounded && pp.upper_bounded);
                const double scale = std::max(1.0, std::abs(lin.center));
                EXPECT_NEAR(pp.lower, lin.lower, 1e-6 * scale);
                EXPECT_NEAR(pp.upper, lin.upper, 1e-6 * scale);
            }
        }
    });
}

// symbolic derivatives of every bundled model against central differences
TEST(Acceptance, Criterion3JacobianCheck) {
    run_criterion(3, 5.0, [] {
        struct Entry {
            std::string file;
            std::vector<std::string> vars;
            double lo, hi;
        };
        const std::vector<Entry> entries = {
            {"models/pcb_hl.txt", {"age"}, 1.0, 12.0},
            {"models/eq16.txt", {"x0"}, 0.2, 3.0},
            {"models/linear.txt", {"x"}, 0.0, 3.0},
            {"models/exp_decay.txt", {"x"}, 0.1, 3.0},
            {"models/kotanchek_hl.txt", {"x", "y"}, 0.5, 3.0},
            {"models/kotanchek_dsr.txt", {"x", "y"}, 0.5, 3.0},
            {"models/kotanchek_itea.txt", {"x", "y"}, 0.5, 3.0},
        };
        std::mt19937_64 gen = testsup::rng(1003);
        std::normal_distribution<double> jit(0.0, 0.05);
        for (const auto& e : entries) {
            ParamModel m =
                parameterize(parse(testsup::read_file(testsup::data_path(e.file)), e.vars),
                             static_cast<int>(e.vars.size()));
            std::uniform_real_distribution<double> uin(e.lo, e.hi);
            for (int rep = 0; rep < 100; ++rep) {
                std::vector<double> x;
                for (std::size_t v = 0; v < e.vars.size(); ++v) x.push_back(uin(gen));
                std::vector<double> th = m.theta0;
                for (double& t : th) t *= 1.0 + jit(gen);
                std::vector<double> g(m.p());
                model_gradient_at(m, th, x, g);
                std::vector<double> fd = testsup::fd_gradient(m, x, th);
                for (int j = 0; j < m.p(); ++j)
                    EXPECT_NEAR(g[j], fd[j], 1e-6 * std::max(1.0, std::abs(fd[j])))
                        << e.file << " t" << j;
            }
        }
    });
}

// quantile functions against an independent reference implementation
TEST(Acceptance, Criterion4Quantiles) {
    run_criterion(4, 1.0, [] {
        int combos = 0;
        for (double df : {1.0, 3.0, 8.0, 25.0, 120.0})
            for (double q : {0.2, 0.05, 0.025, 0.005, 0.0005}) {
                boost::math::students_t st(df);
                const double ref = boost::math::quantile(st, 1.0 - q);
                EXPECT_NEAR(t_quantile(df, q), ref, 1e-9 * std::max(1.0, std::abs(ref)));
                ++combos;
            }
        for (double d1 : {1.0, 2.0, 3.0, 7.0, 10.0})
            for (double d2 : {4.0, 10.0, 25.0, 60.0, 200.0}) {
                boost::math::fisher_f ff(d1, d2);
                const double ref = boost::math::quantile(ff, 0.95);
                EXPECT_NEAR(f_quantile(0.95, d1, d2), ref,
                            1e-9 * std::max(1.0, std::abs(ref)));
                ++combos;
            }
        EXPECT_EQ(combos, 50);
    });
}

// benchmark surface: the bundled 7-parameter model reaches the published
// fit quality and reproduces the published correlation structure
TEST(Acceptance, Criterion5KotanchekFit) {
    run_criterion(5, 30.0, [] {
        KotanchekData kd = gen_kotanchek(1, 100, 0.0);
        Dataset d = make_dataset(kd.train, {"x", "y"}, "f");
        ParamModel m = parameterize(
            parse(testsup::read_file(testsup::data_path("models/kotanchek_hl.txt")),
                  {"x", "y"}),
            2);
        ASSERT_EQ(m.p(), 7);
        FitResult fr = fit(m, d, m.theta0, tight_fit());
        ASSERT_TRUE(fr.converged);
        // within an order of magnitude of the published residual variance
        EXPECT_GT(fr.s2, 5.8e-6);
        EXPECT_LT(fr.s2, 5.8e-4);
        // For this model on uniform designs over [0.3,4]^2 the parameters
        // split into two tightly coupled blocks, {t1,t3} and {t0,t4,t5,t6},
        // with weak coupling across blocks.  The within-block pairs that do
        // not involve t0 sit above 0.9 on every design draw; the t0 pairs
        // are design sensitive (roughly 0.66..0.91 across seeds), so they
        // get a looser band that still separates them cleanly from the
        // cross-block entries (at most ~0.35).
        struct Pair {
            int i, j;
            double sign, floor;
        };
        const std::vector<Pair> blocks = {
            {4, 0, 1.0, 0.7},  {5, 0, -1.0, 0.7}, {6, 0, -1.0, 0.7},
            {3, 1, 1.0, 0.9},  {5, 4, -1.0, 0.9}, {6, 4, -1.0, 0.9},
            {6, 5, 1.0, 0.9}};
        for (const auto& b : blocks) {
            const double c = fr.corr(b.i, b.j);
            EXPECT_GT(std::abs(c), b.floor)
                << "corr(" << b.i << "," << b.j << ") = " << c;
            EXPECT_GT(c * b.sign, 0.0) << "corr(" << b.i << "," << b.j << ") = " << c;
        }
        // the tightest coupling in the block
        EXPECT_LT(fr.corr(6, 4), -0.97);
        // cross-block entries stay weak, so the block structure is real
        EXPECT_LT(std::abs(fr.corr(1, 0)), 0.5);
        EXPECT_LT(std::abs(fr.corr(3, 0)), 0.5);
        EXPECT_LT(std::abs(fr.corr(4, 3)), 0.5);
    });
}

// at the 99% level the profile bound exceeds the walk cap, so intervals for
// the weakly determined parameters come back open
TEST(Acceptance, Criterion6PcbUnbounded) {
    run_criterion(6, 10.0, [] {
        PcbProblem pp = load_pcb();
        FitResult fr = fit(pp.model, pp.data, pp.model.theta0, tight_fit());
        ASSERT_TRUE(fr.converged);
        ProfileSet set = profile_all(pp.model, pp.data, fr, tight_profile());
        bool any_open = false;
        for (int i : {1, 2}) {
            ProfileInterval pi = profile_ci(set.traces[i], set.fit, 0.01);
            if (!pi.lower_bounded || !pi.upper_bounded) any_open = true;
        }
        EXPECT_TRUE(any_open);
    });
}

// 95% prediction bands on the bundled dataset: the noise-inclusive bands
// cover every observation, and the profile expectation band is strictly
// narrower than the linear one at the first age
TEST(Acceptance, Criterion7PcbBands) {
    run_criterion(7, 60.0, [] {
        PcbProblem pp = load_pcb();
        FitResult fr = fit(pp.model, pp.data, pp.model.theta0, tight_fit());
        ASSERT_TRUE(fr.converged);
        ProfileOptions opt = tight_profile();
        for (int k = 0; k < pp.data.n; ++k) {
            const std::vector<double> x0 = {pp.data.row(k)[0]};
            PredictionInterval lin = linear_prediction(pp.model, fr, x0, 0.05, true);
            EXPECT_GE(pp.data.y[k], lin.lower) << "row " << k;
            EXPECT_LE(pp.data.y[k], lin.upper) << "row " << k;
            ProfilePrediction pro =
                profile_prediction_interval(pp.model, pp.data, fr, x0, 0.05, true, opt);
            ASSERT_TRUE(pro.lower_bounded && pro.upper_bounded) << "row " << k;
            EXPECT_GE(pp.data.y[k], pro.lower) << "row " << k;
            EXPECT_LE(pp.data.y[k], pro.upper) << "row " << k;
        }
        const std::vector<double> age1 = {1.0};
        PredictionInterval lin = linear_prediction(pp.model, fr, age1, 0.05, false);
        ProfilePrediction pro =
            profile_prediction_interval(pp.model, pp.data, fr, age1, 0.05, false, opt);
        ASSERT_TRUE(pro.lower_bounded && pro.upper_bounded);
        EXPECT_LT(pro.upper - pro.lower, lin.upper - lin.lower);
    });
}

// pairwise region of a linear model against the exact covariance ellipse
TEST(Acceptance, Criterion8ContourEllipse) {
    run_criterion(8, 5.0, [] {
        std::mt19937_64 gen = testsup::rng(1008);
        std::normal_distribution<double> noise(0.0, 0.4);
        std::uniform_real_distribution<double> ux(0.0, 2.0);
        std::vector<std::vector<double>> xr;
        std::vector<double> yv;
        Eigen::MatrixXd X(30, 2);
        for (int k = 0; k < 30; ++k) {
            const double x = ux(gen);
            xr.push_back({x});
            yv.push_back(1.5 * x + 0.7 + noise(gen));
            X(k, 0) = x;
            X(k, 1) = 1.0;
        }
        Dataset d = testsup::make_dataset({"x"}, xr, yv);
        ParamModel m = make_model(parse("t0*x + t1", {"x"}), {1.0, 0.0}, 1);
        FitResult fr = fit(m, d, m.theta0, tight_fit());
        ASSERT_TRUE(fr.converged);
        ProfileSet set = profile_all(m, d, fr, tight_profile());
        const Eigen::MatrixXd xtx = X.transpose() * X;
        for (double alpha : {0.2, 0.5}) {
            ContourCurve cc =
                profile_contour(set.fit, set.traces[0], set.traces[1], alpha, 100);
            ASSERT_EQ(cc.points.size(), 100u);
            for (const auto& pt : cc.points) {
                Eigen::Vector2d delta(pt.theta_i - set.fit.theta[0],
                                      pt.theta_j - set.fit.theta[1]);
                const double r =
                    std::sqrt(delta.dot(xtx * delta) / set.fit.s2) / cc.tau_scale;
                EXPECT_NEAR(r, 1.0, 0.02) << "alpha=" << alpha;
            }
        }
    });
}

// Monte Carlo calibration: nominal 95% profile intervals on a nonlinear
// model keep their coverage
TEST(Acceptance, Criterion9Coverage) {
    run_criterion(9, 300.0, [] {
        const int reps = 200;
        const double true0 = 2.5, true1 = -0.7;
        std::mt19937_64 gen = testsup::rng(1009);
        std::normal_distribution<double> noise(0.0, 0.1);
        std::vector<double> xg(30);
        for (int k = 0; k < 30; ++k) xg[k] = 0.1 + 3.9 * k / 29.0;
        int cover0 = 0, cover1 = 0;
        ProfileOptions opt;  // default tolerances; this is a calibration run
        opt.parallel = true;
        for (int rep = 0; rep < reps; ++rep) {
            std::vector<std::vector<double>> xr;
            std::vector<double> yv;
            for (int k = 0; k < 30; ++k) {
                xr.push_back({xg[k]});
                yv.push_back(true0 * std::exp(true1 * xg[k]) + noise(gen));
            }
            Dataset d = testsup::make_dataset({"x"}, xr, yv);
            ParamModel m = make_model(parse("t0*exp(t1*x)", {"x"}), {2.0, -0.5}, 1);
            try {
                FitResult fr = fit(m, d, m.theta0);
                if (!fr.converged) continue;
                ProfileSet set = profile_all(m, d, fr, opt);
                ProfileInterval i0 = profile_ci(set.traces[0], set.fit, 0.05);
                ProfileInterval i1 = profile_ci(set.traces[1], set.fit, 0.05);
                if (i0.lower <= true0 && true0 <= i0.upper) ++cover0;
                if (i1.lower <= true1 && true1 <= i1.upper) ++cover1;
            } catch (const Error&) {
                // counts as a miss
            }
        }
        const double c0 = static_cast<double>(cover0) / reps;
        const double c1 = static_cast<double>(cover1) / reps;
        EXPECT_GE(c0, 0.90);
        EXPECT_LE(c0, 0.99);
        EXPECT_GE(c1, 0.90);
        EXPECT_LE(c1, 0.99);
    });
}

// profiling from a local optimum must adopt the better one it walks into
// and end up at the same estimate as a well-started fit
TEST(Acceptance, Criterion10RestartRecovery) {
    run_criterion(10, 30.0, [] {
        std::vector<std::vector<double>> xr;
        std::vector<double> yv;
        const int n = 25;
        for (int k = 0; k < n; ++k) {
            const double x = -2.0 + 8.0 * k / (n - 1);
            xr.push_back({x});
            yv.push_back(std::exp(-(x - 3.5) * (x - 3.5)) + 0.35 * std::exp(-x * x));
        }
        Dataset d = testsup::make_dataset({"x"}, xr, yv);
        ParamModel m = make_model(parse("t0*exp(-(x - t1)^2)", {"x"}), {0.35, 0.0}, 1);

        FitResult local = fit(m, d, m.theta0, tight_fit());
        ASSERT_TRUE(local.converged);
        FitResult good = fit(m, d, std::vector<double>{1.0, 3.5}, tight_fit());
        ASSERT_TRUE(good.converged);
        ASSERT_LT(good.ssr, local.ssr - 1e-3);  // genuinely distinct optima

        ProfileSet set = profile_all(m, d, local, tight_profile());
        EXPECT_GE(set.restarts, 1);
        for (int i = 0; i < 2; ++i)
            EXPECT_NEAR(set.fit.theta[i], good.theta[i],
                        1e-6 * std::max(1.0, std::abs(good.theta[i])));
        EXPECT_NEAR(set.fit.ssr, good.ssr, 1e-9 * (1.0 + good.ssr));
    });
}
