#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "nlreg/expr.hpp"
#include "nlreg/parser.hpp"
#include "test_support.hpp"

using namespace nlreg;

namespace {

const std::vector<std::string> kXY = {"x", "y"};

double ev(const Expr& e, const std::vector<double>& x,
          const std::vector<double>& theta = {}) {
    return evaluate(e, theta, x);
}

}  // namespace

TEST(Parser, NumbersAndPrecedence) {
    const std::vector<std::string> v = {"x"};
    EXPECT_DOUBLE_EQ(ev(parse("1 + 2*3", v), {0.0}), 7.0);
    EXPECT_DOUBLE_EQ(ev(parse("(1 + 2)*3", v), {0.0}), 9.0);
    EXPECT_DOUBLE_EQ(ev(parse("2^3^2", v), {0.0}), 512.0);  // right associative
    EXPECT_DOUBLE_EQ(ev(parse("-2^2", v), {0.0}), -4.0);    // pow binds tighter
    EXPECT_DOUBLE_EQ(ev(parse("2^-2", v), {0.0}), 0.25);
    EXPECT_DOUBLE_EQ(ev(parse("2**3", v), {0.0}), 8.0);
    EXPECT_DOUBLE_EQ(ev(parse(".5 + 1e2", v), {0.0}), 100.5);
    EXPECT_DOUBLE_EQ(ev(parse("6/3/2", v), {0.0}), 1.0);  // left associative
    EXPECT_DOUBLE_EQ(ev(parse("1 - 2 - 3", v), {0.0}), -4.0);
}

TEST(Parser, VariablesParametersFunctions) {
    Expr e = parse("exp(x) + log(y) + sqrt(x*y) + sin(x) + cos(y) + abs(x - y) + cube(x)",
                   kXY);
    const double want = std::exp(2.0) + std::log(3.0) + std::sqrt(6.0) + std::sin(2.0) +
                        std::cos(3.0) + 1.0 + 8.0;
    EXPECT_NEAR(ev(e, {2.0, 3.0}), want, 1e-12);

    Expr p = parse("t0*x + theta[1]*y + t2", kXY);
    EXPECT_EQ(parameter_count(p), 3);
    EXPECT_DOUBLE_EQ(ev(p, {2.0, 3.0}, {2.0, 3.0, 4.0}), 2.0 * 2.0 + 3.0 * 3.0 + 4.0);
}

TEST(Parser, Errors) {
    EXPECT_THROW(parse("x +", {"x"}), ParseError);
    EXPECT_THROW(parse("(x", {"x"}), ParseError);
    EXPECT_THROW(parse("x + unknown", {"x"}), ParseError);
    EXPECT_THROW(parse("exp(x", {"x"}), ParseError);
    EXPECT_THROW(parse("", {"x"}), ParseError);
    // reserved names cannot be declared as variables
    EXPECT_THROW(parse("t0", {"t0"}), Error);
    EXPECT_THROW(parse("theta", {"theta"}), Error);
    EXPECT_THROW(parse("exp", {"exp"}), Error);
}

TEST(Parser, DomainViolationsAreNonFinite) {
    const std::vector<std::string> v = {"x"};
    EXPECT_FALSE(std::isfinite(ev(parse("log(x)", v), {-1.0})));
    EXPECT_FALSE(std::isfinite(ev(parse("sqrt(x)", v), {-1.0})));
    EXPECT_FALSE(std::isfinite(ev(parse("1/x", v), {0.0})));
}

TEST(Printer, RoundTripIsStructurallyIdentical) {
    const std::vector<std::string> srcs = {
        "x + y*2 - 3",
        "-3.93*exp(-0.19*x) + 3.13",
        "(x + y)^2/(1.2 + (y - 2.5)^2)",
        "2^-3 + x^(y + 1)",
        "t0*x + t1",
        "0.32 + 5.14/(3*x + 1)",
        "exp(1.932*y + 1.982*x - 0.04764*y^3 - 0.9928*x^2)*(-0.008554*y + 0.0001818*y^3 + 0.02365)",
        "x - (y - 1)",
        "x/(y/2)",
        "-(x + 1)^2",
        "sin(cos(abs(cube(x))))",
    };
    for (const auto& s : srcs) {
        Expr e = parse(s, kXY);
        const std::string printed = to_string(e, kXY);
        Expr back = parse(printed, kXY);
        EXPECT_TRUE(equal(e, back)) << s << " -> " << printed;
        // printing again is a fixed point
        EXPECT_EQ(to_string(back, kXY), printed) << s;
    }
}

TEST(Printer, ShortestRoundTripLiterals) {
    EXPECT_EQ(to_string(constant(0.1), {}), "0.1");
    Expr f = parse(to_string(constant(1.0 / 3.0), {}), {});
    EXPECT_DOUBLE_EQ(f.root().value, 1.0 / 3.0);
}

TEST(Derivative, MatchesFiniteDifferencesOnRandomTrees) {
    const std::vector<std::string> srcs = {
        "t0*x + t1*y + t2",
        "t0*exp(t1*x) + t2",
        "exp(t0*y + t1*x - t2*y^3 - t3*x^2)*(t4*y + t5*y^3 + t6)",
        "t0 + t1/(t2*x + 1)",
        "sqrt(t0^2 + x^2) + log(1 + exp(t1*y))",
        "sin(t0*x) + cos(t1*y)",
        "x^t0",
        "t0^x",
        "cube(t0*x + t1)",
    };
    std::mt19937_64 gen = testsup::rng(42);
    std::uniform_real_distribution<double> ux(0.4, 2.0), ut(0.2, 1.5);
    for (const auto& s : srcs) {
        Expr e = parse(s, kXY);
        const int p = parameter_count(e);
        std::vector<Expr> grads;
        for (int i = 0; i < p; ++i) grads.push_back(differentiate(e, i));
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<double> x = {ux(gen), ux(gen)};
            std::vector<double> th;
            for (int i = 0; i < p; ++i) th.push_back(ut(gen));
            for (int i = 0; i < p; ++i) {
                const double h = 1e-6 * std::max(1.0, std::abs(th[i]));
                auto tp = th, tm = th;
                tp[i] += h;
                tm[i] -= h;
                const double fd = (ev(e, x, tp) - ev(e, x, tm)) / (2.0 * h);
                const double an = ev(grads[i], x, th);
                EXPECT_NEAR(an, fd, 1e-5 * std::max(1.0, std::abs(fd)))
                    << s << " d/dt" << i;
            }
        }
    }
}

TEST(Derivative, ConstantSubtreesVanish) {
    Expr e = parse("t0*x + 7*y", kXY);
    Expr d = differentiate(e, 1);
    EXPECT_DOUBLE_EQ(ev(d, {1.5, 2.5}, {3.0, 0.0}), 0.0);
}

TEST(Derivative, AbsOfParameterIsRejected) {
    Expr e = parse("abs(t0*x)", {"x"});
    EXPECT_THROW(differentiate(e, 0), ModelError);
    Expr ok = parse("abs(x) * t0", {"x"});
    EXPECT_NO_THROW(differentiate(ok, 0));
}

TEST(Derivative, IntegerPowerRule) {
    Expr e = parse("t0^3", {"x"});
    Expr d = differentiate(e, 0);
    EXPECT_NEAR(ev(d, {0.0}, {2.0}), 12.0, 1e-12);
    // negative base with integer exponent stays finite
    EXPECT_NEAR(ev(d, {0.0}, {-2.0}), 12.0, 1e-12);
}

TEST(Expr, CountingHelpers) {
    Expr e = parse("t0*x + t0*y + t1", kXY);
    EXPECT_EQ(parameter_count(e), 2);
    EXPECT_EQ(count_parameter(e, 0), 2);
    EXPECT_EQ(count_parameter(e, 1), 1);
    EXPECT_EQ(variable_count(e), 2);
    EXPECT_TRUE(contains_parameter(e, 1));
    EXPECT_FALSE(contains_parameter(e, 2));
}
