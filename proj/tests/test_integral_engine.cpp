#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "random_cases.hpp"
#include "xgbm/errors.hpp"
#include "xgbm/integral_engine.hpp"

using namespace xgbm;
using xgbm::cases::rel_diff;

namespace {
FactorFunctions constant(double k, double l) {
    return {[k](double) { return k; }, [l](double) { return l; }};
}

OperatorFactor flat_factor(std::size_t n, double k, double h, double l, int q) {
    return {std::vector<double>(n, k), std::vector<double>(n, h), std::vector<double>(n, l), q};
}

ZerothPath euler_path(const PiecewiseParams& p, std::size_t substeps) {
    return v0_euler_piecewise(p, p.grid.subdivided(substeps));
}
}  // namespace

TEST(Quadrature, ConstantIntegrand) {
    OperatorFunctions f{{constant(0, 2)}, {}};
    EXPECT_NEAR(eval_quadrature(f, 0, 1), 2.0, 1e-14);
}

TEST(Quadrature, ExponentialWeight) {
    OperatorFunctions f{{constant(1, 1)}, {}};
    EXPECT_NEAR(eval_quadrature(f, 0, 1), std::exp(1.0) - 1.0, 1e-13);
}

TEST(Quadrature, TriangularRegion) {
    OperatorFunctions f{{constant(0, 1), constant(0, 1)}, {}};
    EXPECT_NEAR(eval_quadrature(f, 0, 1), 0.5, 1e-14);
}

TEST(Quadrature, InnerExponentialStartsAtZero) {
    // ∫_{0.5}^{1} e^u du: the exponent accumulates from 0, not from t0.
    OperatorFunctions f{{constant(1, 1)}, {}};
    EXPECT_NEAR(eval_quadrature(f, 0.5, 1), std::exp(1.0) - std::exp(0.5), 1e-13);
}

TEST(Quadrature, IteratedClosedForm) {
    // ω^{(1,1),(0,1)} on [0,T] = ∫ e^u (T-u) du = e^T - 1 - T.
    OperatorFunctions f{{constant(1, 1), constant(0, 1)}, {}};
    EXPECT_NEAR(eval_quadrature(f, 0, 2), std::exp(2.0) - 3.0, 1e-12);
}

TEST(Quadrature, KinkAtBreakpoint) {
    OperatorFunctions f{{{[](double) { return 0.0; }, [](double t) { return std::abs(t - 0.3); }}}, {0.3}};
    EXPECT_NEAR(eval_quadrature(f, 0, 1), 0.5 * (0.09 + 0.49), 1e-14);
}

TEST(Quadrature, Errors) {
    OperatorFunctions f{{constant(0, 1)}, {}};
    QuadratureOptions bad;
    bad.tol = 0.0;
    EXPECT_THROW((void)eval_quadrature(f, 0, 1, bad), ValidationError);
    EXPECT_THROW((void)eval_quadrature(f, 1, 0.5), ValidationError);
    EXPECT_THROW((void)eval_quadrature(OperatorFunctions{}, 0, 1), ValidationError);
    EXPECT_DOUBLE_EQ(eval_quadrature(f, 0.4, 0.4), 0.0);
}

TEST(Quadrature, NonConvergenceCarriesEstimate) {
    OperatorFunctions f{{{[](double) { return 0.0; }, [](double t) { return std::sin(1.0 / (t + 1e-4)); }}}, {}};
    QuadratureOptions o;
    o.max_refinements = 2;
    try {
        (void)eval_quadrature(f, 0, 1, o);
        FAIL() << "expected AccuracyError";
    } catch (const AccuracyError& e) {
        EXPECT_TRUE(std::isfinite(e.best_estimate()));
    }
}

TEST(Phi, ZeroRateBranch) { EXPECT_DOUBLE_EQ(phi(0.0, 0, 0.25, 0.0), 0.25); }

TEST(Phi, EmptyRangeAtRightEnd) {
    for (double k : {-3.0, 0.0, 1e-13, 2.0})
        for (int p : {0, 1, 3}) EXPECT_NEAR(phi(k, p, 0.7, 1.0), 0.0, 1e-15);
}

TEST(Phi, ExponentialCase) { EXPECT_NEAR(phi(2.0, 0, 0.5, 0.0), 0.5 * (std::exp(1.0) - 1.0), 1e-14); }

TEST(Phi, MatchesDirectQuadrature) {
    // φ(k, p, ΔT, γ) = ∫_{γΔT}^{ΔT} (u/ΔT)^p e^{k u} du.
    for (double k : {-4.0, -0.3, 5e-13, 0.7, 3.0})
        for (int p = 0; p <= 4; ++p)
            for (double g : {0.0, 0.35}) {
                const double dt = 0.6;
                OperatorFunctions f{{{[](double) { return 0.0; },
                                      [=](double u) { return std::pow(u / dt, p) * std::exp(k * u); }}},
                                    {}};
                EXPECT_NEAR(phi(k, p, dt, g), eval_quadrature(f, g * dt, dt), 1e-13) << k << " " << p << " " << g;
            }
}

TEST(Phi, ThresholdIsContinuous) {
    for (int p = 0; p <= 3; ++p) EXPECT_NEAR(phi(0.9e-12, p, 0.5, 0.2), phi(1.1e-12, p, 0.5, 0.2), 1e-12);
}

TEST(Phi, NFoldMatchesNestedQuadrature) {
    const double dt = 0.4;
    auto factor = [dt](double k, int p) {
        return FactorFunctions{[k](double) { return k; }, [=](double u) { return std::pow(u / dt, p); }};
    };
    const std::vector<std::vector<PhiFactor>> cases = {
        {{-2.0, 0}, {1.5, 1}}, {{0.0, 2}, {3.0, 0}}, {{1.0, 1}, {0.0, 0}}, {{-1.0, 0}, {2.0, 2}, {-3.0, 1}}};
    for (const auto& c : cases)
        for (double g : {0.0, 0.3}) {
            OperatorFunctions f;
            for (const auto& pf : c) f.factors.push_back(factor(pf.rate, pf.p));
            EXPECT_NEAR(phi_n(c, dt, g), eval_quadrature(f, g * dt, dt), 1e-12) << c.size() << " " << g;
        }
    EXPECT_DOUBLE_EQ(phi_n(std::vector<PhiFactor>{{0.7, 2}}, 0.3, 0.1), phi(0.7, 2, 0.3, 0.1));
    EXPECT_NEAR(phi_n(std::vector<PhiFactor>{{0, 0}, {0, 0}}, 0.5, 0.2), 0.25 * 0.64 / 2, 1e-15);
}

TEST(Recursion, ZeroIncrementInterval) {
    auto p = PiecewiseParams::flat(100, 0.18, 1.0, {8, 0.15, 0.9, 0, 0, 0}).refined(TimeGrid({0.0, 0.4, 1.0}));
    OperatorTerm t{{flat_factor(2, 0.5, -1.0, 1.0, 1)}};
    t.factors[0].l_const[1] = 0.0;
    const auto z = euler_path(p, 16);
    const auto s = eval_recursion(t, z, 1);
    EXPECT_GT(s.value_at()[1].back(), 0.0);
    EXPECT_DOUBLE_EQ(s.value_at()[2].back(), s.value_at()[1].back());
}

TEST(Recursion, ClockIntegral) {
    const auto p = PiecewiseParams::flat(100, 0.18, 1.5, {8, 0.15, 0.9, 0, 0, 0}).refined(TimeGrid({0.0, 0.5, 1.0, 1.5}));
    OperatorTerm t{{flat_factor(3, 0, 0, 1, 0)}};
    const auto z = euler_path(p, 4);
    OperatorState s(1);
    for (std::size_t i = 0; i < 3; ++i) {
        const double before = s.value();
        s = extend_to_next_maturity(s, t, i, z);
        EXPECT_NEAR(s.value() - before, 0.5, 1e-15);
    }
}

TEST(Recursion, MatchesQuadratureOnRandomData) {
    std::mt19937_64 rng(20240611);
    for (int c = 0; c < 12; ++c) {
        const auto p = cases::random_params(rng);
        const auto z = euler_path(p, 8);
        for (std::size_t n = 1; n <= 4; ++n) {
            const auto t = cases::random_term(rng, n, 3);
            const auto s = eval_recursion(t, z, 2);
            const auto f = as_functions(t, z);
            for (std::size_t i = 1; i <= 3; ++i) {
                const double q = eval_quadrature(f, 0.0, p.grid[i]);
                EXPECT_LT(rel_diff(s.value_at()[i].back(), q), 1e-10) << "case " << c << " n=" << n << " T_" << i;
            }
        }
    }
}

TEST(Recursion, HeadsAreOuterSuffixes) {
    std::mt19937_64 rng(7);
    const auto p = cases::random_params(rng);
    const auto z = euler_path(p, 8);
    const auto t = cases::random_term(rng, 3, 3);
    const auto s = eval_recursion(t, z, 2);
    for (std::size_t len = 1; len <= 3; ++len) {
        OperatorTerm outer;
        outer.factors.assign(t.factors.begin(), t.factors.begin() + static_cast<std::ptrdiff_t>(len));
        EXPECT_LT(rel_diff(s.head(len), eval_recursion(outer, z, 2).value()), 1e-13);
    }
    EXPECT_DOUBLE_EQ(s.head(0), 1.0);
}

TEST(Recursion, LinearInL) {
    std::mt19937_64 rng(11);
    const auto p = cases::random_params(rng);
    const auto z = euler_path(p, 8);
    const auto f1 = cases::random_factor(rng, 3);
    auto f2 = f1;
    for (auto& l : f2.l_const) l = -0.4 * l + 0.3;
    const double a = 1.7, b = -0.6;
    auto mix = f1;
    for (std::size_t i = 0; i < 3; ++i) mix.l_const[i] = a * f1.l_const[i] + b * f2.l_const[i];
    const double lhs = eval_recursion({{mix}}, z, 2).value();
    const double rhs = a * eval_recursion({{f1}}, z, 2).value() + b * eval_recursion({{f2}}, z, 2).value();
    EXPECT_LT(rel_diff(lhs, rhs), 1e-12);
}

TEST(Recursion, SquareIdentity) {
    std::mt19937_64 rng(3);
    for (int c = 0; c < 10; ++c) {
        const auto p = cases::random_params(rng);
        const auto z = euler_path(p, 8);
        const auto f2 = cases::random_factor(rng, 3), f1 = cases::random_factor(rng, 3);
        const double w = eval_recursion({{f2, f1}}, z, 2).value();
        const double a = eval_recursion({{f2, f1, f2, f1}}, z, 2).value();
        const double b = eval_recursion({{f2, f2, f1, f1}}, z, 2).value();
        EXPECT_LT(rel_diff(w * w, 2 * a + 4 * b), 1e-9) << "case " << c;
    }
}

TEST(Recursion, ExponentChain) {
    std::mt19937_64 rng(5);
    const auto p = cases::random_params(rng);
    const auto z = euler_path(p, 8);
    const auto t = cases::random_term(rng, 2, 3);
    OperatorState s(2);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto next = extend_to_next_maturity(s, t, i, z);
        const double dt = p.grid.width(i);
        double ev = 0.0;
        const auto& fine = z.grid();
        for (std::size_t k = *fine.node_index(p.grid[i]); k < *fine.node_index(p.grid[i + 1]); ++k)
            ev += fine.width(k) * z.values()[k];
        for (std::size_t j = 0; j < 2; ++j) {
            EXPECT_NEAR(next.e(j) / s.e(j), std::exp(dt * t.factors[j].k_const[i]), 1e-13);
            EXPECT_NEAR(next.e_v(j) / s.e_v(j), std::exp(t.factors[j].h[i] * ev), 1e-12);
        }
        s = next;
    }
}

TEST(Recursion, Errors) {
    const auto p = PiecewiseParams::flat(100, 0.18, 1.0, {8, 0.15, 0.9, 0, 0, 0});
    OperatorTerm t{{flat_factor(1, 0, 0, 1, 0)}};
    EXPECT_THROW((void)extend_to_next_maturity(OperatorState(2), t, 0, euler_path(p, 4)), ValidationError);
    EXPECT_THROW((void)extend_to_next_maturity(OperatorState(1), t, 0, zeroth_path_explicit(p)), ValidationError);
    EXPECT_THROW((void)extend_to_next_maturity(OperatorState(1), t, 1, euler_path(p, 4)), ValidationError);
    EXPECT_THROW((void)eval_recursion(OperatorTerm{{flat_factor(2, 0, 0, 1, 0)}}, euler_path(p, 4), 0), ValidationError);
    EXPECT_THROW(OperatorState(0), ValidationError);
}
