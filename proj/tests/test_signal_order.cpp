#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mdporder/error.hpp"
#include "mdporder/signal_order.hpp"

using namespace mdporder;

namespace {

SignalCurve curve_of(std::vector<double> omega) {
    SignalCurve c;
    c.omega = std::move(omega);
    return c;
}

// direct evaluation of the unscaled ratio with c~ = c * max(Pi)^eta
std::vector<double> raw_omega(const std::vector<double>& pi, double c, double eta) {
    double peak = 0.0;
    for (std::size_t k = 1; k < pi.size(); ++k) peak = std::max(peak, pi[k]);
    const double ridge = c * std::pow(peak, eta);
    std::vector<double> out;
    for (std::size_t k = 1; k < pi.size(); ++k)
        out.push_back((std::pow(pi[k], eta) + ridge) / (std::pow(pi[k - 1], eta) + ridge));
    return out;
}

} // namespace

// =============================================================================
// Ridge schedule
// =============================================================================

TEST(Ridge, AtESquared) {
    EXPECT_NEAR(ridge_value(RidgeSchedule{}, std::exp(2.0)), 0.1040520190045778, 1e-15);
}

TEST(Ridge, CountsEvaluationTrajectories) {
    EXPECT_EQ(ridge_value(RidgeSchedule{}, 3, 450), ridge_value(RidgeSchedule{}, 1350.0));
}

TEST(Ridge, DecreasingBeyondTwenty) {
    double previous = ridge_value(RidgeSchedule{}, 21.0);
    for (double x = 22.0; x < 2e6; x *= 1.01) {
        const double c = ridge_value(RidgeSchedule{}, x);
        EXPECT_LT(c, previous) << x;
        previous = c;
    }
}

TEST(Ridge, VanishesSlowerThanNoise) {
    double previous = 0.0;
    for (double x = 10.0; x < 1e12; x *= 3.0) {
        const double c = ridge_value(RidgeSchedule{}, x);
        const double scaled = c * std::sqrt(x) / std::sqrt(std::log(x));
        EXPECT_GT(scaled, previous);
        previous = scaled;
    }
    EXPECT_LT(ridge_value(RidgeSchedule{}, 1e12), 1e-4);
}

TEST(Ridge, LinearInC0) {
    for (double x : {5.0, 100.0, 1e6}) {
        EXPECT_NEAR(ridge_value({0.2, 1.0}, x), 2.0 * ridge_value({0.1, 1.0}, x), 1e-15);
    }
}

TEST(Ridge, ExponentChangesRate) {
    const double x = 1e4;
    const double l = std::log(x);
    EXPECT_NEAR(ridge_value({0.1, 2.0}, x), 0.1 * l * l / x, 1e-15);
}

TEST(Ridge, Validation) {
    EXPECT_THROW(ridge_value(RidgeSchedule{}, 1.0), ValidationError);
    EXPECT_THROW(ridge_value({0.0, 1.0}, 100.0), ValidationError);
    EXPECT_THROW(ridge_value({0.1, -1.0}, 100.0), ValidationError);
    EXPECT_THROW(ridge_value(RidgeSchedule{}, 0, 10), ValidationError);
}

// =============================================================================
// Signal curve
// =============================================================================

TEST(SignalCurve, WorkedExample) {
    const auto c = signal_curve(PiSequence{{1, 1, 0.5, 0, 0}}, 0.1, 3.0);
    ASSERT_EQ(c.omega.size(), 4u);
    EXPECT_NEAR(c.omega[0], 1.0, 1e-15);
    EXPECT_NEAR(c.omega[1], 0.225 / 1.1, 1e-15);
    EXPECT_NEAR(c.omega[2], 0.1 / 0.225, 1e-15);
    EXPECT_EQ(c.omega[3], 1.0);
    EXPECT_NEAR(c.ridge_used, 0.1, 1e-15);
    EXPECT_FALSE(c.degenerate);
}

TEST(SignalCurve, MatchesUnscaledForm) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> pi{1.0};
        const std::size_t K = 1 + gen() % 6;
        for (std::size_t k = 0; k < K; ++k) pi.push_back(u(gen) * (rep % 2 ? 1e-3 : 1.0));
        const double c = 0.01 + u(gen);
        const auto curve = signal_curve(PiSequence{pi}, c, 3.0);
        const auto raw = raw_omega(pi, c, 3.0);
        for (std::size_t k = 0; k < K; ++k) EXPECT_NEAR(curve.omega[k], raw[k], 1e-12 * raw[k]);
    }
}

TEST(SignalCurve, Degenerate) {
    const auto c = signal_curve(PiSequence{{1, 0, 0, 0}}, 0.1, 3.0);
    EXPECT_TRUE(c.degenerate);
    EXPECT_EQ(c.omega, (std::vector<double>{1, 1, 1}));
    EXPECT_EQ(c.ridge_used, 0.0);
    EXPECT_TRUE(estimate_order(c, 0.5).undetermined);
}

TEST(SignalCurve, ScaleInvarianceBeyondFirstOrder) {
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> logscale(-8.0, 3.0);
    for (int rep = 0; rep < 500; ++rep) {
        std::vector<double> pi{1.0}, scaled{1.0};
        const double lambda = std::pow(10.0, logscale(gen));
        const std::size_t K = 2 + gen() % 5;
        for (std::size_t k = 0; k < K; ++k) {
            pi.push_back(u(gen));
            scaled.push_back(lambda * pi.back());
        }
        const auto a = signal_curve(PiSequence{pi}, 0.07, 3.0);
        const auto b = signal_curve(PiSequence{scaled}, 0.07, 3.0);
        for (std::size_t k = 2; k <= K; ++k) {
            EXPECT_NEAR(a.omega[k - 1], b.omega[k - 1], 1e-12);
            EXPECT_EQ(a.omega[k - 1] <= 0.5, b.omega[k - 1] <= 0.5);
        }
    }
}

TEST(SignalCurve, FirstOrderIsNotScaleInvariant) {
    const auto a = signal_curve(PiSequence{{1, 0.5, 0.1}}, 0.1, 3.0);
    const auto b = signal_curve(PiSequence{{1, 0.05, 0.01}}, 0.1, 3.0);
    EXPECT_NE(a.omega[0], b.omega[0]);
    EXPECT_NEAR(a.omega[1], b.omega[1], 1e-15);
}

TEST(SignalCurve, TruncationPattern) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (std::size_t k0 = 2; k0 <= 5; ++k0) {
        std::vector<double> pi{1.0};
        for (std::size_t k = 1; k < k0; ++k) pi.push_back(u(gen));
        while (pi.size() < 7) pi.push_back(0.0);
        const double c = 0.05;
        const auto curve = signal_curve(PiSequence{pi}, c, 3.0);
        const double ridge = curve.ridge_used;
        EXPECT_NEAR(curve.omega[k0 - 1], ridge / (std::pow(pi[k0 - 1], 3.0) + ridge), 1e-12);
        EXPECT_LT(curve.omega[k0 - 1], 1.0);
        for (std::size_t k = k0 + 1; k <= 6; ++k) EXPECT_EQ(curve.omega[k - 1], 1.0);
        const auto k_hat = estimate_order(curve, 0.5).k_hat.value_or(0);
        if (curve.omega[k0 - 1] <= 0.5) EXPECT_EQ(k_hat, k0);
        else EXPECT_LT(k_hat, k0);
    }
}

TEST(SignalCurve, Validation) {
    EXPECT_THROW(signal_curve(PiSequence{{1}}, 0.1, 3.0), ValidationError);
    EXPECT_THROW(signal_curve(PiSequence{{0.5, 0.1}}, 0.1, 3.0), ValidationError);
    EXPECT_THROW(signal_curve(PiSequence{{1, -0.1}}, 0.1, 3.0), ValidationError);
    EXPECT_THROW(signal_curve(PiSequence{{1, 0.1}}, 0.0, 3.0), ValidationError);
}

// =============================================================================
// Order estimate
// =============================================================================

TEST(EstimateOrder, ReferenceCurve) {
    const auto est = estimate_order(curve_of({0.500, 0.302, 0.798, 0.944, 0.925, 0.935}), 0.5);
    ASSERT_TRUE(est.k_hat.has_value());
    EXPECT_EQ(*est.k_hat, 2u);
    EXPECT_FALSE(est.undetermined);
}

TEST(EstimateOrder, Undetermined) {
    const auto est = estimate_order(curve_of({1, 1, 1}), 0.5);
    EXPECT_FALSE(est.k_hat.has_value());
    EXPECT_TRUE(est.undetermined);
}

TEST(EstimateOrder, SingletonSet) {
    EXPECT_EQ(estimate_order(curve_of({0.0, 1.0, 1.0}), 0.5).k_hat, 1u);
}

TEST(EstimateOrder, BoundaryIsInclusive) {
    EXPECT_EQ(estimate_order(curve_of({0.2, 0.5, 0.9}), 0.5).k_hat, 2u);
}

TEST(EstimateOrder, TauRange) {
    const auto c = curve_of({0.1});
    EXPECT_THROW(estimate_order(c, 0.0), ValidationError);
    EXPECT_THROW(estimate_order(c, 1.0), ValidationError);
    EXPECT_THROW(estimate_order(c, -0.2), ValidationError);
    EXPECT_NO_THROW(estimate_order(c, 0.999));
}

TEST(EstimateOrder, MonotoneInTau) {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(0.0, 1.2);
    std::uniform_real_distribution<double> t(0.01, 0.99);
    for (int rep = 0; rep < 500; ++rep) {
        std::vector<double> omega(1 + gen() % 6);
        for (auto& w : omega) w = u(gen);
        double t1 = t(gen), t2 = t(gen);
        if (t1 > t2) std::swap(t1, t2);
        const auto a = estimate_order(curve_of(omega), t1), b = estimate_order(curve_of(omega), t2);
        if (a.k_hat) {
            ASSERT_TRUE(b.k_hat.has_value());
            EXPECT_LE(*a.k_hat, *b.k_hat);
        }
        if (b.k_hat) {
            EXPECT_GE(*b.k_hat, 1u);
            EXPECT_LE(*b.k_hat, omega.size());
            EXPECT_LE(omega[*b.k_hat - 1], t2);
        }
    }
}
