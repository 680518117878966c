#include <gtest/gtest.h>

#include <cmath>

#include "tdrg/fit.hpp"
#include "tdrg/lindblad.hpp"

using namespace tdrg;

namespace {

std::vector<double> grid(double a, double b, int per_decade) {
    std::vector<double> t;
    const int n = static_cast<int>(std::round(std::log10(b / a) * per_decade));
    for (int i = 0; i <= n; ++i) t.push_back(a * std::pow(10.0, static_cast<double>(i) / per_decade));
    return t;
}

template <class F>
std::vector<cplx> sample(const std::vector<double>& t, F f) {
    std::vector<cplx> v;
    for (double x : t) v.push_back(f(x));
    return v;
}

}  // namespace

TEST(Fit, ExactPowerLaw) {
    const auto t = grid(1, 1e4, 40);
    const auto v = sample(t, [](double x) { return cplx(3.0 * std::pow(x, -0.75)); });
    const auto r = fit_exponent(t, v);
    EXPECT_NEAR(r.alpha_hat, 0.75, 1e-6);
    EXPECT_GT(r.r_squared, 1 - 1e-9);
    EXPECT_EQ(r.method, FitMethod::raw);
    EXPECT_NEAR(r.intercept, std::log(3.0), 1e-9);
}

TEST(Fit, PhaseRotationIsNotOscillation) {
    const auto t = grid(1, 1e4, 60);
    const auto v = sample(t, [](double x) { return std::pow(x, -0.4) * std::exp(cplx(0, 2 * x)); });
    const auto r = fit_exponent(t, v);
    EXPECT_EQ(r.method, FitMethod::raw);
    EXPECT_NEAR(r.alpha_hat, 0.4, 1e-9);
}

TEST(Fit, OscillatoryEnvelope) {
    const auto t = grid(1, 1e4, 2000);
    const auto v = sample(t, [](double x) { return cplx(std::pow(x, -0.5) * std::cos(2 * x)); });
    const auto r = fit_exponent(t, v);
    EXPECT_EQ(r.method, FitMethod::envelope);
    EXPECT_NEAR(r.alpha_hat, 0.5, 0.01);
}

TEST(Fit, Errors) {
    const auto t = grid(1, 1e4, 10);
    EXPECT_THROW(fit_exponent(t, std::vector<cplx>(t.size(), 0.0)), NumericError);
    const auto v = sample(t, [](double x) { return cplx(1.0 / x); });
    EXPECT_THROW(fit_exponent(t, v, std::pair{1e3, 1e6}), ConfigError);
    EXPECT_THROW(fit_exponent(t, v, std::pair{10.0, 20.0}), NumericError);
    EXPECT_THROW(auto_window(grid(1, 100, 40), sample(grid(1, 100, 40), [](double x) { return cplx(1.0 / x); })), ConfigError);
}

TEST(FitWindow, PurePowerLawUsesFullRange) {
    const auto t = grid(1, 1e4, 40);
    const auto v = sample(t, [](double x) { return cplx(std::pow(x, -1.3)); });
    const auto w = auto_window(t, v);
    EXPECT_TRUE(w.stable);
    EXPECT_NEAR(w.t_lo, 1.0, 1e-9);
    EXPECT_NEAR(w.t_hi, 1e4, 1e-6);
}

TEST(FitWindow, SkipsTransient) {
    const auto t = grid(1e-2, 1e5, 40);
    const auto v = sample(t, [](double x) { return cplx(std::pow(x, -3.0) + std::pow(x, -0.5)); });
    FitWindow w;
    const auto r = fit_auto(t, v, {}, &w);
    EXPECT_TRUE(w.stable);
    EXPECT_GT(w.t_lo, 2.0);
    EXPECT_NEAR(r.alpha_hat, 0.5, 0.01);
}

TEST(FitWindow, TwoTermOscillatoryPicksLateExponent) {
    // c_zz-like shape below the transition: t^{-8/3} smooth plus oscillating t^{-7/3}
    const auto t = grid(1, 1e5, 3000);
    const auto v = sample(t, [](double x) { return cplx(std::pow(x, -8.0 / 3.0) + std::pow(x, -7.0 / 3.0) * std::sin(2 * x + 0.3)); });
    const auto r = fit_auto(t, v);
    EXPECT_NEAR(r.alpha_hat, 7.0 / 3.0, 0.05);
}

TEST(FitInvariance, ScaleAndTimeUnit) {
    const auto t = grid(1, 1e4, 1500);
    auto f = [](double x) { return cplx(std::pow(x, -0.9) * (1.5 + std::cos(3 * x))); };
    const auto v = sample(t, f);
    const auto base = fit_auto(t, v);
    std::vector<cplx> scaled;
    for (auto x : v) scaled.push_back(x * cplx(-7.5e-20, 3e-20));
    FitWindow w1, w2;
    const auto r1 = fit_auto(t, scaled, {}, &w1);
    auto_window(t, v);
    EXPECT_NEAR(r1.alpha_hat, base.alpha_hat, 1e-10);
    EXPECT_NEAR(r1.t_lo, base.t_lo, 1e-9 * base.t_lo);
    std::vector<double> tc;
    for (double x : t) tc.push_back(x * 37.0);
    const auto r2 = fit_auto(tc, v, {}, &w2);
    EXPECT_NEAR(r2.alpha_hat, base.alpha_hat, 1e-10);
    EXPECT_NEAR(r2.t_lo / 37.0, base.t_lo, 1e-9 * base.t_lo);
    for (auto m : {FitMethod::raw, FitMethod::envelope}) {
        FitOptions o;
        o.method = m;
        EXPECT_NEAR(fit_exponent(tc, v, std::nullopt, o).alpha_hat, fit_exponent(t, scaled, std::nullopt, o).alpha_hat, 1e-10);
    }
}

TEST(FitPhysics, SingleSpinZFromLindblad) {
    RampConfig cfg;
    cfg.nu = 6.0;
    cfg.epsilons = {0.4};
    cfg.t_init = 1e-5;
    cfg.t_final = 1e2;
    auto rho = spin_coherent(1, 0.7, 0.2, cfg.t_init);
    const auto ts = grid(1e-4, 1e2, 30);
    LindbladGenerator gen(cfg);
    auto states = evolve_density(gen, rho, ts, IntegrationSpec{});
    std::vector<cplx> cz;
    const auto lab = CorrelatorLabel::parse("z");
    for (const auto& s : states) cz.push_back(extract_correlator(s, lab));
    EXPECT_NEAR(fit_exponent(ts, cz).alpha_hat, 1.0 / 3.0, 0.005);
}
