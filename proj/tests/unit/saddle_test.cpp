#include <gtest/gtest.h>

#include <cmath>

#include "tdrg/exact.hpp"
#include "tdrg/saddle.hpp"

using namespace tdrg;

namespace {

RampConfig ramp(int n, double nu) {
    RampConfig c;
    c.nu = nu;
    for (int i = 1; i <= n; ++i) c.epsilons.push_back(i / 3.0);
    c.t_init = 1e-5;
    c.t_final = 1e4;
    return c;
}

}  // namespace

TEST(SaddleConfigs, Counts) {
    EXPECT_EQ(enumerate_configs(2, 2).size(), 3u);
    EXPECT_EQ(enumerate_configs(3, 3).size(), 7u);
    auto c = enumerate_configs(1, 0);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].basis_slot(1), 2u);
    EXPECT_THROW(enumerate_configs(2, 5), ConfigError);
}

TEST(SaddleConfigs, CountMatchesSectorDimension) {
    for (int n = 1; n <= 6; ++n)
        for (int np = 0; np <= 2 * n; ++np) {
            const auto cs = enumerate_configs(n, np);
            EXPECT_EQ(cs.size(), sector_slots(n, np - n).size());
            for (const auto& c : cs) {
                EXPECT_EQ(c.n_plus(), np);
                EXPECT_EQ(slot_magnetization(c.basis_slot(n), n), np - n);
            }
        }
}

TEST(SaddleConfigs, TwoSiteSlots) {
    std::vector<std::size_t> slots;
    for (const auto& c : enumerate_configs(2, 2)) slots.push_back(c.basis_slot(2));
    std::sort(slots.begin(), slots.end());
    // |+1,-1>, |0,0>, |-1,+1>
    EXPECT_EQ(slots, (std::vector<std::size_t>{2, 4, 6}));
}

TEST(SaddleTerm, GammaMagnitude) {
    auto cfg = ramp(3, 4.0);
    SaddleConfiguration c{{0, 2}, {}};
    const auto a = evaluate_term(c, cfg, {0, 1, 2}, 1e2);
    const auto b = evaluate_term(c, cfg, {0, 1, 2}, 1e4);
    // |e^{-gamma}| ~ t^{-N1/nu} = t^{-1/2}
    EXPECT_NEAR(std::log(std::abs(std::exp(-b.gamma)) / std::abs(std::exp(-a.gamma))) / std::log(100.0), -0.5, 1e-12);
    SaddleConfiguration d{{}, {1}};
    const auto e = evaluate_term(d, cfg, {0, 1, 2}, 1e2), f = evaluate_term(d, cfg, {0, 1, 2}, 1e4);
    EXPECT_NEAR(std::abs(std::exp(-e.gamma)), std::abs(std::exp(-f.gamma)), 1e-15);
}

TEST(SaddleTerm, ThetaUnitSpacingAndCoincidentEps) {
    RampConfig cfg;
    cfg.nu = 1.0;
    cfg.epsilons = {1.0, 2.0};
    SaddleConfiguration c{{0, 1}, {}};
    const auto t = evaluate_term(c, cfg, {0, 1}, 10.0, SaddleMode::hermitian);
    EXPECT_NEAR(std::abs(t.lambda_phase), 0.0, 1e-15);  // ln 1 = 0
    cfg.epsilons = {1.0, 1.0};
    EXPECT_THROW(evaluate_term(c, cfg, {0, 1}, 10.0), Error);  // rejected as a config before the log is taken
}

TEST(SaddleTerm, HermitianModeIsPurePhase) {
    auto cfg = ramp(3, 3.0);
    for (int np = 0; np <= 6; ++np)
        for (const auto& c : enumerate_configs(3, np)) {
            const auto a = evaluate_term(c, cfg, {0, 1, 2}, 10.0, SaddleMode::hermitian);
            const auto b = evaluate_term(c, cfg, {0, 1, 2}, 1e3, SaddleMode::hermitian);
            EXPECT_NEAR(std::abs(a.amplitude), std::abs(b.amplitude), 1e-12 * std::abs(a.amplitude));
        }
}

TEST(SaddleAssemble, ExponentsMatchPrediction) {
    for (double nu : {2.0, 2.5, 4.0, 6.0, 20.0})
        for (int n = 1; n <= 4; ++n) {
            auto cfg = ramp(n, nu);
            for (int np = 0; np <= 2 * n; ++np) {
                const auto a = assemble_asymptote(cfg, n, np, 1e2), b = assemble_asymptote(cfg, n, np, 1e5);
                for (const auto& c : enumerate_configs(n, np)) {
                    const std::size_t s = c.basis_slot(n);
                    const double slope = std::log(std::abs(b.amplitudes[s]) / std::abs(a.amplitudes[s])) / std::log(1e3);
                    EXPECT_NEAR(-slope, predict_alpha(n, c.n1(), nu).alpha, 1e-10) << n << " " << np << " " << nu;
                }
            }
        }
}

TEST(SaddleAssemble, SingleSiteIsPlusChannel) {
    auto cfg = ramp(1, 3.0);
    const auto a = assemble_asymptote(cfg, 1, 0, 10.0), b = assemble_asymptote(cfg, 1, 0, 1e3);
    EXPECT_NEAR(std::abs(b.amplitudes[2]) / std::abs(a.amplitudes[2]), std::pow(100.0, -1.0 / 3.0), 1e-12);
    // lab phase e^{2 i eps t} of c_+
    const double eps = cfg.epsilons[0];
    const cplx ratio = (b.amplitudes[2] / std::abs(b.amplitudes[2])) / (a.amplitudes[2] / std::abs(a.amplitudes[2]));
    EXPECT_NEAR(std::abs(ratio - std::exp(cplx(0.0, 2 * eps * (1e3 - 10.0)))), 0.0, 1e-9);
}

TEST(SaddleAssemble, RatioToNumericsFlattens) {
    auto cfg = ramp(2, 6.0);
    RgGenerator gen(cfg, {0, 1}, true);
    CorrelatorState st{{0, 1}, pseudo_vacuum_raised(2, 2), cfg.t_init, Frame::lab};
    const std::vector<double> ts{1e3, 3e3, 1e4};
    IntegrationSpec spec;
    spec.rel_tol = 1e-10;
    spec.abs_tol = 1e-40;
    auto num = evolve_sector(gen, {0}, st, ts, spec);
    for (std::size_t s : {2u, 4u, 6u}) {
        const double r0 = std::abs(num[0].amplitudes[s]) / std::abs(assemble_asymptote(cfg, 2, 2, ts[0]).amplitudes[s]);
        const double r2 = std::abs(num[2].amplitudes[s]) / std::abs(assemble_asymptote(cfg, 2, 2, ts[2]).amplitudes[s]);
        EXPECT_NEAR(r2 / r0, 1.0, 0.05) << s;
    }
}
