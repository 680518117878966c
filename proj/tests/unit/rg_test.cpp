#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "tdrg/rg.hpp"

using namespace tdrg;

namespace {
RampConfig cfg3() {
    RampConfig c;
    c.nu = 6.0;
    c.epsilons = {1.0 / 3, 2.0 / 3, 1.0};
    return c;
}

}  // namespace

TEST(RgGenerator, SingleSiteDiagonal) {
    RampConfig c;
    c.nu = 2.0;
    c.epsilons = {0.7};
    const double t = 0.3, g = 1.0 / (c.nu * t);
    auto l = build_rg_generator(c, {0}, t, true).to_dense();
    // slots (+1, 0, -1) carry (c_-, c_z, c_+)
    EXPECT_NEAR(std::abs(l(1, 1) - cplx(-2 * g, 0)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(l(2, 2) - cplx(-g, 2 * 0.7)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(l(0, 0) - cplx(-g, -2 * 0.7)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(l(0, 1)) + std::abs(l(1, 2)) + std::abs(l(1, 0)), 0.0, 0.0);
}

TEST(RgGenerator, TwoSiteBlockSizes) {
    auto c = cfg3();
    RgGenerator gen(c, {0, 2}, true);
    std::vector<std::size_t> sizes;
    for (int jz = 2; jz >= -2; --jz) sizes.push_back(sector_slots(2, jz).size());
    EXPECT_EQ(sizes, (std::vector<std::size_t>{1, 2, 3, 2, 1}));
    auto p = sector_project(gen.at(0.4), 2, {0});
    // |+1,-1>, |0,0>, |-1,+1>
    EXPECT_EQ(p.slots, (std::vector<std::size_t>{2, 4, 6}));
    EXPECT_EQ(sector_project(gen.at(0.4), 2, {2}).slots, (std::vector<std::size_t>{0}));
    EXPECT_THROW(sector_project(gen.at(0.4), 2, {3}), ConfigError);
}

TEST(RgGenerator, MagnetizationConservedExactly) {
    auto c = cfg3();
    for (bool flag : {true, false}) {
        RgGenerator gen(c, {0, 1, 2}, flag);
        SparseComplexOperator jz(27, 27);
        for (int j = 0; j < 3; ++j) jz = jz + site_operator(spin1(SpinIndex::z), j, 3);
        for (double t : {1e-5, 0.1, 42.0}) EXPECT_EQ(commutator(gen.at(t), jz).max_abs(), 0.0);
        for (const auto& e : gen.at(1.0).entries()) EXPECT_EQ(slot_magnetization(e.row, 3), slot_magnetization(e.col, 3));
    }
}

TEST(RgGenerator, RejectsBadSites) {
    auto c = cfg3();
    EXPECT_THROW(RgGenerator(c, {}, true), ConfigError);
    EXPECT_THROW(RgGenerator(c, {0, 0}, true), ConfigError);
    EXPECT_THROW(RgGenerator(c, {5}, true), ConfigError);
}

TEST(Comoving, TransformValues) {
    RampConfig c;
    c.nu = 3.0;
    c.epsilons = {0.1};
    CorrelatorState s{{0}, {1.0, 1.0, 1.0}, c.t_init * std::exp(c.nu), Frame::lab};
    auto co = comoving_transform(s, c, Frame::comoving);
    EXPECT_NEAR(std::abs(co.amplitudes[0] - std::exp(-1.0)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(co.amplitudes[1] - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(co.amplitudes[2] - std::exp(1.0)), 0.0, 1e-14);
    auto back = comoving_transform(co, c, Frame::lab);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(std::abs(back.amplitudes[static_cast<std::size_t>(i)] - 1.0), 0.0, 1e-14);
    EXPECT_THROW(comoving_transform(co, c, Frame::comoving), ConfigError);
}

TEST(Comoving, FrameEquivalenceProperty) {
    auto c = cfg3();
    for (int n = 1; n <= 3; ++n) {
        std::vector<int> sites;
        for (int j = 0; j < n; ++j) sites.push_back(j);
        RgGenerator lab(c, sites, true), co(c, sites, false);
        CorrelatorState init{sites, CVec(ipow(3, n)), c.t_init, Frame::lab};
        for (std::size_t i = 0; i < init.amplitudes.size(); ++i) init.amplitudes[i] = cplx(std::sin(1.0 + i), std::cos(2.0 * i));
        std::vector<double> ts{1e-3, 0.5, 7.0, 100.0};
        IntegrationSpec spec;
        spec.rel_tol = 1e-12;
        spec.abs_tol = 1e-14;
        auto a = evolve_correlators(lab, init, ts, spec);
        auto init_co = comoving_transform(init, c, Frame::comoving);
        auto b = evolve_correlators(co, init_co, ts, spec);
        for (std::size_t k = 0; k < ts.size(); ++k) {
            auto bl = comoving_transform(b[k], c, Frame::lab);
            for (std::size_t i = 0; i < bl.amplitudes.size(); ++i)
                EXPECT_NEAR(std::abs(bl.amplitudes[i] - a[k].amplitudes[i]), 0.0, 1e-9) << n << " " << ts[k];
        }
    }
}

TEST(Translation, WeightTable) {
    auto st = label_to_state({{CorrelatorLabel::parse("zz"), 1.0}});
    EXPECT_EQ(st.amplitudes[4], cplx(1.0));
    auto s1 = label_to_state({{CorrelatorLabel::parse("+"), 1.0}});
    EXPECT_NEAR(s1.amplitudes[2].real(), 1.0 / std::numbers::sqrt2, 1e-15);
    auto s2 = label_to_state({{CorrelatorLabel::parse("-"), 1.0}});
    EXPECT_NEAR(s2.amplitudes[0].real(), -1.0 / std::numbers::sqrt2, 1e-15);
    auto m = state_to_label(CorrelatorState{{0}, {0.0, 0.0, 1.0 / std::numbers::sqrt2}, 0.0, Frame::lab});
    EXPECT_NEAR(std::abs(m[CorrelatorLabel::parse("+")] - 1.0), 0.0, 1e-15);
}

TEST(Translation, RoundTripProperty) {
    std::map<CorrelatorLabel, cplx> vals;
    const char comps[] = {'z', '+', '-'};
    int k = 0;
    for (char a : comps)
        for (char b : comps) {
            std::string s = "0" + std::string(1, a) + "0" + std::string(1, b);
            ++k;
            vals[CorrelatorLabel::parse(s)] = cplx(0.1 * k, -0.03 * k);
        }
    auto back = state_to_label(label_to_state(vals));
    ASSERT_EQ(back.size(), vals.size());
    for (const auto& [l, v] : vals) EXPECT_NEAR(std::abs(back[l] - v), 0.0, 1e-15);
    std::map<CorrelatorLabel, cplx> bad{{CorrelatorLabel::parse("zz"), 1.0}, {CorrelatorLabel::parse("z0z"), 1.0}};
    EXPECT_THROW(label_to_state(bad), ConfigError);
}

TEST(Sector, EvolutionMatchesFullEvolution) {
    auto c = cfg3();
    RgGenerator gen(c, {0, 1, 2}, true);
    CorrelatorState init{{0, 1, 2}, pseudo_vacuum_raised(3, 3), c.t_init, Frame::lab};
    std::vector<double> ts{0.01, 1.0, 50.0};
    auto full = evolve_correlators(gen, init, ts, {});
    auto sec = evolve_sector(gen, {0}, init, ts, {});
    for (std::size_t k = 0; k < ts.size(); ++k)
        for (std::size_t i = 0; i < 27; ++i) EXPECT_NEAR(std::abs(full[k].amplitudes[i] - sec[k].amplitudes[i]), 0.0, 1e-9);
}

TEST(Sector, PseudoVacuumRaisedLivesInOneSector) {
    for (int n = 1; n <= 4; ++n)
        for (int np = 0; np <= 2 * n; ++np) {
            auto v = pseudo_vacuum_raised(n, np);
            double nrm = 0.0;
            for (std::size_t s = 0; s < v.size(); ++s) {
                nrm += std::norm(v[s]);
                if (std::abs(v[s]) > 0) {
                    EXPECT_EQ(slot_magnetization(s, n), np - n);
                }
            }
            EXPECT_NEAR(nrm, 1.0, 1e-14);
        }
}
