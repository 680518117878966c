#include <gtest/gtest.h>

#include <cmath>

#include "tdrg/lindblad.hpp"

using namespace tdrg;

namespace {
RampConfig make(double nu, std::vector<double> eps) {
    RampConfig c;
    c.nu = nu;
    c.epsilons = std::move(eps);
    return c;
}

CVec vec_identity(std::size_t d) {
    CVec v(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;
    return v;
}
}  // namespace

TEST(Superoperator, MaximallyMixedIsStationary) {
    for (int n = 1; n <= 4; ++n) {
        std::vector<double> eps;
        for (int j = 0; j < n; ++j) eps.push_back(0.3 + 0.7 * j);
        auto c = make(2.5, eps);
        for (double t : {1e-5, 0.3, 80.0}) {
            auto g = build_superoperator(c, n, t);
            auto y = g * vec_identity(std::size_t{1} << n);
            for (std::size_t r = 0; r < y.size(); ++r) EXPECT_LE(std::abs(y[r]), 1e-14 * (1.0 + 1.0 / (c.nu * t))) << n << " " << t << " row " << r;
        }
    }
}

TEST(Superoperator, TracePreservedByGenerator) {
    auto c = make(1.3, {0.2, 0.9, 1.4});
    auto g = build_superoperator(c, 3, 0.01).transpose();
    auto y = g * vec_identity(8);
    double m = 0.0;
    for (const auto& v : y) m = std::max(m, std::abs(v));
    EXPECT_LT(m, 1e-12);
}

TEST(Superoperator, VectorizationConvention) {
    // vec(A rho B) = (A kron B^T) vec(rho), row-major flattening
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Random(2, 2), b = Eigen::MatrixXcd::Random(2, 2), r = Eigen::MatrixXcd::Random(2, 2);
    auto lhs = DensityState::from_matrix(a * r * b, 0.0).amplitudes;
    auto op = kron(SparseComplexOperator::from_dense(a), SparseComplexOperator::from_dense(b).transpose());
    auto rhs = op * DensityState::from_matrix(r, 0.0).amplitudes;
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(lhs[i] - rhs[i]), 0.0, 1e-14);
}

TEST(Superoperator, SingleSpinZDecayRate) {
    auto c = make(4.0, {0.5});
    const double t = 0.2, g = 1.0 / (c.nu * t);
    LindbladGenerator gen(c);
    DensityState up = DensityState::from_matrix((Eigen::MatrixXcd(2, 2) << 1, 0, 0, 0).finished(), t);
    CVec d(4);
    gen.diss().apply(up.amplitudes.data(), d.data());
    DensityState ds{2, d, t};
    EXPECT_NEAR(std::abs(g * extract_correlator(ds, CorrelatorLabel::parse("z")) - (-2.0 * g)), 0.0, 1e-14);
    EXPECT_THROW(build_superoperator(c, 2, t), ConfigError);
}

TEST(Correlator, Basics) {
    auto mm = maximally_mixed(3, 0.0);
    for (auto s : {"z00", "+0-", "zz+", "0-0"}) EXPECT_EQ(std::abs(extract_correlator(mm, CorrelatorLabel::parse(s))), 0.0);
    auto up = DensityState::from_matrix((Eigen::MatrixXcd(2, 2) << 1, 0, 0, 0).finished(), 0.0);
    EXPECT_NEAR(extract_correlator(up, CorrelatorLabel::parse("z")).real(), 1.0, 1e-15);
    auto px = DensityState::from_matrix((Eigen::MatrixXcd(2, 2) << 0.5, 0.5, 0.5, 0.5).finished(), 0.0);
    EXPECT_NEAR(std::abs(extract_correlator(px, CorrelatorLabel::parse("+")) - 1.0), 0.0, 1e-15);
    EXPECT_THROW(extract_correlator(px, CorrelatorLabel::parse("0z")), ConfigError);
}

TEST(Correlator, ConjugationSymmetryProperty) {
    auto rho = random_density(3, 11, 0.0);
    for (auto s : {"+00", "z+-", "++z", "-0+", "+++"}) {
        auto l = CorrelatorLabel::parse(s);
        EXPECT_NEAR(std::abs(extract_correlator(rho, l.flipped()) - std::conj(extract_correlator(rho, l))), 0.0, 1e-14);
    }
}

TEST(Correlator, DensityRoundTrip) {
    auto rho = random_density(2, 5, 0.0);
    std::map<CorrelatorLabel, cplx> vals;
    for (auto s : {"z0", "+0", "-0", "0z", "0+", "0-", "zz", "z+", "z-", "+z", "++", "+-", "-z", "-+", "--"})
        vals[CorrelatorLabel::parse(s)] = extract_correlator(rho, CorrelatorLabel::parse(s));
    EXPECT_LT((density_from_correlators(2, vals) - rho.matrix()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Presets, AreValidStates) {
    for (const auto& s : {maximally_mixed(3, 1e-5), spin_coherent(3, 1.1, 0.4, 1e-5), random_density(3, 7, 1e-5),
                          sector_sum_density(3, 1e-5)})
        EXPECT_NO_THROW(s.check_invariants());
    auto sc = spin_coherent(1, std::numbers::pi / 2, 0.0, 0.0);
    // theta = pi/2 tips the spin onto the equator
    EXPECT_NEAR(extract_correlator(sc, CorrelatorLabel::parse("z")).real(), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(extract_correlator(sc, CorrelatorLabel::parse("+"))), 1.0, 1e-15);
    EXPECT_THROW(density_from_json(nlohmann::json::parse("[[[1,0],[0,0]],[[0,0],[0,0.5]]]"), 0.0), ConfigError);
    auto f = density_from_json(nlohmann::json::parse("[[[0.5,0],[0,0.5]],[[0,-0.5],[0.5,0]]]"), 0.0);
    EXPECT_NEAR(std::abs(extract_correlator(f, CorrelatorLabel::parse("+"))), 1.0, 1e-15);
}

TEST(Evolution, InvariantsAndMixedStationarity) {
    auto c = make(1.5, {0.4, 1.0});
    std::vector<double> ts{1e-4, 1e-2, 1.0, 10.0, 100.0};
    auto out = evolve_density(c, random_density(2, 3, c.t_init), ts);
    ASSERT_EQ(out.size(), ts.size());
    for (const auto& s : out) {
        EXPECT_LT(std::abs(s.trace() - 1.0), 1e-9);
        EXPECT_LT(s.hermiticity_error(), 1e-9);
        EXPECT_GT(s.min_eigenvalue(), -1e-8);
    }
    auto mm = evolve_density(c, maximally_mixed(2, c.t_init), ts);
    for (const auto& s : mm) EXPECT_LT((s.matrix() - maximally_mixed(2, 0).matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Evolution, SingleSpinPowerLaw) {
    auto c = make(6.0, {0.5});
    auto init = spin_coherent(1, 0.8, 0.3, c.t_init);
    auto out = evolve_density(c, init, {1.0, 100.0});
    const double ratio = extract_correlator(out[1], CorrelatorLabel::parse("z")).real() /
                         extract_correlator(out[0], CorrelatorLabel::parse("z")).real();
    EXPECT_NEAR(ratio, std::pow(100.0, -1.0 / 3.0), 1e-8);
}

// Lindblad correlators against the RG route, every subset of sites.
TEST(Evolution, MappingEquivalenceProperty) {
    for (int n : {1, 2, 3}) {
        std::vector<double> eps;
        for (int j = 1; j <= n; ++j) eps.push_back(0.5 * j + 0.1 * j * j);
        auto c = make(1.7, eps);
        auto rho0 = random_density(n, 100 + n, c.t_init);
        std::vector<double> ts{1e-3, 0.1, 3.0, 30.0};
        IntegrationSpec spec;
        spec.rel_tol = 1e-11;
        spec.abs_tol = 1e-13;
        auto dens = evolve_density(c, rho0, ts, spec);
        for (unsigned mask = 1; mask < (1u << n); ++mask) {
            std::vector<int> sites;
            for (int j = 0; j < n; ++j)
                if (mask & (1u << j)) sites.push_back(j);
            RgGenerator gen(c, sites, true);
            auto traj = evolve_correlators(gen, correlators_from_density(rho0, sites), ts, spec);
            for (std::size_t k = 0; k < ts.size(); ++k) {
                auto ref = correlators_from_density(dens[k], sites);
                for (std::size_t i = 0; i < ref.amplitudes.size(); ++i)
                    EXPECT_NEAR(std::abs(ref.amplitudes[i] - traj[k].amplitudes[i]), 0.0, 1e-8) << n << " " << mask << " " << ts[k];
            }
        }
    }
}
