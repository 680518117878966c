#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tdrg/config.hpp"
#include "tdrg/errors.hpp"
#include "tdrg/rg.hpp"
#include "tdrg/specfun.hpp"

namespace tdrg {

struct ExponentPrediction {
    int n = 0;
    int n1 = 0;
    double nu = 0.0;
    int k = 0;
    double alpha = 0.0;
};

// alpha = (n + n1)/nu for nu >= 2, plus k(1 - 2/nu) below, k = floor(n1/2).
inline ExponentPrediction predict_alpha(int n, int n1, double nu) {
    if (n < 1 || n1 < 0 || n1 > n) throw ConfigError("predict_alpha needs 0 <= n1 <= n, n >= 1");
    if (!(nu > 0.0)) throw ConfigError("predict_alpha needs nu > 0");
    ExponentPrediction p{n, n1, nu, n1 / 2, 0.0};
    p.alpha = (n + n1) / nu;
    if (nu < 2.0) p.alpha += p.k * (1.0 - 2.0 / nu);
    return p;
}

struct SlopeJump {
    double left;
    double right;
};

// d alpha / d nu on both sides of nu = 2.
inline SlopeJump alpha_derivative_jump(int n, int n1) {
    if (n < 1 || n1 < 0 || n1 > n) throw ConfigError("alpha_derivative_jump needs 0 <= n1 <= n");
    if (n1 < 2) throw ConfigError("no transition: fewer than two z indices, single exponent branch");
    const int k = n1 / 2;
    return {(2.0 * k - n - n1) / 4.0, -(n + n1) / 4.0};
}

// ---------------------------------------------------------------------------
// n = 1

struct N1Trajectory {
    std::vector<double> t;
    std::vector<cplx> cz, cp, cm;
};

inline N1Trajectory solve_n1(const RampConfig& cfg, int site, const std::array<cplx, 3>& initial, double t0,
                             const std::vector<double>& times) {
    cfg.validate();
    if (site < 0 || site >= cfg.n_spins()) throw ConfigError("solve_n1: site out of range");
    const double eps = cfg.epsilons[static_cast<std::size_t>(site)];
    N1Trajectory out;
    for (double t : times) {
        if (t < t0) throw ConfigError("solve_n1: time precedes t0");
        const double r = t / t0;
        const cplx ph(0.0, 2.0 * eps * (t - t0));
        out.t.push_back(t);
        out.cz.push_back(initial[0] * std::pow(r, -2.0 / cfg.nu));
        out.cp.push_back(initial[1] * std::exp(ph) * std::pow(r, -1.0 / cfg.nu));
        out.cm.push_back(initial[2] * std::exp(-ph) * std::pow(r, -1.0 / cfg.nu));
    }
    return out;
}

// ---------------------------------------------------------------------------
// n = 2 sectors. Internally tau = (eps_q - eps_p) t, a = 1/nu.

struct SectorBoundary {
    cplx k1 = 0.0, k2 = 0.0, k3 = 0.0;
    double tau0 = 0.0;
    // J^z = +-1 at non-integer Bessel order: coefficients on (J_mu, J_-mu), which stay
    // well conditioned at small tau. k1, k2 hold the same solution on (J_mu, Y_mu).
    bool reflected = false;
    cplx kj = 0.0, kw = 0.0;
};

namespace detail {

inline double hyp_shift(double a, double b1, double b2, double z, int order) {
    double c = 1.0;
    for (int i = 0; i < order; ++i) c *= (a + i) / ((b1 + i) * (b2 + i));
    if (c == 0.0) return 0.0;
    return c * hyp1f2(a + order, b1 + order, b2 + order, z).value;
}

// One c1 branch tau^rho 1F2(a; b1, b2; -tau^2) of the J^z = 0 block.
struct ZeroBranch {
    double rho, a, b1, b2;
    double p;  // rho + 6 alpha
    double q;  // rho - 1 + 2 alpha
};

// sin(m pi a)/sin(l pi a), with the limit where both vanish; throws if only the denominator does.
inline double sin_ratio(int m, int l, double a, double nu) {
    const double num = sinpi(m * a), den = sinpi(l * a);
    const double tiny = 1e-13;
    if (std::abs(den) > tiny) return num / den;
    if (std::abs(num) > tiny) throw ResonantNuError("resonant nu = " + std::to_string(nu) + " (pole in asymptotic coefficient)", nu);
    return m * cospi(m * a) / (l * cospi(l * a));
}

}  // namespace detail

inline constexpr double kBeta = 1.1547005383792515290;   // 2/sqrt3
inline constexpr double kGamma = 1.6329931618554520655;  // sqrt(8/3)

// Closed-form solution of one magnetization block of the two-site generator
// (lab frame, sites p < q). Block amplitude order follows sector_slots(2, jz).
class N2Sector {
public:
    N2Sector(const RampConfig& cfg, int p, int q, SectorLabel sector) : nu_(cfg.nu), jz_(sector.jz) {
        cfg.validate();
        if (p < 0 || q >= cfg.n_spins() || !(p < q)) throw ConfigError("solve_n2_sector needs sites p < q within the config");
        if (std::abs(jz_) > 2) throw ConfigError("n=2 sectors have |jz| <= 2");
        ep_ = cfg.epsilons[static_cast<std::size_t>(p)];
        eq_ = cfg.epsilons[static_cast<std::size_t>(q)];
        delta_ = eq_ - ep_;
        r_ = (ep_ + eq_) / delta_;
        a_ = 1.0 / nu_;
        const double a = a_;
        branches_ = {detail::ZeroBranch{2.0, 1 + 2 * a, 1.5 + a, 2 + 3 * a, 2 + 6 * a, 1 + 2 * a},
                     detail::ZeroBranch{-6 * a, -a, 0.5 - 2 * a, -3 * a, 0.0, -1 - 4 * a},
                     detail::ZeroBranch{1 - 2 * a, 0.5 + a, 0.5 - a, 1.5 + 2 * a, 1 + 4 * a, 0.0}};
        if (jz_ == 0) {
            // Probe every parameter set once so resonant nu is refused up front.
            try {
                for (const auto& b : branches_)
                    for (int k = 0; k <= 2; ++k) detail::hyp_shift(b.a, b.b1, b.b2, -0.01, k);
            } catch (const DomainError& e) {
                throw ResonantNuError("resonant nu = " + std::to_string(nu_) + " for the J^z = 0 closed form (" + e.what() +
                                          "); use the numeric route",
                                      nu_);
            }
        }
    }

    int jz() const { return jz_; }
    double tau(double t) const { return delta_ * t; }
    double delta() const { return delta_; }
    double r() const { return r_; }
    double nu() const { return nu_; }
    std::size_t dim() const { return static_cast<std::size_t>(3 - std::abs(jz_)); }

    // J^z = 0: (c1, c2, c3) for each branch at tau.
    std::array<std::array<cplx, 3>, 3> zero_branches(double tau) const {
        const cplx ib(0.0, kBeta), ig(0.0, kGamma);
        std::array<std::array<cplx, 3>, 3> out;
        for (std::size_t j = 0; j < 3; ++j) {
            const auto& b = branches_[j];
            const double z = -tau * tau;
            double f, fz, fzz;
            try {
                f = hyp1f2(b.a, b.b1, b.b2, z).value;
                fz = detail::hyp_shift(b.a, b.b1, b.b2, z, 1);
                fzz = detail::hyp_shift(b.a, b.b1, b.b2, z, 2);
            } catch (const DomainError& e) {
                throw NumericError(std::string("J^z = 0 closed form: ") + e.what(), tau / delta_);
            }
            const double tr = std::pow(tau, b.rho);
            const double c1 = tr * f;
            const cplx c2 = (b.p * tr / tau * f - 2.0 * tr * tau * fz) / ib;
            const cplx c3 =
                (ib * c1 - (b.p * b.q * tr / (tau * tau) * f - (4 * b.rho + 16 * a_ + 2) * tr * fz + 4 * tr * tau * tau * fzz) / ib) / ig;
            out[j] = {cplx(c1), c2, c3};
        }
        return out;
    }

    double bessel_order() const { return 0.5 - 2 * a_; }
    // Near-integer orders keep Y as the second solution.
    bool reflected() const { return std::abs(detail::sinpi(bessel_order())) > 1e-3; }

    // J^z = +-1: (c1, c2) for the J solution and the second one (J_-mu family or Y) at tau.
    std::array<std::array<cplx, 2>, 2> one_branches(double tau) const {
        const double s = jz_ == -1 ? 1.0 : -1.0;
        const double mu = bessel_order();
        const auto b0 = bessel_jy_derivs(mu, tau);
        const auto b1 = bessel_jy_derivs(mu - 1, tau);
        const cplx pre = std::exp(cplx(0.0, s * r_ * tau)) * std::pow(tau, 0.5 - 3 * a_);
        const cplx mi(0.0, -s);
        if (reflected()) {
            // J_-mu = cos(mu pi) J_mu - sin(mu pi) Y_mu; its order mu-1 partner is -J_{1-mu}
            const double w0 = bessel_jy_derivs(-mu, tau).j, w1 = -bessel_jy_derivs(1 - mu, tau).j;
            return {{{mi * pre * b1.j, pre * b0.j}, {mi * pre * w1, pre * w0}}};
        }
        return {{{mi * pre * b1.j, pre * b0.j}, {mi * pre * b1.y, pre * b0.y}}};
    }

    SectorBoundary fit_boundary(const CVec& block, double t0) const {
        if (block.size() != dim()) throw ConfigError("sector block has the wrong length");
        const double tau0 = tau(t0);
        SectorBoundary bd;
        bd.tau0 = tau0;
        if (std::abs(jz_) == 2) {
            bd.k1 = block[0];
            return bd;
        }
        if (std::abs(jz_) == 1) {
            const auto c = to_c(block);
            const auto br = one_branches(tau0);
            Eigen::Matrix2cd m;
            m << br[0][0], br[1][0], br[0][1], br[1][1];
            Eigen::Vector2cd rhs(c[0], c[1]);
            const Eigen::Vector2d sc(m.col(0).norm(), m.col(1).norm());
            for (int i = 0; i < 2; ++i) m.col(i) /= sc(i);
            Eigen::FullPivLU<Eigen::Matrix2cd> lu(m);
            if (!lu.isInvertible()) throw NumericError("singular boundary system for J^z = +-1", t0);
            Eigen::Vector2cd k = lu.solve(rhs);
            bd.kj = k(0) / sc(0);
            bd.kw = k(1) / sc(1);
            bd.reflected = reflected();
            if (bd.reflected) {
                const double mu = bessel_order();
                bd.k1 = bd.kj + bd.kw * detail::cospi(mu);
                bd.k2 = -bd.kw * detail::sinpi(mu);
            } else {
                bd.k1 = bd.kj;
                bd.k2 = bd.kw;
            }
            return bd;
        }
        const auto c = to_c(block);
        const auto br = zero_branches(tau0);
        Eigen::Matrix3cd m;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m(i, j) = br[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
        Eigen::Vector3d sc;
        for (int j = 0; j < 3; ++j) {
            sc(j) = m.col(j).norm();
            m.col(j) /= sc(j);
        }
        Eigen::FullPivLU<Eigen::Matrix3cd> lu(m);
        if (!lu.isInvertible()) throw NumericError("singular boundary system for J^z = 0", t0);
        Eigen::Vector3cd k = lu.solve(Eigen::Vector3cd(c[0], c[1], c[2]));
        bd.k1 = k(0) / sc(0);
        bd.k2 = k(1) / sc(1);
        bd.k3 = k(2) / sc(2);
        return bd;
    }

    CVec amplitudes(const SectorBoundary& bd, double t) const {
        const double tau_t = tau(t);
        if (std::abs(jz_) == 2) {
            const double sgn = jz_ > 0 ? 1.0 : -1.0;
            const double t0 = bd.tau0 / delta_;
            return {bd.k1 * std::pow(t / t0, -2.0 * a_) * std::exp(cplx(0.0, -sgn * 2.0 * (ep_ + eq_) * (t - t0)))};
        }
        if (std::abs(jz_) == 1) {
            if (bd.reflected != reflected()) throw ConfigError("sector boundary belongs to a different nu");
            const auto br = one_branches(tau_t);
            return from_c({bd.kj * br[0][0] + bd.kw * br[1][0], bd.kj * br[0][1] + bd.kw * br[1][1], 0.0});
        }
        const auto br = zero_branches(tau_t);
        std::array<cplx, 3> c{};
        for (std::size_t i = 0; i < 3; ++i) c[i] = bd.k1 * br[0][i] + bd.k2 * br[1][i] + bd.k3 * br[2][i];
        return from_c(c);
    }

private:
    // block -> sector coordinates
    std::array<cplx, 3> to_c(const CVec& b) const {
        const double h = 1.0 / std::numbers::sqrt2;
        if (std::abs(jz_) == 1) {
            // x = |0, m>, y = |m, 0>; jz = -1 slots (|0,-1>, |-1,0>), jz = +1 slots (|+1,0>, |0,+1>)
            const cplx x = jz_ == -1 ? b[0] : b[1], y = jz_ == -1 ? b[1] : b[0];
            return {h * (x + y), h * (x - y), 0.0};
        }
        const double s6 = std::sqrt(6.0), s3 = std::sqrt(3.0);
        // block = (|+1,-1>, |0,0>, |-1,+1>)
        return {(b[0] + 2.0 * b[1] + b[2]) / s6, h * (b[0] - b[2]), (-b[0] + b[1] - b[2]) / s3};
    }

    CVec from_c(const std::array<cplx, 3>& c) const {
        const double h = 1.0 / std::numbers::sqrt2;
        if (std::abs(jz_) == 1) {
            const cplx x = h * (c[0] + c[1]), y = h * (c[0] - c[1]);
            return jz_ == -1 ? CVec{x, y} : CVec{y, x};
        }
        const double s6 = std::sqrt(6.0), s3 = std::sqrt(3.0);
        return {c[0] / s6 + h * c[1] - c[2] / s3, 2.0 * c[0] / s6 + c[2] / s3, c[0] / s6 - h * c[1] - c[2] / s3};
    }

    double nu_;
    int jz_;
    double ep_ = 0.0, eq_ = 0.0, delta_ = 1.0, r_ = 0.0, a_ = 0.0;
    std::array<detail::ZeroBranch, 3> branches_{};
};

inline std::vector<CVec> solve_n2_sector(const RampConfig& cfg, int p, int q, SectorLabel sector, const CVec& initial_block,
                                         double t0, const std::vector<double>& times, SectorBoundary* boundary = nullptr) {
    N2Sector s(cfg, p, q, sector);
    const auto bd = s.fit_boundary(initial_block, t0);
    if (boundary) *boundary = bd;
    std::vector<CVec> out;
    for (double t : times) {
        if (t < t0) throw ConfigError("solve_n2_sector: time precedes t0");
        out.push_back(s.amplitudes(bd, t));
    }
    return out;
}

// Full two-site correlator state (lab frame) from the five closed-form sectors.
inline std::vector<CorrelatorState> solve_n2(const RampConfig& cfg, const CorrelatorState& initial, const std::vector<double>& times) {
    if (initial.n() != 2 || initial.frame != Frame::lab) throw ConfigError("solve_n2 needs a two-site lab-frame state");
    const int p = initial.sites[0], q = initial.sites[1];
    std::vector<CorrelatorState> out(times.size(), CorrelatorState{initial.sites, CVec(9, 0.0), 0.0, Frame::lab});
    for (std::size_t k = 0; k < times.size(); ++k) out[k].time = times[k];
    for (int jz = -2; jz <= 2; ++jz) {
        const auto slots = sector_slots(2, jz);
        CVec blk;
        for (auto s : slots) blk.push_back(initial.amplitudes[s]);
        const auto traj = solve_n2_sector(cfg, p, q, {jz}, blk, initial.time, times);
        for (std::size_t k = 0; k < times.size(); ++k)
            for (std::size_t i = 0; i < slots.size(); ++i) out[k].amplitudes[slots[i]] = traj[k][i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Late-time asymptotics of the n = 2 closed forms, functions of tau.

// c_zz ~ F1 tau^{-4/nu} + F2(tau) tau^{-(nu+2)/nu}
struct ZzAsymptote {
    double nu = 0.0;
    cplx f1 = 0.0;
    cplx s1 = 0.0, s2 = 0.0, s3 = 0.0;  // F2 = s1 sin(pi/nu - 2tau) + s2 sin(2pi/nu + 2tau) + s3 cos(2tau)

    cplx f2(double tau) const {
        const double a = 1.0 / nu;
        return s1 * std::sin(std::numbers::pi * a - 2 * tau) + s2 * std::sin(2 * std::numbers::pi * a + 2 * tau) + s3 * std::cos(2 * tau);
    }
    cplx first_term(double tau) const { return f1 * std::pow(tau, -4.0 / nu); }
    cplx second_term(double tau) const { return f2(tau) * std::pow(tau, -(nu + 2.0) / nu); }
    cplx value(double tau) const { return first_term(tau) + second_term(tau); }
    // Scale of the asymptote with the oscillation phase maxed out; used to judge errors near zeros.
    double envelope(double tau) const {
        return std::abs(f1) * std::pow(tau, -4.0 / nu) + (std::abs(s1) + std::abs(s2) + std::abs(s3)) * std::pow(tau, -(nu + 2.0) / nu);
    }
    double first_exponent() const { return 4.0 / nu; }
    double second_exponent() const { return (nu + 2.0) / nu; }
    double dominant_exponent() const { return std::min(first_exponent(), second_exponent()); }
};

inline ZzAsymptote zz_asymptote(double nu, const SectorBoundary& bd) {
    using std::numbers::pi;
    const double a = 1.0 / nu;
    auto G = [&](double x) {
        try {
            return gamma_fn(x).value;
        } catch (const DomainError&) {
            throw ResonantNuError("resonant nu = " + std::to_string(nu) + " in the c_zz asymptote", nu);
        }
    };
    const double s32 = std::sqrt(1.5);
    ZzAsymptote z;
    z.nu = nu;
    const double t1 = G((3 * nu + 2) / (2 * nu)) * G((2 * nu + 3) / nu) * rgamma((nu - 2) / (2 * nu)) * rgamma((nu + 1) / nu);
    const double ratio32 = detail::sin_ratio(2, 3, a, nu) * G(1 + 2 * a) / G(1 + 3 * a);
    const double t2 = detail::cospi(a) * G((nu - 4) / (2 * nu)) * G((nu + 2) / (2 * nu)) * ratio32 / pi;
    const double t3 = -std::pow(2.0, (nu + 2) / nu) * detail::sinpi(a) * G((3 * nu + 4) / (2 * nu)) / std::sqrt(pi);
    z.f1 = s32 * (bd.k1 * t1 + bd.k2 * t2 + bd.k3 * t3);
    const double pre = std::sqrt(3.0 / (2.0 * pi * pi * pi * std::pow(nu, 4)));
    const double u1 = (-pi / G(1 + a)) * std::sqrt(pi) * (nu + 2) * G((2 * nu + 3) / nu) / std::pow(4.0, a);
    const double u2 = 2.0 * (-pi * detail::sin_ratio(1, 3, a, nu) / G(1 + 3 * a)) * G((nu - 4) / (2 * nu)) * G(a);
    const double u3 = 2 * pi * nu * G((nu - 2) / (2 * nu)) * G((3 * nu + 4) / (2 * nu)) / G((nu + 2) / (2 * nu));
    z.s1 = pre * bd.k1 * u1;
    z.s2 = pre * bd.k2 * u2;
    z.s3 = pre * bd.k3 * u3;
    return z;
}

// c_{+p -q} (upper = false) or c_{-p +q} (upper = true) ~ coefficient * tau^{-2/nu}.
inline cplx pm_asymptote(double nu, const SectorBoundary& bd, double tau, bool upper) {
    using std::numbers::pi;
    const double a = 1.0 / nu;
    const double sg = upper ? 1.0 : -1.0;
    auto G = [&](double x) {
        try {
            return gamma_fn(x).value;
        } catch (const DomainError&) {
            throw ResonantNuError("resonant nu = " + std::to_string(nu) + " in the c_+- asymptote", nu);
        }
    };
    auto E = [&](double ph) { return std::exp(cplx(0.0, sg * ph)); };
    const double c = std::sqrt(3.0 / (2.0 * pi));
    const double r31 = detail::sin_ratio(1, 3, a, nu) * G(a) / G(3 * a);  // Gamma(1-3a)/Gamma(1-a)
    const cplx t1 = c * bd.k1 * G((3 * nu + 2) / (2 * nu)) * G((2 * nu + 3) / nu) * E(2 * tau - pi * a) / G((nu + 2) / nu);
    const cplx t2 = -bd.k2 * G((nu - 4) / (2 * nu)) * r31 * E(2 * pi * a + 2 * tau) / std::sqrt(6 * pi);
    const cplx t3 = cplx(0.0, sg) * c * bd.k3 * G((3 * nu + 4) / (2 * nu)) * G((nu - 2) / (2 * nu)) * E(2 * tau) / G((nu + 2) / (2 * nu));
    return 2.0 * (t1 + t2 + t3) * std::pow(tau, -2.0 * a);
}

// J^z = +-1: late-time (x + y) sqrt2 and (x - y) sqrt2 combinations, i.e. c1 + c2 and c1 - c2.
inline std::array<cplx, 2> one_sector_asymptote(double nu, int jz, double r, const SectorBoundary& bd, double tau) {
    using std::numbers::pi;
    const double a = 1.0 / nu, s = jz == -1 ? 1.0 : -1.0;
    const double mu = 0.5 - 2 * a;
    const double phi = tau - mu * pi / 2 - pi / 4;
    const double amp = std::sqrt(2.0 / pi) * std::pow(tau, -3 * a);
    const cplx i(0.0, 1.0);
    const cplx sum = amp * (bd.k1 - i * s * bd.k2) * std::exp(i * s * (r * tau + phi));
    const cplx diff = -amp * (bd.k1 + i * s * bd.k2) * std::exp(i * s * (r * tau - phi));
    return {sum, diff};
}

enum class N2Channel { zz, plus_minus, minus_plus, z_plus, plus_z, z_minus, minus_z };

struct N2Asymptote {
    std::vector<double> exponents;  // in t, dominant first
    std::function<cplx(double)> value;  // correlator as a function of lab time
};

// Late-time form of one two-site correlator, from the boundary data of its sector.
inline N2Asymptote asymptotic_n2(const RampConfig& cfg, int p, int q, const SectorBoundary& bd, N2Channel which) {
    N2Sector sec(cfg, p, q, {which == N2Channel::zz || which == N2Channel::plus_minus || which == N2Channel::minus_plus ? 0
                             : which == N2Channel::z_plus || which == N2Channel::plus_z                              ? -1
                                                                                                                    : 1});
    const double nu = cfg.nu, d = sec.delta(), r = sec.r();
    N2Asymptote out;
    switch (which) {
        case N2Channel::zz: {
            const auto z = zz_asymptote(nu, bd);
            out.exponents = {z.dominant_exponent(), std::max(z.first_exponent(), z.second_exponent())};
            out.value = [z, d](double t) { return z.value(d * t); };
            break;
        }
        case N2Channel::plus_minus:
        case N2Channel::minus_plus: {
            const bool upper = which == N2Channel::minus_plus;
            pm_asymptote(nu, bd, 1.0, upper);  // surfaces resonance now
            out.exponents = {2.0 / nu};
            out.value = [nu, bd, d, upper](double t) { return pm_asymptote(nu, bd, d * t, upper); };
            break;
        }
        default: {
            const int jz = which == N2Channel::z_plus || which == N2Channel::plus_z ? -1 : 1;
            const bool sum = which == N2Channel::z_plus || which == N2Channel::z_minus;
            // jz = -1: c_{z+} = c1 + c2, c_{+z} = c1 - c2; jz = +1 picks up the |+1> weight sign
            const double sign = jz == -1 ? 1.0 : -1.0;
            out.exponents = {3.0 / nu};
            out.value = [nu, jz, r, bd, d, sum, sign](double t) {
                const auto v = one_sector_asymptote(nu, jz, r, bd, d * t);
                return sign * (sum ? v[0] : v[1]);
            };
            break;
        }
    }
    return out;
}

}  // namespace tdrg
