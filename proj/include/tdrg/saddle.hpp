#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "tdrg/config.hpp"
#include "tdrg/errors.hpp"
#include "tdrg/rg.hpp"

namespace tdrg {

// dissipative: the late-time data of the Hermitian model continued to nu -> -i nu.
// hermitian: no continuation, every factor is a pure phase up to constants.
enum class SaddleMode { dissipative, hermitian };

// Positions are indices into the correlator's site list, not physical sites.
struct SaddleConfiguration {
    std::vector<int> alpha1;  // raised once
    std::vector<int> alpha2;  // raised twice

    int n1() const { return static_cast<int>(alpha1.size()); }
    int n2() const { return static_cast<int>(alpha2.size()); }
    int n_plus() const { return n1() + 2 * n2(); }

    // alpha2 -> |+1>, alpha1 -> |0>, rest -> |-1>
    std::size_t basis_slot(int n) const {
        std::vector<int> d(static_cast<std::size_t>(n), 2);
        for (int i : alpha1) d[static_cast<std::size_t>(i)] = 1;
        for (int i : alpha2) d[static_cast<std::size_t>(i)] = 0;
        return digits_slot(d);
    }
};

inline std::vector<SaddleConfiguration> enumerate_configs(int n, int n_plus) {
    if (n < 1) throw ConfigError("enumerate_configs needs n >= 1");
    if (n_plus < 0 || n_plus > 2 * n) throw ConfigError("enumerate_configs needs 0 <= n_plus <= 2n");
    std::vector<SaddleConfiguration> out;
    // each site raised 0, 1 or 2 times; walk base-3 digit strings in slot order
    const std::size_t dim = ipow(3, n);
    for (std::size_t s = 0; s < dim; ++s) {
        const auto d = slot_digits(s, n);
        SaddleConfiguration c;
        for (int i = 0; i < n; ++i) {
            if (d[static_cast<std::size_t>(i)] == 1) c.alpha1.push_back(i);
            if (d[static_cast<std::size_t>(i)] == 0) c.alpha2.push_back(i);
        }
        if (c.n_plus() == n_plus) out.push_back(std::move(c));
    }
    return out;
}

struct AsymptoticTerm {
    SaddleConfiguration config;
    cplx gamma = 0.0;
    cplx lambda_phase = 0.0;  // Lambda; real in hermitian mode
    cplx zeta = 0.0;
    std::size_t basis_slot = 0;
    cplx amplitude = 0.0;  // co-moving frame, includes the global N+ factor and e^{2it sum eps}
};

namespace detail {

inline double log_gap(const std::vector<double>& eps, int i, int j) {
    const double d = std::abs(eps[static_cast<std::size_t>(j)] - eps[static_cast<std::size_t>(i)]);
    if (!(d > 0.0)) throw DomainError("saddle asymptote needs distinct epsilon values (log singularity)");
    return std::log(d);
}

inline cplx nu_eff(double nu, SaddleMode mode) { return mode == SaddleMode::dissipative ? cplx(0.0, -nu) : cplx(nu, 0.0); }

}  // namespace detail

inline AsymptoticTerm evaluate_term(const SaddleConfiguration& config, const RampConfig& cfg, const std::vector<int>& sites, double time,
                                    SaddleMode mode = SaddleMode::dissipative) {
    cfg.validate();
    if (!(time > 0.0)) throw ConfigError("saddle asymptote needs t > 0");
    const int n = static_cast<int>(sites.size());
    std::vector<double> eps;
    for (int s : sites) {
        if (s < 0 || s >= cfg.n_spins()) throw ConfigError("saddle site out of range");
        eps.push_back(cfg.epsilons[static_cast<std::size_t>(s)]);
    }
    for (int i : config.alpha1)
        if (i < 0 || i >= n) throw ConfigError("saddle configuration index out of range");
    for (int i : config.alpha2) {
        if (i < 0 || i >= n) throw ConfigError("saddle configuration index out of range");
        if (std::find(config.alpha1.begin(), config.alpha1.end(), i) != config.alpha1.end())
            throw ConfigError("saddle configuration sets overlap");
    }
    const cplx nt = detail::nu_eff(cfg.nu, mode);
    const cplx I(0.0, 1.0);
    const double pi = std::numbers::pi;

    AsymptoticTerm term;
    term.config = config;
    term.basis_slot = config.basis_slot(n);

    term.gamma = -static_cast<double>(config.n1()) * ((pi + 2.0 * I * (1.0 + std::log(nt))) / (2.0 * nt) + I / nt * std::log(time / 2.0));

    double l = 0.0;
    const auto& a1 = config.alpha1;
    const auto& a2 = config.alpha2;
    for (std::size_t i = 0; i < a1.size(); ++i)
        for (std::size_t j = i + 1; j < a1.size(); ++j) l += 2.0 * detail::log_gap(eps, a1[i], a1[j]);
    for (int i : a1)
        for (int j : a2) l += 4.0 * detail::log_gap(eps, i, j);
    for (std::size_t i = 0; i < a2.size(); ++i)
        for (std::size_t j = i + 1; j < a2.size(); ++j) l += 8.0 * detail::log_gap(eps, a2[i], a2[j]);
    term.lambda_phase = l / nt;

    auto theta = [&](int k) {
        double s = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != k) s += detail::log_gap(eps, j, k);
        return s / nt;
    };
    cplx lz = 0.0;
    for (int j : a1) lz += -2.0 * I * time * eps[static_cast<std::size_t>(j)] - 2.0 * pi * (j + 1) / nt - 2.0 * I * theta(j);
    for (int k : a2) lz += -4.0 * I * time * eps[static_cast<std::size_t>(k)] - 4.0 * pi * (k + 1) / nt - 2.0 * I * theta(k);
    term.zeta = std::exp(lz);

    double sum_eps = 0.0;
    for (double e : eps) sum_eps += e;
    const cplx global = I / nt * static_cast<double>(config.n_plus()) * std::log(nt * time);
    // combine in the exponent so magnitudes far below 1e-308 of single factors never arise
    term.amplitude = std::exp(global - term.gamma + I * term.lambda_phase + lz + 2.0 * I * time * sum_eps);
    return term;
}

// Late-time state of the correlator on `sites` grown from (sum S+)^{n_plus}|-1...-1>,
// up to a time-independent overall constant.
inline CorrelatorState assemble_asymptote(const RampConfig& cfg, const std::vector<int>& sites, int n_plus, double time,
                                          SaddleMode mode = SaddleMode::dissipative, Frame frame = Frame::lab) {
    const int n = static_cast<int>(sites.size());
    CorrelatorState st{sites, CVec(ipow(3, n), 0.0), time, Frame::comoving};
    for (const auto& c : enumerate_configs(n, n_plus)) {
        const auto term = evaluate_term(c, cfg, sites, time, mode);
        st.amplitudes[term.basis_slot] += term.amplitude;
    }
    if (frame == Frame::lab) {
        // lab = (t/t_init)^{J^z/nu} comoving; J^z = n_plus - n throughout the sector
        const double f = std::pow(time / cfg.t_init, (n_plus - n) / cfg.nu);
        for (auto& a : st.amplitudes) a *= f;
        st.frame = Frame::lab;
    }
    return st;
}

inline CorrelatorState assemble_asymptote(const RampConfig& cfg, int n, int n_plus, double time,
                                          SaddleMode mode = SaddleMode::dissipative, Frame frame = Frame::lab) {
    std::vector<int> sites(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) sites[static_cast<std::size_t>(i)] = i;
    return assemble_asymptote(cfg, sites, n_plus, time, mode, frame);
}

}  // namespace tdrg
