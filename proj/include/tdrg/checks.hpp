#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "tdrg/exact.hpp"
#include "tdrg/fit.hpp"
#include "tdrg/rg.hpp"
#include "tdrg/saddle.hpp"

namespace tdrg {

inline std::vector<double> log_grid(double lo, double hi, double per_decade, bool include_lo = true) {
    if (!(lo > 0.0) || !(hi > lo)) throw ConfigError("log grid needs 0 < lo < hi");
    if (!(per_decade > 0.0)) throw ConfigError("samples per decade must be positive");
    const long n = static_cast<long>(std::ceil(std::log10(hi / lo) * per_decade - 1e-9));
    std::vector<double> t;
    for (long k = include_lo ? 0 : 1; k <= n; ++k) t.push_back(std::min(hi, lo * std::pow(10.0, k / per_decade)));
    if (t.size() >= 2 && t[t.size() - 2] >= t.back()) t.pop_back();
    return t;
}

inline double vec_norm(const CVec& v) {
    double s = 0.0;
    for (auto x : v) s += std::norm(x);
    return std::sqrt(s);
}

struct ExactCheck {
    double nu = 0.0;
    bool resonant = false;
    std::string message;
    double max_rel = 0.0;             // over sectors, boundaries and times
    std::array<double, 5> sector_rel{};  // jz = -2..2
    int comparisons = 0;
};

// Closed-form n = 2 sectors against sector-only integration for random boundary data.
inline ExactCheck exact_vs_numeric(const RampConfig& cfg, int p, int q, int boundaries, std::uint64_t seed, double tau_max = 100.0,
                                   int n_times = 15) {
    ExactCheck r;
    r.nu = cfg.nu;
    const double delta = cfg.epsilons.at(static_cast<std::size_t>(q)) - cfg.epsilons.at(static_cast<std::size_t>(p));
    const double t_max = tau_max / delta;
    if (!(t_max > cfg.t_init)) throw ConfigError("exact check: tau_max/(eps_q - eps_p) must exceed t_init");
    std::vector<double> ts;
    for (int k = 1; k <= n_times; ++k) ts.push_back(cfg.t_init * std::pow(t_max / cfg.t_init, static_cast<double>(k) / n_times));
    RgGenerator gen(cfg, {p, q}, true);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    IntegrationSpec spec;
    spec.rel_tol = 1e-12;
    spec.abs_tol = 1e-300;  // the +-2 sectors fall like t^{-2/nu} over many decades
    for (int jz = -2; jz <= 2; ++jz) {
        std::unique_ptr<N2Sector> sec;
        try {
            sec = std::make_unique<N2Sector>(cfg, p, q, SectorLabel{jz});
        } catch (const ResonantNuError& e) {
            r.resonant = true;
            r.message = e.what();
            continue;
        }
        const auto slots = sector_slots(2, jz);
        for (int b = 0; b < boundaries; ++b) {
            CVec blk(slots.size());
            for (auto& x : blk) x = cplx(nd(rng), nd(rng));
            CorrelatorState st{{p, q}, CVec(9, 0.0), cfg.t_init, Frame::lab};
            for (std::size_t i = 0; i < slots.size(); ++i) st.amplitudes[slots[i]] = blk[i];
            const auto num = evolve_sector(gen, {jz}, st, ts, spec);
            const auto bd = sec->fit_boundary(blk, cfg.t_init);
            for (std::size_t k = 0; k < ts.size(); ++k) {
                const auto ex = sec->amplitudes(bd, ts[k]);
                CVec d(slots.size());
                CVec nb(slots.size());
                for (std::size_t i = 0; i < slots.size(); ++i) {
                    nb[i] = num[k].amplitudes[slots[i]];
                    d[i] = nb[i] - ex[i];
                }
                const double rel = vec_norm(d) / vec_norm(nb);
                r.sector_rel[static_cast<std::size_t>(jz + 2)] = std::max(r.sector_rel[static_cast<std::size_t>(jz + 2)], rel);
                r.max_rel = std::max(r.max_rel, rel);
                ++r.comparisons;
            }
        }
    }
    return r;
}

// Closed-form single-site solution against the integrated generator; max relative error.
inline double n1_vs_numeric(const RampConfig& cfg, int boundaries, std::uint64_t seed, double t_end, double per_decade = 4.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const auto ts = log_grid(cfg.t_init, t_end, per_decade, false);
    RgGenerator gen(cfg, {0}, true);
    IntegrationSpec spec;
    spec.rel_tol = 1e-12;
    spec.abs_tol = 1e-300;
    double err = 0.0;
    for (int b = 0; b < boundaries; ++b) {
        std::array<cplx, 3> init;  // c_z, c_+, c_-
        for (auto& x : init) x = cplx(nd(rng), nd(rng));
        const auto ex = solve_n1(cfg, 0, init, cfg.t_init, ts);
        CorrelatorState st{{0}, {-init[2] / std::numbers::sqrt2, init[0], init[1] / std::numbers::sqrt2}, cfg.t_init, Frame::lab};
        const auto num = evolve_correlators(gen, st, ts, spec);
        for (std::size_t k = 0; k < ts.size(); ++k) {
            const CVec e{-ex.cm[k] / std::numbers::sqrt2, ex.cz[k], ex.cp[k] / std::numbers::sqrt2};
            CVec d(3);
            for (std::size_t i = 0; i < 3; ++i) d[i] = e[i] - num[k].amplitudes[i];
            err = std::max(err, vec_norm(d) / vec_norm(num[k].amplitudes));
        }
    }
    return err;
}

struct SaddleSlotCheck {
    std::size_t slot = 0;
    int n1 = 0;
    double onset = 0.0;
    double drift_per_decade = 0.0;  // |d ln(|num|/|asym|) / d log10 t| beyond onset
    double numeric_alpha = 0.0;
    bool window_stable = false;
};

struct SaddleCheck {
    int n = 0, n_plus = 0;
    double nu = 0.0;
    std::vector<SaddleSlotCheck> slots;
    double max_drift = 0.0;
};

// Pseudo-vacuum-raised evolution against the assembled saddle asymptote, one sector.
inline SaddleCheck saddle_vs_numeric(const RampConfig& cfg, int n, int n_plus, double t_end, double per_decade = 60.0) {
    SaddleCheck out;
    out.n = n;
    out.n_plus = n_plus;
    out.nu = cfg.nu;
    std::vector<int> sites(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) sites[static_cast<std::size_t>(i)] = i;
    RgGenerator gen(cfg, sites, true);
    CorrelatorState st{sites, pseudo_vacuum_raised(n, n_plus), cfg.t_init, Frame::lab};
    const auto ts = log_grid(cfg.t_init, t_end, per_decade, false);
    IntegrationSpec spec;
    spec.rel_tol = 1e-10;
    spec.abs_tol = 1e-40;
    const auto num = evolve_sector(gen, {n_plus - n}, st, ts, spec);
    std::vector<CorrelatorState> asym;
    for (double t : ts) asym.push_back(assemble_asymptote(cfg, sites, n_plus, t));
    for (const auto& c : enumerate_configs(n, n_plus)) {
        SaddleSlotCheck sc;
        sc.slot = c.basis_slot(n);
        sc.n1 = c.n1();
        std::vector<cplx> v;
        for (const auto& s : num) v.push_back(s.amplitudes[sc.slot]);
        FitWindow w;
        const auto fr = fit_auto(ts, v, {}, &w);
        sc.onset = w.t_lo;
        sc.window_stable = w.stable;
        sc.numeric_alpha = fr.alpha_hat;
        std::vector<detail::LogPoint> pts;
        for (std::size_t k = 0; k < ts.size(); ++k) {
            if (ts[k] < w.t_lo) continue;
            pts.push_back({std::log10(ts[k]), std::log(std::abs(v[k]) / std::abs(asym[k].amplitudes[sc.slot]))});
        }
        sc.drift_per_decade = pts.size() >= 2 ? std::abs(detail::least_squares(pts).slope) : 0.0;
        out.max_drift = std::max(out.max_drift, sc.drift_per_decade);
        out.slots.push_back(sc);
    }
    return out;
}

}  // namespace tdrg
