#pragma once

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <vector>

#include "tdrg/config.hpp"
#include "tdrg/ode.hpp"
#include "tdrg/sparse.hpp"
#include "tdrg/spin.hpp"

namespace tdrg {

enum class Frame { lab, comoving };

// Correlator vector over `sites` (ascending physical indices). Amplitudes live in the
// spin-1 product basis, per-site slot order (+1, 0, -1), site 0 most significant.
struct CorrelatorState {
    std::vector<int> sites;
    CVec amplitudes;
    double time = 0.0;
    Frame frame = Frame::lab;

    int n() const { return static_cast<int>(sites.size()); }
};

struct SectorLabel {
    int jz = 0;
    int n_plus(int n) const { return n + jz; }
};

// Per-site weight table, the only place the correlator <-> amplitude convention lives.
// amplitude(|+1>) = -c_minus/sqrt2, amplitude(|0>) = c_z, amplitude(|-1>) = c_plus/sqrt2
namespace weights {
inline Component component_of_slot(int digit) {
    return digit == 0 ? Component::minus : digit == 1 ? Component::z : Component::plus;
}
inline int slot_of_component(Component c) {
    return c == Component::minus ? 0 : c == Component::z ? 1 : 2;
}
// amplitude = weight * correlator
inline double weight(Component c) {
    const double h = 1.0 / std::numbers::sqrt2;
    return c == Component::minus ? -h : c == Component::z ? 1.0 : h;
}
}  // namespace weights

inline int slot_magnetization(std::size_t slot, int n) {
    int m = 0;
    for (int i = 0; i < n; ++i) {
        m += 1 - static_cast<int>(slot % 3);
        slot /= 3;
    }
    return m;
}

inline std::vector<int> slot_digits(std::size_t slot, int n) {
    std::vector<int> d(static_cast<std::size_t>(n));
    for (int i = n - 1; i >= 0; --i) {
        d[static_cast<std::size_t>(i)] = static_cast<int>(slot % 3);
        slot /= 3;
    }
    return d;
}

inline std::size_t digits_slot(const std::vector<int>& d) {
    std::size_t s = 0;
    for (int x : d) s = 3 * s + static_cast<std::size_t>(x);
    return s;
}

// L(t) = sum_j (g flag - 2i eps_j) S^z_j - g sum_{jk} S^+_j S^-_k, g = 1/(nu t).
// The constant pieces are built once; L(t) = ham + g(t) diss.
class RgGenerator {
public:
    RgGenerator(const RampConfig& cfg, std::vector<int> sites, bool include_ig_term)
        : nu_(cfg.nu), sites_(std::move(sites)), include_ig_(include_ig_term) {
        cfg.validate();
        if (sites_.empty()) throw ConfigError("RG generator needs at least one site");
        std::set<int> seen;
        for (int s : sites_) {
            if (s < 0 || s >= cfg.n_spins()) throw ConfigError("RG site " + std::to_string(s) + " has no epsilon");
            if (!seen.insert(s).second) throw ConfigError("duplicate RG site " + std::to_string(s));
        }
        const int n = static_cast<int>(sites_.size());
        const std::size_t dim = ipow(3, n);
        const auto sz = spin1(SpinIndex::z), sp = spin1(SpinIndex::plus), sm = spin1(SpinIndex::minus);
        ham_ = SparseComplexOperator(dim, dim);
        diss_ = SparseComplexOperator(dim, dim);
        std::vector<SparseComplexOperator> plus, minus;
        for (int j = 0; j < n; ++j) {
            const auto szj = site_operator(sz, j, n);
            ham_ = ham_ + cplx(0.0, -2.0 * cfg.epsilons[static_cast<std::size_t>(sites_[static_cast<std::size_t>(j)])]) * szj;
            if (include_ig_) diss_ = diss_ + szj;
            plus.push_back(site_operator(sp, j, n));
            minus.push_back(site_operator(sm, j, n));
        }
        SparseComplexOperator sp_tot = plus[0], sm_tot = minus[0];
        for (int j = 1; j < n; ++j) {
            sp_tot = sp_tot + plus[static_cast<std::size_t>(j)];
            sm_tot = sm_tot + minus[static_cast<std::size_t>(j)];
        }
        diss_ = diss_ - sp_tot * sm_tot;
    }

    int n() const { return static_cast<int>(sites_.size()); }
    std::size_t dim() const { return ham_.rows(); }
    const std::vector<int>& sites() const { return sites_; }
    double nu() const { return nu_; }
    bool include_ig_term() const { return include_ig_; }
    double g(double t) const { return 1.0 / (nu_ * t); }
    const SparseComplexOperator& ham() const { return ham_; }
    const SparseComplexOperator& diss() const { return diss_; }

    SparseComplexOperator at(double t) const { return ham_ + cplx(g(t)) * diss_; }

    void apply(double t, const CVec& x, CVec& y) const {
        ham_.apply(x.data(), y.data());
        diss_.apply_add(g(t), x.data(), y.data());
    }

private:
    double nu_;
    std::vector<int> sites_;
    bool include_ig_;
    SparseComplexOperator ham_, diss_;
};

inline SparseComplexOperator build_rg_generator(const RampConfig& cfg, const std::vector<int>& sites, double time,
                                                bool include_ig_term) {
    if (!(time >= cfg.t_init)) throw ConfigError("generator time precedes t_init");
    return RgGenerator(cfg, sites, include_ig_term).at(time);
}

struct SectorProjection {
    SparseComplexOperator block;
    std::vector<std::size_t> slots;  // block index -> full-basis slot
};

inline std::vector<std::size_t> sector_slots(int n, int jz) {
    if (n < 1) throw ConfigError("sector needs n >= 1");
    if (std::abs(jz) > n) throw ConfigError("|jz| = " + std::to_string(std::abs(jz)) + " exceeds n = " + std::to_string(n));
    std::vector<std::size_t> out;
    const std::size_t dim = ipow(3, n);
    for (std::size_t s = 0; s < dim; ++s)
        if (slot_magnetization(s, n) == jz) out.push_back(s);
    return out;
}

inline SectorProjection sector_project(const SparseComplexOperator& op, int n, SectorLabel sector) {
    if (op.rows() != ipow(3, n) || op.cols() != op.rows()) throw ConfigError("generator dimension is not 3^n");
    SectorProjection p;
    p.slots = sector_slots(n, sector.jz);
    std::vector<long> index(op.rows(), -1);
    for (std::size_t i = 0; i < p.slots.size(); ++i) index[p.slots[i]] = static_cast<long>(i);
    std::vector<SparseComplexOperator::Entry> e;
    for (const auto& x : op.entries())
        if (index[x.row] >= 0 && index[x.col] >= 0)
            e.push_back({static_cast<std::size_t>(index[x.row]), static_cast<std::size_t>(index[x.col]), x.value});
    p.block = SparseComplexOperator(p.slots.size(), p.slots.size(), std::move(e));
    return p;
}

// A single magnetization block of an RgGenerator, with the same ham/diss split.
class RgSector {
public:
    RgSector(const RgGenerator& gen, SectorLabel sector) : nu_(gen.nu()) {
        auto h = sector_project(gen.ham(), gen.n(), sector);
        auto d = sector_project(gen.diss(), gen.n(), sector);
        ham_ = std::move(h.block);
        diss_ = std::move(d.block);
        slots_ = std::move(h.slots);
    }
    std::size_t dim() const { return slots_.size(); }
    const std::vector<std::size_t>& slots() const { return slots_; }
    void apply(double t, const CVec& x, CVec& y) const {
        ham_.apply(x.data(), y.data());
        diss_.apply_add(1.0 / (nu_ * t), x.data(), y.data());
    }
    SparseComplexOperator at(double t) const { return ham_ + cplx(1.0 / (nu_ * t)) * diss_; }

private:
    double nu_;
    SparseComplexOperator ham_, diss_;
    std::vector<std::size_t> slots_;
};

// C_lab = (t/t_init)^{+Jz/nu} C_co. The lower limit t_init replaces the divergent 0.
inline CorrelatorState comoving_transform(const CorrelatorState& state, const RampConfig& cfg, Frame target) {
    if (state.frame == target) throw ConfigError("state already in the requested frame");
    if (!(state.time > 0.0)) throw ConfigError("comoving transform needs a positive time");
    const int n = state.n();
    if (state.amplitudes.size() != ipow(3, n)) throw ConfigError("state length is not 3^n");
    const double sign = target == Frame::comoving ? -1.0 : 1.0;
    const double lr = std::log(state.time / cfg.t_init) / cfg.nu;
    std::array<double, 13> fac{};
    for (int m = -n; m <= n; ++m) fac[static_cast<std::size_t>(m + 6)] = std::exp(sign * m * lr);
    CorrelatorState out = state;
    out.frame = target;
    for (std::size_t s = 0; s < out.amplitudes.size(); ++s) {
        const int m = slot_magnetization(s, n);
        out.amplitudes[s] *= n <= 6 ? fac[static_cast<std::size_t>(m + 6)] : std::exp(sign * m * lr);
    }
    return out;
}

// Label over exactly the state's sites -> basis slot.
inline std::size_t label_slot(const CorrelatorLabel& label, const std::vector<int>& sites) {
    if (label.sites() != sites) throw ConfigError("label does not cover exactly the state's sites");
    std::vector<int> d;
    for (int s : sites) d.push_back(weights::slot_of_component(label.assignments.at(s)));
    return digits_slot(d);
}

inline double label_weight(const CorrelatorLabel& label) {
    double w = 1.0;
    for (const auto& [s, c] : label.assignments) w *= weights::weight(c);
    return w;
}

inline CorrelatorLabel slot_label(std::size_t slot, const std::vector<int>& sites) {
    const auto d = slot_digits(slot, static_cast<int>(sites.size()));
    CorrelatorLabel l;
    for (std::size_t i = 0; i < sites.size(); ++i) l.assignments[sites[i]] = weights::component_of_slot(d[i]);
    return l;
}

inline CorrelatorState label_to_state(const std::map<CorrelatorLabel, cplx>& values, double time = 0.0) {
    if (values.empty()) throw ConfigError("no correlator values given");
    const auto sites = values.begin()->first.sites();
    CorrelatorState st;
    st.sites = sites;
    st.time = time;
    st.amplitudes.assign(ipow(3, static_cast<int>(sites.size())), 0.0);
    for (const auto& [label, v] : values) {
        if (label.sites() != sites) throw ConfigError("inconsistent site sets among labels");
        st.amplitudes[label_slot(label, sites)] = label_weight(label) * v;
    }
    return st;
}

inline std::map<CorrelatorLabel, cplx> state_to_label(const CorrelatorState& st) {
    if (st.amplitudes.size() != ipow(3, st.n())) throw ConfigError("state length is not 3^n");
    std::map<CorrelatorLabel, cplx> out;
    for (std::size_t s = 0; s < st.amplitudes.size(); ++s) {
        auto l = slot_label(s, st.sites);
        out[l] = st.amplitudes[s] / label_weight(l);
    }
    return out;
}

inline cplx state_correlator(const CorrelatorState& st, const CorrelatorLabel& label) {
    return st.amplitudes[label_slot(label, st.sites)] / label_weight(label);
}

// (sum_j S^+_j)^{n_plus} |-1 ... -1>, normalized to unit 2-norm.
inline CVec pseudo_vacuum_raised(int n, int n_plus) {
    if (n_plus < 0 || n_plus > 2 * n) throw ConfigError("n_plus must lie in [0, 2n]");
    const std::size_t dim = ipow(3, n);
    CVec v(dim, 0.0);
    v[dim - 1] = 1.0;
    SparseComplexOperator sp = site_operator(spin1(SpinIndex::plus), 0, n);
    for (int j = 1; j < n; ++j) sp = sp + site_operator(spin1(SpinIndex::plus), j, n);
    for (int k = 0; k < n_plus; ++k) v = sp * v;
    double nrm = 0.0;
    for (const auto& x : v) nrm += std::norm(x);
    nrm = std::sqrt(nrm);
    for (auto& x : v) x /= nrm;
    return v;
}

// Evolve `initial` (lab or comoving frame, matching the generator's flag) to the sample times.
template <class Gen>
std::vector<CorrelatorState> evolve_correlators(const Gen& gen, const CorrelatorState& initial,
                                                const std::vector<double>& sample_times, IntegrationSpec spec,
                                                IntegrationStats* stats = nullptr) {
    spec.t_init = initial.time;
    spec.dense_samples = sample_times;
    if (!sample_times.empty()) spec.t_final = std::max(spec.t_final, sample_times.back());
    auto samples = integrate([&](double t, const CVec& x, CVec& y) { gen.apply(t, x, y); }, initial.amplitudes, spec, stats);
    std::vector<CorrelatorState> out;
    out.reserve(samples.size());
    for (auto& s : samples) out.push_back({initial.sites, std::move(s.y), s.t, initial.frame});
    return out;
}

// Sector-only evolution: pulls the block out of `initial`, evolves it, scatters back.
inline std::vector<CorrelatorState> evolve_sector(const RgGenerator& gen, SectorLabel sector, const CorrelatorState& initial,
                                                  const std::vector<double>& sample_times, IntegrationSpec spec,
                                                  IntegrationStats* stats = nullptr) {
    RgSector blk(gen, sector);
    CVec x0(blk.dim());
    for (std::size_t i = 0; i < blk.dim(); ++i) x0[i] = initial.amplitudes[blk.slots()[i]];
    spec.t_init = initial.time;
    spec.dense_samples = sample_times;
    if (!sample_times.empty()) spec.t_final = std::max(spec.t_final, sample_times.back());
    auto samples = integrate([&](double t, const CVec& x, CVec& y) { blk.apply(t, x, y); }, x0, spec, stats);
    std::vector<CorrelatorState> out;
    for (auto& s : samples) {
        CorrelatorState st{initial.sites, CVec(initial.amplitudes.size(), 0.0), s.t, initial.frame};
        for (std::size_t i = 0; i < blk.dim(); ++i) st.amplitudes[blk.slots()[i]] = s.y[i];
        out.push_back(std::move(st));
    }
    return out;
}

}  // namespace tdrg
