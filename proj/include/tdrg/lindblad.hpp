#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tdrg/config.hpp"
#include "tdrg/ode.hpp"
#include "tdrg/rg.hpp"
#include "tdrg/sparse.hpp"
#include "tdrg/spin.hpp"

namespace tdrg {

// Density matrix flattened row-major, entry (i, j) at i*dim + j. With that layout
// vec(A rho B) = (A kron B^T) vec(rho).
struct DensityState {
    std::size_t dim = 0;
    CVec amplitudes;
    double time = 0.0;

    int n_spins() const {
        int n = 0;
        while ((std::size_t{1} << n) < dim) ++n;
        return n;
    }

    Eigen::MatrixXcd matrix() const {
        Eigen::MatrixXcd m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = amplitudes[i * dim + j];
        return m;
    }

    static DensityState from_matrix(const Eigen::MatrixXcd& m, double t) {
        if (m.rows() != m.cols()) throw ConfigError("density matrix must be square");
        const auto d = static_cast<std::size_t>(m.rows());
        if (d < 2 || (d & (d - 1)) != 0) throw ConfigError("density matrix dimension must be 2^N");
        DensityState s{d, CVec(d * d), t};
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) s.amplitudes[i * d + j] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        return s;
    }

    cplx trace() const {
        cplx t = 0.0;
        for (std::size_t i = 0; i < dim; ++i) t += amplitudes[i * dim + i];
        return t;
    }

    double hermiticity_error() const {
        double e = 0.0;
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = i; j < dim; ++j)
                e = std::max(e, std::abs(amplitudes[i * dim + j] - std::conj(amplitudes[j * dim + i])));
        return e;
    }

    double min_eigenvalue() const {
        const Eigen::MatrixXcd m = matrix();
        const Eigen::MatrixXcd h = 0.5 * (m + m.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    void check_invariants(double trace_tol = 1e-10, double herm_tol = 1e-10, double pos_tol = 1e-8) const {
        if (std::abs(trace() - 1.0) > trace_tol) throw NumericError("density matrix trace drifted from 1", time);
        if (hermiticity_error() > herm_tol) throw NumericError("density matrix lost Hermiticity", time);
        if (min_eigenvalue() < -pos_tol) throw NumericError("density matrix lost positivity", time);
    }
};

// G(t) = G_ham + g(t) G_diss for H = sum_j eps_j sigma^z_j and jumps sqrt(g) sum_j sigma^{+-}_j.
class LindbladGenerator {
public:
    explicit LindbladGenerator(const RampConfig& cfg) : nu_(cfg.nu), n_(cfg.n_spins()) {
        cfg.validate();
        if (n_ > 7) throw ConfigError("Lindblad route limited to N <= 7 spins");
        const std::size_t d = std::size_t{1} << n_;
        const auto id = SparseComplexOperator::identity(d);
        SparseComplexOperator h(d, d), sp(d, d), sm(d, d);
        for (int j = 0; j < n_; ++j) {
            h = h + cplx(cfg.epsilons[static_cast<std::size_t>(j)]) * site_operator(pauli(SpinIndex::z), j, n_);
            sp = sp + site_operator(pauli(SpinIndex::plus), j, n_);
            sm = sm + site_operator(pauli(SpinIndex::minus), j, n_);
        }
        ham_ = cplx(0.0, -1.0) * (kron(h, id) - kron(id, h.transpose()));
        diss_ = dissipator(sp, id) + dissipator(sm, id);
    }

    int n_spins() const { return n_; }
    std::size_t dim() const { return ham_.rows(); }
    const SparseComplexOperator& ham() const { return ham_; }
    const SparseComplexOperator& diss() const { return diss_; }
    double g(double t) const { return 1.0 / (nu_ * t); }
    SparseComplexOperator at(double t) const { return ham_ + cplx(g(t)) * diss_; }

    void apply(double t, const CVec& x, CVec& y) const {
        ham_.apply(x.data(), y.data());
        diss_.apply_add(g(t), x.data(), y.data());
    }

private:
    // L rho L^+ - 1/2 {L^+ L, rho}
    static SparseComplexOperator dissipator(const SparseComplexOperator& l, const SparseComplexOperator& id) {
        const auto ldl = l.adjoint() * l;
        return kron(l, l.conj()) - cplx(0.5) * kron(ldl, id) - cplx(0.5) * kron(id, ldl.transpose());
    }

    double nu_;
    int n_;
    SparseComplexOperator ham_, diss_;
};

inline SparseComplexOperator build_superoperator(const RampConfig& cfg, int n_spins, double time) {
    if (n_spins != cfg.n_spins())
        throw ConfigError("n_spins = " + std::to_string(n_spins) + " but config has " + std::to_string(cfg.n_spins()) + " epsilons");
    if (!(time >= cfg.t_init)) throw ConfigError("superoperator time precedes t_init");
    return LindbladGenerator(cfg).at(time);
}

inline std::vector<DensityState> evolve_density(const LindbladGenerator& gen, const DensityState& initial,
                                                const std::vector<double>& sample_times, IntegrationSpec spec = {},
                                                bool check = true, IntegrationStats* stats = nullptr) {
    if (initial.amplitudes.size() != gen.dim()) throw ConfigError("initial state dimension does not match the generator");
    spec.t_init = initial.time;
    spec.dense_samples = sample_times;
    if (!sample_times.empty()) spec.t_final = std::max(spec.t_final, sample_times.back());
    std::vector<DensityState> out;
    auto st = integrate_stream([&](double t, const CVec& x, CVec& y) { gen.apply(t, x, y); }, initial.amplitudes, spec,
                               [&](double t, const CVec& y) {
                                   out.push_back({initial.dim, y, t});
                                   if (check) out.back().check_invariants(1e-9, 1e-9, 1e-8);
                               });
    if (stats) *stats = st;
    return out;
}

inline std::vector<DensityState> evolve_density(const RampConfig& cfg, const DensityState& initial,
                                                const std::vector<double>& sample_times, IntegrationSpec spec = {}) {
    return evolve_density(LindbladGenerator(cfg), initial, sample_times, spec);
}

// tr(rho O_1 x ... x O_N): z -> sigma^z, +- -> 2 sigma^{+-}, identity elsewhere.
inline cplx extract_correlator(const DensityState& state, const CorrelatorLabel& label) {
    const int n = state.n_spins();
    label.validate(n);
    // Every factor has exactly one nonzero per column, so O is a signed permutation-like map.
    const std::size_t d = state.dim;
    cplx acc = 0.0;
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t row = col;
        cplx val = 1.0;
        for (const auto& [site, c] : label.assignments) {
            const std::size_t bit = std::size_t{1} << (n - 1 - site);
            const bool down = (col & bit) != 0;  // slot 1 is spin down
            if (c == Component::z) {
                if (down) val = -val;
            } else if (c == Component::plus) {
                if (!down) { val = 0.0; break; }
                row &= ~bit;
                val *= 2.0;
            } else {
                if (down) { val = 0.0; break; }
                row |= bit;
                val *= 2.0;
            }
        }
        if (val != 0.0) acc += val * state.amplitudes[col * d + row];
    }
    return acc;
}

// All correlators whose label covers exactly `sites`, packed as an RG state.
inline CorrelatorState correlators_from_density(const DensityState& rho, const std::vector<int>& sites) {
    CorrelatorState st;
    st.sites = sites;
    st.time = rho.time;
    const int n = static_cast<int>(sites.size());
    st.amplitudes.assign(ipow(3, n), 0.0);
    for (std::size_t s = 0; s < st.amplitudes.size(); ++s) {
        const auto l = slot_label(s, sites);
        st.amplitudes[s] = label_weight(l) * extract_correlator(rho, l);
    }
    return st;
}

// Inverse of extract_correlator: rho = 2^-N sum_labels c_L P_L with P = sigma^z for z,
// sigma^- for + and sigma^+ for -.
inline Eigen::MatrixXcd density_from_correlators(int n_spins, const std::map<CorrelatorLabel, cplx>& values) {
    const std::size_t d = std::size_t{1} << n_spins;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (const auto& [label, v] : values) {
        label.validate(n_spins);
        SparseComplexOperator op = SparseComplexOperator::identity(1);
        for (int j = 0; j < n_spins; ++j) {
            auto it = label.assignments.find(j);
            SpinIndex k = SpinIndex::identity;
            if (it != label.assignments.end())
                k = it->second == Component::z ? SpinIndex::z : it->second == Component::plus ? SpinIndex::minus : SpinIndex::plus;
            op = kron(op, pauli(k));
        }
        rho += v * op.to_dense();
    }
    return rho / static_cast<double>(d);
}

// ---------------------------------------------------------------------------
// Initial-state presets

inline DensityState maximally_mixed(int n_spins, double t) {
    const std::size_t d = std::size_t{1} << n_spins;
    return DensityState::from_matrix(Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) / static_cast<double>(d), t);
}

// psi = exp(theta/2 e^{i phi} s^- - theta/2 e^{-i phi} s^+)|down>, tensored over all spins.
inline DensityState spin_coherent(int n_spins, double theta, double phi, double t) {
    const cplx e(std::cos(phi), std::sin(phi));
    Eigen::Vector2cd psi(-std::sin(0.5 * theta) / e, std::cos(0.5 * theta));
    Eigen::VectorXcd full = Eigen::VectorXcd::Ones(1);
    for (int j = 0; j < n_spins; ++j) {
        Eigen::VectorXcd next(full.size() * 2);
        for (Eigen::Index a = 0; a < full.size(); ++a)
            for (Eigen::Index b = 0; b < 2; ++b) next(2 * a + b) = full(a) * psi(b);
        full = next;
    }
    return DensityState::from_matrix(full * full.adjoint(), t);
}

// M M^dagger / tr, M with iid complex normal entries.
inline DensityState random_density(int n_spins, std::uint64_t seed, double t) {
    const auto d = static_cast<Eigen::Index>(std::size_t{1} << n_spins);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXcd m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = cplx(nd(rng), nd(rng));
    Eigen::MatrixXcd rho = m * m.adjoint();
    rho /= rho.trace();
    return DensityState::from_matrix(rho, t);
}

// Mixes the identity with correlators taken from an RG-space vector on all N sites:
// rho = 2^-N (I + s sum_L c_L P_L), Hermitian part kept, s = 1/2 unless that
// is not positive, in which case s shrinks until it is.
inline DensityState density_from_rg_vector(int n_spins, const CVec& v, double t, double* used_scale = nullptr) {
    std::vector<int> sites(static_cast<std::size_t>(n_spins));
    for (int j = 0; j < n_spins; ++j) sites[static_cast<std::size_t>(j)] = j;
    const auto values = state_to_label(CorrelatorState{sites, v, t, Frame::lab});
    const Eigen::MatrixXcd id = maximally_mixed(n_spins, t).matrix();
    Eigen::MatrixXcd delta = density_from_correlators(n_spins, values) - id;
    delta = 0.5 * (delta + delta.adjoint()).eval();
    double s = 0.5;
    for (int it = 0; it < 200; ++it) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(id + s * delta, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() >= 0.0) break;
        s *= 0.9;
    }
    if (used_scale) *used_scale = s;
    return DensityState::from_matrix(id + s * delta, t);
}

// Normalized sum over magnetization sectors of (sum S^+)^{N+}|-1..-1>.
inline CVec sector_sum_vector(int n) {
    const std::size_t dim = ipow(3, n);
    CVec sum(dim, 0.0);
    for (int np = 0; np <= 2 * n; ++np) {
        const auto v = pseudo_vacuum_raised(n, np);
        for (std::size_t i = 0; i < dim; ++i) sum[i] += v[i];
    }
    double nrm = 0.0;
    for (const auto& x : sum) nrm += std::norm(x);
    for (auto& x : sum) x /= std::sqrt(nrm);
    return sum;
}

inline DensityState sector_sum_density(int n_spins, double t, double* used_scale = nullptr) {
    return density_from_rg_vector(n_spins, sector_sum_vector(n_spins), t, used_scale);
}

// Dense matrix from JSON: row-major array of rows, each entry [re, im].
inline DensityState density_from_json(const nlohmann::json& j, double t) {
    if (!j.is_array() || j.empty()) throw ConfigError("density matrix JSON must be a non-empty array of rows");
    const auto d = static_cast<Eigen::Index>(j.size());
    Eigen::MatrixXcd m(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d) throw ConfigError("density matrix JSON must be square");
        for (Eigen::Index c = 0; c < d; ++c) {
            const auto& e = row[static_cast<std::size_t>(c)];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw ConfigError("density matrix entry (" + std::to_string(r) + "," + std::to_string(c) + ") must be [re, im]");
            m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
        }
    }
    auto s = DensityState::from_matrix(m, t);
    if (std::abs(s.trace() - 1.0) > 1e-8) throw ConfigError("density matrix from file must have unit trace");
    if (s.hermiticity_error() > 1e-8) throw ConfigError("density matrix from file must be Hermitian");
    if (s.min_eigenvalue() < -1e-8) throw ConfigError("density matrix from file must be positive semidefinite");
    return s;
}

inline DensityState density_from_file(const std::string& path, double t) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open density matrix file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("density matrix file " + path + ": " + e.what());
    }
    return density_from_json(j, t);
}

}  // namespace tdrg
