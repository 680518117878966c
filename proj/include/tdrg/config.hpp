#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tdrg/errors.hpp"

namespace tdrg {

// Ramp g(t) = 1/(nu t) with Zeeman fields eps_i. g_z is carried but must stay 0:
// the dephasing channel exists in the model, it is just switched off.
struct RampConfig {
    double nu = 1.0;
    std::vector<double> epsilons;
    double t_init = 1e-5;
    double t_final = 1e2;
    double g_z = 0.0;

    void validate() const {
        if (!(nu > 0.0) || !std::isfinite(nu)) throw ConfigError("nu must be positive, got " + std::to_string(nu));
        if (epsilons.empty()) throw ConfigError("epsilons must be non-empty");
        for (std::size_t i = 0; i + 1 < epsilons.size(); ++i)
            if (!(epsilons[i] < epsilons[i + 1])) throw ConfigError("epsilons must be strictly increasing");
        if (!(t_init > 0.0)) throw ConfigError("t_init must be positive");
        if (!(t_final > t_init)) throw ConfigError("t_final must exceed t_init");
        if (g_z != 0.0) throw ConfigError("g_z is fixed to 0 (dephasing channel inactive)");
    }

    double g(double t) const { return 1.0 / (nu * t); }
    int n_spins() const { return static_cast<int>(epsilons.size()); }
};

enum class Component { z, plus, minus };

inline char component_char(Component c) {
    switch (c) {
        case Component::z: return 'z';
        case Component::plus: return '+';
        case Component::minus: return '-';
    }
    return '?';
}

// Which sites carry which index. Sites not present carry the identity.
struct CorrelatorLabel {
    std::map<int, Component> assignments;

    CorrelatorLabel() = default;
    explicit CorrelatorLabel(std::map<int, Component> a) : assignments(std::move(a)) {}

    int n() const { return static_cast<int>(assignments.size()); }
    int n1() const {
        int k = 0;
        for (const auto& [s, c] : assignments) k += (c == Component::z);
        return k;
    }
    std::vector<int> sites() const {
        std::vector<int> s;
        for (const auto& [site, c] : assignments) s.push_back(site);
        return s;
    }

    void validate(int n_spins) const {
        if (assignments.empty()) throw ConfigError("correlator label must assign at least one site");
        for (const auto& [s, c] : assignments)
            if (s < 0 || s >= n_spins)
                throw ConfigError("label site " + std::to_string(s) + " outside [0, " + std::to_string(n_spins) + ")");
    }

    // Swap + and - on every site.
    CorrelatorLabel flipped() const {
        CorrelatorLabel out;
        for (const auto& [s, c] : assignments)
            out.assignments[s] = c == Component::plus ? Component::minus : c == Component::minus ? Component::plus : c;
        return out;
    }

    // One character per physical site: '0' identity, 'z', '+', '-'.
    static CorrelatorLabel parse(const std::string& text) {
        CorrelatorLabel out;
        for (std::size_t i = 0; i < text.size(); ++i) {
            switch (text[i]) {
                case '0': case '.': break;
                case 'z': case 'Z': out.assignments[static_cast<int>(i)] = Component::z; break;
                case '+': out.assignments[static_cast<int>(i)] = Component::plus; break;
                case '-': out.assignments[static_cast<int>(i)] = Component::minus; break;
                default: throw ConfigError("bad character '" + std::string(1, text[i]) + "' in label \"" + text + "\"");
            }
        }
        if (out.assignments.empty()) throw ConfigError("label \"" + text + "\" assigns no site");
        return out;
    }

    std::string str(int n_spins) const {
        std::string s(static_cast<std::size_t>(n_spins), '0');
        for (const auto& [site, c] : assignments)
            if (site >= 0 && site < n_spins) s[static_cast<std::size_t>(site)] = component_char(c);
        return s;
    }

    friend bool operator<(const CorrelatorLabel& a, const CorrelatorLabel& b) { return a.assignments < b.assignments; }
    friend bool operator==(const CorrelatorLabel& a, const CorrelatorLabel& b) { return a.assignments == b.assignments; }
};

}  // namespace tdrg
