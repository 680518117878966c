#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tdrg/checks.hpp"
#include "tdrg/config.hpp"
#include "tdrg/errors.hpp"
#include "tdrg/exact.hpp"
#include "tdrg/fit.hpp"
#include "tdrg/lindblad.hpp"
#include "tdrg/rg.hpp"
#include "tdrg/saddle.hpp"

namespace tdrg {

using nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

enum class Route { lindblad, rg, exact, asymptote };

inline std::string route_name(Route r) {
    switch (r) {
        case Route::lindblad: return "lindblad";
        case Route::rg: return "rg";
        case Route::exact: return "exact";
        default: return "asymptote";
    }
}

struct InitialSpec {
    std::string preset = "spin_coherent";
    double theta = std::numbers::pi / 3;
    double phi = std::numbers::pi / 5;
    std::uint64_t seed = 1;
    int n_plus = -1;
    std::string file;
};

struct CheckSpec {
    std::vector<int> sites{0, 1};
    int boundaries = 5;
    std::uint64_t seed = 7;
    double tau_max = 100.0;
    std::vector<int> saddle_n;  // saddle comparisons for these correlator sizes (all N+)
    double saddle_t_end = 1e4;
};

struct RunConfig {
    Route route = Route::rg;
    RampConfig ramp;
    std::vector<double> nu_grid;
    InitialSpec initial;
    std::vector<std::string> correlators;
    double t_lo = 0.0;  // first sample; 0 means t_init
    double per_decade = 40.0;
    // late power laws sit many decades below the initial amplitudes; abs_tol must not hide them
    IntegrationSpec integration = [] {
        IntegrationSpec s;
        s.rel_tol = 1e-10;
        s.abs_tol = 1e-40;
        return s;
    }();
    FitOptions fit;
    std::optional<std::pair<double, double>> fit_window;
    bool fallback = true;
    CheckSpec check;
    std::string description;
    json canonical;  // parsed document, used for the hash
};

// ---------------------------------------------------------------------------
// config parsing

namespace cfgparse {

inline void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError("expected an object at " + (path.empty() ? std::string("/") : path));
    std::set<std::string> ok;
    for (auto k : keys) ok.insert(k);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' at " + (path.empty() ? std::string("/") : path));
}

inline double number(const json& j, const std::string& key, const std::string& path, double def) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError("key " + path + "/" + key + " must be a number");
    return v.get<double>();
}

inline long integer(const json& j, const std::string& key, const std::string& path, long def) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError("key " + path + "/" + key + " must be an integer");
    return v.get<long>();
}

inline std::string string(const json& j, const std::string& key, const std::string& path, const std::string& def) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (!v.is_string()) throw ConfigError("key " + path + "/" + key + " must be a string");
    return v.get<std::string>();
}

inline std::vector<double> numbers(const json& j, const std::string& key, const std::string& path) {
    std::vector<double> out;
    if (!j.contains(key)) return out;
    const auto& v = j.at(key);
    if (!v.is_array()) throw ConfigError("key " + path + "/" + key + " must be an array of numbers");
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError("key " + path + "/" + key + " must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

}  // namespace cfgparse

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"maximally_mixed", "spin_coherent", "random", "sector_sum", "pseudo_vacuum", "file"};
    return names;
}

inline std::string preset_help(const std::string& name) {
    if (name == "maximally_mixed") return "I/2^N; every correlator vanishes";
    if (name == "spin_coherent") return "product of identical spin-coherent states (theta, phi)";
    if (name == "random") return "random full-rank density matrix (seed)";
    if (name == "sector_sum") return "identity mixed with the normalized sum of (sum S+)^{N+}|-1..-1> over all N+";
    if (name == "pseudo_vacuum") return "RG-level vector (sum S+)^{n_plus}|-1..-1> on all sites (rg/asymptote routes)";
    if (name == "file") return "density matrix read from a JSON file of [re, im] rows";
    return "";
}

inline RunConfig parse_run_config(const json& j) {
    using namespace cfgparse;
    allow_keys(j, "", {"description", "mode", "nu", "nu_grid", "epsilons", "epsilon_spacing", "n_spins", "t_init", "t_final",
                       "initial", "correlators", "samples", "integration", "fit", "fallback", "check"});
    RunConfig c;
    c.canonical = j;
    c.description = string(j, "description", "", "");
    const auto mode = string(j, "mode", "", "rg");
    if (mode == "lindblad") c.route = Route::lindblad;
    else if (mode == "rg") c.route = Route::rg;
    else if (mode == "exact") c.route = Route::exact;
    else if (mode == "asymptote") c.route = Route::asymptote;
    else throw ConfigError("key /mode must be one of lindblad, rg, exact, asymptote (got '" + mode + "')");

    c.nu_grid = numbers(j, "nu_grid", "");
    c.ramp.nu = number(j, "nu", "", c.nu_grid.empty() ? 0.0 : c.nu_grid.front());
    if (!j.contains("nu") && c.nu_grid.empty()) throw ConfigError("missing key /nu (or /nu_grid)");
    c.ramp.t_init = number(j, "t_init", "", 1e-5);
    c.ramp.t_final = number(j, "t_final", "", 1e2);
    c.ramp.epsilons = numbers(j, "epsilons", "");
    if (j.contains("epsilon_spacing")) {
        if (!c.ramp.epsilons.empty()) throw ConfigError("give either /epsilons or /epsilon_spacing, not both");
        const double s = number(j, "epsilon_spacing", "", 0.0);
        const long n = integer(j, "n_spins", "", 0);
        if (n < 1) throw ConfigError("key /n_spins must be a positive integer when /epsilon_spacing is used");
        for (long i = 1; i <= n; ++i) c.ramp.epsilons.push_back(s * static_cast<double>(i));
    } else if (j.contains("n_spins")) {
        const long n = integer(j, "n_spins", "", 0);
        if (static_cast<std::size_t>(n) != c.ramp.epsilons.size()) throw ConfigError("key /n_spins disagrees with the length of /epsilons");
    }
    c.ramp.validate();
    for (double nu : c.nu_grid)
        if (!(nu > 0.0)) throw ConfigError("every /nu_grid entry must be positive");

    if (j.contains("initial")) {
        const auto& ji = j.at("initial");
        allow_keys(ji, "/initial", {"preset", "theta", "phi", "seed", "n_plus", "file"});
        c.initial.preset = string(ji, "preset", "/initial", c.initial.preset);
        c.initial.theta = number(ji, "theta", "/initial", c.initial.theta);
        c.initial.phi = number(ji, "phi", "/initial", c.initial.phi);
        const long seed = integer(ji, "seed", "/initial", 1);
        if (seed < 0) throw ConfigError("key /initial/seed must be non-negative");
        c.initial.seed = static_cast<std::uint64_t>(seed);
        c.initial.n_plus = static_cast<int>(integer(ji, "n_plus", "/initial", -1));
        c.initial.file = string(ji, "file", "/initial", "");
    }
    {
        const auto& names = preset_names();
        if (std::find(names.begin(), names.end(), c.initial.preset) == names.end())
            throw ConfigError("key /initial/preset: unknown preset '" + c.initial.preset + "' (see `tdrg presets`)");
        if (c.initial.preset == "pseudo_vacuum") {
            if (c.initial.n_plus < 0 || c.initial.n_plus > 2 * c.ramp.n_spins())
                throw ConfigError("key /initial/n_plus must lie in [0, 2 n_spins] for the pseudo_vacuum preset");
            if (c.route == Route::lindblad || c.route == Route::exact)
                throw ConfigError("the pseudo_vacuum preset is an RG-level state; use mode rg or asymptote");
        } else if (c.route == Route::asymptote) {
            throw ConfigError("mode asymptote needs the pseudo_vacuum preset");
        }
        if (c.initial.preset == "file" && c.initial.file.empty()) throw ConfigError("key /initial/file is required for the file preset");
        if (c.initial.preset != "pseudo_vacuum" && c.ramp.n_spins() > 7)
            throw ConfigError("density-matrix presets support at most 7 spins");
    }

    if (!j.contains("correlators")) throw ConfigError("missing key /correlators");
    {
        const auto& jc = j.at("correlators");
        if (!jc.is_array() || jc.empty()) throw ConfigError("key /correlators must be a non-empty array of label strings");
        for (const auto& x : jc) {
            if (!x.is_string()) throw ConfigError("key /correlators must be a non-empty array of label strings");
            c.correlators.push_back(x.get<std::string>());
        }
    }

    if (j.contains("samples")) {
        const auto& js = j.at("samples");
        allow_keys(js, "/samples", {"t_lo", "per_decade"});
        c.t_lo = number(js, "t_lo", "/samples", 0.0);
        c.per_decade = number(js, "per_decade", "/samples", c.per_decade);
        if (!(c.per_decade > 0.0)) throw ConfigError("key /samples/per_decade must be positive");
        if (c.t_lo != 0.0 && !(c.t_lo >= c.ramp.t_init && c.t_lo < c.ramp.t_final))
            throw ConfigError("key /samples/t_lo must lie in [t_init, t_final)");
    }
    if (j.contains("integration")) {
        const auto& ji = j.at("integration");
        allow_keys(ji, "/integration", {"rel_tol", "abs_tol", "max_step_u", "max_steps"});
        c.integration.rel_tol = number(ji, "rel_tol", "/integration", c.integration.rel_tol);
        c.integration.abs_tol = number(ji, "abs_tol", "/integration", c.integration.abs_tol);
        c.integration.max_step_u = number(ji, "max_step_u", "/integration", c.integration.max_step_u);
        c.integration.max_steps = integer(ji, "max_steps", "/integration", c.integration.max_steps);
    }
    if (j.contains("fit")) {
        const auto& jf = j.at("fit");
        allow_keys(jf, "/fit", {"method", "bins_per_decade", "stability", "min_decades", "window"});
        const auto m = string(jf, "method", "/fit", "auto");
        if (m == "auto") c.fit.method = FitMethod::automatic;
        else if (m == "raw") c.fit.method = FitMethod::raw;
        else if (m == "envelope") c.fit.method = FitMethod::envelope;
        else throw ConfigError("key /fit/method must be auto, raw or envelope");
        c.fit.bins_per_decade = static_cast<int>(integer(jf, "bins_per_decade", "/fit", c.fit.bins_per_decade));
        c.fit.stability = number(jf, "stability", "/fit", c.fit.stability);
        c.fit.min_decades = number(jf, "min_decades", "/fit", c.fit.min_decades);
        const auto w = numbers(jf, "window", "/fit");
        if (!w.empty()) {
            if (w.size() != 2 || !(w[0] < w[1])) throw ConfigError("key /fit/window must be [t_lo, t_hi] with t_lo < t_hi");
            c.fit_window = std::pair{w[0], w[1]};
        }
        if (c.fit.bins_per_decade < 1) throw ConfigError("key /fit/bins_per_decade must be >= 1");
    }
    if (j.contains("fallback")) {
        if (!j.at("fallback").is_boolean()) throw ConfigError("key /fallback must be true or false");
        c.fallback = j.at("fallback").get<bool>();
    }
    if (j.contains("check")) {
        const auto& jc = j.at("check");
        allow_keys(jc, "/check", {"sites", "boundaries", "seed", "tau_max", "saddle_n", "saddle_t_end"});
        const auto s = numbers(jc, "sites", "/check");
        if (!s.empty()) {
            if (s.size() != 2) throw ConfigError("key /check/sites must hold two site indices");
            c.check.sites = {static_cast<int>(s[0]), static_cast<int>(s[1])};
        }
        c.check.boundaries = static_cast<int>(integer(jc, "boundaries", "/check", c.check.boundaries));
        c.check.seed = static_cast<std::uint64_t>(integer(jc, "seed", "/check", 7));
        c.check.tau_max = number(jc, "tau_max", "/check", c.check.tau_max);
        for (double n : numbers(jc, "saddle_n", "/check")) c.check.saddle_n.push_back(static_cast<int>(n));
        c.check.saddle_t_end = number(jc, "saddle_t_end", "/check", c.check.saddle_t_end);
    }
    c.integration.t_init = c.ramp.t_init;
    c.integration.t_final = c.ramp.t_final;
    c.integration.validate();
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min(text.size(), e.byte == 0 ? std::size_t{0} : e.byte - 1);
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
        throw ConfigError(path + ":" + std::to_string(line) + ": " + e.what());
    }
    try {
        return parse_run_config(j);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string config_hash(const RunConfig& c) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(c.canonical.dump())));
    return std::string("fnv1a64:") + buf;
}

// ---------------------------------------------------------------------------
// labels

// "zzz", "+0-" ... positional; "all" = every label; "all:K" = every label on K sites.
inline std::vector<CorrelatorLabel> expand_labels(const std::vector<std::string>& specs, int n_spins) {
    std::vector<CorrelatorLabel> out;
    std::set<CorrelatorLabel> seen;
    auto add = [&](const CorrelatorLabel& l) {
        if (seen.insert(l).second) out.push_back(l);
    };
    for (const auto& s : specs) {
        if (s == "all" || s.rfind("all:", 0) == 0) {
            int want = -1;
            if (s != "all") {
                try {
                    want = std::stoi(s.substr(4));
                } catch (const std::exception&) {
                    throw ConfigError("bad correlator selector '" + s + "'");
                }
                if (want < 1 || want > n_spins) throw ConfigError("correlator selector '" + s + "' out of range");
            }
            const std::size_t total = ipow(4, n_spins);
            for (std::size_t code = 1; code < total; ++code) {
                CorrelatorLabel l;
                std::size_t c = code;
                for (int site = n_spins - 1; site >= 0; --site, c /= 4) {
                    const int d = static_cast<int>(c % 4);
                    if (d == 1) l.assignments[site] = Component::z;
                    if (d == 2) l.assignments[site] = Component::plus;
                    if (d == 3) l.assignments[site] = Component::minus;
                }
                if (want < 0 || l.n() == want) add(l);
            }
            continue;
        }
        if (static_cast<int>(s.size()) > n_spins) throw ConfigError("label '" + s + "' is longer than n_spins");
        auto l = CorrelatorLabel::parse(s);
        l.validate(n_spins);
        add(l);
    }
    return out;
}

// '+' and '-' are awkward in file names.
inline std::string label_file_stem(const CorrelatorLabel& l, int n_spins) {
    std::string s = l.str(n_spins);
    for (auto& ch : s) {
        if (ch == '+') ch = 'p';
        if (ch == '-') ch = 'm';
    }
    return s;
}

// ---------------------------------------------------------------------------
// evolution

struct Trajectory {
    CorrelatorLabel label;
    std::string name;
    std::vector<double> t;
    std::vector<cplx> v;
};

struct RunReport {
    std::vector<Trajectory> trajectories;
    std::vector<std::string> notes;
    Route route_used = Route::rg;
};

inline std::vector<double> sample_times(const RunConfig& c) {
    const double lo = c.t_lo > c.ramp.t_init ? c.t_lo : c.ramp.t_init;
    return log_grid(lo, c.ramp.t_final, c.per_decade, c.t_lo > c.ramp.t_init);
}

inline DensityState initial_density(const RunConfig& c) {
    const int n = c.ramp.n_spins();
    const double t0 = c.ramp.t_init;
    const auto& p = c.initial.preset;
    if (p == "maximally_mixed") return maximally_mixed(n, t0);
    if (p == "spin_coherent") return spin_coherent(n, c.initial.theta, c.initial.phi, t0);
    if (p == "random") return random_density(n, c.initial.seed, t0);
    if (p == "sector_sum") return sector_sum_density(n, t0);
    if (p == "file") {
        auto rho = density_from_file(c.initial.file, t0);
        if (rho.n_spins() != n) throw ConfigError("density matrix file has " + std::to_string(rho.n_spins()) + " spins, config has " + std::to_string(n));
        return rho;
    }
    throw ConfigError("preset '" + p + "' is not a density-matrix preset");
}

namespace detail {

inline std::vector<int> all_sites(int n) {
    std::vector<int> s(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = i;
    return s;
}

inline std::map<std::vector<int>, std::vector<std::size_t>> group_by_sites(const std::vector<CorrelatorLabel>& labels) {
    std::map<std::vector<int>, std::vector<std::size_t>> g;
    for (std::size_t i = 0; i < labels.size(); ++i) g[labels[i].sites()].push_back(i);
    return g;
}

inline void run_rg(const RunConfig& c, const std::vector<CorrelatorLabel>& labels, const std::vector<double>& ts, RunReport& rep) {
    const int n = c.ramp.n_spins();
    std::optional<DensityState> rho;
    if (c.initial.preset != "pseudo_vacuum") rho = initial_density(c);
    for (const auto& [sites, idx] : group_by_sites(labels)) {
        CorrelatorState st;
        if (rho) {
            st = correlators_from_density(*rho, sites);
        } else {
            if (static_cast<int>(sites.size()) != n)
                throw ConfigError("the pseudo_vacuum preset defines only correlators on all " + std::to_string(n) + " sites");
            st = CorrelatorState{sites, pseudo_vacuum_raised(n, c.initial.n_plus), c.ramp.t_init, Frame::lab};
        }
        st.time = c.ramp.t_init;
        RgGenerator gen(c.ramp, sites, true);
        // sectors never mix, so only the blocks holding a requested label are integrated
        std::map<int, std::vector<std::size_t>> by_sector;
        for (auto i : idx) by_sector[slot_magnetization(label_slot(labels[i], sites), static_cast<int>(sites.size()))].push_back(i);
        for (const auto& [jz, members] : by_sector) {
            const auto traj = evolve_sector(gen, {jz}, st, ts, c.integration);
            for (auto i : members) {
                auto& out = rep.trajectories[i];
                for (const auto& s : traj) {
                    out.t.push_back(s.time);
                    out.v.push_back(state_correlator(s, labels[i]));
                }
            }
        }
    }
}

inline void run_lindblad(const RunConfig& c, const std::vector<CorrelatorLabel>& labels, const std::vector<double>& ts, RunReport& rep) {
    const auto rho = initial_density(c);
    LindbladGenerator gen(c.ramp);
    const auto states = evolve_density(gen, rho, ts, c.integration);
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (const auto& s : states) {
            rep.trajectories[i].t.push_back(s.time);
            rep.trajectories[i].v.push_back(extract_correlator(s, labels[i]));
        }
}

inline void run_exact(const RunConfig& c, const std::vector<CorrelatorLabel>& labels, const std::vector<double>& ts, RunReport& rep) {
    const auto rho = initial_density(c);
    for (const auto& [sites, idx] : group_by_sites(labels)) {
        if (sites.size() > 2) throw ConfigError("mode exact covers correlators on at most two sites");
        const auto st = correlators_from_density(rho, sites);
        std::vector<CorrelatorState> traj;
        if (sites.size() == 1) {
            // slot order (+1, 0, -1) <-> (c_-, c_z, c_+)
            const std::array<cplx, 3> init{st.amplitudes[1], st.amplitudes[2] * std::numbers::sqrt2, -st.amplitudes[0] * std::numbers::sqrt2};
            const auto e = solve_n1(c.ramp, sites[0], init, c.ramp.t_init, ts);
            for (std::size_t k = 0; k < ts.size(); ++k)
                traj.push_back({sites, {-e.cm[k] / std::numbers::sqrt2, e.cz[k], e.cp[k] / std::numbers::sqrt2}, ts[k], Frame::lab});
        } else {
            auto s0 = st;
            s0.time = c.ramp.t_init;
            traj = solve_n2(c.ramp, s0, ts);
        }
        for (auto i : idx)
            for (const auto& s : traj) {
                rep.trajectories[i].t.push_back(s.time);
                rep.trajectories[i].v.push_back(state_correlator(s, labels[i]));
            }
    }
}

inline void run_asymptote(const RunConfig& c, const std::vector<CorrelatorLabel>& labels, const std::vector<double>& ts, RunReport& rep) {
    const int n = c.ramp.n_spins();
    const auto sites = all_sites(n);
    for (const auto& l : labels)
        if (static_cast<int>(l.sites().size()) != n) throw ConfigError("mode asymptote defines only correlators on all sites");
    for (double t : ts) {
        const auto st = assemble_asymptote(c.ramp, sites, c.initial.n_plus, t);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            rep.trajectories[i].t.push_back(t);
            rep.trajectories[i].v.push_back(state_correlator(st, labels[i]));
        }
    }
    rep.notes.push_back("asymptote amplitudes carry an arbitrary time-independent constant; compare ratios and exponents only");
}

}  // namespace detail

inline RunReport run_evolve(const RunConfig& c) {
    const int n = c.ramp.n_spins();
    const auto labels = expand_labels(c.correlators, n);
    const auto ts = sample_times(c);
    RunReport rep;
    rep.route_used = c.route;
    for (const auto& l : labels) rep.trajectories.push_back({l, l.str(n), {}, {}});
    switch (c.route) {
        case Route::lindblad: detail::run_lindblad(c, labels, ts, rep); break;
        case Route::rg: detail::run_rg(c, labels, ts, rep); break;
        case Route::asymptote: detail::run_asymptote(c, labels, ts, rep); break;
        case Route::exact:
            try {
                detail::run_exact(c, labels, ts, rep);
            } catch (const ResonantNuError& e) {
                if (!c.fallback) throw;
                for (auto& tr : rep.trajectories) tr.t.clear(), tr.v.clear();
                rep.notes.push_back(std::string(e.what()) + "; fell back to the numeric rg route");
                rep.route_used = Route::rg;
                detail::run_rg(c, labels, ts, rep);
            }
            break;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
    double nu = 0.0;
    std::string label;
    double alpha_hat = 0.0, alpha_pred = 0.0, r_squared = 0.0, t_lo = 0.0, t_hi = 0.0, drift = 0.0;
    FitMethod method = FitMethod::raw;
    bool stable = false;
    std::string note;
};

inline std::vector<SweepRow> fit_trajectories(const RunConfig& c, double nu, const RunReport& rep) {
    std::vector<SweepRow> rows;
    for (const auto& tr : rep.trajectories) {
        SweepRow r;
        r.nu = nu;
        r.label = tr.name;
        r.alpha_pred = predict_alpha(tr.label.n(), tr.label.n1(), nu).alpha;
        try {
            FitResult f;
            if (c.fit_window) {
                f = fit_exponent(tr.t, tr.v, c.fit_window, c.fit);
                r.stable = true;
            } else {
                FitWindow w;
                f = fit_auto(tr.t, tr.v, c.fit, &w);
                r.stable = w.stable;
                r.drift = w.drift;
            }
            r.alpha_hat = f.alpha_hat;
            r.r_squared = f.r_squared;
            r.t_lo = f.t_lo;
            r.t_hi = f.t_hi;
            r.method = f.method;
        } catch (const NumericError& e) {
            r.alpha_hat = std::nan("");
            r.note = e.what();
        }
        rows.push_back(r);
    }
    return rows;
}

// nu points fan out over `jobs` workers; rows come back in grid order.
inline std::vector<SweepRow> run_sweep(const RunConfig& base, int jobs, std::vector<std::string>* notes = nullptr) {
    if (base.nu_grid.empty()) throw ConfigError("sweep needs /nu_grid");
    const std::size_t n = base.nu_grid.size();
    std::vector<std::vector<SweepRow>> per(n);
    std::vector<std::vector<std::string>> per_notes(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                RunConfig c = base;
                c.ramp.nu = base.nu_grid[i];
                const auto rep = run_evolve(c);
                per[i] = fit_trajectories(c, c.ramp.nu, rep);
                per_notes[i] = rep.notes;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int nt = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    std::vector<std::thread> pool;
    for (int k = 0; k < nt; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < n; ++i) {
        rows.insert(rows.end(), per[i].begin(), per[i].end());
        if (notes)
            for (auto& s : per_notes[i]) notes->push_back("nu=" + std::to_string(base.nu_grid[i]) + ": " + s);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// output

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& tr) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "t,re,im,abs\n";
    for (std::size_t k = 0; k < tr.t.size(); ++k)
        out << fmt17(tr.t[k]) << ',' << fmt17(tr.v[k].real()) << ',' << fmt17(tr.v[k].imag()) << ',' << fmt17(std::abs(tr.v[k])) << '\n';
}

inline void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "nu,label,alpha_hat,alpha_pred,r2,t_lo,t_hi,method,stable\n";
    for (const auto& r : rows)
        out << fmt17(r.nu) << ',' << r.label << ',' << fmt17(r.alpha_hat) << ',' << fmt17(r.alpha_pred) << ',' << fmt17(r.r_squared) << ','
            << fmt17(r.t_lo) << ',' << fmt17(r.t_hi) << ',' << method_name(r.method) << ',' << (r.stable ? 1 : 0) << '\n';
}

// CSV with columns t, re, im (abs optional) -> samples.
inline std::pair<std::vector<double>, std::vector<cplx>> read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
    std::vector<std::string> head;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) head.push_back(cell);
    }
    auto col = [&](const std::string& name) {
        for (std::size_t i = 0; i < head.size(); ++i)
            if (head[i] == name) return static_cast<long>(i);
        return -1L;
    };
    const long it = col("t"), ir = col("re"), ii = col("im");
    if (it < 0 || ir < 0 || ii < 0) throw ConfigError(path + ": header must name columns t, re, im");
    std::vector<double> t;
    std::vector<cplx> v;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        try {
            t.push_back(std::stod(cells.at(static_cast<std::size_t>(it))));
            v.emplace_back(std::stod(cells.at(static_cast<std::size_t>(ir))), std::stod(cells.at(static_cast<std::size_t>(ii))));
        } catch (const std::exception&) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed row");
        }
    }
    return {t, v};
}

inline json manifest(const RunConfig& c, const std::string& command, const std::vector<std::string>& outputs,
                     const std::vector<std::string>& notes, double seconds, const std::string& route_used) {
    json m;
    m["tool"] = "tdrg";
    m["version"] = kVersion;
    m["command"] = command;
    m["config_hash"] = config_hash(c);
    m["config"] = c.canonical;
    m["route"] = route_used;
    m["outputs"] = outputs;
    m["notes"] = notes;
    m["runtime_seconds"] = seconds;
    m["versions"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    return m;
}

}  // namespace tdrg
