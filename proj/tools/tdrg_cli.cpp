#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdrg/run.hpp"

namespace fs = std::filesystem;
using namespace tdrg;

namespace {

struct Common {
    std::string config;
    std::string out = "out";
    std::string tol;
    int jobs = 0;
};

RunConfig load(const Common& o) {
    auto c = load_run_config(o.config);
    if (!o.tol.empty()) {
        const auto comma = o.tol.find(',');
        try {
            c.integration.rel_tol = std::stod(o.tol.substr(0, comma));
            if (comma != std::string::npos) c.integration.abs_tol = std::stod(o.tol.substr(comma + 1));
        } catch (const std::exception&) {
            throw ConfigError("--tol expects RTOL[,ATOL]");
        }
        c.integration.validate();
    }
    return c;
}

int jobs_of(const Common& o) {
    if (o.jobs > 0) return o.jobs;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream out(p);
    if (!out) throw Error("cannot write " + p.string());
    out << j.dump(2) << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_evolve(const Common& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto c = load(o);
    const auto rep = run_evolve(c);
    fs::create_directories(o.out);
    std::vector<std::string> outputs;
    const int n = c.ramp.n_spins();
    for (const auto& tr : rep.trajectories) {
        const auto name = "corr_" + label_file_stem(tr.label, n) + ".csv";
        write_trajectory_csv((fs::path(o.out) / name).string(), tr);
        outputs.push_back(name);
    }
    outputs.push_back("manifest.json");
    for (const auto& s : rep.notes) std::cerr << "note: " << s << '\n';
    write_json(fs::path(o.out) / "manifest.json", manifest(c, "evolve", outputs, rep.notes, seconds_since(t0), route_name(rep.route_used)));
    std::cout << "wrote " << rep.trajectories.size() << " trajectories to " << o.out << '\n';
    return 0;
}

int cmd_sweep(const Common& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto c = load(o);
    std::vector<std::string> notes;
    const auto rows = run_sweep(c, jobs_of(o), &notes);
    fs::create_directories(o.out);
    write_sweep_csv((fs::path(o.out) / "sweep.csv").string(), rows);
    for (const auto& r : rows) {
        if (!r.note.empty()) notes.push_back("nu=" + fmt17(r.nu) + " " + r.label + ": " + r.note);
        if (!r.stable) notes.push_back("nu=" + fmt17(r.nu) + " " + r.label + ": no stable fit window (drift " + fmt17(r.drift) + ")");
    }
    for (const auto& s : notes) std::cerr << "note: " << s << '\n';
    write_json(fs::path(o.out) / "manifest.json", manifest(c, "sweep", {"sweep.csv", "manifest.json"}, notes, seconds_since(t0), route_name(c.route)));
    std::cout << "wrote " << rows.size() << " rows to " << (fs::path(o.out) / "sweep.csv").string() << '\n';
    return 0;
}

int cmd_check(const Common& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto c = load(o);
    auto grid = c.nu_grid;
    if (grid.empty()) grid.push_back(c.ramp.nu);
    const int p = c.check.sites[0], q = c.check.sites[1];
    std::vector<json> per(grid.size());
    std::vector<std::exception_ptr> errs(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            try {
                RampConfig cfg = c.ramp;
                cfg.nu = grid[i];
                json r;
                r["nu"] = cfg.nu;
                r["n1"] = {{"max_rel_error", n1_vs_numeric(cfg, c.check.boundaries, c.check.seed, cfg.t_final)}};
                const auto e = exact_vs_numeric(cfg, p, q, c.check.boundaries, c.check.seed, c.check.tau_max);
                r["n2"] = {{"max_rel_error", e.max_rel},
                           {"sector_rel_error", e.sector_rel},
                           {"comparisons", e.comparisons},
                           {"resonant", e.resonant},
                           {"message", e.message}};
                json saddles = json::array();
                for (int n : c.check.saddle_n) {
                    if (n > cfg.n_spins()) throw ConfigError("check/saddle_n exceeds n_spins");
                    for (int np = 1; np < 2 * n; ++np) {
                        const auto s = saddle_vs_numeric(cfg, n, np, c.check.saddle_t_end);
                        json slots = json::array();
                        for (const auto& sl : s.slots)
                            slots.push_back({{"slot", sl.slot},
                                             {"n1", sl.n1},
                                             {"onset", sl.onset},
                                             {"drift_per_decade", sl.drift_per_decade},
                                             {"numeric_alpha", sl.numeric_alpha},
                                             {"window_stable", sl.window_stable}});
                        saddles.push_back({{"n", n}, {"n_plus", np}, {"max_drift_per_decade", s.max_drift}, {"slots", slots}});
                    }
                }
                r["saddle"] = saddles;
                per[i] = r;
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int nt = std::max(1, std::min<int>(jobs_of(o), static_cast<int>(grid.size())));
    for (int k = 0; k < nt; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);

    json report;
    report["results"] = per;
    std::vector<std::string> notes;
    for (const auto& r : per) {
        const bool res = r["n2"]["resonant"].get<bool>();
        if (res) notes.push_back("nu=" + fmt17(r["nu"].get<double>()) + ": " + r["n2"]["message"].get<std::string>());
        std::printf("nu=%-8g n1 err %.2e  n2 err %.2e%s\n", r["nu"].get<double>(), r["n1"]["max_rel_error"].get<double>(),
                    r["n2"]["max_rel_error"].get<double>(), res ? "  (resonant sector skipped)" : "");
        for (const auto& s : r["saddle"])
            std::printf("    saddle n=%d N+=%d drift/decade %.3f\n", s["n"].get<int>(), s["n_plus"].get<int>(),
                        s["max_drift_per_decade"].get<double>());
    }
    fs::create_directories(o.out);
    write_json(fs::path(o.out) / "analytic_check.json", report);
    write_json(fs::path(o.out) / "manifest.json",
               manifest(c, "analytic-check", {"analytic_check.json", "manifest.json"}, notes, seconds_since(t0), "exact"));
    return 0;
}

int cmd_fit(const std::string& csv, const std::string& method, std::vector<double> window, int n, int n1, double nu) {
    auto [t, v] = read_trajectory_csv(csv);
    FitOptions opt;
    if (method == "raw") opt.method = FitMethod::raw;
    else if (method == "envelope") opt.method = FitMethod::envelope;
    else if (method != "auto") throw ConfigError("--method must be auto, raw or envelope");
    json j;
    FitResult f;
    if (!window.empty()) {
        if (window.size() != 2) throw ConfigError("--window needs two values");
        f = fit_exponent(t, v, std::pair{window[0], window[1]}, opt);
        j["window_stable"] = true;
    } else {
        FitWindow w;
        f = fit_auto(t, v, opt, &w);
        j["window_stable"] = w.stable;
        j["window_drift"] = w.drift;
    }
    j["alpha_hat"] = f.alpha_hat;
    j["intercept"] = f.intercept;
    j["t_lo"] = f.t_lo;
    j["t_hi"] = f.t_hi;
    j["r_squared"] = f.r_squared;
    j["n_points"] = f.n_points;
    j["method"] = method_name(f.method);
    if (n > 0 && nu > 0) j["alpha_pred"] = predict_alpha(n, n1, nu).alpha;
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_presets() {
    for (const auto& p : preset_names()) std::printf("%-16s %s\n", p.c_str(), preset_help(p).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Correlator dynamics of spin-1 chains under a slow dissipative ramp"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* s, bool with_jobs) {
        s->add_option("-c,--config", common.config, "JSON run config")->required()->check(CLI::ExistingFile);
        s->add_option("-o,--out", common.out, "output directory");
        s->add_option("--tol", common.tol, "integrator tolerances RTOL[,ATOL]");
        if (with_jobs) s->add_option("-j,--jobs", common.jobs, "worker threads (default: hardware)");
    };
    auto* evolve = app.add_subcommand("evolve", "integrate one config and write correlator trajectories");
    add_common(evolve, false);
    auto* sweep = app.add_subcommand("sweep", "fit decay exponents over the config's nu_grid");
    add_common(sweep, true);
    auto* check = app.add_subcommand("analytic-check", "compare closed forms and asymptotes with numerics");
    add_common(check, true);

    auto* fit = app.add_subcommand("fit", "fit a power-law exponent to a trajectory CSV (columns t,re,im)");
    std::string fit_csv, fit_method = "auto";
    std::vector<double> fit_window;
    int fit_n = 0, fit_n1 = 0;
    double fit_nu = 0.0;
    fit->add_option("csv", fit_csv, "trajectory CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("--method", fit_method, "auto, raw or envelope");
    fit->add_option("--window", fit_window, "T_LO T_HI")->expected(2);
    fit->add_option("--n", fit_n, "correlator size, for the predicted exponent");
    fit->add_option("--n1", fit_n1, "number of z components");
    fit->add_option("--nu", fit_nu, "ramp exponent");

    app.add_subcommand("presets", "list built-in initial states");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*evolve) return cmd_evolve(common);
        if (*sweep) return cmd_sweep(common);
        if (*check) return cmd_check(common);
        if (*fit) return cmd_fit(fit_csv, fit_method, fit_window, fit_n, fit_n1, fit_nu);
        return cmd_presets();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ResonantNuError& e) {
        std::cerr << "resonant nu: " << e.what() << '\n';
        return 4;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
