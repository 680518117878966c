#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("tdrg_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct Run {
    int code;
    std::string out;
};

Run tdrg(const std::string& args, const fs::path& dir) {
    const auto log = dir / "stdout.txt";
    const std::string cmd = std::string(TDRG_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return dir / name;
}

std::string two_spin(const std::string& mode, const std::string& preset, double nu = 2.5) {
    return R"({"mode": ")" + mode + R"(", "nu": )" + std::to_string(nu) +
           R"(, "epsilons": [0.4, 1.1], "t_init": 1e-5, "t_final": 10.0,
              "initial": {"preset": ")" + preset + R"(", "seed": 5},
              "correlators": ["all"], "samples": {"per_decade": 8}})";
}

}  // namespace

TEST(Cli, EvolveIsByteDeterministic) {
    auto d = scratch("det");
    auto cfg = write(d, "c.json", two_spin("rg", "random"));
    ASSERT_EQ(tdrg("evolve -c " + cfg.string() + " -o " + (d / "a").string(), d).code, 0);
    ASSERT_EQ(tdrg("evolve -c " + cfg.string() + " -o " + (d / "b").string(), d).code, 0);
    int files = 0;
    for (const auto& e : fs::directory_iterator(d / "a")) {
        if (e.path().extension() != ".csv") continue;
        EXPECT_EQ(slurp(e.path()), slurp(d / "b" / e.path().filename())) << e.path();
        ++files;
    }
    EXPECT_EQ(files, 15);
    EXPECT_TRUE(fs::exists(d / "a" / "corr_zp.csv"));
    const auto m = nlohmann::json::parse(slurp(d / "a" / "manifest.json"));
    EXPECT_EQ(m["config_hash"], nlohmann::json::parse(slurp(d / "b" / "manifest.json"))["config_hash"]);
    EXPECT_EQ(m["route"], "rg");
}

TEST(Cli, MaximallyMixedGivesZeros) {
    auto d = scratch("mixed");
    auto cfg = write(d, "c.json", two_spin("lindblad", "maximally_mixed"));
    ASSERT_EQ(tdrg("evolve -c " + cfg.string() + " -o " + d.string(), d).code, 0);
    std::ifstream in(d / "corr_zz.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,re,im,abs");
    int rows = 0;
    while (std::getline(in, line)) {
        double t, re, im, ab;
        ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &t, &re, &im, &ab), 4);
        EXPECT_EQ(ab, 0.0);
        ++rows;
    }
    EXPECT_GT(rows, 40);
}

TEST(Cli, RgAgreesWithLindblad) {
    auto d = scratch("routes");
    auto a = write(d, "a.json", two_spin("lindblad", "spin_coherent"));
    auto b = write(d, "b.json", two_spin("rg", "spin_coherent"));
    ASSERT_EQ(tdrg("evolve -c " + a.string() + " -o " + (d / "l").string(), d).code, 0);
    ASSERT_EQ(tdrg("evolve -c " + b.string() + " -o " + (d / "r").string(), d).code, 0);
    double worst = 0.0;
    for (const auto& e : fs::directory_iterator(d / "l")) {
        if (e.path().extension() != ".csv") continue;
        std::ifstream x(e.path()), y(d / "r" / e.path().filename());
        std::string lx, ly;
        std::getline(x, lx);
        std::getline(y, ly);
        while (std::getline(x, lx) && std::getline(y, ly)) {
            double t1, r1, i1, a1, t2, r2, i2, a2;
            std::sscanf(lx.c_str(), "%lf,%lf,%lf,%lf", &t1, &r1, &i1, &a1);
            std::sscanf(ly.c_str(), "%lf,%lf,%lf,%lf", &t2, &r2, &i2, &a2);
            EXPECT_EQ(t1, t2);
            worst = std::max(worst, std::hypot(r1 - r2, i1 - i2));
        }
    }
    EXPECT_LT(worst, 1e-7);
}

TEST(Cli, ConfigErrorsExitTwoWithContext) {
    auto d = scratch("errors");
    auto unknown = write(d, "u.json", R"({"nu": 2.0, "epsilons": [1.0], "correlators": ["z"], "integration": {"rtol": 1e-9}})");
    auto r = tdrg("evolve -c " + unknown.string(), d);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("rtol"), std::string::npos);
    EXPECT_NE(r.out.find("/integration"), std::string::npos);

    auto broken = write(d, "b.json", "{\n  \"nu\": 2.0,\n  \"epsilons\": [1.0,\n  \"correlators\": [\"z\"]\n}\n");
    r = tdrg("evolve -c " + broken.string(), d);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("b.json:4"), std::string::npos) << r.out;

    auto order = write(d, "o.json", R"({"nu": 2.0, "epsilons": [1.0, 0.5], "correlators": ["z"]})");
    EXPECT_EQ(tdrg("evolve -c " + order.string(), d).code, 2);
    auto label = write(d, "l.json", R"({"nu": 2.0, "epsilons": [1.0], "correlators": ["zz"]})");
    EXPECT_EQ(tdrg("evolve -c " + label.string(), d).code, 2);
    EXPECT_EQ(tdrg("evolve -c " + label.string() + " --tol abc", d).code, 2);
    EXPECT_EQ(tdrg("frobnicate", d).code, 2);
}

TEST(Cli, ResonantNuRefusalAndFallback) {
    auto d = scratch("resonant");
    auto strict = write(d, "s.json", R"({"mode": "exact", "nu": 2.0, "epsilons": [0.5, 1.0], "t_final": 1.0,
        "initial": {"preset": "random"}, "correlators": ["zz"], "fallback": false})");
    EXPECT_EQ(tdrg("evolve -c " + strict.string() + " -o " + d.string(), d).code, 4);
    auto soft = write(d, "f.json", R"({"mode": "exact", "nu": 2.0, "epsilons": [0.5, 1.0], "t_final": 1.0,
        "initial": {"preset": "random"}, "correlators": ["zz", "+0"]})");
    ASSERT_EQ(tdrg("evolve -c " + soft.string() + " -o " + d.string(), d).code, 0);
    const auto m = nlohmann::json::parse(slurp(d / "manifest.json"));
    EXPECT_EQ(m["route"], "rg");
    ASSERT_EQ(m["notes"].size(), 1u);
}

TEST(Cli, ExactRouteMatchesRg) {
    auto d = scratch("exact");
    auto a = write(d, "a.json", two_spin("exact", "random", 1.2));
    auto b = write(d, "b.json", two_spin("rg", "random", 1.2));
    ASSERT_EQ(tdrg("evolve -c " + a.string() + " -o " + (d / "e").string(), d).code, 0);
    ASSERT_EQ(tdrg("evolve -c " + b.string() + " -o " + (d / "r").string(), d).code, 0);
    for (const char* f : {"corr_zz.csv", "corr_pm.csv", "corr_z0.csv", "corr_0m.csv"}) {
        std::ifstream x(d / "e" / f), y(d / "r" / f);
        std::string lx, ly;
        std::getline(x, lx);
        std::getline(y, ly);
        while (std::getline(x, lx) && std::getline(y, ly)) {
            double t1, r1, i1, a1, t2, r2, i2, a2;
            std::sscanf(lx.c_str(), "%lf,%lf,%lf,%lf", &t1, &r1, &i1, &a1);
            std::sscanf(ly.c_str(), "%lf,%lf,%lf,%lf", &t2, &r2, &i2, &a2);
            EXPECT_LT(std::hypot(r1 - r2, i1 - i2), 1e-6 * std::max(a2, 1e-12)) << f << " t=" << t1;
        }
    }
}

TEST(Cli, SweepOrderIndependentOfJobs) {
    auto d = scratch("sweep");
    auto cfg = write(d, "s.json", R"({"nu_grid": [6.0, 4.0, 10.0], "epsilons": [0.5, 1.0], "t_final": 1e4,
        "initial": {"preset": "sector_sum"}, "correlators": ["+-"]})");
    ASSERT_EQ(tdrg("sweep -c " + cfg.string() + " -o " + (d / "a").string() + " -j 1", d).code, 0);
    ASSERT_EQ(tdrg("sweep -c " + cfg.string() + " -o " + (d / "b").string() + " -j 3", d).code, 0);
    const auto a = slurp(d / "a" / "sweep.csv");
    EXPECT_EQ(a, slurp(d / "b" / "sweep.csv"));
    EXPECT_EQ(a.substr(0, a.find('\n')), "nu,label,alpha_hat,alpha_pred,r2,t_lo,t_hi,method,stable");
    std::istringstream rows(a);
    std::string line;
    std::getline(rows, line);
    const double want[] = {6.0, 4.0, 10.0};
    for (double nu : want) {
        ASSERT_TRUE(std::getline(rows, line));
        double v, ah, ap;
        ASSERT_EQ(std::sscanf(line.c_str(), "%lf,+-,%lf,%lf", &v, &ah, &ap), 3);
        EXPECT_EQ(v, nu);
        EXPECT_NEAR(ah, 2.0 / nu, 0.03 * 2.0 / nu);
    }
}

TEST(Cli, FitSubcommand) {
    auto d = scratch("fit");
    std::ofstream csv(d / "p.csv");
    csv.precision(17);
    csv << "t,re,im\n";
    for (int k = 0; k <= 400; ++k) {
        const double t = std::pow(10.0, k / 100.0);
        csv << t << ',' << std::pow(t, -0.75) << ",0\n";
    }
    csv.close();
    auto r = tdrg("fit " + (d / "p.csv").string() + " --n 2 --n1 1 --nu 4", d);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["alpha_hat"].get<double>(), 0.75, 1e-9);
    EXPECT_DOUBLE_EQ(j["alpha_pred"].get<double>(), 0.75);
    std::ofstream(d / "bad.csv") << "time,value\n1,2\n";
    EXPECT_EQ(tdrg("fit " + (d / "bad.csv").string(), d).code, 2);
}

TEST(Cli, AnalyticCheckFlagsResonance) {
    auto d = scratch("check");
    auto cfg = write(d, "c.json", R"({"mode": "exact", "nu_grid": [2.0, 6.0], "epsilons": [0.5, 1.0],
        "initial": {"preset": "random"}, "correlators": ["zz"], "check": {"boundaries": 2}})");
    auto r = tdrg("analytic-check -c " + cfg.string() + " -o " + d.string(), d);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(slurp(d / "analytic_check.json"));
    EXPECT_TRUE(j["results"][0]["n2"]["resonant"].get<bool>());
    EXPECT_FALSE(j["results"][1]["n2"]["resonant"].get<bool>());
    EXPECT_LT(j["results"][1]["n2"]["max_rel_error"].get<double>(), 1e-6);
    EXPECT_LT(j["results"][1]["n1"]["max_rel_error"].get<double>(), 1e-6);
}

TEST(Cli, PresetsAndShippedConfigsParse) {
    auto d = scratch("presets");
    auto r = tdrg("presets", d);
    EXPECT_EQ(r.code, 0);
    for (const char* p : {"maximally_mixed", "spin_coherent", "random", "sector_sum", "pseudo_vacuum", "file"})
        EXPECT_NE(r.out.find(p), std::string::npos);
    int n = 0;
    for (const auto& e : fs::directory_iterator(TDRG_CONFIG_DIR)) {
        // evolve on an unwritable path would still parse first; use a dry parse via an invalid --tol instead
        auto p = tdrg("evolve -c " + e.path().string() + " --tol 0", d);
        EXPECT_EQ(p.code, 2) << e.path();
        EXPECT_NE(p.out.find("tolerances must be positive"), std::string::npos) << e.path() << p.out;
        ++n;
    }
    EXPECT_GE(n, 10);
}
