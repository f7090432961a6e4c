// Acceptance suite: one pass/fail line per criterion, driven through run_experiment.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ndlab/errors.hpp"
#include "ndlab/experiment.hpp"

using namespace ndlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> failed;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            failed.push_back(what);
        }
    }
    void note(const std::string& s) { notes.push_back(s); }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void absorb(Outcome& o, const CheckRecord& rec) {
    for (const auto& [name, ok] : rec.conditions) o.require(ok, rec.name + "." + name);
}

const std::map<int, std::vector<std::string>> kChecks{
    {1, {"oracle"}},      {2, {"adjoint"}}, {3, {"energy"}}, {4, {"heat_fits"}}, {5, {"gradient_kernel"}},
    {6, {"kato"}},        {7, {"czd"}},     {8, {"kt_weak11"}}, {9, {"hardy"}},
};

const char* kTitles[] = {"",
                         "constant-coefficient Fourier oracle equivalence",
                         "adjoint solution against c/a",
                         "energy identity",
                         "Gaussian heat-kernel bound fits",
                         "gradient-kernel estimates",
                         "Kato square-root equivalence",
                         "Calderon-Zygmund decomposition",
                         "K_t bound and weak type (1,1)",
                         "Riesz transform on H1",
                         "determinism and runtime"};

Outcome run_check(int k, ExperimentConfig cfg, const fs::path& out) {
    cfg.checks = kChecks.at(k);
    cfg.output = out;
    const ExperimentReport r = run_experiment(cfg);
    const CheckRecord& rec = r.checks.at(0);
    Outcome o;
    absorb(o, rec);
    switch (k) {
        case 1:
            for (const auto& [name, secs] : rec.timings) {
                o.require(secs < 60.0, name + ".runtime_below_60s");
                o.note(name + " " + num(secs) + " s");
            }
            o.note("riesz relative error d1 " + num(rec.value("identity.d1.n64.riesz")) + ", d2 " +
                   num(rec.value("identity.d2.n32.riesz")));
            break;
        case 2: {
            const double e32 = rec.value("scalar.d1.n32.sup_error_vs_c_over_a");
            const double e64 = rec.value("scalar.d1.n64.sup_error_vs_c_over_a");
            o.note("sup errors " + num(e32) + " (N=32), " + num(e64) + " (N=64), ratio " +
                   num(rec.value("scalar.sup_error_ratio")));
            o.note("the three-point stencil gives L*(W) = D^2(a W), so c/a is the exact discrete null vector;"
                   " both errors are roundoff and their ratio carries no h^2 information");
            o.note("A2 relative change " + num(rec.value("scalar.a2_relative_change")));
            break;
        }
        case 3:
            o.note("symmetric residuals " + num(rec.value("identity.d1.n64.max_residual")) + ", " +
                   num(rec.value("identity.d2.n32.max_residual")));
            break;
        case 6:
            o.note("K " + num(rec.value("scalar.d1.n32.K")) + " -> " + num(rec.value("scalar.d1.n64.K")) +
                   ", identity band [" + num(rec.value("identity.d1.n64.band_lo")) + ", " +
                   num(rec.value("identity.d1.n64.band_hi")) + "]");
            break;
        case 9:
            o.note("h1 ratio max " + num(rec.value("scalar.d1.n32.h1_ratio_max")) + " -> " +
                   num(rec.value("scalar.d1.n64.h1_ratio_max")));
            break;
        default:
            break;
    }
    return o;
}

Outcome run_determinism(const ExperimentConfig& cfg, const fs::path& out) {
    Outcome o;
    const fs::path dirs[2] = {out / "run1", out / "run2"};
    for (const fs::path& d : dirs) {
        fs::remove_all(d);
        ExperimentConfig c = cfg;
        c.checks = {"all"};
        c.output = d;
        const auto t0 = std::chrono::steady_clock::now();
        const ExperimentReport r = run_experiment(c);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.require(secs < 900.0, d.filename().string() + ".runtime_below_15min");
        o.require(r.missing_anchors.empty(), d.filename().string() + ".anchors_complete");
        o.note(d.filename().string() + " " + num(secs) + " s");
    }
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(dirs[0])) {
        const auto name = e.path().filename();
        if (name == "timings.json") continue;
        ++compared;
        o.require(fs::exists(dirs[1] / name) && slurp(e.path()) == slurp(dirs[1] / name), name.string() + ".identical");
    }
    std::size_t other = 0;
    for (const auto& e : fs::directory_iterator(dirs[1])) other += e.path().filename() != "timings.json";
    o.require(compared > 0 && other == compared, "same_file_set");
    o.note(std::to_string(compared) + " report files compared");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    int criterion = 0;
    std::string out = "acceptance_reports";
    std::string config;
    app.add_option("--criterion", criterion, "criterion number, 1-10")->required()->check(CLI::Range(1, 10));
    app.add_option("--out", out, "report directory");
    app.add_option("--config", config, "experiment config (defaults otherwise)");
    CLI11_PARSE(app, argc, argv);

    Outcome o;
    try {
        const ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : ExperimentConfig::load(config);
        o = criterion == 10 ? run_determinism(cfg, out) : run_check(criterion, cfg, out);
    } catch (const LabError& e) {
        o.require(false, std::string("error: ") + e.what());
    }

    std::cout << "criterion " << criterion << " (" << kTitles[criterion] << "): " << (o.pass ? "PASS" : "FAIL") << "\n";
    for (const auto& f : o.failed) std::cout << "  failed: " << f << "\n";
    for (const auto& n : o.notes) std::cout << "  " << n << "\n";
    return o.pass ? 0 : 1;
}
