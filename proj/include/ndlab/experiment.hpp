#pragma once

// Config-driven experiment runner. A run executes a list of named checks,
// each producing measured constants, a pass flag and one CSV table, and
// writes them as reports under the output directory:
//
//   <out>/summary.json     every check record plus the environment stamp
//   <out>/<check>.csv      one table per check family
//   <out>/timings.json     wall-clock seconds per check (not part of the
//                          deterministic reports)

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ndlab/lattice.hpp"

namespace ndlab {

/// Flat `key = value` configuration. Lists are comma separated, `#` starts a comment.
///
///   seed                    base seed for every sample family
///   preset                  preset used by the single-operator checks
///   presets                 presets swept by the kernel-bound checks
///   scalar_amplitude        a = 2 + amplitude * sin(...)
///   anisotropic_amplitude   1D smooth_anisotropic amplitude
///   anisotropic_amplitude_2d
///   frequency, lambda_min   shared preset parameters (lambda_min optional)
///   n_coarse, n_fine        1D refinement pair
///   oracle_n_1d, oracle_n_2d  identity sizes compared with the Fourier oracle
///   fit_n_2d                2D size for existence fits (0 disables)
///   energy_n                2D sizes of the energy refinement study
///   t_grid, s_grid          heat-kernel times / gradient-kernel scales, in (0, 1/4]
///   annulus_s, annulus_multiples   scales and t/s ratios of the annulus fit
///   kt_times                times of the K_t bound, t in (0, 1/16]
///   spikes, smooth, band    standard sample family
///   kato_samples, kato_band, energy_samples, energy_band
///   cz_levels               alpha levels per CZ sample
///   nodes                   subordination node count
///   checks                  `all` or a list of check names
///   anchors                 anchors the suite must cover (completeness check)
///   output                  report directory
///   cache                   directory for spectral factorisations (empty = off)
struct ExperimentConfig {
    std::uint64_t seed = 20240611;
    std::string preset = "scalar";
    std::vector<std::string> presets{"identity", "scalar", "smooth_anisotropic"};
    double scalar_amplitude = 1.0;
    double anisotropic_amplitude = 0.5;
    double anisotropic_amplitude_2d = 0.25;
    int frequency = 1;
    std::optional<double> lambda_min;

    int n_coarse = 32;
    int n_fine = 64;
    int oracle_n_1d = 64;
    int oracle_n_2d = 32;
    int fit_n_2d = 32;
    std::vector<int> energy_n{16, 32, 64};

    std::vector<double> t_grid{1.0 / 16, 1.0 / 8, 1.0 / 4};
    std::vector<double> s_grid{1.0 / 16, 1.0 / 8, 1.0 / 4};
    std::vector<double> annulus_s{1.0 / 32, 1.0 / 16};
    std::vector<double> annulus_multiples{0, 1, 2, 3, 4};
    std::vector<double> kt_times{1.0 / 64, 1.0 / 16};

    int spikes = 30;
    int smooth = 30;
    int band = 4;
    int kato_samples = 50;
    int kato_band = 4;
    int energy_samples = 20;
    int energy_band = 2;
    int cz_levels = 8;
    int nodes = 64;

    std::vector<std::string> checks{"all"};
    std::vector<std::string> anchors;
    std::filesystem::path output = "reports";
    std::filesystem::path cache;

    /// Parses the text form; unknown keys and malformed values raise ConfigError.
    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
    std::string to_text() const;

    /// Check names in execution order after expanding `all`.
    std::vector<std::string> resolved_checks() const;
    /// Range and consistency checks; raises ConfigError.
    void validate() const;
};

/// Every check in dependency order.
const std::vector<std::string>& check_names();
/// Anchor string of a check; empty for unknown names.
std::string check_anchor(const std::string& name);

struct CheckRecord {
    std::string name;
    std::string anchor;
    bool pass = false;
    /// Measured constants in the order they were recorded.
    std::vector<std::pair<std::string, double>> values;
    /// Conditions that decided `pass`, with their outcome.
    std::vector<std::pair<std::string, bool>> conditions;
    std::string csv;
    double runtime_seconds = 0.0;
    /// Wall-clock seconds of sub-cases; reported in timings.json only.
    std::vector<std::pair<std::string, double>> timings;

    double value(const std::string& key) const;
    bool has(const std::string& key) const;
    bool condition(const std::string& key) const;
};

struct ExperimentReport {
    std::string stamp;
    std::vector<CheckRecord> checks;
    /// Configured anchors missing from the report.
    std::vector<std::string> missing_anchors;

    const CheckRecord& at(const std::string& name) const;
    bool all_pass() const;
    std::string summary_json() const;
    std::string timings_json() const;
    /// Writes summary.json, timings.json and one CSV per check.
    void write(const std::filesystem::path& dir) const;
};

/// Runs the configured checks and writes the report when config.output is set.
/// The first LabError is rethrown with the check name and anchor prepended.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Deterministic number formatting used by every report (%.17g, "nan", "inf").
std::string format_number(double v);

}  // namespace ndlab
