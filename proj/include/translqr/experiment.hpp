#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "translqr/mode_transfer.hpp"

namespace translqr {

// One experiment system: either an inline model or a trajectory file
// (exactly one of the two).
struct SystemSpec {
    std::optional<StateSpaceModel> model;
    std::optional<std::filesystem::path> trajectory_path;
};

struct ExperimentConfig {
    std::string name;
    int n = 0;
    int T0 = 0;      // target impulse samples to collect / expect
    int T1 = 0;      // source impulse samples
    int horizon = 40;
    Eigen::MatrixXd Q;
    Eigen::MatrixXd R;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    SystemSpec target;
    std::vector<SystemSpec> sources;
    std::vector<SystemSpec> targets;  // batch mode (fig2 / multi-target transfer)
    std::vector<int> fig1_grid;       // horizons swept by the fig1 command
    bool fig1_exact_data = false;     // bypass transfer, use model impulse data
    bool verbose = false;

    CostSpec cost() const { return CostSpec{Q, R, horizon}; }

    static ExperimentConfig load(const std::filesystem::path& path);
};

struct RunReport {
    std::string name;
    std::uint64_t seed = 0;
    int n = 0;
    int horizon = 0;
    ModeDictionary dictionary;
    std::vector<Mode> selected_modes;
    double Z = 0.0;
    double reconstruction_residual = 0.0;
    int target_samples = 0;
    int source_samples = 0;
    std::vector<std::pair<int, double>> gain_error_curve; // empty without a target model
    std::optional<double> closed_loop_cost;               // absent without a target model
    std::optional<double> model_optimal_cost;
    std::string gain_file;
    double wall_time_ms = 0.0; // printed to the console, not serialized

    // Serialized form; wall time is excluded so identical runs are
    // byte-identical.
    std::string to_json_string() const;
};

// simulate: write impulse-response CSVs (target: T0 rows, sources: T1 rows)
// for inline models.  Returns the written paths.
std::vector<std::filesystem::path> run_simulate(const ExperimentConfig& config);

// transfer: run the pipeline for the target (or each target in batch mode),
// writing report_<i>.json and gain_<i>.csv (report.json/gain.csv for a
// single target).
std::vector<RunReport> run_transfer(const ExperimentConfig& config);

// fig1: sweep the horizon grid, writing a `T,error` CSV of
// ||K^0(horizon=T) - K*|| against the model-based static gain.
std::vector<std::pair<int, double>> run_fig1(const ExperimentConfig& config);

// fig2: per-target (Z, gain error) rows, written as a `Z,error` CSV.
std::vector<std::pair<double, double>> run_fig2(const ExperimentConfig& config);

// Full command-line entry point (argument parsing, error-to-exit-code map).
int cli_main(int argc, const char* const* argv);

} // namespace translqr
