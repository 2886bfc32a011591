#include "translqr/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "translqr/io_util.hpp"
#include "translqr/linalg.hpp"

namespace translqr {

namespace {

using nlohmann::json;

Eigen::MatrixXd parse_matrix(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        throw ConfigError(what + ": expected a nested (row-major) array");
    }
    const auto rows = j.size();
    const auto cols = j[0].size();
    Eigen::MatrixXd M(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) {
            throw ConfigError(what + ": ragged matrix rows");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
        }
    }
    return M;
}

SystemSpec parse_system(const json& j, const std::filesystem::path& base,
                        const std::string& what) {
    SystemSpec spec;
    const bool has_model = j.contains("A") || j.contains("B") || j.contains("C");
    const bool has_file = j.contains("trajectory");
    if (has_model == has_file) {
        throw ConfigError(what + ": give either inline {A,B,C} or a trajectory path, not both");
    }
    if (has_model) {
        spec.model = StateSpaceModel::create(parse_matrix(j.at("A"), what + ".A"),
                                             parse_matrix(j.at("B"), what + ".B"),
                                             parse_matrix(j.at("C"), what + ".C"));
    } else {
        std::filesystem::path p = j.at("trajectory").get<std::string>();
        if (p.is_relative()) {
            p = base / p;
        }
        spec.trajectory_path = p;
    }
    return spec;
}

ImpulseTrajectory load_system_data(const SystemSpec& spec, int samples, const char* role) {
    if (spec.model.has_value()) {
        validate(*spec.model);
        return impulse_response(*spec.model, samples);
    }
    if (!std::filesystem::exists(*spec.trajectory_path)) {
        throw IoError(std::string(role) + " trajectory file not found: " +
                      spec.trajectory_path->string());
    }
    return read_impulse_csv(*spec.trajectory_path);
}

json mode_to_json(const Mode& mode) {
    return json{{"re", mode.real()}, {"im", mode.imag()}};
}

std::string format_csv(const std::string& header,
                       const std::vector<std::pair<double, double>>& rows) {
    std::string out = header + "\n";
    char buf[96];
    for (const auto& [a, b] : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", a, b);
        out += buf;
    }
    return out;
}

void write_gain_csv(const OutputFeedbackGain& gain, const std::filesystem::path& path) {
    std::string out;
    char buf[64];
    for (Eigen::Index r = 0; r < gain.gain.rows(); ++r) {
        for (Eigen::Index c = 0; c < gain.gain.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", gain.gain(r, c));
            if (c > 0) {
                out += ",";
            }
            out += buf;
        }
        out += "\n";
    }
    io::write_file_atomic(path, out);
}

// Gain error sweep against the model-based static gain, from reconstructed
// (or exact) data of length max(grid)+n.
std::vector<std::pair<int, double>> gain_error_sweep(const ImpulseTrajectory& data,
                                                     const StateSpaceModel& model,
                                                     const CostSpec& cost, int n,
                                                     const std::vector<int>& grid) {
    CostSpec inf_cost{cost.Q, cost.R, std::nullopt};
    const RiccatiSolution riccati = solve_riccati(model, inf_cost);
    const OutputFeedbackGain reference = output_feedback_gain(model, riccati, std::nullopt);
    std::vector<std::pair<int, double>> curve;
    for (int T : grid) {
        CostSpec c = cost;
        c.horizon = T;
        const OutputFeedbackGain g = data_driven_gain(data, c, 0, n);
        curve.emplace_back(T, (g.gain - reference.gain).norm());
    }
    return curve;
}

} // namespace

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file: " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("failed to parse " + path.string() + ": " + e.what());
    }

    ExperimentConfig cfg;
    const std::filesystem::path base = path.has_parent_path()
        ? path.parent_path() : std::filesystem::path(".");
    try {
        cfg.name = j.value("name", path.stem().string());
        cfg.n = j.at("n").get<int>();
        if (cfg.n < 1) {
            throw ConfigError("n must be >= 1");
        }
        cfg.T0 = j.value("T0", cfg.n + 1);
        cfg.T1 = j.value("T1", 2 * cfg.n);
        cfg.horizon = j.value("horizon", 40);
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.out_dir = j.value("out_dir", std::string("out"));
        const json& cost = j.at("cost");
        cfg.Q = parse_matrix(cost.at("Q"), "cost.Q");
        cfg.R = parse_matrix(cost.at("R"), "cost.R");

        if (j.contains("target")) {
            cfg.target = parse_system(j.at("target"), base, "target");
        }
        if (j.contains("sources")) {
            int i = 0;
            for (const auto& src : j.at("sources")) {
                cfg.sources.push_back(parse_system(src, base, "sources[" + std::to_string(i) + "]"));
                ++i;
            }
        }
        if (j.contains("targets")) {
            int i = 0;
            for (const auto& tgt : j.at("targets")) {
                cfg.targets.push_back(parse_system(tgt, base, "targets[" + std::to_string(i) + "]"));
                ++i;
            }
        }
        if (j.contains("N") && j.at("N").get<int>() != static_cast<int>(cfg.sources.size())) {
            throw ConfigError("N does not match the number of sources");
        }
        if (j.contains("fig1_T_grid")) {
            cfg.fig1_grid = j.at("fig1_T_grid").get<std::vector<int>>();
        }
        cfg.fig1_exact_data = j.value("fig1_exact_data", false);
    } catch (const json::exception& e) {
        throw ConfigError("bad config " + path.string() + ": " + e.what());
    }
    if (cfg.fig1_grid.empty()) {
        for (int T = 10; T <= 60; T += 2) {
            cfg.fig1_grid.push_back(T);
        }
    }
    return cfg;
}

std::string RunReport::to_json_string() const {
    json j;
    j["name"] = name;
    j["seed"] = seed;
    j["n"] = n;
    j["horizon"] = horizon;
    json dict = json::array();
    for (int i = 0; i < dictionary.size(); ++i) {
        json entry = mode_to_json(dictionary.entries[static_cast<std::size_t>(i)]);
        entry["source_index"] = dictionary.provenance[static_cast<std::size_t>(i)];
        dict.push_back(entry);
    }
    j["dictionary"] = dict;
    json sel = json::array();
    for (const Mode& mode : selected_modes) {
        sel.push_back(mode_to_json(mode));
    }
    j["selected_modes"] = sel;
    j["Z"] = Z;
    j["reconstruction_residual"] = reconstruction_residual;
    j["sample_counts"] = json{{"target", target_samples},
                              {"per_source", source_samples},
                              {"horizon", horizon}};
    if (!gain_error_curve.empty()) {
        json curve = json::array();
        for (const auto& [T, e] : gain_error_curve) {
            curve.push_back(json::array({T, e}));
        }
        j["gain_error_curve"] = curve;
    }
    if (closed_loop_cost.has_value()) {
        j["closed_loop_cost"] = *closed_loop_cost;
    }
    if (model_optimal_cost.has_value()) {
        j["model_optimal_cost"] = *model_optimal_cost;
    }
    j["gain_file"] = gain_file;
    return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> run_simulate(const ExperimentConfig& config) {
    if (!config.target.model.has_value()) {
        throw ConfigError("simulate: target must be an inline model");
    }
    if (config.T0 < 1) {
        throw DataLengthError("simulate: T0 = " + std::to_string(config.T0) +
                              " would produce an empty trajectory");
    }
    if (config.T1 < 2 * config.n) {
        throw DataLengthError("simulate: sources need T1 >= 2n samples");
    }
    for (const auto& src : config.sources) {
        if (!src.model.has_value()) {
            throw ConfigError("simulate: sources must be inline models");
        }
    }

    validate(*config.target.model);
    for (const auto& src : config.sources) {
        validate(*src.model);
    }

    std::vector<std::filesystem::path> written;
    std::filesystem::create_directories(config.out_dir);
    const auto target_path = config.out_dir / "target.csv";
    write_impulse_csv(impulse_response(*config.target.model, config.T0), target_path);
    written.push_back(target_path);
    for (std::size_t i = 0; i < config.sources.size(); ++i) {
        const auto path = config.out_dir / ("source_" + std::to_string(i + 1) + ".csv");
        write_impulse_csv(impulse_response(*config.sources[i].model, config.T1), path);
        written.push_back(path);
    }
    return written;
}

namespace {

RunReport transfer_one(const ExperimentConfig& config, const SystemSpec& target,
                       const std::string& suffix) {
    const auto start = std::chrono::steady_clock::now();

    std::vector<ImpulseTrajectory> sources;
    for (const auto& src : config.sources) {
        sources.push_back(load_system_data(src, config.T1, "source"));
    }
    if (sources.empty()) {
        throw ConfigError("transfer: at least one source required");
    }
    const ImpulseTrajectory head = load_system_data(target, config.T0, "target");

    auto [gain, pipeline_report] =
        transfer_pipeline(sources, head, config.n, config.cost(), config.horizon);

    RunReport report;
    report.name = config.name + suffix;
    report.seed = config.seed;
    report.n = config.n;
    report.horizon = config.horizon;
    report.dictionary = pipeline_report.dictionary;
    report.selected_modes = pipeline_report.selected_modes.modes;
    report.Z = pipeline_report.Z;
    report.reconstruction_residual = pipeline_report.fit_residual;
    report.target_samples = pipeline_report.target_samples;
    report.source_samples = pipeline_report.source_samples;

    if (target.model.has_value()) {
        const StateSpaceModel& model = *target.model;
        const ImpulseTrajectory reconstructed = reconstruct_markov_range(
            pipeline_report.selected_modes, pipeline_report.weights, config.horizon + config.n);

        std::vector<int> grid;
        const int lo = std::max(config.n + 2, config.horizon / 5);
        for (int i = 0; i < 6; ++i) {
            grid.push_back(lo + i * std::max(1, (config.horizon - lo) / 5));
        }
        grid.back() = config.horizon;
        report.gain_error_curve = gain_error_sweep(reconstructed, model, config.cost(),
                                                   config.n, grid);

        // Closed loop under the transferred gains vs. the model-based optimum,
        // both with the same zero warm-up while the window fills.
        CostSpec finite = config.cost();
        const RiccatiSolution riccati = solve_riccati(model, finite);
        const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(model.n());
        const Trajectory optimal =
            state_feedback_rollout(model, x0, config.horizon, config.n, riccati);
        const Trajectory closed = closed_loop_rollout(
            model, x0, config.horizon, config.n, [&](int t) {
                CostSpec c = finite;
                return data_driven_gain(reconstructed, c, t, config.n);
            });
        report.model_optimal_cost = evaluate_cost(optimal, finite);
        report.closed_loop_cost = evaluate_cost(closed, finite);
    }

    std::filesystem::create_directories(config.out_dir);
    report.gain_file = "gain" + suffix + ".csv";
    write_gain_csv(gain, config.out_dir / report.gain_file);
    report.wall_time_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start).count();
    io::write_file_atomic(config.out_dir / ("report" + suffix + ".json"),
                          report.to_json_string());
    return report;
}

} // namespace

std::vector<RunReport> run_transfer(const ExperimentConfig& config) {
    std::vector<RunReport> reports;
    if (!config.targets.empty()) {
        for (std::size_t i = 0; i < config.targets.size(); ++i) {
            reports.push_back(transfer_one(config, config.targets[i],
                                           "_" + std::to_string(i + 1)));
        }
        return reports;
    }
    if (!config.target.model.has_value() && !config.target.trajectory_path.has_value()) {
        throw ConfigError("transfer: no target configured");
    }
    reports.push_back(transfer_one(config, config.target, ""));
    return reports;
}

std::vector<std::pair<int, double>> run_fig1(const ExperimentConfig& config) {
    if (!config.target.model.has_value()) {
        throw ConfigError("fig1: the reference gain needs an inline target model");
    }
    const StateSpaceModel& model = *config.target.model;
    const int T_max = *std::max_element(config.fig1_grid.begin(), config.fig1_grid.end());

    ImpulseTrajectory data = [&] {
        if (config.fig1_exact_data) {
            return impulse_response(model, T_max + config.n);
        }
        std::vector<ImpulseTrajectory> sources;
        for (const auto& src : config.sources) {
            sources.push_back(load_system_data(src, config.T1, "source"));
        }
        const ImpulseTrajectory head = load_system_data(config.target, config.T0, "target");
        auto [gain, report] =
            transfer_pipeline(sources, head, config.n, config.cost(), config.horizon);
        return reconstruct_markov_range(report.selected_modes, report.weights,
                                        T_max + config.n);
    }();

    const auto curve = gain_error_sweep(data, model, config.cost(), config.n, config.fig1_grid);

    std::vector<std::pair<double, double>> rows;
    for (const auto& [T, e] : curve) {
        rows.emplace_back(static_cast<double>(T), e);
    }
    std::filesystem::create_directories(config.out_dir);
    io::write_file_atomic(config.out_dir / "fig1.csv", format_csv("T,error", rows));
    return curve;
}

std::vector<std::pair<double, double>> run_fig2(const ExperimentConfig& config) {
    if (config.targets.size() < 2) {
        throw ConfigError("fig2: at least two targets required");
    }
    std::vector<ImpulseTrajectory> sources;
    for (const auto& src : config.sources) {
        sources.push_back(load_system_data(src, config.T1, "source"));
    }
    if (sources.empty()) {
        throw ConfigError("fig2: at least one source required");
    }

    std::vector<std::pair<double, double>> rows;
    for (std::size_t i = 0; i < config.targets.size(); ++i) {
        const SystemSpec& target = config.targets[i];
        if (!target.model.has_value()) {
            throw ConfigError("fig2: targets must be inline models (the gain error "
                              "needs the model-based reference)");
        }
        const ImpulseTrajectory head = load_system_data(target, config.T0, "target");
        auto [gain, report] =
            transfer_pipeline(sources, head, config.n, config.cost(), config.horizon);

        CostSpec inf_cost{config.Q, config.R, std::nullopt};
        const RiccatiSolution riccati = solve_riccati(*target.model, inf_cost);
        const OutputFeedbackGain reference =
            output_feedback_gain(*target.model, riccati, std::nullopt);
        rows.emplace_back(report.Z, (gain.gain - reference.gain).norm());
    }
    std::filesystem::create_directories(config.out_dir);
    io::write_file_atomic(config.out_dir / "fig2.csv", format_csv("Z,error", rows));
    return rows;
}

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Impulse-response LQR synthesis with mode transfer"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    bool has_seed = false;
    bool verbose = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
        cmd->add_option("--out", out_override, "output directory (overrides config)");
        cmd->add_option("--seed", seed_override, "seed recorded in reports")
            ->each([&](const std::string&) { has_seed = true; });
        cmd->add_flag("--verbose", verbose, "print progress details");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "write impulse-response CSVs");
    CLI::App* transfer = app.add_subcommand("transfer", "run the transfer pipeline");
    CLI::App* fig1 = app.add_subcommand("fig1", "gain error vs. data length sweep");
    CLI::App* fig2 = app.add_subcommand("fig2", "gain error vs. consistency residual batch");
    for (CLI::App* cmd : {simulate, transfer, fig1, fig2}) {
        add_common(cmd);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        ExperimentConfig config = ExperimentConfig::load(config_path);
        if (!out_override.empty()) {
            config.out_dir = out_override;
        }
        if (has_seed) {
            config.seed = seed_override;
        }
        config.verbose = verbose;

        if (simulate->parsed()) {
            const auto written = run_simulate(config);
            for (const auto& path : written) {
                std::cout << "wrote " << path.string() << "\n";
            }
        } else if (transfer->parsed()) {
            const auto reports = run_transfer(config);
            for (const auto& report : reports) {
                std::cout << report.name << ": Z = " << report.Z
                          << ", modes selected = " << report.selected_modes.size()
                          << ", " << report.wall_time_ms << " ms\n";
                if (config.verbose) {
                    std::cout << "  dictionary:";
                    for (const auto& mode : report.dictionary.entries) {
                        std::cout << " (" << mode.real() << "," << mode.imag() << ")";
                    }
                    std::cout << "\n  selected:";
                    for (const auto& mode : report.selected_modes) {
                        std::cout << " (" << mode.real() << "," << mode.imag() << ")";
                    }
                    std::cout << "\n";
                }
            }
        } else if (fig1->parsed()) {
            const auto curve = run_fig1(config);
            std::cout << "fig1: " << curve.size() << " rows -> "
                      << (config.out_dir / "fig1.csv").string() << "\n";
        } else if (fig2->parsed()) {
            const auto rows = run_fig2(config);
            std::cout << "fig2: " << rows.size() << " rows -> "
                      << (config.out_dir / "fig2.csv").string() << "\n";
        }
        return 0;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataLengthError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const RankError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DictionaryTooSmallError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConjugacyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SampleComplexityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

} // namespace translqr
