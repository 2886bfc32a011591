#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "translqr/experiment.hpp"
#include "support.hpp"

using namespace translqr;
namespace ts = translqr::testsupport;
namespace fs = std::filesystem;

namespace {

std::string matrix_json(const Eigen::MatrixXd& M) {
    std::ostringstream out;
    out.precision(17);
    out << "[";
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        out << (r ? "," : "") << "[";
        for (Eigen::Index c = 0; c < M.cols(); ++c) {
            out << (c ? "," : "") << M(r, c);
        }
        out << "]";
    }
    out << "]";
    return out.str();
}

std::string model_json(const StateSpaceModel& model) {
    return "{\"A\":" + matrix_json(model.A) + ",\"B\":" + matrix_json(model.B) +
           ",\"C\":" + matrix_json(model.C) + "}";
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "translqr_exp" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Config with the exact-containment fixture inline.
fs::path write_fixture_config(const fs::path& dir, const std::string& extra = "") {
    const auto fixture = ts::exact_mode_fixture();
    std::ofstream out(dir / "config.json");
    out << "{\n"
        << "  \"name\": \"fixture\",\n"
        << "  \"n\": 3,\n"
        << "  \"T0\": 4,\n"
        << "  \"T1\": 6,\n"
        << "  \"horizon\": 40,\n"
        << "  \"cost\": {\"Q\": [[4.0]], \"R\": [[1.0]]},\n"
        << "  \"seed\": 7,\n"
        << "  \"out_dir\": \"" << (dir / "out").string() << "\",\n"
        << "  \"target\": " << model_json(fixture.target) << ",\n"
        << "  \"sources\": [" << model_json(fixture.source1) << ", "
        << model_json(fixture.source2) << "]" << (extra.empty() ? "" : ",\n" + extra) << "\n"
        << "}\n";
    return dir / "config.json";
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(TRANSLQR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("config loading: errors are typed and named") {
    CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.json"), IoError);

    const auto dir = fresh_dir("badjson");
    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK_THROWS_AS(ExperimentConfig::load(dir / "broken.json"), ConfigError);

    std::ofstream(dir / "both.json")
        << "{\"n\":3,\"cost\":{\"Q\":[[1]],\"R\":[[1]]},"
        << "\"target\":{\"A\":[[1]],\"B\":[[1]],\"C\":[[1]],\"trajectory\":\"x.csv\"}}";
    CHECK_THROWS_AS(ExperimentConfig::load(dir / "both.json"), ConfigError);

    std::ofstream(dir / "nmismatch.json")
        << "{\"n\":3,\"N\":2,\"cost\":{\"Q\":[[1]],\"R\":[[1]]},\"sources\":["
        << "{\"trajectory\":\"a.csv\"}]}";
    CHECK_THROWS_AS(ExperimentConfig::load(dir / "nmismatch.json"), ConfigError);
}

TEST_CASE("run_simulate: writes the expected CSVs, deterministically") {
    const auto dir = fresh_dir("simulate");
    const auto config_path = write_fixture_config(dir);
    auto config = ExperimentConfig::load(config_path);

    const auto written = run_simulate(config);
    REQUIRE(written.size() == 3);
    CHECK(fs::exists(dir / "out" / "target.csv"));
    CHECK(fs::exists(dir / "out" / "source_1.csv"));
    CHECK(fs::exists(dir / "out" / "source_2.csv"));

    // Target file holds T0 = 4 samples; sources hold T1 = 6.
    CHECK(read_impulse_csv(dir / "out" / "target.csv").length() == 4);
    CHECK(read_impulse_csv(dir / "out" / "source_1.csv").length() == 6);

    // Re-running produces byte-identical files.
    const std::string before = slurp(dir / "out" / "target.csv");
    run_simulate(config);
    CHECK(slurp(dir / "out" / "target.csv") == before);

    config.T0 = 0;
    CHECK_THROWS_AS(run_simulate(config), DataLengthError);
    config.T0 = 4;
    config.T1 = 5;
    CHECK_THROWS_AS(run_simulate(config), DataLengthError);
}

TEST_CASE("run_simulate: unvalidated model is rejected with the rank condition") {
    const auto dir = fresh_dir("simulate_bad");
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2) * 0.5;
    Eigen::MatrixXd B(2, 1);
    B << 1.0, 0.0;
    Eigen::MatrixXd C(1, 2);
    C << 1.0, 1.0;
    std::ofstream(dir / "config.json")
        << "{\"n\":2,\"T0\":3,\"T1\":4,\"cost\":{\"Q\":[[1]],\"R\":[[1]]},"
        << "\"out_dir\":\"" << (dir / "out").string() << "\","
        << "\"target\":" << model_json(StateSpaceModel::create(A, B, C)) << ",\"sources\":[]}";
    const auto config = ExperimentConfig::load(dir / "config.json");
    CHECK_THROWS_WITH_AS(run_simulate(config), doctest::Contains("controllability"),
                         ValidationError);
}

TEST_CASE("run_transfer: inline fixture produces a full report") {
    const auto dir = fresh_dir("transfer");
    const auto config = ExperimentConfig::load(write_fixture_config(dir));
    const auto reports = run_transfer(config);
    REQUIRE(reports.size() == 1);
    const RunReport& report = reports.front();

    CHECK(report.Z <= 1e-10);
    CHECK(report.selected_modes.size() == 3);
    CHECK(report.target_samples == 4);
    REQUIRE(report.closed_loop_cost.has_value());
    REQUIRE(report.model_optimal_cost.has_value());
    CHECK(std::abs(*report.closed_loop_cost - *report.model_optimal_cost) <=
          1e-6 * *report.model_optimal_cost);
    CHECK(!report.gain_error_curve.empty());

    // Written artifacts parse and carry finite numbers.
    CHECK(fs::exists(dir / "out" / "report.json"));
    CHECK(fs::exists(dir / "out" / "gain.csv"));
    const auto j = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
    CHECK(j.at("Z").get<double>() <= 1e-10);
    CHECK(std::isfinite(j.at("closed_loop_cost").get<double>()));
    CHECK(j.at("sample_counts").at("target").get<int>() == 4);
    CHECK(!j.contains("wall_time_ms")); // kept out so reruns are byte-identical
}

TEST_CASE("run_transfer: file-based target works without model extras") {
    const auto dir = fresh_dir("transfer_files");
    auto config = ExperimentConfig::load(write_fixture_config(dir));
    run_simulate(config);

    // Point the target at the written CSV instead of the inline model.
    ExperimentConfig file_config = config;
    file_config.target = SystemSpec{std::nullopt, dir / "out" / "target.csv"};
    file_config.out_dir = dir / "out_files";
    const auto reports = run_transfer(file_config);
    REQUIRE(reports.size() == 1);
    CHECK(reports.front().Z <= 1e-10);
    CHECK(!reports.front().closed_loop_cost.has_value());
    CHECK(reports.front().gain_error_curve.empty());

    // A missing file names the path.
    file_config.target = SystemSpec{std::nullopt, dir / "missing.csv"};
    CHECK_THROWS_WITH_AS(run_transfer(file_config), doctest::Contains("missing.csv"), IoError);
}

TEST_CASE("run_transfer: byte-identical outputs across reruns") {
    const auto dir = fresh_dir("transfer_det");
    const auto config = ExperimentConfig::load(write_fixture_config(dir));
    run_transfer(config);
    const std::string report1 = slurp(dir / "out" / "report.json");
    const std::string gain1 = slurp(dir / "out" / "gain.csv");
    run_transfer(config);
    CHECK(slurp(dir / "out" / "report.json") == report1);
    CHECK(slurp(dir / "out" / "gain.csv") == gain1);
}

TEST_CASE("run_fig1: decaying curve, single-point grid, exact-data mode") {
    const auto dir = fresh_dir("fig1");
    const auto config_path = write_fixture_config(dir, "  \"fig1_T_grid\": [10, 20, 30, 40]");
    auto config = ExperimentConfig::load(config_path);

    const auto curve = run_fig1(config);
    REQUIRE(curve.size() == 4);
    CHECK(curve.front().second > curve.back().second);
    CHECK(fs::exists(dir / "out" / "fig1.csv"));
    {
        std::ifstream in(dir / "out" / "fig1.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header == "T,error");
    }

    config.fig1_grid = {25};
    const auto single = run_fig1(config);
    REQUIRE(single.size() == 1);
    CHECK(single.front().first == 25);

    // Exact model data bypasses the transfer stage; the exact-containment
    // reconstruction agrees with it wherever the error is well above the
    // reconstruction noise floor.
    config.fig1_grid = {10, 20, 30, 40};
    config.fig1_exact_data = true;
    const auto exact = run_fig1(config);
    CHECK(exact.front().second > exact.back().second);
    for (std::size_t i = 0; i < exact.size(); ++i) {
        if (exact[i].second > 1e-8 && curve[i].second > 1e-8) {
            CHECK(std::abs(std::log10(exact[i].second) - std::log10(curve[i].second)) <= 1.0);
        }
    }

    // No inline model: the reference gain cannot be formed.
    ExperimentConfig no_model = config;
    no_model.target = SystemSpec{std::nullopt, dir / "out" / "target.csv"};
    run_simulate(config);
    CHECK_THROWS_AS(run_fig1(no_model), ConfigError);
}

TEST_CASE("run_transfer: batch mode writes one report per target") {
    const auto dir = fresh_dir("transfer_batch");
    const auto fixture = ts::exact_mode_fixture();
    Eigen::MatrixXd bent_A = fixture.target.A;
    bent_A(0, 0) += 0.01;
    const auto bent = StateSpaceModel::create(bent_A, fixture.target.B, fixture.target.C);
    const std::string targets =
        "  \"targets\": [" + model_json(fixture.target) + ", " + model_json(bent) + "]";
    const auto config = ExperimentConfig::load(write_fixture_config(dir, targets));
    const auto reports = run_transfer(config);
    REQUIRE(reports.size() == 2);
    CHECK(fs::exists(dir / "out" / "report_1.json"));
    CHECK(fs::exists(dir / "out" / "report_2.json"));
    CHECK(fs::exists(dir / "out" / "gain_1.csv"));
    CHECK(fs::exists(dir / "out" / "gain_2.csv"));
    CHECK(reports[0].Z <= 1e-10);
    CHECK(reports[1].Z > reports[0].Z); // the perturbed target cannot score zero
}

TEST_CASE("run_fig2: identical targets give identical rows") {
    const auto dir = fresh_dir("fig2");
    const auto fixture = ts::exact_mode_fixture();
    const std::string targets = "  \"targets\": [" + model_json(fixture.target) + ", " +
                                model_json(fixture.target) + "]";
    auto config = ExperimentConfig::load(write_fixture_config(dir, targets));
    const auto rows = run_fig2(config);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].first == rows[1].first);
    CHECK(rows[0].second == rows[1].second);
    CHECK(fs::exists(dir / "out" / "fig2.csv"));
    {
        std::ifstream in(dir / "out" / "fig2.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header == "Z,error");
    }

    config.targets.pop_back();
    CHECK_THROWS_AS(run_fig2(config), ConfigError);
}

TEST_CASE("cli: exit codes follow the error contract") {
    const auto dir = fresh_dir("cli");
    const auto config_path = write_fixture_config(dir);

    // Clean run.
    CHECK(run_cli("transfer --config " + config_path.string()) == 0);

    // Missing config file -> data error.
    CHECK(run_cli("transfer --config " + (dir / "absent.json").string()) == 1);

    // Missing trajectory file -> data error.
    std::ofstream(dir / "missing_traj.json")
        << "{\"n\":3,\"T0\":4,\"T1\":6,\"cost\":{\"Q\":[[4]],\"R\":[[1]]},"
        << "\"out_dir\":\"" << (dir / "out2").string() << "\","
        << "\"target\":{\"trajectory\":\"" << (dir / "gone.csv").string() << "\"},"
        << "\"sources\":[{\"trajectory\":\"" << (dir / "gone2.csv").string() << "\"}]}";
    CHECK(run_cli("transfer --config " + (dir / "missing_traj.json").string()) == 1);

    // Target head of length n -> sample-complexity error.
    const auto short_head = fresh_dir("cli_short");
    auto config = ExperimentConfig::load(config_path);
    ExperimentConfig short_config = config;
    short_config.T0 = 3;
    {
        const auto fixture = ts::exact_mode_fixture();
        std::ofstream out(short_head / "config.json");
        out << "{\"n\":3,\"T0\":3,\"T1\":6,\"cost\":{\"Q\":[[4]],\"R\":[[1]]},"
            << "\"out_dir\":\"" << (short_head / "out").string() << "\","
            << "\"target\":" << model_json(fixture.target) << ","
            << "\"sources\":[" << model_json(fixture.source1) << ","
            << model_json(fixture.source2) << "]}";
    }
    CHECK(run_cli("transfer --config " + (short_head / "config.json").string()) == 3);

    // A zero target mode makes the mode basis rank deficient -> rank error.
    const auto rank_dir = fresh_dir("cli_rank");
    {
        const auto zero_target = ts::system_with_real_modes({0.0, 0.4, 0.9}, 404);
        const auto source = ts::system_with_real_modes({0.0, 0.4, 0.9}, 505);
        std::ofstream out(rank_dir / "config.json");
        out << "{\"n\":3,\"T0\":4,\"T1\":6,\"cost\":{\"Q\":[[4]],\"R\":[[1]]},"
            << "\"out_dir\":\"" << (rank_dir / "out").string() << "\","
            << "\"target\":" << model_json(zero_target) << ","
            << "\"sources\":[" << model_json(source) << "]}";
    }
    CHECK(run_cli("transfer --config " + (rank_dir / "config.json").string()) == 2);
}

TEST_CASE("cli: repeated runs are byte-identical") {
    const auto dir = fresh_dir("cli_det");
    const auto config_path = write_fixture_config(dir);
    const std::string out1 = (dir / "o1").string();
    const std::string out2 = (dir / "o2").string();
    REQUIRE(run_cli("transfer --config " + config_path.string() + " --out " + out1) == 0);
    REQUIRE(run_cli("transfer --config " + config_path.string() + " --out " + out2) == 0);
    CHECK(slurp(fs::path(out1) / "report.json") == slurp(fs::path(out2) / "report.json"));
    CHECK(slurp(fs::path(out1) / "gain.csv") == slurp(fs::path(out2) / "gain.csv"));

    REQUIRE(run_cli("simulate --config " + config_path.string() + " --out " + out1) == 0);
    REQUIRE(run_cli("simulate --config " + config_path.string() + " --out " + out2) == 0);
    CHECK(slurp(fs::path(out1) / "target.csv") == slurp(fs::path(out2) / "target.csv"));
}

TEST_CASE("cli: --seed override lands in the report") {
    const auto dir = fresh_dir("cli_seed");
    const auto config_path = write_fixture_config(dir);
    const std::string out = (dir / "seeded").string();
    REQUIRE(run_cli("transfer --config " + config_path.string() + " --out " + out +
                    " --seed 12345") == 0);
    const auto j = nlohmann::json::parse(slurp(fs::path(out) / "report.json"));
    CHECK(j.at("seed").get<std::uint64_t>() == 12345);
}
