#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "oxsim/analysis.hpp"
#include "oxsim/cli.hpp"
#include "oxsim/csv.hpp"
#include "oxsim/errors.hpp"
#include "oxsim/presets.hpp"

using namespace oxsim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("oxsim_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string small_sp_config() {
    return "preset = hfo2\n"
           "cells = 2\n"
           "cycles = 4\n"
           "algorithm = sp\n"
           "seed = 42\n"
           "threads = 1\n"
           "metrics = cdf,median,corr\n";
}

}  // namespace

TEST_CASE("run command produces the full output set") {
    TempDir dir("run");
    const fs::path config = dir.path / "run.cfg";
    csv::write_text_file(config.string(), small_sp_config());
    const fs::path out = dir.path / "out";

    std::string error_line;
    const int code = cli::run_command(config.string(), out.string(), error_line);
    REQUIRE(code == cli::kExitOk);

    const auto matrix = csv::read_readout_matrix_file((out / "matrix.csv").string());
    // cells * cycles * 2 states * (1 + 9 schedule readouts)
    CHECK(matrix.rows.size() == 2u * 4u * 2u * 10u);

    const std::string manifest = csv::read_text_file((out / "manifest.json").string());
    for (const char* name :
         {"matrix.csv", "cdf_set.csv", "cdf_set.svg", "median_set.csv", "median_set.svg",
          "corr_set.csv", "corr_set.svg", "scatter_set.svg"}) {
        CHECK(manifest.find(name) != std::string::npos);
        CHECK(fs::exists(out / name));
    }
    CHECK(manifest.find("config_hash") != std::string::npos);
    CHECK(manifest.find("fnv1a64-") != std::string::npos);

    // CDF family: one curve per readout (RD#0 plus the nine schedule times)
    const std::string svg = csv::read_text_file((out / "cdf_set.svg").string());
    std::size_t curves = 0;
    std::size_t pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
        ++curves;
        pos += 9;
    }
    CHECK(curves == 10);
}

TEST_CASE("byte-identical rerun with the same config and seed") {
    TempDir dir("rerun");
    const fs::path config = dir.path / "run.cfg";
    csv::write_text_file(config.string(), small_sp_config());

    std::string error_line;
    REQUIRE(cli::run_command(config.string(), (dir.path / "a").string(), error_line) == 0);
    REQUIRE(cli::run_command(config.string(), (dir.path / "b").string(), error_line) == 0);

    for (const char* name : {"matrix.csv", "cdf_set.csv", "cdf_set.svg", "median_set.csv",
                             "median_set.svg", "corr_set.csv", "corr_set.svg",
                             "scatter_set.svg"}) {
        const std::string a = csv::read_text_file((dir.path / "a" / name).string());
        const std::string b = csv::read_text_file((dir.path / "b" / name).string());
        CHECK(a == b);
    }
}

TEST_CASE("OXSIM_SEED overrides the configured seed") {
    TempDir dir("seedenv");
    const fs::path config = dir.path / "run.cfg";
    csv::write_text_file(config.string(), small_sp_config());

    std::string error_line;
    REQUIRE(cli::run_command(config.string(), (dir.path / "a").string(), error_line) == 0);
    setenv("OXSIM_SEED", "777", 1);
    REQUIRE(cli::run_command(config.string(), (dir.path / "b").string(), error_line) == 0);
    unsetenv("OXSIM_SEED");

    const std::string a = csv::read_text_file((dir.path / "a" / "matrix.csv").string());
    const std::string b = csv::read_text_file((dir.path / "b" / "matrix.csv").string());
    CHECK(a != b);
    const std::string manifest = csv::read_text_file((dir.path / "b" / "manifest.json").string());
    CHECK(manifest.find("\"seed\": 777") != std::string::npos);
}

TEST_CASE("missing library file maps to E_CONFIG") {
    TempDir dir("badlib");
    const fs::path config = dir.path / "run.cfg";
    csv::write_text_file(config.string(),
                         small_sp_config() + "library = /nonexistent/lib.csv\n");
    std::string error_line;
    const int code = cli::run_command(config.string(), (dir.path / "out").string(), error_line);
    CHECK(code != 0);
    // file-open problems surface as a single-line machine-parsable error
    CHECK(error_line.find("E_") == 0);

    std::string error2;
    const int code2 = cli::run_command("/nonexistent/cfg", (dir.path / "out").string(), error2);
    CHECK(code2 == cli::kExitConfig);
    CHECK(error2.rfind("E_CONFIG:", 0) == 0);
}

TEST_CASE("parse errors map to E_PARSE") {
    TempDir dir("badpulse");
    const fs::path lib = dir.path / "lib.csv";
    csv::write_text_file(lib.string(),
                         "id,kind,t_lead_s,t_rise_s,t_width_s,t_fall_s,t_trail_s,amplitude_v\n"
                         "10,Set,20e-9,20e-9,10e-9,20e-9,20e-9,2.5\n");
    const fs::path config = dir.path / "run.cfg";
    csv::write_text_file(config.string(), small_sp_config() + "library = " + lib.string() +
                                              "\n");
    std::string error_line;
    const int code = cli::run_command(config.string(), (dir.path / "out").string(), error_line);
    CHECK(code == cli::kExitParse);
    CHECK(error_line.rfind("E_PARSE:", 0) == 0);

    // validate shares the same mapping
    std::string validate_error;
    CHECK(cli::validate_command(lib.string(), validate_error) == cli::kExitParse);
}

TEST_CASE("validate accepts a healthy library") {
    TempDir dir("oklib");
    const fs::path lib = dir.path / "lib.csv";
    csv::write_text_file(lib.string(),
                         "id,kind,t_lead_s,t_rise_s,t_width_s,t_fall_s,t_trail_s,amplitude_v\n"
                         "0,Measure,10e-6,10e-6,100e-6,10e-6,10e-6,0.1\n"
                         "10,Set,20e-9,20e-9,100e-9,20e-9,20e-9,2.5\n");
    std::string error_line;
    CHECK(cli::validate_command(lib.string(), error_line) == cli::kExitOk);
}

TEST_CASE("rwd source emits an analysis-ready matrix") {
    TempDir dir("rwd");
    const fs::path config = dir.path / "run.cfg";
    csv::write_text_file(config.string(),
                         "algorithm = rwd\n"
                         "trajectories = 400\n"
                         "rwd_mu = 0.05\n"
                         "rwd_sigma_step = 0.04\n"
                         "rwd_r0_median = 4.4\n"
                         "rwd_r0_sigma = 0.08\n"
                         "seed = 11\n"
                         "metrics = median,fit\n");
    std::string error_line;
    const int code = cli::run_command(config.string(), (dir.path / "out").string(), error_line);
    REQUIRE(code == cli::kExitOk);
    const std::string fit = csv::read_text_file((dir.path / "out" / "fit_set.csv").string());
    CHECK(fit.find("logarithmic") != std::string::npos);
    const auto matrix =
        csv::read_readout_matrix_file((dir.path / "out" / "matrix.csv").string());
    CHECK(matrix.rows.size() == 400u * 9u);
}

TEST_CASE("plot command mirrors the analysis metrics") {
    TempDir dir("plot");
    // build a matrix via an rwd run, then plot from the CSV alone
    const fs::path config = dir.path / "run.cfg";
    csv::write_text_file(config.string(),
                         "algorithm = rwd\n"
                         "trajectories = 500\n"
                         "rwd_mu = 0.05\n"
                         "rwd_sigma_step = 0.04\n"
                         "rwd_r0_median = 4.4\n"
                         "rwd_r0_sigma = 0.08\n"
                         "seed = 3\n"
                         "metrics =\n");
    std::string error_line;
    REQUIRE(cli::run_command(config.string(), (dir.path / "out").string(), error_line) == 0);
    const fs::path matrix_path = dir.path / "out" / "matrix.csv";

    SUBCASE("cdf plot draws one curve per readout") {
        const int code = cli::plot_command(matrix_path.string(), {"cdf"},
                                           bench::TargetState::Set,
                                           analysis::FitLaw::Logarithmic, 10,
                                           (dir.path / "plots").string(), error_line);
        REQUIRE(code == cli::kExitOk);
        const std::string svg =
            csv::read_text_file((dir.path / "plots" / "cdf_set.svg").string());
        std::size_t curves = 0;
        std::size_t pos = 0;
        while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
            ++curves;
            pos += 9;
        }
        CHECK(curves == 9);  // one per schedule readout on rwd data
    }

    SUBCASE("scatter annotation matches analysis.pearson to 4 decimals") {
        const int code = cli::plot_command(matrix_path.string(), {"corr"},
                                           bench::TargetState::Set,
                                           analysis::FitLaw::Logarithmic, 10,
                                           (dir.path / "plots2").string(), error_line);
        REQUIRE(code == cli::kExitOk);
        const auto matrix = csv::read_readout_matrix_file(matrix_path.string());
        const double r = analysis::pearson(matrix, bench::TargetState::Set, 1, 9);
        char expected[32];
        std::snprintf(expected, sizeof(expected), "r = %.4f", r);
        const std::string svg =
            csv::read_text_file((dir.path / "plots2" / "scatter_set.svg").string());
        CHECK(svg.find(expected) != std::string::npos);
    }

    SUBCASE("empty metric selection writes no metric files") {
        const int code = cli::plot_command(matrix_path.string(), {}, bench::TargetState::Set,
                                           analysis::FitLaw::Logarithmic, 10,
                                           (dir.path / "plots3").string(), error_line);
        REQUIRE(code == cli::kExitOk);
        const std::string manifest =
            csv::read_text_file((dir.path / "plots3" / "manifest.json").string());
        CHECK(manifest.find("\"outputs\": []") != std::string::npos);
    }

    SUBCASE("malformed matrix maps to E_DATA") {
        const fs::path broken = dir.path / "broken.csv";
        csv::write_text_file(broken.string(), "not,a,matrix\n1,2,3\n");
        const int code = cli::plot_command(broken.string(), {"cdf"}, bench::TargetState::Set,
                                           analysis::FitLaw::Logarithmic, 10,
                                           (dir.path / "plots4").string(), error_line);
        CHECK(code == cli::kExitData);
        CHECK(error_line.rfind("E_DATA:", 0) == 0);
    }
}

TEST_CASE("oxsim binary round trip") {
    TempDir dir("binary");
    const fs::path config = dir.path / "run.cfg";
    csv::write_text_file(config.string(), small_sp_config());
    const std::string out = (dir.path / "out").string();
    const std::string command = std::string(OXSIM_BINARY_PATH) + " run " + config.string() +
                                " --out " + out + " > /dev/null 2>&1";
    REQUIRE(std::system(command.c_str()) == 0);
    CHECK(fs::exists(dir.path / "out" / "matrix.csv"));
    CHECK(fs::exists(dir.path / "out" / "manifest.json"));

    const std::string bad = std::string(OXSIM_BINARY_PATH) + " run /nonexistent.cfg 2> " +
                            (dir.path / "err.txt").string();
    CHECK(std::system(bad.c_str()) != 0);
    const std::string err = csv::read_text_file((dir.path / "err.txt").string());
    CHECK(err.rfind("E_CONFIG:", 0) == 0);
}

TEST_CASE("content hash is stable") {
    CHECK(cli::content_hash("") == "fnv1a64-cbf29ce484222325");
    CHECK(cli::content_hash("a") == cli::content_hash("a"));
    CHECK(cli::content_hash("a") != cli::content_hash("b"));
}

TEST_CASE("shipped preset files match the built-ins") {
    for (const char* name : {"hfo2", "hfalo", "tao"}) {
        const std::string path =
            std::string(OXSIM_SOURCE_DIR) + "/presets/" + name + ".txt";
        const auto from_file = presets::parse_params(csv::read_text_file(path));
        const auto builtin = presets::material(name);
        CHECK(presets::serialize_params(from_file) == presets::serialize_params(builtin));
    }
    // round trip through the keyed text form
    const auto p = presets::material("hfo2");
    const auto reparsed = presets::parse_params(presets::serialize_params(p));
    CHECK(reparsed.e_a_ev == p.e_a_ev);
    CHECK(reparsed.alpha0 == p.alpha0);
    CHECK(reparsed.omega_y_min == p.omega_y_min);
    CHECK(reparsed.n_total == p.n_total);
    CHECK_THROWS_AS(presets::material("unknown"), Error);
    CHECK_THROWS_AS(presets::parse_params("mystery_key = 3\n"), Error);
}

TEST_CASE("waveform trace CSV") {
    const auto p = presets::material("hfo2");
    auto lib = bench::por_library();
    const auto w =
        pulse::render_waveform(std::vector<pulse::PulseSpec>{lib.at(10), lib.at(80)});
    hourglass::CellState s;
    s.formed = true;
    s.n_c = 10;
    s.n_tr = 2;
    s.n_br = p.n_total - 12;
    Rng rng(6);
    std::vector<hourglass::TracePoint> trace;
    hourglass::apply_waveform(s, w, bench::transistor_bias(p, bench::AccessTransistor{},
                                                           bench::kReferenceGateV, 298.0,
                                                           true),
                              p, rng, &trace);
    REQUIRE(!trace.empty());
    const std::string text = csv::write_trace(trace);
    CHECK(text.rfind("t_s,v_rme_v,i_a,n_tr,n_c,n_br\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(trace.size()) + 1);
    // occupancies stay conserved along the trace
    for (const auto& pt : trace) {
        CHECK(pt.n_tr + pt.n_c + pt.n_br == p.n_total);
    }
}

TEST_CASE("remaining metric writers emit well-formed CSVs") {
    TempDir dir("metrics");
    const fs::path config = dir.path / "run.cfg";
    csv::write_text_file(config.string(),
                         "algorithm = rwd\n"
                         "trajectories = 400\n"
                         "rwd_mu = 0.04\n"
                         "rwd_sigma_step = 0.03\n"
                         "rwd_r0_median = 4.4\n"
                         "rwd_r0_sigma = 0.1\n"
                         "seed = 21\n"
                         "metrics =\n");
    std::string error_line;
    REQUIRE(cli::run_command(config.string(), (dir.path / "out").string(), error_line) == 0);
    const fs::path matrix = dir.path / "out" / "matrix.csv";
    const int code = cli::plot_command(matrix.string(), {"subpop", "failed", "residuals"},
                                       bench::TargetState::Set,
                                       analysis::FitLaw::Logarithmic, 10,
                                       (dir.path / "m").string(), error_line);
    REQUIRE(code == cli::kExitOk);
    const std::string subpop = csv::read_text_file((dir.path / "m" / "subpop_set.csv").string());
    CHECK(subpop.rfind("readout_index,t_s,ks_top_mid,ks_top_low,ks_mid_low\n", 0) == 0);
    CHECK(std::count(subpop.begin(), subpop.end(), '\n') == 10);  // header + 9 readouts
    const std::string failed = csv::read_text_file((dir.path / "m" / "failed_set.csv").string());
    CHECK(failed.rfind("readout_index,t_s,failed_fraction\n", 0) == 0);
    const std::string zero_mean = csv::read_text_file(
        (dir.path / "m" / "residuals_zero_mean_set.csv").string());
    CHECK(zero_mean.rfind("readout_index,n,mean,std,within_gate\n", 0) == 0);
    CHECK(fs::exists(dir.path / "m" / "residuals_set.csv"));
}
