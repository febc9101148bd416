#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oxsim/analysis.hpp"
#include "oxsim/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"oxsim - virtual OxRAM characterization bench"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    auto* run = app.add_subcommand("run", "execute a configured experiment + analysis");
    run->add_option("config", config_path, "keyed config file")->required();
    run->add_option("-o,--out", out_dir, "output directory");

    std::string matrix_path;
    std::vector<std::string> metrics{"cdf", "median", "corr"};
    std::string state_name = "set";
    std::string law_name = "logarithmic";
    int bins = 10;
    std::string plot_out = ".";
    auto* plot = app.add_subcommand("plot", "metric CSVs and SVG plots from a matrix CSV");
    plot->add_option("matrix", matrix_path, "ReadoutMatrix CSV")->required();
    plot->add_option("--metric", metrics,
                     "metrics: cdf, median, subpop, corr, failed, fit, residuals");
    plot->add_option("--state", state_name, "set or reset");
    plot->add_option("--law", law_name, "linear, exponential, power, logarithmic");
    plot->add_option("--bins", bins, "bins for the residual pipeline");
    plot->add_option("-o,--out", plot_out, "output directory");

    std::string library_path;
    auto* validate = app.add_subcommand("validate", "validate a pulse library CSV");
    validate->add_option("library", library_path, "pulse library CSV")->required();

    CLI11_PARSE(app, argc, argv);

    std::string error_line;
    int code = 0;
    if (run->parsed()) {
        code = oxsim::cli::run_command(config_path, out_dir, error_line);
    } else if (plot->parsed()) {
        oxsim::bench::TargetState state = oxsim::bench::TargetState::Set;
        if (state_name == "reset") {
            state = oxsim::bench::TargetState::Reset;
        } else if (state_name != "set") {
            std::fprintf(stderr, "E_CONFIG: --state must be set or reset\n");
            return oxsim::cli::kExitConfig;
        }
        oxsim::analysis::FitLaw law = oxsim::analysis::FitLaw::Logarithmic;
        if (law_name == "linear") {
            law = oxsim::analysis::FitLaw::Linear;
        } else if (law_name == "exponential") {
            law = oxsim::analysis::FitLaw::Exponential;
        } else if (law_name == "power") {
            law = oxsim::analysis::FitLaw::PowerLaw;
        } else if (law_name != "logarithmic") {
            std::fprintf(stderr, "E_CONFIG: unknown --law '%s'\n", law_name.c_str());
            return oxsim::cli::kExitConfig;
        }
        code = oxsim::cli::plot_command(matrix_path, metrics, state, law, bins, plot_out,
                                        error_line);
    } else if (validate->parsed()) {
        code = oxsim::cli::validate_command(library_path, error_line);
        if (code == 0) {
            std::printf("ok\n");
        }
    }

    if (code != 0) {
        std::fprintf(stderr, "%s\n", error_line.c_str());
    }
    return code;
}
