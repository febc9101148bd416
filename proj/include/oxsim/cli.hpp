#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oxsim/bench.hpp"
#include "oxsim/relax_model.hpp"

namespace oxsim::cli {

inline constexpr const char* kToolVersion = "1.0.0";

/// Exit codes paired with the single-line machine-parsable error classes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;    // E_PARSE
inline constexpr int kExitConfig = 3;   // E_CONFIG
inline constexpr int kExitForming = 4;  // E_FORMING
inline constexpr int kExitData = 5;     // E_DATA

/// Everything a run needs, resolved from the keyed config file.
struct RunConfig {
    bench::ExperimentConfig experiment;
    bool use_rwd = false;  // algorithm = rwd
    relax::RwdParams rwd;
    int rwd_trajectories = 1000;
    std::vector<std::string> metrics{"cdf", "median", "corr"};
    bench::TargetState metric_state = bench::TargetState::Set;
    std::string config_hash;
};

/// Parses the config file; resolves preset/library/sequence files and the
/// OXSIM_SEED environment override. Throws oxsim::Error on any problem.
RunConfig load_run_config(const std::string& config_path);

struct RunManifest {
    std::string config_hash;
    std::string preset;
    std::uint64_t seed = 0;
    std::string tool_version;
    std::vector<std::string> outputs;
    double wall_clock_s = 0.0;

    [[nodiscard]] std::string to_json() const;
};

/// `oxsim run <config>`: executes the configured pipeline, writes
/// matrix.csv, the selected metric CSVs and SVG plots, and manifest.json
/// into out_dir. On failure returns the nonzero exit code and fills
/// error_line with the machine-parsable message.
int run_command(const std::string& config_path, const std::string& out_dir,
                std::string& error_line);

/// `oxsim plot <matrix.csv> --metric ...`: metric CSVs/SVGs from an
/// existing matrix.
int plot_command(const std::string& matrix_path, const std::vector<std::string>& metrics,
                 bench::TargetState state, analysis::FitLaw law, int bins,
                 const std::string& out_dir, std::string& error_line);

/// `oxsim validate <library.csv>`: parses and validates a pulse library.
int validate_command(const std::string& library_path, std::string& error_line);

/// FNV-1a 64 over the raw bytes, hex-encoded; platform independent.
std::string content_hash(const std::string& bytes);

}  // namespace oxsim::cli
