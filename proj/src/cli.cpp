#include "oxsim/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>

#include <json.hpp>

#include "oxsim/analysis.hpp"
#include "oxsim/csv.hpp"
#include "oxsim/errors.hpp"
#include "oxsim/presets.hpp"
#include "oxsim/svg.hpp"

namespace oxsim::cli {

namespace {

namespace fs = std::filesystem;
using analysis::FitLaw;
using bench::TargetState;

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t begin = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            const std::string item = trim(s.substr(begin, i - begin));
            if (!item.empty()) out.push_back(item);
            begin = i + 1;
        }
    }
    return out;
}

double to_double(const std::string& value, const std::string& key) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
        throw Error(Errc::ConfigError, "config key '" + key + "': bad number '" + value + "'");
    }
    return out;
}

long long to_int(const std::string& value, const std::string& key) {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
        throw Error(Errc::ConfigError, "config key '" + key + "': bad integer '" + value + "'");
    }
    return out;
}

int exit_code_for(Errc code) {
    switch (code) {
        case Errc::DuplicateId:
        case Errc::SegmentOutOfBounds:
        case Errc::KindIdMismatch:
        case Errc::MalformedRow:
        case Errc::SweepOutOfBounds:
            return kExitParse;
        case Errc::ConfigError:
        case Errc::SubThreshold:
            return kExitConfig;
        case Errc::FormingFailed:
        case Errc::Unformed:
            return kExitForming;
        default:
            return kExitData;
    }
}

const char* exit_tag(int code) {
    switch (code) {
        case kExitParse: return "E_PARSE";
        case kExitConfig: return "E_CONFIG";
        case kExitForming: return "E_FORMING";
        default: return "E_DATA";
    }
}

std::string error_line_for(const Error& e) {
    return std::string(exit_tag(exit_code_for(e.code()))) + ": " + e.what();
}

}  // namespace

std::string content_hash(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), hash, 16);
    (void)ec;
    std::string hex(buf, ptr);
    return "fnv1a64-" + std::string(16 - hex.size(), '0') + hex;
}

RunConfig load_run_config(const std::string& config_path) {
    const std::string text = [&] {
        try {
            return csv::read_text_file(config_path);
        } catch (const Error&) {
            throw Error(Errc::ConfigError, "cannot open config '" + config_path + "'");
        }
    }();
    RunConfig run;
    bench::ExperimentConfig& cfg = run.experiment;

    std::string hash_input = text;
    std::string algorithm = "sp";
    bool preset_resolved = false;
    bool sequence_loaded = false;

    std::size_t pos = 0;
    int line_no = 0;
    std::vector<std::pair<std::string, std::string>> entries;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string line =
            text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(Errc::ConfigError,
                        "config line " + std::to_string(line_no) + ": expected key = value");
        }
        entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }

    // Library first: the sequence validates against it.
    for (const auto& [key, value] : entries) {
        if (key == "library") {
            const std::string lib_text = csv::read_text_file(value);
            cfg.library = pulse::parse_pulse_library(lib_text);
            hash_input += lib_text;
        }
    }

    for (const auto& [key, value] : entries) {
        if (key == "preset") {
            cfg.preset = value;
            cfg.params = presets::material(value);
            preset_resolved = true;
        } else if (key == "preset_file") {
            cfg.preset = value;
            const std::string preset_text = csv::read_text_file(value);
            cfg.params = presets::parse_params(preset_text);
            hash_input += preset_text;
            preset_resolved = true;
        } else if (key == "cells") {
            cfg.n_cells = static_cast<int>(to_int(value, key));
        } else if (key == "cycles") {
            cfg.n_cycles = static_cast<int>(to_int(value, key));
        } else if (key == "temperature_k") {
            cfg.temperature_k = to_double(value, key);
        } else if (key == "algorithm") {
            algorithm = value;
        } else if (key == "seed") {
            cfg.master_seed = static_cast<std::uint64_t>(to_int(value, key));
        } else if (key == "schedule") {
            cfg.schedule.times_s.clear();
            for (const auto& item : split_list(value, ',')) {
                cfg.schedule.times_s.push_back(to_double(item, key));
            }
        } else if (key == "library") {
            // handled above
        } else if (key == "sequence") {
            const std::string seq_text = csv::read_text_file(value);
            cfg.sequence = pulse::parse_sequence(seq_text, cfg.library);
            hash_input += seq_text;
            sequence_loaded = true;
        } else if (key == "set_threshold_ohm") {
            cfg.set_threshold_ohm = to_double(value, key);
        } else if (key == "reset_threshold_ohm") {
            cfg.reset_threshold_ohm = to_double(value, key);
        } else if (key == "max_attempts") {
            cfg.max_attempts = static_cast<int>(to_int(value, key));
        } else if (key == "compliance_a") {
            cfg.target_compliance_a = to_double(value, key);
        } else if (key == "forming_ramp_top_v") {
            cfg.forming_ramp_top_v = to_double(value, key);
        } else if (key == "threads") {
            cfg.threads = static_cast<int>(to_int(value, key));
        } else if (key == "metrics") {
            run.metrics = split_list(value, ',');
        } else if (key == "metric_state") {
            if (value == "set") {
                run.metric_state = TargetState::Set;
            } else if (value == "reset") {
                run.metric_state = TargetState::Reset;
            } else {
                throw Error(Errc::ConfigError, "metric_state must be set or reset");
            }
        } else if (key == "trajectories") {
            run.rwd_trajectories = static_cast<int>(to_int(value, key));
        } else if (key == "rwd_mu") {
            run.rwd.mu = to_double(value, key);
        } else if (key == "rwd_sigma_step") {
            run.rwd.sigma_step = to_double(value, key);
        } else if (key == "rwd_r0_median") {
            run.rwd.r0_median = to_double(value, key);
        } else if (key == "rwd_r0_sigma") {
            run.rwd.r0_sigma = to_double(value, key);
        } else {
            throw Error(Errc::ConfigError, "unknown config key '" + key + "'");
        }
    }

    if (!preset_resolved) {
        cfg.params = presets::material(cfg.preset);
    }
    if (!sequence_loaded) {
        cfg.sequence = bench::por_sequence(static_cast<std::size_t>(cfg.n_cycles));
    }
    cfg.sequence.n_cycles = static_cast<std::size_t>(cfg.n_cycles);

    if (algorithm == "sp") {
        cfg.algorithm = bench::Algorithm::SP;
    } else if (algorithm == "isp") {
        cfg.algorithm = bench::Algorithm::ISP;
    } else if (algorithm == "fsp") {
        cfg.algorithm = bench::Algorithm::FSP;
    } else if (algorithm == "rwd") {
        run.use_rwd = true;
    } else {
        throw Error(Errc::ConfigError, "algorithm must be sp, isp, fsp or rwd");
    }

    if (const char* env_seed = std::getenv("OXSIM_SEED")) {
        cfg.master_seed = static_cast<std::uint64_t>(to_int(env_seed, "OXSIM_SEED"));
    }

    for (const auto& metric : run.metrics) {
        const bool known = metric == "cdf" || metric == "median" || metric == "subpop" ||
                           metric == "corr" || metric == "failed" || metric == "fit" ||
                           metric == "residuals";
        if (!known) {
            throw Error(Errc::ConfigError, "unknown metric '" + metric + "'");
        }
    }
    if (run.use_rwd) {
        run.rwd.validate();
        cfg.schedule.validate();
        if (run.rwd_trajectories < 1) {
            throw Error(Errc::ConfigError, "trajectories must be >= 1");
        }
    } else {
        cfg.validate();
    }
    run.config_hash = content_hash(hash_input);
    return run;
}

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["preset"] = preset;
    j["seed"] = seed;
    j["tool_version"] = tool_version;
    j["outputs"] = outputs;
    j["wall_clock_s"] = wall_clock_s;
    return j.dump(2) + "\n";
}

namespace {

struct MetricWriter {
    const bench::ReadoutMatrix& matrix;
    TargetState state;
    FitLaw law = FitLaw::Logarithmic;
    int bins = 10;
    fs::path out_dir;
    std::vector<std::string>* outputs;

    void emit(const std::string& name, const std::string& content) const {
        const fs::path path = out_dir / name;
        csv::write_text_file(path.string(), content);
        outputs->push_back(name);
    }

    std::string suffix() const { return state == TargetState::Set ? "set" : "reset"; }

    /// Per-readout log10 values of the state, keyed by readout index.
    std::map<int, std::pair<double, std::vector<double>>> per_readout() const {
        std::map<int, std::pair<double, std::vector<double>>> out;
        for (const auto& row : matrix.rows) {
            if (row.target_state != state) continue;
            auto& slot = out[row.readout_index];
            slot.first = row.t_after_program_s;
            slot.second.push_back(std::log10(row.resistance_ohm));
        }
        return out;
    }

    void write_cdf() const {
        std::string content = "readout_index,t_s,log10_r,prob\n";
        svg::Chart chart;
        chart.title = "CDF per readout (" + suffix() + ")";
        chart.x_label = "log10 R (ohm)";
        chart.y_label = "CDF";
        for (const auto& [index, slot] : per_readout()) {
            std::vector<double> sorted = slot.second;
            std::sort(sorted.begin(), sorted.end());
            svg::Series series;
            series.label = index == 0 ? "RD#0" : ("t=" + csv::format_double(slot.first));
            for (std::size_t k = 0; k < sorted.size(); ++k) {
                const double prob =
                    static_cast<double>(k + 1) / static_cast<double>(sorted.size());
                content += std::to_string(index) + "," + csv::format_double(slot.first) + "," +
                           csv::format_double(sorted[k]) + "," + csv::format_double(prob) +
                           "\n";
                series.x.push_back(sorted[k]);
                series.y.push_back(prob);
            }
            chart.series.push_back(std::move(series));
        }
        emit("cdf_" + suffix() + ".csv", content);
        emit("cdf_" + suffix() + ".svg", chart.render());
    }

    void write_median() const {
        const auto stats = analysis::median_std_evolution(matrix, state);
        std::string content = "readout_index,t_s,n,median_log10_r,std_log10_r,delta_median\n";
        svg::Chart median_chart;
        median_chart.title = "Median evolution (" + suffix() + ")";
        median_chart.x_label = "time after program (s)";
        median_chart.y_label = "median log10 R";
        median_chart.log_x = true;
        svg::Chart std_chart;
        std_chart.title = "Std-dev evolution (" + suffix() + ")";
        std_chart.x_label = "time after program (s)";
        std_chart.y_label = "std log10 R";
        std_chart.log_x = true;
        svg::Series med_series;
        svg::Series std_series;
        for (const auto& s : stats) {
            content += std::to_string(s.readout_index) + "," + csv::format_double(s.t_s) + "," +
                       std::to_string(s.n) + "," + csv::format_double(s.median_log10) + "," +
                       csv::format_double(s.std_log10) + "," +
                       csv::format_double(s.delta_median) + "\n";
            if (s.t_s > 0.0) {
                med_series.x.push_back(s.t_s);
                med_series.y.push_back(s.median_log10);
                std_series.x.push_back(s.t_s);
                std_series.y.push_back(s.std_log10);
            }
        }
        median_chart.series.push_back(std::move(med_series));
        std_chart.series.push_back(std::move(std_series));
        emit("median_" + suffix() + ".csv", content);
        emit("median_" + suffix() + ".svg",
             svg::render_panels({median_chart, std_chart}));
    }

    void write_corr() const {
        const auto readouts = per_readout();
        std::vector<int> indices;
        for (const auto& [index, slot] : readouts) {
            if (slot.first > 0.0) indices.push_back(index);
        }
        if (indices.size() < 2) {
            throw Error(Errc::InsufficientData, "corr metric needs >= 2 schedule readouts");
        }
        const int ref = indices.front();
        std::string content = "readout_index,t_s,pearson_r_vs_first\n";
        svg::Chart chart;
        chart.title = "Correlation vs first readout (" + suffix() + ")";
        chart.x_label = "time after program (s)";
        chart.y_label = "pearson r";
        chart.log_x = true;
        svg::Series series;
        for (int index : indices) {
            if (index == ref) continue;
            const double r = analysis::pearson(matrix, state, ref, index);
            const double t = readouts.at(index).first;
            content += std::to_string(index) + "," + csv::format_double(t) + "," +
                       csv::format_double(r) + "\n";
            series.x.push_back(t);
            series.y.push_back(r);
        }
        chart.series.push_back(std::move(series));
        emit("corr_" + suffix() + ".csv", content);
        emit("corr_" + suffix() + ".svg", chart.render());

        // Scatter panel of first vs last readout, annotated with r.
        const int last = indices.back();
        std::map<std::pair<int, int>, std::pair<double, double>> pairs;
        std::map<std::pair<int, int>, std::pair<bool, bool>> seen;
        for (const auto& row : matrix.rows) {
            if (row.target_state != state) continue;
            const std::pair<int, int> key{row.cell_id, row.cycle};
            if (row.readout_index == ref) {
                pairs[key].first = std::log10(row.resistance_ohm);
                seen[key].first = true;
            } else if (row.readout_index == last) {
                pairs[key].second = std::log10(row.resistance_ohm);
                seen[key].second = true;
            }
        }
        svg::Chart scatter;
        scatter.title = "Readout scatter (" + suffix() + ")";
        scatter.x_label = "log10 R at first readout";
        scatter.y_label = "log10 R at last readout";
        svg::Series points;
        points.scatter = true;
        for (const auto& [key, flags] : seen) {
            if (flags.first && flags.second) {
                points.x.push_back(pairs[key].first);
                points.y.push_back(pairs[key].second);
            }
        }
        const double r_annot = analysis::pearson(matrix, state, ref, last);
        double x_min = points.x.empty() ? 0.0 : points.x.front();
        double y_max = points.y.empty() ? 1.0 : points.y.front();
        for (double v : points.x) x_min = std::min(x_min, v);
        for (double v : points.y) y_max = std::max(y_max, v);
        scatter.series.push_back(std::move(points));
        char r_text[32];
        std::snprintf(r_text, sizeof(r_text), "r = %.4f", r_annot);
        scatter.annotations.push_back({r_text, {x_min, y_max}});
        emit("scatter_" + suffix() + ".svg", scatter.render());
    }

    void write_subpop() const {
        const auto track = analysis::subpopulation_track(matrix, state);
        std::string content = "readout_index,t_s,ks_top_mid,ks_top_low,ks_mid_low\n";
        for (const auto& snap : track.snapshots) {
            content += std::to_string(snap.readout_index) + "," +
                       csv::format_double(snap.t_s) + "," +
                       csv::format_double(snap.ks_top_mid) + "," +
                       csv::format_double(snap.ks_top_low) + "," +
                       csv::format_double(snap.ks_mid_low) + "\n";
        }
        emit("subpop_" + suffix() + ".csv", content);
    }

    void write_failed() const {
        const double threshold = state == TargetState::Set ? 20e3 : 200e3;
        const auto points = analysis::failed_fraction(matrix, state, threshold);
        std::string content = "readout_index,t_s,failed_fraction\n";
        for (const auto& p : points) {
            content += std::to_string(p.readout_index) + "," + csv::format_double(p.t_s) + "," +
                       csv::format_double(p.fraction) + "\n";
        }
        emit("failed_" + suffix() + ".csv", content);
    }

    void write_fit() const {
        const auto stats = analysis::median_std_evolution(matrix, state);
        std::vector<double> times;
        std::vector<double> medians;
        for (const auto& s : stats) {
            if (s.t_s > 0.0) {
                times.push_back(s.t_s);
                medians.push_back(s.median_log10);
            }
        }
        const auto ranked = analysis::select_best_fit(times, medians);
        std::string content = "rank,law,r0,mu,t0_s,r_square,rms_error\n";
        int rank = 1;
        for (const auto& fit : ranked) {
            content += std::to_string(rank++) + "," + analysis::law_name(fit.law) + "," +
                       csv::format_double(fit.r0) + "," + csv::format_double(fit.mu) + "," +
                       csv::format_double(fit.t0) + "," + csv::format_double(fit.r_square) +
                       "," + csv::format_double(fit.rms_error) + "\n";
        }
        emit("fit_" + suffix() + ".csv", content);
    }

    void write_residuals() const {
        const auto fits = analysis::binned_fit(matrix, state, bins, law);
        const auto residuals = analysis::extract_residuals(matrix, state, fits);
        std::string content = "cell_id,cycle,readout_index,t_s,residual_log10\n";
        for (const auto& e : residuals.entries) {
            content += std::to_string(e.cell_id) + "," + std::to_string(e.cycle) + "," +
                       std::to_string(e.readout_index) + "," + csv::format_double(e.t_s) +
                       "," + csv::format_double(e.residual) + "\n";
        }
        emit("residuals_" + suffix() + ".csv", content);
        const auto gate = analysis::zero_mean_test(residuals);
        std::string summary = "readout_index,n,mean,std,within_gate\n";
        for (const auto& row : gate) {
            summary += std::to_string(row.readout_index) + "," + std::to_string(row.n) + "," +
                       csv::format_double(row.mean) + "," + csv::format_double(row.stddev) +
                       "," + (row.within_gate ? "1" : "0") + "\n";
        }
        emit("residuals_zero_mean_" + suffix() + ".csv", summary);
    }

    void write_metric(const std::string& metric) const {
        if (metric == "cdf") {
            write_cdf();
        } else if (metric == "median") {
            write_median();
        } else if (metric == "corr") {
            write_corr();
        } else if (metric == "subpop") {
            write_subpop();
        } else if (metric == "failed") {
            write_failed();
        } else if (metric == "fit") {
            write_fit();
        } else if (metric == "residuals") {
            write_residuals();
        } else {
            throw Error(Errc::ConfigError, "unknown metric '" + metric + "'");
        }
    }
};

void write_manifest(const fs::path& out_dir, RunManifest manifest) {
    csv::write_text_file((out_dir / "manifest.json").string(), manifest.to_json());
}

}  // namespace

int run_command(const std::string& config_path, const std::string& out_dir,
                std::string& error_line) {
    const auto started = std::chrono::steady_clock::now();
    try {
        RunConfig run = load_run_config(config_path);
        fs::create_directories(out_dir);

        bench::ReadoutMatrix matrix;
        if (run.use_rwd) {
            matrix = relax::simulate_rwd(run.rwd, run.experiment.schedule,
                                         run.rwd_trajectories, run.experiment.master_seed,
                                         run.metric_state);
        } else if (run.experiment.algorithm == bench::Algorithm::SP) {
            matrix = bench::run_single_pulse(run.experiment);
        } else {
            matrix = bench::run_verified(run.experiment);
        }

        RunManifest manifest;
        manifest.config_hash = run.config_hash;
        manifest.preset = run.experiment.preset;
        manifest.seed = run.experiment.master_seed;
        manifest.tool_version = kToolVersion;

        csv::write_readout_matrix_file((fs::path(out_dir) / "matrix.csv").string(), matrix);
        manifest.outputs.push_back("matrix.csv");

        MetricWriter writer{matrix, run.metric_state, FitLaw::Logarithmic, 10,
                            fs::path(out_dir), &manifest.outputs};
        for (const auto& metric : run.metrics) {
            writer.write_metric(metric);
        }

        manifest.wall_clock_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        write_manifest(out_dir, manifest);
        return kExitOk;
    } catch (const Error& e) {
        error_line = error_line_for(e);
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        error_line = std::string("E_DATA: ") + e.what();
        return kExitData;
    }
}

int plot_command(const std::string& matrix_path, const std::vector<std::string>& metrics,
                 bench::TargetState state, analysis::FitLaw law, int bins,
                 const std::string& out_dir, std::string& error_line) {
    const auto started = std::chrono::steady_clock::now();
    try {
        const bench::ReadoutMatrix matrix = csv::read_readout_matrix_file(matrix_path);
        fs::create_directories(out_dir);
        RunManifest manifest;
        manifest.config_hash = content_hash(csv::read_text_file(matrix_path));
        manifest.preset = "";
        manifest.seed = 0;
        manifest.tool_version = kToolVersion;
        MetricWriter writer{matrix, state, law, bins, fs::path(out_dir), &manifest.outputs};
        for (const auto& metric : metrics) {
            writer.write_metric(metric);
        }
        manifest.wall_clock_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        write_manifest(out_dir, manifest);
        return kExitOk;
    } catch (const Error& e) {
        error_line = error_line_for(e);
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        error_line = std::string("E_DATA: ") + e.what();
        return kExitData;
    }
}

int validate_command(const std::string& library_path, std::string& error_line) {
    try {
        const auto library = pulse::parse_pulse_library(csv::read_text_file(library_path));
        (void)library;
        return kExitOk;
    } catch (const Error& e) {
        error_line = error_line_for(e);
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        error_line = std::string("E_DATA: ") + e.what();
        return kExitData;
    }
}

}  // namespace oxsim::cli
