#include "oxsim/bench.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <thread>

#include "oxsim/errors.hpp"

namespace oxsim::bench {

using hourglass::BiasModel;
using hourglass::BiasPoint;
using hourglass::CellState;
using hourglass::HourglassParams;

namespace {

constexpr std::uint64_t kFormingStream = 0x464f524dULL;  // per-cell forming draws

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

void AccessTransistor::validate() const {
    if (!(k_gain > 0.0) || !(r_on_0 > 0.0)) {
        throw Error(Errc::ConfigError, "transistor k_gain and r_on_0 must be > 0");
    }
    if (temp_coeff < 0.0) {
        throw Error(Errc::ConfigError, "transistor temp_coeff must be >= 0");
    }
}

double compliance_current(double v_gate, double t_kelvin, const AccessTransistor& tr) {
    if (v_gate <= tr.v_t) {
        throw Error(Errc::SubThreshold, "gate drive below threshold");
    }
    const double overdrive = v_gate - tr.v_t;
    const double derate = 1.0 + tr.temp_coeff * (t_kelvin - 298.0);
    return tr.k_gain * overdrive * overdrive / derate;
}

double transistor_r_on(double v_gate, double t_kelvin, const AccessTransistor& tr) {
    if (v_gate <= tr.v_t) {
        throw Error(Errc::SubThreshold, "gate drive below threshold");
    }
    const double derate = 1.0 + tr.temp_coeff * (t_kelvin - 298.0);
    return tr.r_on_0 * (kReferenceGateV - tr.v_t) / (v_gate - tr.v_t) * derate;
}

double gate_for_compliance(double i_target, double t_kelvin, const AccessTransistor& tr) {
    const double derate = 1.0 + tr.temp_coeff * (t_kelvin - 298.0);
    return tr.v_t + std::sqrt(i_target * derate / tr.k_gain);
}

double partition_voltage(double v_applied, const CellState& state, const AccessTransistor& tr,
                         double v_gate, double t_kelvin, const HourglassParams& p) {
    if (!state.formed) {
        throw Error(Errc::Unformed, "partition_voltage requires a formed cell");
    }
    const double r_cell = hourglass::read_resistance(state, p);
    const double r_on = transistor_r_on(v_gate, t_kelvin, tr);
    const double v_rme = v_applied * r_cell / (r_cell + r_on);
    if (v_applied > 0.0) {
        const double i_comp = compliance_current(v_gate, t_kelvin, tr);
        if (v_applied / (r_cell + r_on) > i_comp) {
            return i_comp * r_cell;
        }
    }
    return v_rme;
}

BiasModel transistor_bias(const HourglassParams& p, const AccessTransistor& tr, double v_gate,
                          double t_kelvin, bool compliance_clamp) {
    auto table = std::make_shared<std::vector<double>>();
    table->resize(static_cast<std::size_t>(p.n_total) + 1, 0.0);
    for (int n_c = 1; n_c <= p.n_total; ++n_c) {
        (*table)[static_cast<std::size_t>(n_c)] = hourglass::resistance_of(n_c, p);
    }
    const double r_on = transistor_r_on(v_gate, t_kelvin, tr);
    const double i_comp = compliance_current(v_gate, t_kelvin, tr);
    return [table, r_on, i_comp, compliance_clamp](double v_applied, const CellState& state) {
        const double r_cell = (*table)[static_cast<std::size_t>(state.n_c)];
        const double i_lin = v_applied / (r_cell + r_on);
        if (compliance_clamp && v_applied > 0.0 && i_lin > i_comp) {
            return BiasPoint{i_comp * r_cell, i_comp};
        }
        return BiasPoint{v_applied * r_cell / (r_cell + r_on), i_lin};
    };
}

void ReadoutSchedule::validate() const {
    if (times_s.empty()) {
        throw Error(Errc::ConfigError, "readout schedule is empty");
    }
    double prev = 0.0;
    for (double t : times_s) {
        if (!(t > prev)) {
            throw Error(Errc::ConfigError, "schedule times must be positive and strictly increasing");
        }
        prev = t;
    }
}

ReadoutSchedule por_schedule() {
    return ReadoutSchedule{{1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0}};
}

pulse::PulseLibrary por_library() {
    using pulse::PulseKind;
    using pulse::PulseSpec;
    pulse::PulseLibrary lib;
    lib.pulses.emplace(0, PulseSpec{0, PulseKind::Measure, 10e-6, 10e-6, 100e-6, 10e-6, 10e-6, 0.1});
    lib.pulses.emplace(10, PulseSpec{10, PulseKind::Set, 20e-9, 20e-9, 100e-9, 20e-9, 20e-9, 2.5});
    lib.pulses.emplace(20, PulseSpec{20, PulseKind::Reset, 20e-9, 20e-9, 100e-9, 20e-9, 20e-9, -1.5});
    lib.pulses.emplace(80, PulseSpec{80, PulseKind::LogDelay, 20e-9, 20e-9, 100e-6, 20e-9, 20e-9, 0.0});
    return lib;
}

pulse::SequenceSpec por_sequence(std::size_t n_cycles) {
    pulse::SequenceSpec seq;
    seq.set_phase = {0, 10, 80};
    seq.reset_phase = {0, 20, 80};
    seq.n_cycles = n_cycles;
    return seq;
}

const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::SP: return "sp";
        case Algorithm::ISP: return "isp";
        case Algorithm::FSP: return "fsp";
    }
    return "?";
}

const char* state_name(TargetState s) { return s == TargetState::Set ? "SET" : "RESET"; }

int SweepRange::length() const {
    if (step == 0.0) return 1;
    const double span = (stop - start) / step;
    if (span <= 0.0) return 1;
    return static_cast<int>(std::floor(span + 1e-9)) + 1;
}

double SweepRange::level(int attempt) const {
    const double raw = start + static_cast<double>(attempt) * step;
    if (step > 0.0) return std::min(raw, stop);
    if (step < 0.0) return std::max(raw, stop);
    return start;
}

void ExperimentConfig::validate() const {
    params.validate();
    transistor.validate();
    schedule.validate();
    pulse::validate_sequence(sequence, library);
    if (n_cells < 1 || n_cycles < 1) {
        throw Error(Errc::ConfigError, "cells and cycles must be >= 1");
    }
    if (!(temperature_k > 0.0)) {
        throw Error(Errc::ConfigError, "temperature_k must be > 0");
    }
    if (!(set_threshold_ohm < reset_threshold_ohm)) {
        throw Error(Errc::ConfigError, "set threshold must lie below reset threshold");
    }
    if (max_attempts < 1) {
        throw Error(Errc::ConfigError, "max_attempts must be >= 1");
    }
    if (!(target_compliance_a > 0.0)) {
        throw Error(Errc::ConfigError, "target_compliance_a must be > 0");
    }
}

namespace {

struct RunContext {
    const ExperimentConfig* cfg;
    HourglassParams params;  // with t_ambient overridden by the run temperature
    double v_gate_set;
    BiasModel set_bias;
    BiasModel reset_bias;
    std::vector<BiasModel> isp_gate_bias;  // one per ISP SET attempt level
};

RunContext make_context(const ExperimentConfig& cfg) {
    RunContext ctx;
    ctx.cfg = &cfg;
    ctx.params = cfg.params;
    ctx.params.t_ambient = cfg.temperature_k;
    ctx.v_gate_set = gate_for_compliance(cfg.target_compliance_a, cfg.temperature_k,
                                         cfg.transistor);
    ctx.set_bias = transistor_bias(ctx.params, cfg.transistor, ctx.v_gate_set,
                                   cfg.temperature_k, true);
    ctx.reset_bias = transistor_bias(ctx.params, cfg.transistor, kResetGateV,
                                     cfg.temperature_k, false);
    if (cfg.algorithm == Algorithm::ISP) {
        for (int level = 0; level < cfg.isp_set_gate.length(); ++level) {
            ctx.isp_gate_bias.push_back(transistor_bias(ctx.params, cfg.transistor,
                                                        cfg.isp_set_gate.level(level),
                                                        cfg.temperature_k, true));
        }
    }
    return ctx;
}

std::vector<pulse::PulseSpec> program_pulses(const std::vector<pulse::PulseSpec>& phase) {
    std::vector<pulse::PulseSpec> out;
    for (const auto& p : phase) {
        if (p.kind == pulse::PulseKind::Set || p.kind == pulse::PulseKind::Reset ||
            p.kind == pulse::PulseKind::Disturb) {
            out.push_back(p);
        }
    }
    return out;
}

CellState form_cell(const RunContext& ctx, int cell_id) {
    Rng rng(derive_seed(ctx.cfg->master_seed, static_cast<std::uint64_t>(cell_id),
                        kFormingStream));
    const double i_comp = compliance_current(ctx.v_gate_set, ctx.cfg->temperature_k,
                                             ctx.cfg->transistor);
    return hourglass::form(ctx.params, ctx.cfg->forming_ramp_top_v, i_comp, rng);
}

void schedule_readouts(const RunContext& ctx, CellState& state, int cell_id, int cycle,
                       TargetState target, bool verify_passed, int attempts, Rng& rng,
                       std::vector<ReadoutRow>& rows) {
    double t_prev = 0.0;
    int index = 1;
    for (double t : ctx.cfg->schedule.times_s) {
        hourglass::kmc_step(state, 0.0, t - t_prev, ctx.params, rng);
        rows.push_back({cell_id, cycle, target, index, t,
                        hourglass::read_resistance(state, ctx.params), verify_passed,
                        attempts});
        t_prev = t;
        ++index;
    }
}

std::vector<ReadoutRow> run_cell_single_pulse(const RunContext& ctx, int cell_id) {
    const ExperimentConfig& cfg = *ctx.cfg;
    std::vector<ReadoutRow> rows;
    rows.reserve(static_cast<std::size_t>(cfg.n_cycles) * 2 * (cfg.schedule.size() + 1));
    CellState state = form_cell(ctx, cell_id);
    for (int cycle = 0; cycle < cfg.n_cycles; ++cycle) {
        const auto expanded = pulse::expand_sweep(cfg.sequence, cfg.library,
                                                  static_cast<std::size_t>(cycle));
        for (TargetState target : {TargetState::Set, TargetState::Reset}) {
            const bool is_set = target == TargetState::Set;
            Rng rng(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(cell_id),
                                static_cast<std::uint64_t>(cycle), is_set ? 1 : 2));
            rows.push_back({cell_id, cycle, target, 0, 0.0,
                            hourglass::read_resistance(state, ctx.params), true, 1});
            const auto pulses =
                program_pulses(is_set ? expanded.set_pulses : expanded.reset_pulses);
            const auto waveform = pulse::render_waveform(pulses);
            hourglass::apply_waveform(state, waveform, is_set ? ctx.set_bias : ctx.reset_bias,
                                      ctx.params, rng);
            schedule_readouts(ctx, state, cell_id, cycle, target, true, 1, rng, rows);
        }
    }
    return rows;
}

std::vector<ReadoutRow> run_cell_verified(const RunContext& ctx, int cell_id) {
    const ExperimentConfig& cfg = *ctx.cfg;
    std::vector<ReadoutRow> rows;
    rows.reserve(static_cast<std::size_t>(cfg.n_cycles) * 2 * (cfg.schedule.size() + 1));
    CellState state = form_cell(ctx, cell_id);
    const bool incremental = cfg.algorithm == Algorithm::ISP;

    for (int cycle = 0; cycle < cfg.n_cycles; ++cycle) {
        const auto expanded = pulse::expand_sweep(cfg.sequence, cfg.library,
                                                  static_cast<std::size_t>(cycle));
        for (TargetState target : {TargetState::Set, TargetState::Reset}) {
            const bool is_set = target == TargetState::Set;
            Rng rng(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(cell_id),
                                static_cast<std::uint64_t>(cycle), is_set ? 1 : 2));
            auto pulses = program_pulses(is_set ? expanded.set_pulses : expanded.reset_pulses);
            if (pulses.empty()) {
                throw Error(Errc::ConfigError, "verified phase has no programming pulse");
            }
            const int attempt_cap = incremental
                                        ? (is_set ? cfg.isp_set_gate.length()
                                                  : cfg.isp_reset_bl.length())
                                        : cfg.max_attempts;
            bool passed = false;
            int attempts = 0;
            double resistance = 0.0;
            while (attempts < attempt_cap && !passed) {
                auto attempt_pulses = pulses;
                const BiasModel* bias = is_set ? &ctx.set_bias : &ctx.reset_bias;
                if (incremental) {
                    if (is_set) {
                        // WL sweep: raise the compliance per attempt.
                        bias = &ctx.isp_gate_bias[static_cast<std::size_t>(attempts)];
                    } else {
                        // BL sweep: deepen the RESET amplitude per attempt.
                        const double level = cfg.isp_reset_bl.level(attempts);
                        for (auto& p : attempt_pulses) {
                            if (p.kind == pulse::PulseKind::Reset) p.amplitude_v = level;
                        }
                    }
                }
                const auto waveform = pulse::render_waveform(attempt_pulses);
                hourglass::apply_waveform(state, waveform, *bias, ctx.params, rng);
                resistance = hourglass::read_resistance(state, ctx.params);
                passed = is_set ? resistance <= cfg.set_threshold_ohm
                                : resistance >= cfg.reset_threshold_ohm;
                ++attempts;
            }
            rows.push_back({cell_id, cycle, target, 0, 0.0, resistance, passed, attempts});
            schedule_readouts(ctx, state, cell_id, cycle, target, passed, attempts, rng, rows);
        }
    }
    return rows;
}

template <typename PerCell>
ReadoutMatrix fan_out(const ExperimentConfig& cfg, const RunContext& ctx, PerCell per_cell) {
    std::vector<std::vector<ReadoutRow>> partial(static_cast<std::size_t>(cfg.n_cells));
    unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                       : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min(workers, static_cast<unsigned>(cfg.n_cells)));
    if (workers == 1) {
        for (int cell = 0; cell < cfg.n_cells; ++cell) {
            partial[static_cast<std::size_t>(cell)] = per_cell(ctx, cell);
        }
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                try {
                    for (int cell = static_cast<int>(w); cell < cfg.n_cells;
                         cell += static_cast<int>(workers)) {
                        partial[static_cast<std::size_t>(cell)] = per_cell(ctx, cell);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    ReadoutMatrix matrix;
    for (auto& rows : partial) {
        matrix.rows.insert(matrix.rows.end(), rows.begin(), rows.end());
    }
    return matrix;
}

}  // namespace

ReadoutMatrix run_single_pulse(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.algorithm != Algorithm::SP) {
        throw Error(Errc::ConfigError, "run_single_pulse requires algorithm = sp");
    }
    const RunContext ctx = make_context(cfg);
    return fan_out(cfg, ctx, run_cell_single_pulse);
}

ReadoutMatrix run_verified(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.algorithm != Algorithm::ISP && cfg.algorithm != Algorithm::FSP) {
        throw Error(Errc::ConfigError, "run_verified requires algorithm = isp or fsp");
    }
    const RunContext ctx = make_context(cfg);
    return fan_out(cfg, ctx, run_cell_verified);
}

DcCurves dc_cycle(const HourglassParams& p, const AccessTransistor& tr,
                  double forming_ramp_top_v, Rng& rng, double v_set_max,
                  double v_reset_max) {
    constexpr double kStepV = 0.01;
    constexpr double kDwellS = 1e-4;
    DcCurves curves;

    const double v_gate_set = gate_for_compliance(kReferenceComplianceA, p.t_ambient, tr);
    const BiasModel set_bias = transistor_bias(p, tr, v_gate_set, p.t_ambient, true);
    const BiasModel reset_bias = transistor_bias(p, tr, kResetGateV, p.t_ambient, false);
    const double i_comp = compliance_current(v_gate_set, p.t_ambient, tr);

    // Forming ramp: leakage until the sampled V_f, then compliance-limited
    // filament conduction.
    const double v_f = rng.normal(p.v_forming_mean, p.v_forming_sigma);
    CellState state;
    for (double v = 0.0; v <= forming_ramp_top_v + 0.5 * kStepV; v += kStepV) {
        if (!state.formed && v >= v_f) {
            state.formed = true;
            state.n_c = hourglass::constriction_for_resistance(1.0 / i_comp, p);
            state.n_tr = std::min(p.n_tr_cap, p.n_total - state.n_c);
            state.n_br = p.n_total - state.n_c - state.n_tr;
        }
        if (state.formed) {
            hourglass::advance(state, v, kDwellS, set_bias, p, rng);
            curves.forming.push_back({v, set_bias(v, state).i, true});
        } else {
            curves.forming.push_back({v, hourglass::kPristineLeakage, true});
        }
    }
    if (!state.formed) {
        throw Error(Errc::FormingFailed, "forming ramp topped out below the sampled V_f");
    }

    auto half_loop = [&](double v_max, const BiasModel& bias, std::vector<IvPoint>& out) {
        const double direction = v_max >= 0.0 ? 1.0 : -1.0;
        const double mag = std::abs(v_max);
        for (double m = 0.0; m <= mag + 0.5 * kStepV; m += kStepV) {
            const double v = direction * m;
            hourglass::advance(state, v, kDwellS, bias, p, rng);
            out.push_back({v, bias(v, state).i, true});
        }
        for (double m = mag; m >= -0.5 * kStepV; m -= kStepV) {
            const double v = direction * std::max(m, 0.0);
            hourglass::advance(state, v, kDwellS, bias, p, rng);
            out.push_back({v, bias(v, state).i, false});
        }
    };

    // Post-forming LRS: RESET half-loop first, then the SET half-loop.
    half_loop(v_reset_max, reset_bias, curves.reset_branch);
    half_loop(v_set_max, set_bias, curves.set_branch);
    return curves;
}

EnduranceSeries run_endurance(const ExperimentConfig& cfg, int max_cycles) {
    cfg.validate();
    if (cfg.algorithm != Algorithm::SP) {
        throw Error(Errc::ConfigError, "run_endurance requires algorithm = sp");
    }
    if (max_cycles < 1) {
        throw Error(Errc::ConfigError, "max_cycles must be >= 1");
    }
    const RunContext ctx = make_context(cfg);
    EnduranceSeries series;
    for (int cell = 0; cell < cfg.n_cells; ++cell) {
        CellState state = form_cell(ctx, cell);
        for (int cycle = 0; cycle < max_cycles; ++cycle) {
            const auto expanded = pulse::expand_sweep(cfg.sequence, cfg.library,
                                                      static_cast<std::size_t>(cycle));
            EndurancePoint point;
            point.cycle = cycle + 1;
            for (TargetState target : {TargetState::Set, TargetState::Reset}) {
                const bool is_set = target == TargetState::Set;
                Rng rng(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(cell),
                                    static_cast<std::uint64_t>(cycle), is_set ? 1 : 2));
                const auto pulses =
                    program_pulses(is_set ? expanded.set_pulses : expanded.reset_pulses);
                const auto waveform = pulse::render_waveform(pulses);
                hourglass::apply_waveform(state, waveform,
                                          is_set ? ctx.set_bias : ctx.reset_bias, ctx.params,
                                          rng);
                const double r = hourglass::read_resistance(state, ctx.params);
                (is_set ? point.r_set_ohm : point.r_reset_ohm) = r;
            }
            series.points.push_back(point);
        }
    }

    for (int first = 1; first <= max_cycles; first *= 10) {
        const int last = std::min(max_cycles, first * 10 - 1);
        std::vector<double> set_values;
        std::vector<double> reset_values;
        for (const auto& pt : series.points) {
            if (pt.cycle >= first && pt.cycle <= last) {
                set_values.push_back(pt.r_set_ohm);
                reset_values.push_back(pt.r_reset_ohm);
            }
        }
        if (set_values.empty()) break;
        series.decades.push_back({first, last, median_of(set_values), median_of(reset_values)});
        if (last == max_cycles) break;
    }
    return series;
}

}  // namespace oxsim::bench
