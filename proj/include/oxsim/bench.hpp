#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oxsim/hourglass.hpp"
#include "oxsim/pulse_engine.hpp"

namespace oxsim::bench {

/// Reference gate drive of the POR conditions (1.15 V -> 50 uA).
inline constexpr double kReferenceGateV = 1.15;
inline constexpr double kResetGateV = 1.5;
inline constexpr double kReferenceComplianceA = 50e-6;
inline constexpr double kDefaultFormingRampTopV = 3.5;

/// Series NMOS of the 1T1R cell. Quadratic saturation current sets the
/// compliance; the on-resistance scales inversely with gate overdrive and
/// derates with temperature.
struct AccessTransistor {
    double v_t = 0.5;          // V
    double k_gain = 1.1834e-4; // A/V^2, calibrated for 50 uA at Vg = 1.15 V
    double r_on_0 = 5000.0;    // ohm at the reference gate drive, 298 K
    double temp_coeff = 2e-3;  // fractional R_on increase per kelvin

    void validate() const;
};

/// Saturation (compliance) current at the given gate drive. Throws
/// SubThreshold for v_gate <= v_t.
double compliance_current(double v_gate, double t_kelvin, const AccessTransistor& tr);

/// On-resistance in the linear regime at the given gate drive.
double transistor_r_on(double v_gate, double t_kelvin, const AccessTransistor& tr);

/// Gate voltage that yields the requested compliance at temperature
/// (the per-temperature trim of the POR conditions).
double gate_for_compliance(double i_target, double t_kelvin, const AccessTransistor& tr);

/// Voltage across the RME after the series divider with R_on; for positive
/// (SET) polarity the transistor additionally clamps the current at its
/// compliance value.
double partition_voltage(double v_applied, const hourglass::CellState& state,
                         const AccessTransistor& tr, double v_gate, double t_kelvin,
                         const hourglass::HourglassParams& p);

/// Bias model of the full 1T1R series stack, for driving waveforms.
hourglass::BiasModel transistor_bias(const hourglass::HourglassParams& p,
                                     const AccessTransistor& tr, double v_gate,
                                     double t_kelvin, bool compliance_clamp);

/// Log-spaced resistance monitoring instants, seconds after programming.
struct ReadoutSchedule {
    std::vector<double> times_s;

    void validate() const;  // strictly increasing, positive
    [[nodiscard]] std::size_t size() const { return times_s.size(); }
};

/// POR schedule: nine log-spaced readouts from 100 us to 1 s.
ReadoutSchedule por_schedule();

/// POR pulse library: readout, SET, RESET and a log-delay placeholder.
pulse::PulseLibrary por_library();

/// POR sequence: measure/program/delay per phase.
pulse::SequenceSpec por_sequence(std::size_t n_cycles);

enum class Algorithm { SP, ISP, FSP };
enum class TargetState { Set, Reset };

const char* algorithm_name(Algorithm a);
const char* state_name(TargetState s);

/// Linear level stepping of the verified algorithms (levels clamp at stop).
struct SweepRange {
    double start = 0.0;
    double step = 0.0;
    double stop = 0.0;

    [[nodiscard]] int length() const;
    [[nodiscard]] double level(int attempt) const;  // attempt 0-based, clamped
};

struct ExperimentConfig {
    std::string preset = "hfo2";
    hourglass::HourglassParams params;  // resolved material parameters
    AccessTransistor transistor;
    int n_cells = 5;
    int n_cycles = 1000;
    double temperature_k = 298.0;
    ReadoutSchedule schedule = por_schedule();
    pulse::PulseLibrary library = por_library();
    pulse::SequenceSpec sequence = por_sequence(1000);
    double set_threshold_ohm = 20e3;     // verify: R <= threshold
    double reset_threshold_ohm = 200e3;  // verify: R >= threshold
    Algorithm algorithm = Algorithm::SP;
    int max_attempts = 10;  // FSP
    std::uint64_t master_seed = 42;
    double target_compliance_a = kReferenceComplianceA;
    double forming_ramp_top_v = kDefaultFormingRampTopV;
    SweepRange isp_set_gate{0.8, 0.025, 1.3};     // reference WL verify sweep
    SweepRange isp_reset_bl{-1.0, -0.1, -2.0};    // reference BL verify sweep
    int threads = 0;  // 0 = hardware concurrency

    void validate() const;
};

/// One resistance sample. readout_index 0 is the RD#0 row: the pre-program
/// check for SP runs and the final verify read for ISP/FSP runs, both at
/// t_after_program_s = 0; indices 1..N follow the schedule.
struct ReadoutRow {
    int cell_id = 0;
    int cycle = 0;
    TargetState target_state = TargetState::Set;
    int readout_index = 0;
    double t_after_program_s = 0.0;
    double resistance_ohm = 0.0;
    bool verify_passed = true;
    int attempts_used = 1;
};

struct ReadoutMatrix {
    std::vector<ReadoutRow> rows;
};

/// Unverified single-pulse cycling: form once per cell, then per cycle and
/// per polarity read RD#0, apply the programming pulses, and track the
/// relaxation at every schedule time (zero-bias kinetics in between).
ReadoutMatrix run_single_pulse(const ExperimentConfig& cfg);

/// Program-and-verify cycling. ISP steps the SET gate / RESET bit-line
/// level per attempt; FSP repeats the fixed POR pulse up to max_attempts.
/// Exhausted cycles keep their best-effort state and are marked failed.
ReadoutMatrix run_verified(const ExperimentConfig& cfg);

struct IvPoint {
    double v = 0.0;
    double i = 0.0;
    bool ascending = true;  // sweep direction at this sample
};

struct DcCurves {
    std::vector<IvPoint> forming;      // 0 -> ramp top
    std::vector<IvPoint> set_branch;   // 0 -> +v_set_max -> 0, from HRS
    std::vector<IvPoint> reset_branch; // 0 -> -v_reset_max -> 0, from LRS
};

/// Quasi-static DC characterization of a fresh cell: forming ramp, then a
/// RESET half-loop and a SET half-loop with per-step kinetic relaxation.
DcCurves dc_cycle(const hourglass::HourglassParams& p, const AccessTransistor& tr,
                  double forming_ramp_top_v, Rng& rng, double v_set_max = 1.5,
                  double v_reset_max = -1.5);

struct EndurancePoint {
    int cycle = 0;  // 1-based
    double r_set_ohm = 0.0;
    double r_reset_ohm = 0.0;
};

struct EnduranceDecade {
    int first_cycle = 0;  // decade [first_cycle, last_cycle]
    int last_cycle = 0;
    double median_set_ohm = 0.0;
    double median_reset_ohm = 0.0;
};

struct EnduranceSeries {
    std::vector<EndurancePoint> points;
    std::vector<EnduranceDecade> decades;
};

/// SP cycling without schedule readouts; one read per state per cycle and
/// per-decade medians.
EnduranceSeries run_endurance(const ExperimentConfig& cfg, int max_cycles);

}  // namespace oxsim::bench
