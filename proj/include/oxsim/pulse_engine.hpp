#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oxsim::pulse {

/// K4200-style hardware bounds on each of the five time segments.
inline constexpr double kMinSegmentS = 20e-9;
inline constexpr double kMaxSegmentS = 1.0;

enum class PulseKind { Measure, Set, Reset, Disturb, LogDelay, LinDelay };

const char* kind_name(PulseKind kind);

/// Library id band assigned to each pulse kind: Measure 0-9, Set 10-19,
/// Reset 20-29, Disturb 30-39, LogDelay 80-89, LinDelay 90-99.
bool kind_matches_id(PulseKind kind, int id);

/// Trapezoidal pulse: five time segments plus an amplitude. A zero
/// amplitude makes a delay pulse.
struct PulseSpec {
    int id = 0;
    PulseKind kind = PulseKind::Measure;
    double t_lead_s = kMinSegmentS;
    double t_rise_s = kMinSegmentS;
    double t_width_s = kMinSegmentS;
    double t_fall_s = kMinSegmentS;
    double t_trail_s = kMinSegmentS;
    double amplitude_v = 0.0;

    [[nodiscard]] double duration_s() const {
        return t_lead_s + t_rise_s + t_width_s + t_fall_s + t_trail_s;
    }
};

struct PulseLibrary {
    std::map<int, PulseSpec> pulses;

    [[nodiscard]] const PulseSpec& at(int id) const;
    [[nodiscard]] bool contains(int id) const { return pulses.count(id) != 0; }
};

/// One of the six sweepable pulse parameters.
enum class PulseParameter { TLead, TRise, TWidth, TFall, TTrail, Amplitude };

const char* parameter_name(PulseParameter p);
bool is_time_parameter(PulseParameter p);

/// Per-cycle linear sweep of one parameter of one pulse in the sequence.
/// Values advance start + k*step and clamp at stop.
struct SweepSpec {
    std::size_t target_pulse_index = 0;  // position in set_phase ++ reset_phase
    PulseParameter parameter = PulseParameter::Amplitude;
    double start = 0.0;
    double step = 0.0;
    double stop = 0.0;

    [[nodiscard]] double value_at(std::size_t cycle_index) const;
    /// Number of distinct levels before the clamp holds.
    [[nodiscard]] std::size_t level_count() const;
};

struct SequenceSpec {
    std::vector<int> set_phase;    // pulse ids
    std::vector<int> reset_phase;  // pulse ids
    std::vector<SweepSpec> sweeps;
    std::size_t n_cycles = 1;
};

struct WaveformMarker {
    double time_s = 0.0;
    std::string label;
};

/// Piecewise-linear voltage signal. Break points are strictly increasing in
/// time; a non-empty waveform starts and ends at 0 V.
struct Waveform {
    struct Point {
        double time_s;
        double voltage_v;
    };
    std::vector<Point> breakpoints;
    std::vector<WaveformMarker> markers;

    [[nodiscard]] double duration_s() const {
        return breakpoints.empty() ? 0.0 : breakpoints.back().time_s;
    }
    /// Linear interpolation; 0 V outside the defined range.
    [[nodiscard]] double voltage_at(double time_s) const;
};

/// Pulses expanded for one cycle, with any sweeps applied.
struct ExpandedCycle {
    std::vector<PulseSpec> set_pulses;
    std::vector<PulseSpec> reset_pulses;
};

/// Throws SegmentOutOfBounds / KindIdMismatch naming the offending field.
void validate_pulse(const PulseSpec& pulse);

/// Parses the CSV pulse library (header
/// `id,kind,t_lead_s,t_rise_s,t_width_s,t_fall_s,t_trail_s,amplitude_v`,
/// `#` comment lines permitted). Throws DuplicateId, SegmentOutOfBounds,
/// KindIdMismatch or MalformedRow with the offending line number.
PulseLibrary parse_pulse_library(std::string_view csv_text);

/// Canonical CSV form; parse(serialize(lib)) == lib field for field.
std::string serialize_pulse_library(const PulseLibrary& library);

/// Parses the keyed sequence file (`set_phase = 0,10,80`, `reset_phase = ...`,
/// `sweep = <index>:<param>:<start>:<step>:<stop>`, `cycles = N`) and
/// validates it against the library.
SequenceSpec parse_sequence(std::string_view text, const PulseLibrary& library);

std::string serialize_sequence(const SequenceSpec& sequence);

/// Checks phase ids resolve and sweeps are well formed (step != 0, finite
/// level count, swept time values inside the segment bounds).
void validate_sequence(const SequenceSpec& sequence, const PulseLibrary& library);

/// Concrete pulse lists for the given cycle with swept parameters applied
/// (clamped at stop). Throws SweepOutOfBounds if a swept time segment
/// leaves [20 ns, 1 s].
ExpandedCycle expand_sweep(const SequenceSpec& sequence, const PulseLibrary& library,
                           std::size_t cycle_index);

/// Concatenates per-pulse trapezoids into one waveform. Markers tag each
/// pulse's flat-top begin/end plus a `measure` marker at the flat-top
/// midpoint of Measure pulses.
Waveform render_waveform(std::span<const PulseSpec> pulses);

}  // namespace oxsim::pulse
