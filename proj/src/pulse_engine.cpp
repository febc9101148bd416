#include "oxsim/pulse_engine.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "oxsim/errors.hpp"

namespace oxsim::pulse {

namespace {

constexpr std::string_view kCsvHeader =
    "id,kind,t_lead_s,t_rise_s,t_width_s,t_fall_s,t_trail_s,amplitude_v";

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t begin = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(trim(s.substr(begin, i - begin)));
            begin = i + 1;
        }
    }
    return out;
}

double parse_double(std::string_view field, int line_no, const char* what) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || field.empty()) {
        throw Error(Errc::MalformedRow, "line " + std::to_string(line_no) + ": bad " +
                                            std::string(what) + " '" + std::string(field) + "'");
    }
    return value;
}

int parse_int(std::string_view field, int line_no, const char* what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw Error(Errc::MalformedRow, "line " + std::to_string(line_no) + ": bad " +
                                            std::string(what) + " '" + std::string(field) + "'");
    }
    return value;
}

PulseKind parse_kind(std::string_view field, int line_no) {
    static constexpr std::array<std::pair<std::string_view, PulseKind>, 6> kNames = {{
        {"Measure", PulseKind::Measure},
        {"Set", PulseKind::Set},
        {"Reset", PulseKind::Reset},
        {"Disturb", PulseKind::Disturb},
        {"LogDelay", PulseKind::LogDelay},
        {"LinDelay", PulseKind::LinDelay},
    }};
    for (const auto& [name, kind] : kNames) {
        if (field == name) return kind;
    }
    throw Error(Errc::MalformedRow,
                "line " + std::to_string(line_no) + ": unknown kind '" + std::string(field) + "'");
}

std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

struct SegmentRef {
    const char* name;
    double PulseSpec::* field;
};

constexpr std::array<SegmentRef, 5> kSegments = {{
    {"t_lead_s", &PulseSpec::t_lead_s},
    {"t_rise_s", &PulseSpec::t_rise_s},
    {"t_width_s", &PulseSpec::t_width_s},
    {"t_fall_s", &PulseSpec::t_fall_s},
    {"t_trail_s", &PulseSpec::t_trail_s},
}};

double PulseSpec::* parameter_field(PulseParameter p) {
    switch (p) {
        case PulseParameter::TLead: return &PulseSpec::t_lead_s;
        case PulseParameter::TRise: return &PulseSpec::t_rise_s;
        case PulseParameter::TWidth: return &PulseSpec::t_width_s;
        case PulseParameter::TFall: return &PulseSpec::t_fall_s;
        case PulseParameter::TTrail: return &PulseSpec::t_trail_s;
        case PulseParameter::Amplitude: return &PulseSpec::amplitude_v;
    }
    return &PulseSpec::amplitude_v;
}

}  // namespace

const char* kind_name(PulseKind kind) {
    switch (kind) {
        case PulseKind::Measure: return "Measure";
        case PulseKind::Set: return "Set";
        case PulseKind::Reset: return "Reset";
        case PulseKind::Disturb: return "Disturb";
        case PulseKind::LogDelay: return "LogDelay";
        case PulseKind::LinDelay: return "LinDelay";
    }
    return "?";
}

bool kind_matches_id(PulseKind kind, int id) {
    switch (kind) {
        case PulseKind::Measure: return id >= 0 && id <= 9;
        case PulseKind::Set: return id >= 10 && id <= 19;
        case PulseKind::Reset: return id >= 20 && id <= 29;
        case PulseKind::Disturb: return id >= 30 && id <= 39;
        case PulseKind::LogDelay: return id >= 80 && id <= 89;
        case PulseKind::LinDelay: return id >= 90 && id <= 99;
    }
    return false;
}

const PulseSpec& PulseLibrary::at(int id) const {
    auto it = pulses.find(id);
    if (it == pulses.end()) {
        throw Error(Errc::MalformedRow, "pulse id " + std::to_string(id) + " not in library");
    }
    return it->second;
}

const char* parameter_name(PulseParameter p) {
    switch (p) {
        case PulseParameter::TLead: return "t_lead";
        case PulseParameter::TRise: return "t_rise";
        case PulseParameter::TWidth: return "t_width";
        case PulseParameter::TFall: return "t_fall";
        case PulseParameter::TTrail: return "t_trail";
        case PulseParameter::Amplitude: return "amplitude";
    }
    return "?";
}

bool is_time_parameter(PulseParameter p) { return p != PulseParameter::Amplitude; }

double SweepSpec::value_at(std::size_t cycle_index) const {
    const double raw = start + static_cast<double>(cycle_index) * step;
    if (step > 0.0) return std::min(raw, stop);
    return std::max(raw, stop);
}

std::size_t SweepSpec::level_count() const {
    if (step == 0.0) return 1;
    const double span = (stop - start) / step;
    if (span <= 0.0) return 1;
    return static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
}

void validate_pulse(const PulseSpec& pulse) {
    for (const auto& segment : kSegments) {
        const double value = pulse.*(segment.field);
        if (!(value >= kMinSegmentS && value <= kMaxSegmentS)) {
            throw Error(Errc::SegmentOutOfBounds,
                        "pulse id " + std::to_string(pulse.id) + ": " + segment.name + " = " +
                            format_double(value) + " s outside [2e-08, 1] s");
        }
    }
    if (!kind_matches_id(pulse.kind, pulse.id)) {
        throw Error(Errc::KindIdMismatch, "pulse id " + std::to_string(pulse.id) +
                                              " not in the id range of kind " +
                                              kind_name(pulse.kind));
    }
    if (!std::isfinite(pulse.amplitude_v)) {
        throw Error(Errc::MalformedRow,
                    "pulse id " + std::to_string(pulse.id) + ": non-finite amplitude");
    }
}

PulseLibrary parse_pulse_library(std::string_view csv_text) {
    PulseLibrary library;
    bool header_seen = false;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= csv_text.size()) {
        const std::size_t eol = csv_text.find('\n', pos);
        std::string_view line = csv_text.substr(
            pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? csv_text.size() + 1 : eol + 1;
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line != kCsvHeader) {
                throw Error(Errc::MalformedRow,
                            "line " + std::to_string(line_no) + ": expected header '" +
                                std::string(kCsvHeader) + "'");
            }
            header_seen = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 8) {
            throw Error(Errc::MalformedRow, "line " + std::to_string(line_no) + ": expected 8 fields, got " +
                                                std::to_string(fields.size()));
        }
        PulseSpec pulse;
        pulse.id = parse_int(fields[0], line_no, "id");
        pulse.kind = parse_kind(fields[1], line_no);
        pulse.t_lead_s = parse_double(fields[2], line_no, "t_lead_s");
        pulse.t_rise_s = parse_double(fields[3], line_no, "t_rise_s");
        pulse.t_width_s = parse_double(fields[4], line_no, "t_width_s");
        pulse.t_fall_s = parse_double(fields[5], line_no, "t_fall_s");
        pulse.t_trail_s = parse_double(fields[6], line_no, "t_trail_s");
        pulse.amplitude_v = parse_double(fields[7], line_no, "amplitude_v");
        try {
            validate_pulse(pulse);
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (library.contains(pulse.id)) {
            throw Error(Errc::DuplicateId,
                        "line " + std::to_string(line_no) + ": pulse id " +
                            std::to_string(pulse.id) + " already defined");
        }
        library.pulses.emplace(pulse.id, pulse);
    }
    if (!header_seen) {
        throw Error(Errc::MalformedRow, "pulse library is empty (missing header)");
    }
    return library;
}

std::string serialize_pulse_library(const PulseLibrary& library) {
    std::string out(kCsvHeader);
    out.push_back('\n');
    for (const auto& [id, pulse] : library.pulses) {
        out += std::to_string(id);
        out.push_back(',');
        out += kind_name(pulse.kind);
        for (const auto& segment : kSegments) {
            out.push_back(',');
            out += format_double(pulse.*(segment.field));
        }
        out.push_back(',');
        out += format_double(pulse.amplitude_v);
        out.push_back('\n');
    }
    return out;
}

void validate_sequence(const SequenceSpec& sequence, const PulseLibrary& library) {
    if (sequence.set_phase.empty() || sequence.reset_phase.empty()) {
        throw Error(Errc::MalformedRow, "sequence phases must be non-empty");
    }
    if (sequence.n_cycles < 1) {
        throw Error(Errc::MalformedRow, "cycles must be >= 1");
    }
    for (int id : sequence.set_phase) (void)library.at(id);
    for (int id : sequence.reset_phase) (void)library.at(id);

    const std::size_t total = sequence.set_phase.size() + sequence.reset_phase.size();
    for (const auto& sweep : sequence.sweeps) {
        if (sweep.target_pulse_index >= total) {
            throw Error(Errc::SweepOutOfBounds,
                        "sweep target index " + std::to_string(sweep.target_pulse_index) +
                            " outside sequence of " + std::to_string(total) + " pulses");
        }
        if (sweep.step == 0.0) {
            throw Error(Errc::SweepOutOfBounds, "sweep step must be nonzero");
        }
        if ((sweep.stop - sweep.start) / sweep.step < 0.0) {
            throw Error(Errc::SweepOutOfBounds, "sweep never reaches stop (wrong step sign)");
        }
        if (is_time_parameter(sweep.parameter)) {
            for (double bound : {sweep.start, sweep.stop}) {
                if (!(bound >= kMinSegmentS && bound <= kMaxSegmentS)) {
                    throw Error(Errc::SweepOutOfBounds,
                                std::string("swept ") + parameter_name(sweep.parameter) + " = " +
                                    format_double(bound) + " s outside [2e-08, 1] s");
                }
            }
        }
    }
}

SequenceSpec parse_sequence(std::string_view text, const PulseLibrary& library) {
    SequenceSpec sequence;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(Errc::MalformedRow,
                        "line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key == "set_phase" || key == "reset_phase") {
            auto& phase = key == "set_phase" ? sequence.set_phase : sequence.reset_phase;
            for (auto field : split(value, ',')) {
                phase.push_back(parse_int(field, line_no, "pulse id"));
            }
        } else if (key == "cycles") {
            sequence.n_cycles = static_cast<std::size_t>(parse_int(value, line_no, "cycles"));
        } else if (key == "sweep") {
            const auto parts = split(value, ':');
            if (parts.size() != 5) {
                throw Error(Errc::MalformedRow,
                            "line " + std::to_string(line_no) +
                                ": sweep needs <index>:<param>:<start>:<step>:<stop>");
            }
            SweepSpec sweep;
            sweep.target_pulse_index =
                static_cast<std::size_t>(parse_int(parts[0], line_no, "sweep index"));
            bool known = false;
            for (auto p : {PulseParameter::TLead, PulseParameter::TRise, PulseParameter::TWidth,
                           PulseParameter::TFall, PulseParameter::TTrail,
                           PulseParameter::Amplitude}) {
                if (parts[1] == parameter_name(p)) {
                    sweep.parameter = p;
                    known = true;
                    break;
                }
            }
            if (!known) {
                throw Error(Errc::MalformedRow, "line " + std::to_string(line_no) +
                                                    ": unknown sweep parameter '" +
                                                    std::string(parts[1]) + "'");
            }
            sweep.start = parse_double(parts[2], line_no, "sweep start");
            sweep.step = parse_double(parts[3], line_no, "sweep step");
            sweep.stop = parse_double(parts[4], line_no, "sweep stop");
            sequence.sweeps.push_back(sweep);
        } else {
            throw Error(Errc::MalformedRow, "line " + std::to_string(line_no) +
                                                ": unknown key '" + std::string(key) + "'");
        }
    }
    validate_sequence(sequence, library);
    return sequence;
}

std::string serialize_sequence(const SequenceSpec& sequence) {
    std::string out;
    auto join_ids = [](const std::vector<int>& ids) {
        std::string s;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (i) s.push_back(',');
            s += std::to_string(ids[i]);
        }
        return s;
    };
    out += "set_phase = " + join_ids(sequence.set_phase) + "\n";
    out += "reset_phase = " + join_ids(sequence.reset_phase) + "\n";
    for (const auto& sweep : sequence.sweeps) {
        out += "sweep = " + std::to_string(sweep.target_pulse_index) + ":" +
               parameter_name(sweep.parameter) + ":" + format_double(sweep.start) + ":" +
               format_double(sweep.step) + ":" + format_double(sweep.stop) + "\n";
    }
    out += "cycles = " + std::to_string(sequence.n_cycles) + "\n";
    return out;
}

ExpandedCycle expand_sweep(const SequenceSpec& sequence, const PulseLibrary& library,
                           std::size_t cycle_index) {
    ExpandedCycle cycle;
    cycle.set_pulses.reserve(sequence.set_phase.size());
    cycle.reset_pulses.reserve(sequence.reset_phase.size());
    for (int id : sequence.set_phase) cycle.set_pulses.push_back(library.at(id));
    for (int id : sequence.reset_phase) cycle.reset_pulses.push_back(library.at(id));

    for (const auto& sweep : sequence.sweeps) {
        if (sweep.step == 0.0) {
            throw Error(Errc::SweepOutOfBounds, "sweep step must be nonzero");
        }
        PulseSpec* target = nullptr;
        if (sweep.target_pulse_index < cycle.set_pulses.size()) {
            target = &cycle.set_pulses[sweep.target_pulse_index];
        } else if (sweep.target_pulse_index <
                   cycle.set_pulses.size() + cycle.reset_pulses.size()) {
            target = &cycle.reset_pulses[sweep.target_pulse_index - cycle.set_pulses.size()];
        } else {
            throw Error(Errc::SweepOutOfBounds,
                        "sweep target index " + std::to_string(sweep.target_pulse_index) +
                            " outside sequence");
        }
        const double value = sweep.value_at(cycle_index);
        target->*(parameter_field(sweep.parameter)) = value;
        if (is_time_parameter(sweep.parameter) &&
            !(value >= kMinSegmentS && value <= kMaxSegmentS)) {
            throw Error(Errc::SweepOutOfBounds,
                        std::string("swept ") + parameter_name(sweep.parameter) + " = " +
                            format_double(value) + " s outside [2e-08, 1] s");
        }
    }
    return cycle;
}

double Waveform::voltage_at(double time_s) const {
    if (breakpoints.empty() || time_s <= breakpoints.front().time_s ||
        time_s >= breakpoints.back().time_s) {
        return 0.0;
    }
    auto upper = std::upper_bound(
        breakpoints.begin(), breakpoints.end(), time_s,
        [](double t, const Point& p) { return t < p.time_s; });
    const Point& hi = *upper;
    const Point& lo = *(upper - 1);
    const double frac = (time_s - lo.time_s) / (hi.time_s - lo.time_s);
    return lo.voltage_v + frac * (hi.voltage_v - lo.voltage_v);
}

Waveform render_waveform(std::span<const PulseSpec> pulses) {
    Waveform w;
    if (pulses.empty()) return w;
    w.breakpoints.reserve(pulses.size() * 5 + 1);
    w.breakpoints.push_back({0.0, 0.0});
    double t = 0.0;
    for (std::size_t i = 0; i < pulses.size(); ++i) {
        const PulseSpec& p = pulses[i];
        validate_pulse(p);
        const std::string tag = "pulse" + std::to_string(i);
        t += p.t_lead_s;
        w.breakpoints.push_back({t, 0.0});
        t += p.t_rise_s;
        w.breakpoints.push_back({t, p.amplitude_v});
        w.markers.push_back({t, tag + ":top_begin"});
        if (p.kind == PulseKind::Measure) {
            w.markers.push_back({t + 0.5 * p.t_width_s, tag + ":measure"});
        }
        t += p.t_width_s;
        w.breakpoints.push_back({t, p.amplitude_v});
        w.markers.push_back({t, tag + ":top_end"});
        t += p.t_fall_s;
        w.breakpoints.push_back({t, 0.0});
        t += p.t_trail_s;
        w.breakpoints.push_back({t, 0.0});
    }
    return w;
}

}  // namespace oxsim::pulse
