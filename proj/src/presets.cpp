#include "oxsim/presets.hpp"

#include <charconv>
#include <map>

#include "oxsim/errors.hpp"

namespace oxsim::presets {

using hourglass::HourglassParams;

namespace {

// Shared filament geometry/conduction; the stacks differ in kinetics.
HourglassParams base_stack() {
    HourglassParams p;
    p.n_tr_cap = 4;
    p.n_br_cap = 29;
    p.n_total = 34;
    p.n_c_min = 1;
    p.omega_y_min = 5.2035e16;
    p.omega_x = 1.2028e16;
    p.m_eff = 9.11e-31;
    p.r_th = 5e7;
    p.t_ambient = 298.0;
    p.m_n = 3.0;
    p.attempt_rate = 1e13;
    p.v_forming_mean = 3.2;
    p.v_forming_sigma = 0.08;
    return p;
}

}  // namespace

HourglassParams material(const std::string& name) {
    HourglassParams p = base_stack();
    if (name == "hfo2") {
        p.e_a_ev = 0.705;
        p.alpha0 = 0.166;
    } else if (name == "hfalo") {
        p.e_a_ev = 0.78;
        p.alpha0 = 0.258;
    } else if (name == "tao") {
        p.e_a_ev = 0.96;
        p.alpha0 = 0.436;
    } else {
        throw Error(Errc::ConfigError, "unknown material preset '" + name + "'");
    }
    p.validate();
    return p;
}

bool is_known_material(const std::string& name) {
    return name == "hfo2" || name == "hfalo" || name == "tao";
}

namespace {

struct FieldDef {
    const char* key;
    double HourglassParams::* real_field;
    int HourglassParams::* int_field;
};

constexpr FieldDef kFields[] = {
    {"e_a_ev", &HourglassParams::e_a_ev, nullptr},
    {"alpha0", &HourglassParams::alpha0, nullptr},
    {"m_n", &HourglassParams::m_n, nullptr},
    {"attempt_rate_hz", &HourglassParams::attempt_rate, nullptr},
    {"n_tr_cap", nullptr, &HourglassParams::n_tr_cap},
    {"n_br_cap", nullptr, &HourglassParams::n_br_cap},
    {"n_total", nullptr, &HourglassParams::n_total},
    {"n_c_min", nullptr, &HourglassParams::n_c_min},
    {"omega_y_min_rad_s", &HourglassParams::omega_y_min, nullptr},
    {"omega_x_rad_s", &HourglassParams::omega_x, nullptr},
    {"m_eff_kg", &HourglassParams::m_eff, nullptr},
    {"r_th_k_w", &HourglassParams::r_th, nullptr},
    {"t_ambient_k", &HourglassParams::t_ambient, nullptr},
    {"v_forming_mean_v", &HourglassParams::v_forming_mean, nullptr},
    {"v_forming_sigma_v", &HourglassParams::v_forming_sigma, nullptr},
};

std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace

std::string serialize_params(const HourglassParams& params) {
    std::string out;
    for (const auto& field : kFields) {
        out += field.key;
        out += " = ";
        if (field.real_field != nullptr) {
            out += format_double(params.*(field.real_field));
        } else {
            out += std::to_string(params.*(field.int_field));
        }
        out.push_back('\n');
    }
    return out;
}

HourglassParams parse_params(const std::string& text) {
    HourglassParams params;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string line =
            text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        line = line.substr(start);
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(Errc::ConfigError,
                        "preset line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = line.substr(0, eq);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        std::string value = line.substr(eq + 1);
        const std::size_t vstart = value.find_first_not_of(" \t");
        value = vstart == std::string::npos ? "" : value.substr(vstart);

        bool matched = false;
        for (const auto& field : kFields) {
            if (key != field.key) continue;
            matched = true;
            if (field.real_field != nullptr) {
                double parsed = 0.0;
                auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), parsed);
                if (ec != std::errc() || ptr != value.data() + value.size()) {
                    throw Error(Errc::ConfigError, "preset key '" + key + "': bad value '" +
                                                       value + "'");
                }
                params.*(field.real_field) = parsed;
            } else {
                int parsed = 0;
                auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), parsed);
                if (ec != std::errc() || ptr != value.data() + value.size()) {
                    throw Error(Errc::ConfigError, "preset key '" + key + "': bad value '" +
                                                       value + "'");
                }
                params.*(field.int_field) = parsed;
            }
            break;
        }
        if (!matched) {
            throw Error(Errc::ConfigError, "unknown preset key '" + key + "'");
        }
    }
    params.validate();
    return params;
}

}  // namespace oxsim::presets
