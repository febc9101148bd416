#include "oxsim/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "oxsim/errors.hpp"

namespace oxsim::csv {

namespace {

constexpr std::string_view kMatrixHeader =
    "cell_id,cycle,target_state,readout_index,t_after_program_s,resistance_ohm,"
    "verify_passed,attempts_used";

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t begin = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(begin, i - begin));
            begin = i + 1;
        }
    }
    return out;
}

template <typename T>
T parse_field(std::string_view field, int line_no, const char* what) {
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw Error(Errc::DataError, "line " + std::to_string(line_no) + ": bad " +
                                         std::string(what) + " '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace

std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

std::string write_readout_matrix(const bench::ReadoutMatrix& matrix) {
    std::string out(kMatrixHeader);
    out.push_back('\n');
    for (const auto& row : matrix.rows) {
        out += std::to_string(row.cell_id);
        out.push_back(',');
        out += std::to_string(row.cycle);
        out.push_back(',');
        out += bench::state_name(row.target_state);
        out.push_back(',');
        out += std::to_string(row.readout_index);
        out.push_back(',');
        out += format_double(row.t_after_program_s);
        out.push_back(',');
        out += format_double(row.resistance_ohm);
        out.push_back(',');
        out += row.verify_passed ? '1' : '0';
        out.push_back(',');
        out += std::to_string(row.attempts_used);
        out.push_back('\n');
    }
    return out;
}

void write_readout_matrix_file(const std::string& path, const bench::ReadoutMatrix& matrix) {
    write_text_file(path, write_readout_matrix(matrix));
}

bench::ReadoutMatrix parse_readout_matrix(const std::string& text) {
    bench::ReadoutMatrix matrix;
    bool header_seen = false;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = std::string_view(text).substr(
            pos, eol == std::string::npos ? std::string::npos : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        while (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != kMatrixHeader) {
                throw Error(Errc::DataError, "missing or wrong ReadoutMatrix header");
            }
            header_seen = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 8) {
            throw Error(Errc::DataError,
                        "line " + std::to_string(line_no) + ": expected 8 fields");
        }
        bench::ReadoutRow row;
        row.cell_id = parse_field<int>(fields[0], line_no, "cell_id");
        row.cycle = parse_field<int>(fields[1], line_no, "cycle");
        if (fields[2] == "SET") {
            row.target_state = bench::TargetState::Set;
        } else if (fields[2] == "RESET") {
            row.target_state = bench::TargetState::Reset;
        } else {
            throw Error(Errc::DataError, "line " + std::to_string(line_no) +
                                             ": bad target_state '" + std::string(fields[2]) +
                                             "'");
        }
        row.readout_index = parse_field<int>(fields[3], line_no, "readout_index");
        row.t_after_program_s = parse_field<double>(fields[4], line_no, "t_after_program_s");
        row.resistance_ohm = parse_field<double>(fields[5], line_no, "resistance_ohm");
        if (!(row.resistance_ohm > 0.0)) {
            throw Error(Errc::DataError,
                        "line " + std::to_string(line_no) + ": resistance must be > 0");
        }
        if (fields[6] == "1") {
            row.verify_passed = true;
        } else if (fields[6] == "0") {
            row.verify_passed = false;
        } else {
            throw Error(Errc::DataError,
                        "line " + std::to_string(line_no) + ": bad verify_passed flag");
        }
        row.attempts_used = parse_field<int>(fields[7], line_no, "attempts_used");
        matrix.rows.push_back(row);
    }
    if (!header_seen) {
        throw Error(Errc::DataError, "empty ReadoutMatrix file");
    }
    return matrix;
}

bench::ReadoutMatrix read_readout_matrix_file(const std::string& path) {
    return parse_readout_matrix(read_text_file(path));
}

std::string write_trace(const std::vector<hourglass::TracePoint>& trace) {
    std::string out = "t_s,v_rme_v,i_a,n_tr,n_c,n_br\n";
    for (const auto& point : trace) {
        out += format_double(point.t_s);
        out.push_back(',');
        out += format_double(point.v_rme_v);
        out.push_back(',');
        out += format_double(point.i_a);
        out.push_back(',');
        out += std::to_string(point.n_tr);
        out.push_back(',');
        out += std::to_string(point.n_c);
        out.push_back(',');
        out += std::to_string(point.n_br);
        out.push_back('\n');
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::DataError, "cannot open '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::DataError, "cannot write '" + path + "'");
    }
    out << content;
    if (!out.good()) {
        throw Error(Errc::DataError, "write failed for '" + path + "'");
    }
}

}  // namespace oxsim::csv
