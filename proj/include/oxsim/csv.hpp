#pragma once

#include <string>

#include "oxsim/bench.hpp"
#include "oxsim/hourglass.hpp"

namespace oxsim::csv {

/// Locale-independent shortest round-trip formatting (std::to_chars).
std::string format_double(double value);

/// Long-format ReadoutMatrix CSV, header:
/// cell_id,cycle,target_state,readout_index,t_after_program_s,resistance_ohm,verify_passed,attempts_used
std::string write_readout_matrix(const bench::ReadoutMatrix& matrix);
void write_readout_matrix_file(const std::string& path, const bench::ReadoutMatrix& matrix);

/// Throws DataError on malformed content.
bench::ReadoutMatrix parse_readout_matrix(const std::string& text);
bench::ReadoutMatrix read_readout_matrix_file(const std::string& path);

/// Waveform-drive trace CSV: t_s,v_rme_v,i_a,n_tr,n_c,n_br
std::string write_trace(const std::vector<hourglass::TracePoint>& trace);

/// Whole-file helpers used by the CLI.
std::string read_text_file(const std::string& path);  // DataError if unreadable
void write_text_file(const std::string& path, const std::string& content);

}  // namespace oxsim::csv
