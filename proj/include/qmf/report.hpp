#pragma once

#include <string>

#include <json.hpp>

namespace qmf {

// Collects every <stem>.summary.json in run_dir, checks the CSV files each
// one lists (present, header carrying the same config hash) and writes
// report.json and report.gp into run_dir.  Byte-identical output for a fixed
// directory.  No runs: missing_input error.  Missing or corrupt files: the
// error message lists every problem (missing_input if any file is absent,
// contract otherwise).
nlohmann::json emit_report(const std::string& run_dir);

// gnuplot script body for one CSV file
std::string plot_script_for(const std::string& csv_name, const std::string& header_line);

}  // namespace qmf
