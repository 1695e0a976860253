#pragma once

#include <iosfwd>

#include "mbp/json_io.hpp"
#include "mbp/toda.hpp"

namespace mbp {

/// Runs a scenario document and returns the report; throws Error on schema
/// or numerical failure.
json run_scenario(const json& scenario, unsigned long long seed_override = 0,
                  bool have_seed_override = false);

/// File-level entry point mirroring the CLI: returns the process exit code
/// (0 pass, 1 numerical failure, 2 usage/schema) and writes the report file
/// into out_dir when the run gets far enough to produce one.
int run_scenario_file(const std::string& path, const std::string& out_dir,
                      unsigned long long seed_override = 0, bool have_seed_override = false,
                      std::string* report_path_out = nullptr);

/// Extracts a named series from a report as CSV text (complex values split
/// into re/im columns); throws UnknownSeries.
std::string emit_plot_data(const json& report, const std::string& series);

int cli_main(int argc, char** argv);

}  // namespace mbp
