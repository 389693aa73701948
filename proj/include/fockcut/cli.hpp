#pragma once

#include "fockcut/config.hpp"
#include "fockcut/report.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fockcut {

// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumeric = 3, kExitInvariant = 4 };

struct RunConfig {
  std::filesystem::path config_path;
  std::filesystem::path out_dir = ".";
  std::optional<int> grid_n;
  std::optional<GridMode> grid_mode;
  // Operator grids (points per axis) for the discrete spectrum.
  std::vector<int> refine;
  std::vector<double> z_list;
  // Relative cutoff below m for discrete eigenvalues.
  std::optional<double> tol;
  std::uint64_t seed = 20240611;
  // classify: rows with both couplings set to factor * lower threshold.
  std::vector<double> mu_factors;
};

// Model file plus command-line overrides.
ModelConfig resolve_model(const RunConfig& run);

RunReport cmd_classify(const RunConfig& run);
RunReport cmd_branches(const RunConfig& run);
RunReport cmd_spectrum(const RunConfig& run);
RunReport cmd_weinberg(const RunConfig& run);
RunReport cmd_report(const RunConfig& run);

// Parses argv, runs one subcommand, writes its files and returns the exit
// code. Diagnostics go to err, a one-line summary to out.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

std::vector<int> parse_int_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

}  // namespace fockcut
