#pragma once

#include "fockcut/grid.hpp"
#include "fockcut/model.hpp"

#include <filesystem>
#include <istream>
#include <map>
#include <string>

namespace fockcut {

struct ModelConfig {
  ExampleParams params;
  int grid_n = 16;
  GridMode grid_mode = GridMode::double_cover;
  bool grid_offset = true;
  // Every key as written, for report echoes.
  std::map<std::string, std::string> entries;
};

// key = value lines; '#' starts a comment. Throws ConfigError with line
// numbers for malformed lines, bad values, duplicates and unknown keys.
ModelConfig parse_model_config(std::istream& in, const std::string& source = "<input>");
ModelConfig load_model_config(const std::filesystem::path& path);

}  // namespace fockcut
