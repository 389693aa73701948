#include "fockcut/config.hpp"

#include "fockcut/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

namespace fockcut {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{"mu1", "mu2", "c1", "c2", "c3", "d1", "d2", "d3",
                                          "w0", "v0_amplitude", "grid.n", "grid.mode",
                                          "grid.offset"};
  return keys;
}

}  // namespace

ModelConfig parse_model_config(std::istream& in, const std::string& source) {
  ModelConfig cfg;
  std::map<std::string, int> line_of;
  std::vector<std::string> unknown;
  std::string line;
  int lineno = 0;
  auto fail = [&](int ln, const std::string& msg) {
    throw ConfigError(source + ":" + std::to_string(ln) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(lineno, "missing key before '='");
    if (value.empty()) fail(lineno, "missing value for key '" + key + "'");
    if (!known_keys().count(key)) {
      unknown.push_back("'" + key + "' (line " + std::to_string(lineno) + ")");
      continue;
    }
    if (line_of.count(key)) {
      fail(lineno, "duplicate key '" + key + "' (first set on line " +
                       std::to_string(line_of[key]) + ")");
    }
    line_of[key] = lineno;
    cfg.entries[key] = value;
  }
  if (!unknown.empty()) {
    std::string msg = "unknown key(s): ";
    for (std::size_t i = 0; i < unknown.size(); ++i) msg += (i ? ", " : "") + unknown[i];
    throw ConfigError(source + ": " + msg);
  }

  auto number = [&](const std::string& key) {
    const std::string& v = cfg.entries.at(key);
    double out = 0.0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
      fail(line_of[key], "value of '" + key + "' is not a finite number: '" + v + "'");
    }
    return out;
  };
  for (const char* req : {"mu1", "mu2"}) {
    if (!cfg.entries.count(req)) throw ConfigError(source + ": missing required key '" + req + "'");
  }
  cfg.params.mu1 = number("mu1");
  cfg.params.mu2 = number("mu2");
  for (const char* key : {"mu1", "mu2"}) {
    if (!(number(key) > 0.0)) fail(line_of[key], std::string("'") + key + "' must be positive");
  }
  for (int i = 0; i < 3; ++i) {
    const std::string ck = "c" + std::to_string(i + 1);
    const std::string dk = "d" + std::to_string(i + 1);
    if (cfg.entries.count(ck)) cfg.params.c[i] = number(ck);
    if (cfg.entries.count(dk)) cfg.params.d[i] = number(dk);
  }
  if (cfg.entries.count("w0")) cfg.params.w0 = number("w0");
  if (cfg.entries.count("v0_amplitude")) cfg.params.v0_amplitude = number("v0_amplitude");
  if (cfg.entries.count("grid.mode")) {
    try {
      cfg.grid_mode = grid_mode_from_string(cfg.entries["grid.mode"]);
    } catch (const InvalidArgument& e) {
      fail(line_of["grid.mode"], e.what());
    }
  }
  if (cfg.entries.count("grid.n")) {
    const double n = number("grid.n");
    if (n != std::floor(n) || n < 2 || n > 4096) {
      fail(line_of["grid.n"], "'grid.n' must be an integer >= 2");
    }
    cfg.grid_n = static_cast<int>(n);
  }
  if (cfg.grid_mode == GridMode::double_cover && cfg.grid_n % 2 != 0) {
    fail(line_of.count("grid.n") ? line_of["grid.n"] : 0, "double-cover grids need an even 'grid.n'");
  }
  if (cfg.entries.count("grid.offset")) {
    std::string v = cfg.entries["grid.offset"];
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (v == "true" || v == "1" || v == "yes") {
      cfg.grid_offset = true;
    } else if (v == "false" || v == "0" || v == "no") {
      cfg.grid_offset = false;
    } else {
      fail(line_of["grid.offset"], "'grid.offset' must be true or false");
    }
  }
  return cfg;
}

ModelConfig load_model_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_model_config(in, path.string());
}

}  // namespace fockcut
