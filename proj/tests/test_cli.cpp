#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fockcut/cli.hpp"
#include "fockcut/config.hpp"
#include "fockcut/errors.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace fockcut;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fockcut_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto path = dir / "model.cfg";
  std::ofstream(path) << text;
  return path;
}

int run(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::vector<const char*> argv{"fockcut"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::string config_error(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_model_config(in, "t.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kModel = "mu1 = 0.0013\nmu2 = 0.002\ngrid.n = 8\ngrid.mode = double\n";

}  // namespace

TEST_CASE("config parsing") {
  std::istringstream in("# comment\nmu1 = 0.1\nmu2 = 0.2  # trailing\nc2 = 0.5\ngrid.mode = base\ngrid.n = 5\n");
  const auto cfg = parse_model_config(in);
  CHECK(cfg.params.mu1 == 0.1);
  CHECK(cfg.params.mu2 == 0.2);
  CHECK(cfg.params.c[1] == 0.5);
  CHECK(cfg.grid_mode == GridMode::base);
  CHECK(cfg.grid_n == 5);
}

TEST_CASE("config errors name the offending key") {
  CHECK(config_error("mu1 = 0.1\nmu2 = 0.2\nfoo = 1\n").find("'foo'") != std::string::npos);
  CHECK(config_error("mu1 = 0.1\nmu1 = 0.2\nmu2 = 1\n").find("duplicate key 'mu1'") != std::string::npos);
  CHECK(config_error("mu1 = 0.1\n").find("'mu2'") != std::string::npos);
  CHECK(config_error("mu1 = x\nmu2 = 1\n").find("'mu1'") != std::string::npos);
  CHECK(config_error("mu1 = -1\nmu2 = 1\n").find("'mu1'") != std::string::npos);
  CHECK(config_error("mu1 = 1\nmu2 = 1\ngrid.n = 5\ngrid.mode = double\n").find("grid.n") != std::string::npos);
  CHECK(config_error("mu1 = 1\nmu2 = 1\ngrid.offset = maybe\n").find("grid.offset") != std::string::npos);
  CHECK(config_error("mu1 1\nmu2 = 1\n").find("t.cfg:1") != std::string::npos);
}

TEST_CASE("list parsing") {
  CHECK(parse_int_list("2,3,4") == std::vector<int>{2, 3, 4});
  CHECK(parse_double_list("-1.5, 0.25") == std::vector<double>{-1.5, 0.25});
  CHECK_THROWS(parse_int_list("2,x"));
}

TEST_CASE("exit codes") {
  const auto dir = scratch_dir("codes");
  const auto cfg = write_config(dir, kModel);
  std::string err;
  CHECK(run({"classify", "--config", (dir / "missing.cfg").string(), "--out", dir.string()}, &err) == kExitConfig);
  CHECK_FALSE(err.empty());
  const auto bad = dir / "bad.cfg";
  std::ofstream(bad) << "mu1 = 1\nmu2 = 1\nbogus = 2\n";
  CHECK(run({"classify", "--config", bad.string(), "--out", dir.string()}, &err) == kExitConfig);
  CHECK(err.find("bogus") != std::string::npos);
  CHECK(run({"nonsense"}) == kExitConfig);
  CHECK(run({"weinberg", "--config", cfg.string(), "--out", dir.string(), "--z-list", "3.0"}) == kExitNumeric);
}

TEST_CASE("classify writes a deterministic payload") {
  const auto dir = scratch_dir("classify");
  const auto cfg = write_config(dir, kModel);
  REQUIRE(run({"classify", "--config", cfg.string(), "--out", dir.string()}) == kExitOk);
  const auto path = dir / "classify.json";
  REQUIRE(fs::exists(path));
  auto first = Json::parse(std::ifstream(path));
  REQUIRE(run({"classify", "--config", cfg.string(), "--out", dir.string()}) == kExitOk);
  auto second = Json::parse(std::ifstream(path));
  CHECK(first["command"] == "classify");
  first.erase("timing_seconds");
  second.erase("timing_seconds");
  CHECK(first == second);
}

TEST_CASE("spectrum writes eigenvalues") {
  const auto dir = scratch_dir("spectrum");
  const auto cfg = write_config(dir, kModel);
  REQUIRE(run({"spectrum", "--config", cfg.string(), "--out", dir.string(), "--refine", "2"}) == kExitOk);
  CHECK(fs::exists(dir / "spectrum.json"));
  CHECK(fs::exists(dir / "eigenvalues.csv"));
}
