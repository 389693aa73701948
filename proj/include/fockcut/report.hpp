#pragma once

#include "fockcut/config.hpp"
#include "fockcut/friedrichs.hpp"
#include "fockcut/model.hpp"
#include "fockcut/spectrum.hpp"
#include "fockcut/weinberg.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace fockcut {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

// Writes to a sibling temporary file and renames it over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);

// Serialized JSON: sorted keys, two-space indent, round-trip doubles.
// Non-finite numbers become null.
std::string dump_json(const Json& value);

Json to_json(const Point3& p);
Json to_json(const Interval& iv);
Json to_json(const ModelConfig& config);
Json to_json(const TorusGrid& grid);
Json to_json(const CouplingThresholds& t);
Json to_json(const RegimeClass& r);
Json to_json(const ZeroPoint& z);
Json to_json(const BranchData& b);
Json to_json(const EssentialSpectrum& es);
Json to_json(const SigmaSet& s);
Json to_json(const DiscreteSpectrumReport& r);
Json to_json(const EmbeddingReport& r);
Json to_json(const MajorantCheck& c);
Json to_json(const ContinuityTable& t);
Json to_json(const EdgeApproach& e);

// Self-contained report: the payload is deterministic for a given config,
// timing lives in its own top-level field.
struct RunReport {
  std::string command;
  Json config;
  Json results;
  double timing_seconds = 0.0;
};

Json to_json(const RunReport& report);
// The report without its timing field.
Json payload(const RunReport& report);

}  // namespace fockcut
