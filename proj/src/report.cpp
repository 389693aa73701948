#include "fockcut/report.hpp"

#include "fockcut/errors.hpp"

#include <cmath>
#include <fstream>
#include <system_error>

namespace fockcut {

namespace {

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json optional_number(const std::optional<double>& x) { return x ? number(*x) : Json(nullptr); }

Json optional_interval(const std::optional<Interval>& iv) { return iv ? to_json(*iv) : Json(nullptr); }

Json numbers(const std::vector<double>& xs) {
  Json a = Json::array();
  for (double x : xs) a.push_back(number(x));
  return a;
}

}  // namespace

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw ResourceError("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ResourceError("rename to " + path.string() + " failed: " + ec.message());
}

std::string dump_json(const Json& value) { return value.dump(2) + "\n"; }

Json to_json(const Point3& p) { return Json::array({number(p[0]), number(p[1]), number(p[2])}); }

Json to_json(const Interval& iv) { return Json::array({number(iv.lo), number(iv.hi)}); }

Json to_json(const ModelConfig& config) {
  Json j;
  j["entries"] = config.entries;
  j["mu1"] = config.params.mu1;
  j["mu2"] = config.params.mu2;
  j["c"] = to_json(config.params.c);
  j["d"] = to_json(config.params.d);
  j["w0"] = config.params.w0;
  j["v0_amplitude"] = config.params.v0_amplitude;
  j["grid"] = {{"n", config.grid_n}, {"mode", to_string(config.grid_mode)}, {"offset", config.grid_offset}};
  return j;
}

Json to_json(const TorusGrid& grid) {
  return {{"n", grid.n_per_axis()},
          {"mode", to_string(grid.mode())},
          {"offset", grid.offset()},
          {"nodes", grid.size()},
          {"weight", grid.weight()}};
}

Json to_json(const CouplingThresholds& t) {
  return {{"alpha", t.alpha},
          {"mu_lower", number(t.lower)},
          {"mu_upper", number(t.upper)},
          {"mu_lower_error", number(t.lower_error)},
          {"mu_upper_error", number(t.upper_error)},
          {"singular_integral", number(t.singular_integral)},
          {"regular_integral", number(t.regular_integral)}};
}

Json to_json(const RegimeClass& r) {
  return {{"alpha", r.alpha},
          {"regime", to_string(r.regime)},
          {"min_value", number(r.min_value)},
          {"max_value", number(r.max_value)},
          {"min_error", number(r.min_error)},
          {"max_error", number(r.max_error)},
          {"tolerance", number(r.tolerance)},
          {"argmin", to_json(r.argmin)},
          {"argmax", to_json(r.argmax)},
          {"note", r.note}};
}

Json to_json(const ZeroPoint& z) {
  return {{"point", to_json(z.point)},
          {"value", number(z.value)},
          {"order", number(z.order)},
          {"order_constant", number(z.order_constant)},
          {"fit_rms", number(z.fit_rms)},
          {"hessian_min_eigenvalue", number(z.hessian_min_eigenvalue)}};
}

Json to_json(const BranchData& b) {
  Json j;
  j["alpha"] = b.alpha;
  j["regime"] = to_json(b.regime);
  j["empty"] = b.empty;
  j["note"] = b.note;
  j["samples"] = b.samples.size();
  if (!b.empty) {
    j["E_min"] = number(b.E_min);
    j["E_max"] = number(b.E_max);
    j["sup_root"] = number(b.sup_root);
    j["reaches_m"] = b.reaches_m;
    j["positivity_off_zeros"] = number(b.positivity_off_zeros);
  }
  Json mins = Json::array(), maxs = Json::array();
  for (const auto& z : b.min_zeros) mins.push_back(to_json(z));
  for (const auto& z : b.max_zeros) maxs.push_back(to_json(z));
  j["min_zeros"] = mins;
  j["max_zeros"] = maxs;
  j["above_min"] = optional_number(b.above_min);
  j["above_max"] = optional_number(b.above_max);
  return j;
}

Json to_json(const EssentialSpectrum& es) {
  Json iv = Json::array();
  for (const auto& i : es.intervals) iv.push_back(to_json(i));
  return {{"intervals", iv},
          {"tau_ess", number(es.tau_ess)},
          {"m", number(es.m)},
          {"M", number(es.M)},
          {"channel_case", es.channel_case},
          {"structure_matches", es.structure_matches},
          {"branches", Json::array({to_json(es.branches[0]), to_json(es.branches[1])})}};
}

Json to_json(const SigmaSet& s) {
  Json iv = Json::array();
  for (const auto& i : s.intervals) iv.push_back(to_json(i));
  return {{"intervals", iv},
          {"case", s.case_label},
          {"classified", s.classified},
          {"E_min", number(s.E_min)},
          {"E_max", number(s.E_max)}};
}

Json to_json(const DiscreteSpectrumReport& r) {
  Json levels = Json::array();
  for (const auto& l : r.levels) {
    Json ev = Json::array();
    for (std::size_t i = 0; i < l.values.size(); ++i) {
      ev.push_back({{"value", number(l.values[i])},
                    {"residual", number(l.residuals[i])},
                    {"stable", static_cast<bool>(l.stable[i])}});
    }
    levels.push_back({{"n", l.n},
                      {"dimension", l.dimension},
                      {"solver", l.solver},
                      {"count", l.values.size()},
                      {"eigenvalues", ev},
                      {"excluded_below_m", l.excluded_below_m},
                      {"band1", optional_interval(l.bands[0])},
                      {"band2", optional_interval(l.bands[1])},
                      {"min_edge_distance", number(l.min_edge_distance)},
                      {"truncated", l.truncated}});
  }
  return {{"refinement", levels},
          {"sigma_edges", numbers(r.sigma_edges)},
          {"in_hypothesis", r.in_hypothesis},
          {"hypothesis_note", r.hypothesis_note},
          {"count_stable", r.count_stable},
          {"edges_non_accumulating", r.edges_non_accumulating},
          {"eta", number(r.eta)}};
}

Json to_json(const EmbeddingReport& r) {
  auto rows = [](const std::vector<EmbeddingCheck>& v) {
    Json a = Json::array();
    for (const auto& c : v) {
      a.push_back({{"z", number(c.z)},
                   {"discrete", c.discrete},
                   {"residual", number(c.residual)},
                   {"annihilation_norm", number(c.annihilation_norm)},
                   {"potential_norm", number(c.potential_norm)},
                   {"reconstruction_mismatch", number(c.reconstruction_mismatch)},
                   {"passed", c.passed}});
    }
    return a;
  };
  return {{"mode", r.mode},
          {"eta", number(r.eta)},
          {"two_channel", rows(r.two_channel)},
          {"one_channel", rows(r.one_channel)},
          {"all_passed", r.all_passed}};
}

Json to_json(const MajorantCheck& c) {
  return {{"window", to_string(c.window)},
          {"z", number(c.z)},
          {"delta", number(c.delta)},
          {"fitted_constant", number(c.fitted_constant)},
          {"worst_ratio", number(c.worst_ratio)},
          {"samples", c.samples},
          {"holds", c.holds}};
}

Json to_json(const ContinuityTable& t) {
  Json d = Json::array();
  for (const auto& row : t.distance) d.push_back(numbers(row));
  return {{"z", numbers(t.z)}, {"distance", d}};
}

Json to_json(const EdgeApproach& e) {
  return {{"edge", number(e.edge)},
          {"z", numbers(e.z)},
          {"distance", numbers(e.distance)},
          {"monotone", e.monotone}};
}

Json to_json(const RunReport& report) {
  Json j = payload(report);
  j["timing_seconds"] = report.timing_seconds;
  return j;
}

Json payload(const RunReport& report) {
  return {{"command", report.command},
          {"config", report.config},
          {"results", report.results},
          {"tool_version", kToolVersion}};
}

}  // namespace fockcut
