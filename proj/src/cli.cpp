#include "fockcut/cli.hpp"

#include "fockcut/eigensolver.hpp"
#include "fockcut/errors.hpp"
#include "fockcut/friedrichs.hpp"
#include "fockcut/spectrum.hpp"
#include "fockcut/weinberg.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace fockcut {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class T, class Parse>
std::vector<T> parse_list(const std::string& text, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("empty entry in list '" + text + "'");
    const std::string token = item.substr(b, e - b + 1);
    std::size_t used = 0;
    T value{};
    try {
      value = parse(token, &used);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse '" + token + "' in list '" + text + "'");
    }
    if (used != token.size()) throw ConfigError("cannot parse '" + token + "' in list '" + text + "'");
    out.push_back(value);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

TorusGrid quadrature_grid(const ModelConfig& cfg) {
  return TorusGrid::build(cfg.grid_n, cfg.grid_mode, cfg.grid_offset);
}

std::vector<TorusGrid> operator_grids(const RunConfig& run, const ModelConfig& cfg) {
  std::vector<int> ns = run.refine;
  if (ns.empty()) ns = cfg.grid_mode == GridMode::double_cover ? std::vector<int>{2, 4} : std::vector<int>{2, 3, 4};
  std::vector<TorusGrid> grids;
  for (int n : ns) {
    if (n < 1) throw ConfigError("refinement entries must be positive");
    if (cfg.grid_mode == GridMode::double_cover && n % 2 != 0)
      throw ConfigError("double-cover operator grids need an even n, got " + std::to_string(n));
    grids.push_back(TorusGrid::build(n, cfg.grid_mode, cfg.grid_offset));
  }
  return grids;
}

std::string channel_label(Regime r) {
  switch (r) {
    case Regime::pos: return "(i)";
    case Regime::mixed: return "(ii)";
    case Regime::neg: return "(iii)";
    case Regime::ambiguous: return "undetermined";
  }
  return "undetermined";
}

DiscreteOptions discrete_options(const RunConfig& run) {
  DiscreteOptions o;
  if (run.tol) o.eta_relative = *run.tol;
  o.solver.seed = run.seed;
  return o;
}

Json run_echo(const RunConfig& run, const ModelConfig& cfg) {
  Json j = to_json(cfg);
  j["config_path"] = run.config_path.string();
  j["refine"] = run.refine;
  j["z_list"] = run.z_list;
  j["seed"] = run.seed;
  j["tol"] = run.tol ? Json(*run.tol) : Json(nullptr);
  j["mu_factors"] = run.mu_factors;
  return j;
}

Json classify_row(const ModelConfig& cfg, const ExampleParams& params) {
  const auto model = example_family(params);
  const FriedrichsFamily family(model, quadrature_grid(cfg));
  Json row;
  row["mu1"] = params.mu1;
  row["mu2"] = params.mu2;
  Json regimes = Json::array();
  Json labels = Json::array();
  for (int alpha = 1; alpha <= 2; ++alpha) {
    const auto r = classify_regime(family, alpha);
    regimes.push_back(to_json(r));
    labels.push_back(channel_label(r.regime));
  }
  row["regimes"] = regimes;
  row["channel_case"] = labels;
  row["m"] = family.m();
  row["M"] = family.M();
  return row;
}

Json branches_payload(const FriedrichsFamily& family, std::array<BranchData, 2>& out) {
  Json j = Json::array();
  for (int alpha = 1; alpha <= 2; ++alpha) {
    out[alpha - 1] = two_particle_branch(family, alpha);
    j.push_back(to_json(out[alpha - 1]));
  }
  return j;
}

Json weinberg_payload(const RunConfig& run, const ModelConfig& cfg) {
  const auto model = example_family(cfg.params);
  const auto grid = operator_grids(run, cfg).front();
  const FriedrichsFamily family(model, grid);
  const double scale = family.scale();
  const auto opts = discrete_options(run);
  const double eta = opts.eta_relative * scale;
  Json j;
  j["operator_grid"] = to_json(grid);
  j["m"] = family.m();

  // Discrete eigenpairs of the discretized H on the operator grid.
  const auto H = DiscretizedOperator::assemble(OperatorKind::H, model, grid, std::nullopt, opts.limits);
  if (H.dimension() > opts.limits.max_dense_dimension)
    throw ResourceError("Weinberg runs use dense eigenpairs; choose a smaller operator grid");
  const auto eig = dense_eigenpairs(H.dense());
  const auto bands = node_root_bands(family, eta);
  auto in_band = [&](double z) {
    for (const auto& b : bands)
      if (b && z >= b->lo - eta && z <= b->hi + eta) return true;
    return false;
  };
  Json fixed = Json::array();
  std::vector<double> discrete;
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
    const double z = eig.values[k];
    if (z >= family.m() - eta || in_band(z)) continue;
    discrete.push_back(z);
    Json row;
    row["z"] = z;
    row["eigen_residual"] = eig.residuals[static_cast<std::size_t>(k)];
    for (const auto& [key, zz] : {std::pair<std::string, double>{"at_z", z},
                                  std::pair<std::string, double>{"perturbed", z + 1e-2 * scale}}) {
      try {
        const auto W = WeinbergOperator::assemble(family, zz, opts.limits);
        const auto fp = W.fixed_point_residual(eig.vectors.col(k));
        Json c;
        for (const auto& cand : fp.candidates) c[cand.name] = cand.residual;
        row[key] = {{"z", zz}, {"residuals", c}, {"best", fp.best_name()}, {"best_residual", fp.best_residual()}};
      } catch (const NumericDomainError& e) {
        row[key] = {{"z", zz}, {"error", e.what()}};
      }
    }
    fixed.push_back(row);
  }
  j["fixed_point"] = fixed;

  const std::vector<double> zs = run.z_list.empty() ? discrete : run.z_list;
  Json per_z = Json::array();
  for (double z : zs) {
    const auto W = WeinbergOperator::assemble(family, z, opts.limits);
    Json row;
    row["z"] = z;
    row["xi"] = {W.signs().first, W.signs().second};
    Json hs = Json::array();
    for (const auto& r : hs_norms(W)) hs.push_back(r);
    row["hs_norms"] = hs;
    row["singular_values"] = singular_values(W.matrix(), 20);
    Json rank = Json::object();
    for (const auto& [name, ij] : {std::pair<std::string, std::pair<int, int>>{"W01", {0, 1}},
                                   {"W10", {1, 0}}, {"W20", {2, 0}}}) {
      const auto sv = singular_values(W.block(ij.first, ij.second), 4);
      int count = 0;
      for (double s : sv)
        if (!sv.empty() && s > 1e-12 * sv.front()) ++count;
      rank[name] = count;
    }
    row["rank"] = rank;
    per_z.push_back(row);
  }
  j["operators"] = per_z;
  if (zs.size() > 1) j["continuity"] = to_json(continuity_modulus(family, zs, opts.limits));
  return j;
}

RunReport finish(std::string command, const RunConfig& run, const ModelConfig& cfg, Json results,
                 Clock::time_point t0) {
  RunReport r;
  r.command = std::move(command);
  r.config = run_echo(run, cfg);
  r.results = std::move(results);
  r.timing_seconds = seconds_since(t0);
  return r;
}

}  // namespace

std::vector<int> parse_int_list(const std::string& text) {
  return parse_list<int>(text, [](const std::string& s, std::size_t* used) { return std::stoi(s, used); });
}

std::vector<double> parse_double_list(const std::string& text) {
  return parse_list<double>(text, [](const std::string& s, std::size_t* used) { return std::stod(s, used); });
}

ModelConfig resolve_model(const RunConfig& run) {
  if (run.config_path.empty()) throw ConfigError("--config is required");
  auto cfg = load_model_config(run.config_path);
  if (run.grid_n) cfg.grid_n = *run.grid_n;
  if (run.grid_mode) cfg.grid_mode = *run.grid_mode;
  if (cfg.grid_n < 1) throw ConfigError("grid n must be positive");
  if (cfg.grid_mode == GridMode::double_cover && cfg.grid_n % 2 != 0)
    throw ConfigError("double-cover grids need an even n");
  if (run.tol && !(*run.tol > 0.0)) throw ConfigError("--tol must be positive");
  return cfg;
}

RunReport cmd_classify(const RunConfig& run) {
  const auto t0 = Clock::now();
  const auto cfg = resolve_model(run);
  const auto grid = quadrature_grid(cfg);
  Json j;
  Json thresholds = Json::array();
  std::array<CouplingThresholds, 2> th{};
  for (int alpha = 1; alpha <= 2; ++alpha) {
    th[alpha - 1] = mu_thresholds(cfg.params, alpha, grid);
    thresholds.push_back(to_json(th[alpha - 1]));
  }
  j["thresholds"] = thresholds;
  Json rows = Json::array();
  if (run.mu_factors.empty()) {
    rows.push_back(classify_row(cfg, cfg.params));
  } else {
    for (double f : run.mu_factors) {
      if (!(f > 0.0)) throw ConfigError("mu factors must be positive");
      auto p = cfg.params;
      p.mu1 = f * th[0].lower;
      p.mu2 = f * th[1].lower;
      auto row = classify_row(cfg, p);
      row["factor"] = f;
      rows.push_back(row);
    }
  }
  j["rows"] = rows;
  return finish("classify", run, cfg, j, t0);
}

RunReport cmd_branches(const RunConfig& run) {
  const auto t0 = Clock::now();
  const auto cfg = resolve_model(run);
  const auto model = example_family(cfg.params);
  const FriedrichsFamily family(model, quadrature_grid(cfg));
  std::array<BranchData, 2> b;
  Json j;
  j["branches"] = branches_payload(family, b);
  j["m"] = family.m();
  j["M"] = family.M();
  for (int alpha = 1; alpha <= 2; ++alpha) {
    std::ostringstream csv;
    write_branch_csv(b[alpha - 1], csv);
    write_atomic(run.out_dir / ("branches_alpha" + std::to_string(alpha) + ".csv"), csv.str());
  }
  return finish("branches", run, cfg, j, t0);
}

RunReport cmd_spectrum(const RunConfig& run) {
  const auto t0 = Clock::now();
  const auto cfg = resolve_model(run);
  const auto model = example_family(cfg.params);
  const FriedrichsFamily family(model, quadrature_grid(cfg));
  const auto es = essential_spectrum(family);
  const auto sigma = sigma_region(es);
  const auto grids = operator_grids(run, cfg);
  const auto opts = discrete_options(run);
  const auto disc = discrete_below_m(model, es, grids, opts);
  const auto t3 = verify_block_embedding(model, grids.front(), opts);
  Json j;
  j["essential"] = to_json(es);
  j["sigma"] = to_json(sigma);
  j["discrete"] = to_json(disc);
  j["embedding"] = to_json(t3);
  j["interval_count_ok"] = es.intervals.size() <= 4;
  std::ostringstream csv;
  csv << "n,index,value,residual,stable\n" << std::setprecision(17);
  for (const auto& lvl : disc.levels)
    for (std::size_t i = 0; i < lvl.values.size(); ++i)
      csv << lvl.n << ',' << i << ',' << lvl.values[i] << ',' << lvl.residuals[i] << ','
          << (lvl.stable[i] ? 1 : 0) << '\n';
  write_atomic(run.out_dir / "eigenvalues.csv", csv.str());
  return finish("spectrum", run, cfg, j, t0);
}

RunReport cmd_weinberg(const RunConfig& run) {
  const auto t0 = Clock::now();
  const auto cfg = resolve_model(run);
  return finish("weinberg", run, cfg, weinberg_payload(run, cfg), t0);
}

RunReport cmd_report(const RunConfig& run) {
  const auto t0 = Clock::now();
  const auto cfg = resolve_model(run);
  Json j;
  j["classify"] = cmd_classify(run).results;
  j["branches"] = cmd_branches(run).results;
  j["spectrum"] = cmd_spectrum(run).results;
  j["weinberg"] = cmd_weinberg(run).results;
  return finish("report", run, cfg, j, t0);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral analysis of a three-sector lattice operator matrix"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  RunConfig run;
  std::string config_path, out_dir = ".", mode, refine, zlist, factors;
  int grid_n = 0;
  double tol = 0.0;
  std::uint64_t seed = run.seed;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "model file (key = value lines)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--grid-n", grid_n, "quadrature grid points per axis");
    sub->add_option("--grid-mode", mode, "base or double")->check(CLI::IsMember({"base", "double"}));
    sub->add_option("--refine", refine, "operator grids, e.g. 2,3,4");
    sub->add_option("--z-list", zlist, "spectral parameters for the Weinberg operator");
    sub->add_option("--tol", tol, "relative cutoff below m for discrete eigenvalues");
    sub->add_option("--seed", seed, "seed for randomized solvers");
  };
  auto* classify = app.add_subcommand("classify", "coupling thresholds and channel regimes");
  add_common(classify);
  classify->add_option("--mu-factors", factors, "rows with couplings factor * lower threshold");
  auto* branches = app.add_subcommand("branches", "two-particle branches, zero sets and order fits");
  add_common(branches);
  auto* spectrum = app.add_subcommand("spectrum", "essential and discrete spectrum");
  add_common(spectrum);
  auto* weinberg = app.add_subcommand("weinberg", "Weinberg operator diagnostics");
  add_common(weinberg);
  auto* report = app.add_subcommand("report", "all of the above in one report");
  add_common(report);
  report->add_option("--mu-factors", factors, "rows with couplings factor * lower threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    run.config_path = config_path;
    run.out_dir = out_dir;
    run.seed = seed;
    auto* sub = app.get_subcommands().front();
    if (sub->count("--grid-n")) run.grid_n = grid_n;
    if (!mode.empty()) run.grid_mode = grid_mode_from_string(mode);
    if (!refine.empty()) run.refine = parse_int_list(refine);
    if (!zlist.empty()) run.z_list = parse_double_list(zlist);
    if (sub->count("--tol")) run.tol = tol;
    if (!factors.empty()) run.mu_factors = parse_double_list(factors);

    const std::string name = sub->get_name();
    RunReport rep;
    if (name == "classify") rep = cmd_classify(run);
    else if (name == "branches") rep = cmd_branches(run);
    else if (name == "spectrum") rep = cmd_spectrum(run);
    else if (name == "weinberg") rep = cmd_weinberg(run);
    else rep = cmd_report(run);
    const auto path = run.out_dir / (name + ".json");
    write_atomic(path, dump_json(to_json(rep)));
    out << name << ": wrote " << path.string() << " in " << std::fixed << std::setprecision(2)
        << rep.timing_seconds << " s\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ResourceError& e) {
    err << "resource limit: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericDomainError& e) {
    err << "numeric domain error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const InvariantViolation& e) {
    err << "invariant violated: " << e.what() << '\n';
    return kExitInvariant;
  }
}

}  // namespace fockcut
