#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sparsecov/bspline.hpp"
#include "sparsecov/core_grid.hpp"
#include "sparsecov/errors.hpp"
#include "sparsecov/fpca.hpp"
#include "sparsecov/matrix_io.hpp"
#include "sparsecov/random_knots.hpp"
#include "sparsecov/selection.hpp"
#include "sparsecov/simbench.hpp"
#include "sparsecov/sparsify.hpp"

namespace fs = std::filesystem;
using namespace sparsecov;

namespace {

struct Options {
  std::string input;
  std::string covariance;
  std::string output_dir;
  std::string estimator = "sample";
  std::string js = "auto";
  int order = 4;
  std::string scaler = "avg";
  std::string centering = "empirical";
  std::string fit = "full";
  std::uint64_t seed = 0;
  int replicates = 100;
  int threads = 0;
  bool scores = false;
  std::vector<int> sweep_n = {50, 100, 200, 400};
  std::vector<int> sweep_d = {200};
  std::vector<std::string> estimators = {"sample", "random-knots", "rks", "bspline",
                                         "bspline-spatial"};
};

int parse_js(const std::string& js, Eigen::Index d) {
  if (js == "auto") return 0;
  int value = 0;
  try {
    value = std::stoi(js);
  } catch (const std::exception&) {
    throw std::invalid_argument("--js must be a positive integer or 'auto'");
  }
  if (value < 1 || value > d)
    throw std::invalid_argument("--js must lie in [1, d]");
  return value;
}

Centering parse_centering(const std::string& s) {
  return s == "fixed" ? Centering::Fixed : Centering::Empirical;
}

FitMode parse_fit(const std::string& s) {
  return s == "sparse" ? FitMode::SparseKnotsOnly : FitMode::Full;
}

SpatialScaler resolve_scaler(const std::string& spec, int n, const NodeMatrix& x) {
  if (spec == "unit") return unit_scaler(n);
  if (spec == "avg") return t_avg(n);
  if (spec == "optimal") return t_optimal(correlation_energy(x).ratio(), n);
  if (spec.rfind("custom:", 0) == 0) {
    const Vector t = load_vector(spec.substr(7));
    if (t.size() != n)
      throw std::invalid_argument("custom scaler must have one value per node");
    return custom_scaler(t);
  }
  throw std::invalid_argument("unknown scaler: " + spec);
}

void write_manifest(const fs::path& path,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
}

struct EstimateResult {
  GridFunction mean;
  GridCovariance cov;
  std::optional<Matrix> trajectories;  // per-node trajectory estimates, if any
  int js_used = 0;
  std::optional<SpatialConstants> constants;
};

EstimateResult build_estimator(const NodeMatrix& x, const Options& opt) {
  const int n = static_cast<int>(x.nodes());
  const auto d = x.dims();
  const Centering centering = parse_centering(opt.centering);
  const FitMode fit = parse_fit(opt.fit);
  const GridFunction mbar = sample_mean(x);
  const Vector* center = centering == Centering::Fixed ? &mbar.values : nullptr;

  if (opt.estimator == "sample")
    return {mbar, sample_cov(x), x.values(), 0, std::nullopt};

  if (opt.estimator == "random-knots" || opt.estimator == "rks") {
    int js = parse_js(opt.js, d);
    if (js == 0) js = select_knots(x, 0, SelectionMethod::RandomKnots).chosen;
    const SparseBatch batch = bernoulli_sparsify(x, js, opt.seed);
    if (opt.estimator == "random-knots")
      return {rk_mean(batch), rk_cov(batch, centering, center), std::nullopt, js,
              std::nullopt};
    const CoverageCounts m = coverage_counts(batch);
    const SpatialScaler t = resolve_scaler(opt.scaler, n, x);
    const SpatialConstants sc =
        spatial_constants(n, static_cast<double>(js) / static_cast<double>(d), t);
    return {rks_mean(batch, m, t), rks_cov(batch, m, t, centering, center), std::nullopt,
            js, sc};
  }

  if (opt.estimator == "bspline" || opt.estimator == "bspline-spatial") {
    int js = parse_js(opt.js, d);
    if (js == 0) {
      const auto method = fit == FitMode::Full ? SelectionMethod::BsplineFull
                                               : SelectionMethod::BsplineSparse;
      js = select_knots(x, opt.order, method).chosen;
    }
    const SplineBasis basis = design_matrix(d, make_knots(js, opt.order));
    const NodeMatrix smoothed = [&] {
      if (fit == FitMode::Full) return fit_batch(x, basis, FitMode::Full);
      return fit_batch(x, basis, FitMode::SparseKnotsOnly,
                       fixed_positions(d, js + opt.order));
    }();
    if (opt.estimator == "bspline")
      return {bspline_mean(smoothed), bspline_cov(smoothed), smoothed.values(), js,
              std::nullopt};
    const SparseBatch batch = bernoulli_sparsify(x, js, opt.seed);
    const SpatialScaler t = resolve_scaler(opt.scaler, n, x);
    const SpatialConstants sc =
        spatial_constants(n, static_cast<double>(js) / static_cast<double>(d), t);
    auto [mean, cov] = bspline_spatial(smoothed, batch, t, centering, center);
    return {std::move(mean), std::move(cov), smoothed.values(), js, sc};
  }

  throw std::invalid_argument("unknown estimator: " + opt.estimator);
}

void append_common_manifest(std::vector<std::pair<std::string, std::string>>& m,
                            const Options& opt, const EstimateResult& r,
                            const NodeMatrix& x, double elapsed_ms) {
  m.emplace_back("estimator", opt.estimator);
  m.emplace_back("n", std::to_string(x.nodes()));
  m.emplace_back("d", std::to_string(x.dims()));
  m.emplace_back("js", std::to_string(r.js_used));
  m.emplace_back("js_mode", opt.js == "auto" ? "auto" : "fixed");
  m.emplace_back("order", std::to_string(opt.order));
  m.emplace_back("scaler", opt.scaler);
  m.emplace_back("centering", opt.centering);
  m.emplace_back("fit", opt.fit);
  m.emplace_back("seed", std::to_string(opt.seed));
  if (r.constants) {
    m.emplace_back("beta_bar", format_value(r.constants->beta_bar));
    m.emplace_back("c1", format_value(r.constants->c1));
    m.emplace_back("c2", format_value(r.constants->c2));
  }
  m.emplace_back("elapsed_ms", format_value(elapsed_ms));
}

int cmd_estimate(const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  const NodeMatrix x = load_matrix(opt.input);
  const EstimateResult r = build_estimator(x, opt);
  fs::create_directories(opt.output_dir);
  const fs::path dir(opt.output_dir);
  save_vector(dir / "mhat.csv", r.mean.values);
  save_matrix(dir / "ghat.csv", r.cov.values());
  const double elapsed =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  std::vector<std::pair<std::string, std::string>> manifest;
  manifest.emplace_back("command", "estimate");
  append_common_manifest(manifest, opt, r, x, elapsed);
  write_manifest(dir / "manifest.txt", manifest);
  return 0;
}

int cmd_fpca(const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  if (opt.input.empty() == opt.covariance.empty())
    throw std::invalid_argument("fpca needs exactly one of --input or --covariance");

  fs::create_directories(opt.output_dir);
  const fs::path dir(opt.output_dir);
  std::vector<std::pair<std::string, std::string>> manifest;
  manifest.emplace_back("command", "fpca");

  std::optional<EstimateResult> est;
  std::optional<NodeMatrix> x;
  EigenSystem eigs = [&] {
    if (!opt.covariance.empty()) {
      const NodeMatrix raw = load_matrix(opt.covariance);
      return eigendecompose(GridCovariance(raw.values(), "file"));
    }
    x = load_matrix(opt.input);
    est = build_estimator(*x, opt);
    return eigendecompose(est->cov);
  }();

  const int kappa = truncate_fve(eigs);
  save_vector(dir / "eigenvalues.csv", eigs.eigenvalues);
  save_matrix(dir / "eigenfunctions.csv", eigs.eigenfunctions.leftCols(kappa));

  if (opt.scores) {
    if (!est || !est->trajectories)
      throw std::invalid_argument(
          "--scores needs --input and a trajectory-producing estimator "
          "(sample, bspline, bspline-spatial)");
    const ScoreMatrix s =
        fpc_scores(NodeMatrix(*est->trajectories), est->mean, eigs, kappa);
    save_matrix(dir / "scores.csv", s.values);
  }

  const double elapsed =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  manifest.emplace_back("kappa", std::to_string(kappa));
  manifest.emplace_back("negative_eigenvalues",
                        std::to_string((eigs.raw_eigenvalues.array() < 0.0).count()));
  if (est && x) append_common_manifest(manifest, opt, *est, *x, elapsed);
  else manifest.emplace_back("elapsed_ms", format_value(elapsed));
  write_manifest(dir / "fpca_manifest.txt", manifest);
  return 0;
}

int cmd_simulate(const Options& opt) {
  ExperimentConfig config;
  config.n_values = opt.sweep_n;
  config.d_values = opt.sweep_d;
  config.replicates = opt.replicates;
  config.seed = opt.seed;
  config.spline_order = opt.order;
  config.js = opt.js == "auto" ? 0 : std::stoi(opt.js);
  config.centering = parse_centering(opt.centering);
  config.fit = parse_fit(opt.fit);
  config.threads = opt.threads;
  config.estimators = opt.estimators;
  if (opt.scaler == "unit") config.scaler = ScalerKind::Unit;
  else if (opt.scaler == "avg") config.scaler = ScalerKind::Avg;
  else if (opt.scaler == "optimal") config.scaler = ScalerKind::Optimal;
  else throw std::invalid_argument("simulate supports --scaler unit|avg|optimal");

  const auto rows = run_experiment(config);

  fs::create_directories(opt.output_dir);
  std::ofstream out(fs::path(opt.output_dir) / "results.csv");
  if (!out) throw io_error("cannot write results.csv");
  out << "estimator,n,d,js,metric,value,replicates,seed\n";
  for (const auto& row : rows)
    out << row.estimator << ',' << row.n << ',' << row.d << ',' << row.js << ','
        << row.metric << ',' << format_value(row.value) << ',' << row.replicates << ','
        << row.seed << '\n';
  if (!out) throw io_error("write failed: results.csv");
  return 0;
}

int cmd_select_knots(const Options& opt) {
  const NodeMatrix x = load_matrix(opt.input);
  SelectionMethod method = SelectionMethod::RandomKnots;
  int p_eff = 0;
  if (opt.estimator == "bspline" || opt.estimator == "bspline-spatial") {
    method = parse_fit(opt.fit) == FitMode::Full ? SelectionMethod::BsplineFull
                                                 : SelectionMethod::BsplineSparse;
    p_eff = opt.order;
  } else if (opt.estimator == "sample") {
    throw std::invalid_argument("select-knots needs a sparsified estimator");
  }
  const KnotSelection sel = select_knots(x, p_eff, method);

  fs::create_directories(opt.output_dir);
  const fs::path dir(opt.output_dir);
  std::ofstream per_curve(dir / "per_curve.csv");
  if (!per_curve) throw io_error("cannot write per_curve.csv");
  for (int j : sel.per_curve) per_curve << j << '\n';
  write_manifest(dir / "selection.txt",
                 {{"command", "select-knots"},
                  {"estimator", opt.estimator},
                  {"order", std::to_string(p_eff)},
                  {"chosen", std::to_string(sel.chosen)},
                  {"candidates_max", std::to_string(sel.candidates.back())},
                  {"n", std::to_string(x.nodes())},
                  {"d", std::to_string(x.dims())}});
  return 0;
}

void add_common_flags(CLI::App* cmd, Options& opt) {
  cmd->add_option("--estimator", opt.estimator,
                  "sample|random-knots|rks|bspline|bspline-spatial")
      ->check(CLI::IsMember(
          {"sample", "random-knots", "rks", "bspline", "bspline-spatial"}));
  cmd->add_option("--js", opt.js, "retained coordinates per node, or 'auto' for AIC");
  cmd->add_option("--order", opt.order, "spline order")->check(CLI::IsMember({1, 2, 4}));
  cmd->add_option("--scaler", opt.scaler, "unit|avg|optimal|custom:<file>");
  cmd->add_option("--centering", opt.centering, "empirical|fixed")
      ->check(CLI::IsMember({"empirical", "fixed"}));
  cmd->add_option("--fit", opt.fit, "full|sparse")->check(CLI::IsMember({"full", "sparse"}));
  cmd->add_option("--seed", opt.seed, "randomness seed");
  cmd->add_option("--threads", opt.threads, "worker threads (0 = hardware)")
      ->envname("SPARSECOV_THREADS");
  cmd->add_option("--config", "flat key=value configuration file (applied before flags)");
}

/// Flat key=value config support: values fill in any flag the command line
/// left unset. The pairs are spliced into the argument list right after the
/// subcommand, so explicit flags keep precedence.
std::vector<std::string> apply_config_file(std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size())
        throw std::invalid_argument("--config needs a file argument");
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw io_error("cannot open config file " + config_path);

  const auto user_has = [&](const std::string& flag) {
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  // insert after the subcommand token
  std::size_t pos = 0;
  while (pos < args.size() && !args[pos].empty() && args[pos][0] == '-') ++pos;
  if (pos < args.size()) ++pos;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config file line " + std::to_string(lineno) +
                                  ": expected key=value");
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config file line " + std::to_string(lineno) +
                                  ": empty key");
    const std::string flag = "--" + key;
    if (user_has(flag)) continue;
    args.insert(args.begin() + static_cast<long>(pos), {flag, value});
    pos += 2;
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparsified covariance and FPCA toolkit"};
  app.require_subcommand(1);
  Options opt;

  CLI::App* estimate = app.add_subcommand("estimate", "mean/covariance estimation");
  estimate->add_option("--input", opt.input, "input CSV matrix")->required();
  estimate->add_option("--output-dir", opt.output_dir, "output directory")->required();
  add_common_flags(estimate, opt);

  CLI::App* fpca = app.add_subcommand("fpca", "eigenvalues, eigenfunctions, scores");
  fpca->add_option("--input", opt.input, "input CSV matrix");
  fpca->add_option("--covariance", opt.covariance, "precomputed covariance CSV");
  fpca->add_option("--output-dir", opt.output_dir, "output directory")->required();
  fpca->add_flag("--scores", opt.scores, "also write FPC scores");
  add_common_flags(fpca, opt);

  CLI::App* simulate = app.add_subcommand("simulate", "replication experiments");
  simulate->add_option("--output-dir", opt.output_dir, "output directory")->required();
  simulate->add_option("--sweep-n", opt.sweep_n, "node counts")->delimiter(',');
  simulate->add_option("--sweep-d", opt.sweep_d, "dimensions")->delimiter(',');
  simulate->add_option("--replicates", opt.replicates, "replications per cell");
  simulate->add_option("--estimators", opt.estimators, "estimators to run")
      ->delimiter(',');
  add_common_flags(simulate, opt);

  CLI::App* select = app.add_subcommand("select-knots", "AIC knot selection");
  select->add_option("--input", opt.input, "input CSV matrix")->required();
  select->add_option("--output-dir", opt.output_dir, "output directory")->required();
  add_common_flags(select, opt);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = apply_config_file(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const io_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*estimate) return cmd_estimate(opt);
    if (*fpca) return cmd_fpca(opt);
    if (*simulate) return cmd_simulate(opt);
    if (*select) return cmd_select_knots(opt);
    return 1;
  } catch (const io_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
