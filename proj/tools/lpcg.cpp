// lpcg: batch front end for problem generation, single solves, lambda
// continuation, the tomography experiment and multi-solver comparisons.
//
// Exit codes: 0 success, 2 usage, 3 file or format error, 4 solver failure.
//
// Option values resolve as command-line flag, then --config JSON file, then
// built-in default. Config keys are the long flag names without dashes; a key
// that names no flag of the chosen subcommand is rejected like an unknown flag.
// Every run echoes its effective options to meta.json, and that "config" object
// can be passed back through --config to repeat the run.

#include "lpcg/lpcg.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lpcg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitSolver = 4;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs a validation step and reports any rejected value as a usage error.
template <class F>
void validate_or_usage(F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::string default_out_dir() {
  if (const char* env = std::getenv("LPCG_OUT_DIR"); env && *env) return env;
  return "lpcg_out";
}

// ---------------------------------------------------------------------------
// Config file injection.

std::string config_value_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) {
      if (!out.empty()) out += ',';
      out += config_value_string(e);
    }
    return out;
  }
  throw UsageError("config: unsupported value " + v.dump());
}

// Returns argv with the config entries spliced in directly after the
// subcommand names, so that later command-line flags take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;

  json cfg;
  {
    auto is = io::open_input(path);
    try {
      cfg = json::parse(is);
    } catch (const json::exception& e) {
      throw io::FormatError("config '" + path + "': " + e.what());
    }
  }
  if (!cfg.is_object()) throw io::FormatError("config '" + path + "': top level must be an object");
  // meta.json files carry the options under "config".
  if (cfg.contains("config") && cfg["config"].is_object()) cfg = cfg["config"];

  std::size_t pos = 1;
  while (pos < args.size() && !args[pos].empty() && args[pos][0] != '-') ++pos;
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(pos));
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config") continue;
    out.push_back("--" + key + "=" + config_value_string(value));
  }
  out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(pos), args.end());
  return out;
}

// Effective value of every option of `sub`, skipping help, config and out.
json effective_config(const CLI::App* sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config" || name == "out") continue;
    if (opt->get_expected_min() == 0) {
      cfg[name] = opt->count() ? opt->as<bool>() : false;
      continue;
    }
    if (opt->count() == 0) {
      cfg[name] = opt->get_default_str();
      continue;
    }
    const auto& res = opt->results();
    // TakeLast keeps only the final occurrence; multi-valued options join theirs.
    if (opt->get_multi_option_policy() == CLI::MultiOptionPolicy::TakeLast && !res.empty()) {
      cfg[name] = res.back();
    } else {
      std::string joined;
      for (const auto& r : res) joined += (joined.empty() ? "" : ",") + r;
      cfg[name] = joined;
    }
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Solver knobs shared by solve, lcurve and compare.

struct Knobs {
  std::string solver = "conv-cg";
  double l = 2.0;
  double p = 1.0;
  bool allow_nonconvex = false;
  int iters = 50;
  int inner = 5;
  double eps0 = 0.1;
  std::string eps_mode = "distance";
  double eps_alpha = 0.1;
  double gamma = 0.5;
  double sigma0 = 0.1;
  double sigma_alpha = 0.8;
  std::string sigma_mode = "geometric";
  double tau = -1.0;        // < 0: lambda / 2
  double tau_ratio = 0.25;  // <= 0: threshold at tau throughout
  std::string threshold = "auto";
  std::string line_search = "taylor";
  bool no_freeze = false;
};

void add_knobs(CLI::App* app, Knobs& k, bool with_solver, bool with_iters) {
  if (with_solver)
    app->add_option("--solver", k.solver, "irls-cg | conv-cg | fista")
        ->check(CLI::IsMember({"irls-cg", "conv-cg", "fista"}));
  app->add_option("--l", k.l, "residual norm exponent, >= 1");
  app->add_option("--p", k.p, "penalty exponent, 1 <= p <= 2");
  app->add_flag("--allow-nonconvex", k.allow_nonconvex, "accept 0 < p < 1");
  if (with_iters) app->add_option("--iters", k.iters, "N: outer iterations (IRLS) or iterations (CONV CG, FISTA)");
  app->add_option("--inner", k.inner, "N_l: CG steps per IRLS outer iteration");
  app->add_option("--eps0", k.eps0, "IRLS initial epsilon");
  app->add_option("--eps-mode", k.eps_mode, "IRLS epsilon rule")
      ->check(CLI::IsMember({"distance", "step-norm", "surrogate-gap", "fixed"}));
  app->add_option("--eps-alpha", k.eps_alpha, "IRLS alpha in the epsilon rule");
  app->add_option("--gamma", k.gamma, "IRLS gamma (surrogate-gap rule)");
  app->add_option("--sigma0", k.sigma0, "CONV CG initial smoothing width");
  app->add_option("--sigma-alpha", k.sigma_alpha, "CONV CG sigma reduction factor");
  app->add_option("--sigma-mode", k.sigma_mode, "CONV CG sigma rule")
      ->check(CLI::IsMember({"geometric", "distance-tied"}));
  app->add_option("--tau", k.tau, "CONV CG threshold level; negative means lambda/2");
  app->add_option("--tau-ratio", k.tau_ratio, "CONV CG threshold cap tau_n <= ratio * sigma_n; <= 0 disables");
  app->add_option("--threshold", k.threshold, "CONV CG threshold mode")
      ->check(CLI::IsMember({"auto", "soft", "hard", "optimality", "none"}));
  app->add_option("--line-search", k.line_search, "CONV CG step rule")->check(CLI::IsMember({"taylor", "backtracking"}));
  app->add_flag("--no-freeze", k.no_freeze, "CONV CG: do not freeze optimal zero coordinates");
}

SolverKind parse_kind(const std::string& s) {
  if (s == "irls-cg") return SolverKind::irls_cg;
  if (s == "conv-cg") return SolverKind::conv_cg;
  if (s == "fista") return SolverKind::fista;
  throw UsageError("unknown solver '" + s + "'");
}

// Settings for one solver at penalty `lambda`. Validates every knob the
// solver reads.
SolverSettings make_settings(const Knobs& k, SolverKind kind, double lambda) {
  SolverSettings s;
  s.kind = kind;
  const Penalty pen{lambda, k.l, k.p, k.allow_nonconvex};

  IrlsConfig& ic = s.irls;
  ic.pen = pen;
  ic.eps0 = k.eps0;
  ic.eps_floor = std::min(ic.eps_floor, k.eps0);
  ic.eps_mode = k.eps_mode == "distance"    ? EpsilonMode::distance
                : k.eps_mode == "step-norm" ? EpsilonMode::step_norm
                : k.eps_mode == "fixed"     ? EpsilonMode::fixed
                                            : EpsilonMode::surrogate_gap;
  ic.alpha = k.eps_alpha;
  ic.gamma = k.gamma;
  ic.outer_iters = k.iters;
  ic.inner_iters = k.inner;

  ConvCgConfig& cc = s.conv;
  cc.pen = pen;
  cc.sigma0 = k.sigma0;
  cc.sigma_floor = std::min(cc.sigma_floor, k.sigma0);
  cc.alpha = k.sigma_alpha;
  cc.sigma_mode = k.sigma_mode == "geometric" ? SigmaMode::geometric : SigmaMode::distance_tied;
  if (k.tau >= 0.0) cc.tau = k.tau;
  cc.tau_sigma_ratio = k.tau_ratio > 0.0 ? std::optional<double>(k.tau_ratio) : std::nullopt;
  if (k.threshold == "soft") cc.threshold_mode = ThresholdMode::soft;
  if (k.threshold == "hard") cc.threshold_mode = ThresholdMode::hard;
  if (k.threshold == "optimality") cc.threshold_mode = ThresholdMode::optimality;
  if (k.threshold == "none") cc.threshold_mode = ThresholdMode::none;
  cc.line_search = k.line_search == "taylor" ? LineSearch::taylor : LineSearch::backtracking;
  cc.freeze_zeros = !k.no_freeze;
  cc.iters = k.iters;

  s.fista.lambda = lambda;
  s.fista.iters = std::max(k.iters, 1);

  validate_or_usage([&] {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
    if (k.iters < 0) throw std::invalid_argument("--iters must be >= 0");
    switch (kind) {
      case SolverKind::irls_cg:
        ic.validate();
        break;
      case SolverKind::conv_cg:
        cc.validate();
        break;
      case SolverKind::fista:
        if (k.l != 2.0 || k.p != 1.0) throw std::invalid_argument("fista solves l = 2, p = 1 only");
        s.fista.validate();
        break;
    }
  });
  return s;
}

// ---------------------------------------------------------------------------
// Output helpers.

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io::FileError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_json(const fs::path& path, const json& j) {
  io::write_file(path.string(), [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

void write_trace(const fs::path& path, const SolveTrace& trace) {
  io::write_file(path.string(), [&](std::ostream& os) { write_jsonl(os, trace); });
}

json make_meta(const std::string& command, const CLI::App* sub) {
  return json{{"command", command}, {"config", effective_config(sub)}, {"version", LPCG_VERSION}};
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double model_rmse(const Vector& x, const Vector& truth) { return problems::rms(Vector(x - truth)); }

// Ratio of extreme singular values, from a dense SVD when the matrix is
// small enough, otherwise NaN.
double condition_estimate(const io::AnyMatrix& a) {
  const Eigen::MatrixXd d = std::visit(
      [](const auto& m) -> Eigen::MatrixXd {
        if (static_cast<double>(m.rows()) * static_cast<double>(m.cols()) > 4.0e6) return {};
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, CsrMatrix>) {
          return Eigen::Map<const Eigen::MatrixXd>(m.to_dense().data().data(), m.rows(), m.cols());
        } else {
          return Eigen::Map<const Eigen::MatrixXd>(m.data().data(), m.rows(), m.cols());
        }
      },
      a);
  if (d.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  const Vector s = Eigen::BDCSVD<Eigen::MatrixXd>(d).singularValues();
  return s.minCoeff() > 0.0 ? s.maxCoeff() / s.minCoeff() : std::numeric_limits<double>::infinity();
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": '" + item + "' is not a number");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Problem source: a bundle directory, optionally viewed through a wavelet basis.

struct Source {
  problems::Bundle bundle;
  Operator A;         // the operator the solver sees
  Vector b;
  std::optional<problems::WaveletBasis> basis;

  Vector to_model(const Vector& x) const { return basis ? basis->inverse(x) : x; }
};

Source load_source(const std::string& dir, const std::string& data, int wavelet_levels) {
  Source s;
  s.bundle = problems::read_bundle(dir);
  const Operator base = io::to_operator(s.bundle.A);
  s.b = data == "clean" ? s.bundle.b_clean : data == "noisy" ? s.bundle.b_noisy : s.bundle.b_outliers;
  if (wavelet_levels > 0) {
    validate_or_usage([&] { s.basis.emplace(base.cols(), wavelet_levels); });
    s.A = Operator(problems::compose_awinv(base, *s.basis));
  } else {
    s.A = base;
  }
  return s;
}

void add_source_opts(CLI::App* app, std::string& bundle, std::string& data, int& levels) {
  app->add_option("--bundle", bundle, "problem bundle directory")->required();
  app->add_option("--data", data, "right-hand side: noisy | outliers | clean")
      ->check(CLI::IsMember({"noisy", "outliers", "clean"}));
  app->add_option("--wavelet-levels", levels, "solve for CDF 9/7 coefficients with this many levels; 0 = pixel basis");
}

// ---------------------------------------------------------------------------
// gen

struct GenTomo {
  int grid = 32;
  int rays = 400;
  std::uint64_t seed = 7;
  int block = 4;
  double amplitude = 0.03;
  double noise = 0.05;
  double outlier_frac = 0.10;
  double outlier_scale = 5.0;
};

struct GenMatrix {
  int m = 1000;
  int n = 1000;
  std::string decay = "0,-2.5";
  std::uint64_t seed = 1;
  double density = 0.1;
  double noise = 0.01;
  double outlier_frac = 0.0;
  double outlier_scale = 5.0;
};

void finish_gen(problems::Bundle& b, const std::string& command, const CLI::App* sub, const fs::path& out,
                std::uint64_t seed, double cond, const problems::NoisyData& nd) {
  const Index m = std::visit([](const auto& a) { return a.rows(); }, b.A);
  const Index n = std::visit([](const auto& a) { return a.cols(); }, b.A);
  b.meta = make_meta(command, sub);
  b.meta["problem"] = {{"m", m},
                       {"n", n},
                       {"cond_estimate", std::isfinite(cond) ? json(cond) : json(nullptr)},
                       {"noise_norm", nd.noise_norm},
                       {"outlier_count", nd.outlier_indices.size()},
                       {"rms_clean", nd.rms_clean}};
  problems::write_bundle(out, b);
  std::cout << command << ": m=" << m << " n=" << n << " cond_est=" << (std::isfinite(cond) ? io::format_double(cond) : "inf")
            << " seed=" << seed << " -> " << out.string() << '\n';
}

// Geometry uses seed, noise seed + 1.
void cmd_gen_tomo(const GenTomo& o, const CLI::App* sub, const fs::path& out) {
  problems::TomographyGeometry geo;
  Vector xt;
  validate_or_usage([&] {
    geo = problems::build_tomography(o.grid, o.rays, o.seed);
    xt = problems::checkerboard(o.grid, o.block, o.amplitude);
  });
  problems::NoiseModel nm{o.noise, o.outlier_frac, o.outlier_scale, o.seed + 1};
  validate_or_usage([&] { nm.validate(); });
  problems::Bundle b;
  b.b_clean = geo.A.apply(xt);
  const auto nd = problems::add_noise_and_outliers(b.b_clean, nm);
  b.b_noisy = nd.b_noisy;
  b.b_outliers = nd.b_outliers;
  b.x_true = xt;
  b.A = geo.A;
  finish_gen(b, "gen tomo", sub, out, o.seed, condition_estimate(b.A), nd);
}

// Matrix uses seed, the sparse truth seed + 1, noise seed + 2.
void cmd_gen_matrix(const GenMatrix& o, const CLI::App* sub, const fs::path& out) {
  const auto decay = parse_list(o.decay, "--decay");
  if (decay.size() != 2) throw UsageError("--decay takes two exponents hi,lo");
  if (o.m < 1 || o.n < 1) throw UsageError("--m and --n must be >= 1");
  if (!(o.density >= 0.0 && o.density <= 1.0)) throw UsageError("--density must lie in [0, 1]");
  const auto A = problems::logspace_matrix(o.m, o.n, decay[0], decay[1], o.seed);
  const auto k = static_cast<Index>(std::llround(o.density * o.n));
  problems::Bundle b;
  b.x_true = problems::sparse_vector(o.n, k, o.seed + 1);
  b.b_clean = A.apply(*b.x_true);
  problems::NoiseModel nm{o.noise, o.outlier_frac, o.outlier_scale, o.seed + 2};
  validate_or_usage([&] { nm.validate(); });
  const auto nd = problems::add_noise_and_outliers(b.b_clean, nm);
  b.b_noisy = nd.b_noisy;
  b.b_outliers = nd.b_outliers;
  b.A = A;
  // Singular values are 10^hi ... 10^lo by construction.
  finish_gen(b, "gen matrix", sub, out, o.seed, std::pow(10.0, std::abs(decay[0] - decay[1])), nd);
}

// ---------------------------------------------------------------------------
// solve

struct SolveOpts {
  std::string bundle;
  std::string data = "noisy";
  int wavelet_levels = 0;
  double lambda = 0.0;
  Knobs knobs;
};

json solution_summary(const Source& src, const Vector& x, const Penalty& pen) {
  const Vector r = src.A.apply(x) - src.b;
  const Vector model = src.to_model(x);
  json j{{"final_F", eval_flp_residual(r, x, pen)},
         {"residual_norm", r.norm()},
         {"residual_norm_l", lp_norm(r, pen.l)},
         {"nnz", count_nonzeros(x)}};
  if (src.bundle.x_true) {
    j["model_rmse"] = model_rmse(model, *src.bundle.x_true);
    j["percent_error"] = 100.0 * (model - *src.bundle.x_true).norm() / src.bundle.x_true->norm();
  }
  return j;
}

void cmd_solve(const SolveOpts& o, const CLI::App* sub, const fs::path& out) {
  const SolverKind kind = parse_kind(o.knobs.solver);
  const SolverSettings settings = make_settings(o.knobs, kind, o.lambda);
  const Source src = load_source(o.bundle, o.data, o.wavelet_levels);
  ensure_dir(out);

  ContinuationOptions copt;
  copt.iters_per_lambda = o.knobs.iters;
  const auto t0 = std::chrono::steady_clock::now();
  const LCurve lc = run_continuation(src.A, src.b, {o.lambda}, settings, copt);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  io::write_vector_file((out / "x_bar.txt").string(), src.to_model(lc.final_x));
  if (src.basis) io::write_vector_file((out / "coefficients.txt").string(), lc.final_x);
  write_trace(out / "trace.jsonl", lc.trace);
  json summary = solution_summary(src, lc.final_x, settings.penalty());
  summary["solver"] = o.knobs.solver;
  summary["lambda"] = o.lambda;
  summary["iterations"] = lc.trace.size();
  summary["wall_time_s"] = wall;
  write_json(out / "summary.json", summary);
  json meta = make_meta("solve", sub);
  meta["bundle_meta"] = src.bundle.meta;
  write_json(out / "meta.json", meta);
  std::cout << "solve " << o.knobs.solver << ": F=" << io::format_double(summary["final_F"].get<double>())
            << " nnz=" << summary["nnz"] << (summary.contains("model_rmse")
                                                 ? " rmse=" + io::format_double(summary["model_rmse"].get<double>())
                                                 : std::string())
            << " -> " << out.string() << '\n';
}

// ---------------------------------------------------------------------------
// lcurve

struct LcurveOpts {
  std::string bundle;
  std::string data = "noisy";
  int wavelet_levels = 0;
  int count = 50;
  double lambda_max = 0.0;  // 0: ||A^T b||_inf / 1.2
  double lambda_min = 0.0;  // 0: ||A^T b||_inf / 1e6
  int iters_per_lambda = 5;
  bool reset_state = false;
  bool cold_start = false;
  bool smooth = false;
  double flat_tol = 1e-8;
  double noise_norm = -1.0;  // < 0: discrepancy report off
  Knobs knobs;
};

void cmd_lcurve(const LcurveOpts& o, const CLI::App* sub, const fs::path& out) {
  const SolverKind kind = parse_kind(o.knobs.solver);
  if (o.count < 1) throw UsageError("--count must be >= 1");
  if (o.iters_per_lambda < 0) throw UsageError("--iters-per-lambda must be >= 0");
  const Source src = load_source(o.bundle, o.data, o.wavelet_levels);

  const double top = src.A.apply_transpose(src.b).cwiseAbs().maxCoeff();
  const double lmax = o.lambda_max > 0.0 ? o.lambda_max : top / 1.2;
  const double lmin = o.lambda_min > 0.0 ? o.lambda_min : top / 1e6;
  std::vector<double> grid;
  validate_or_usage([&] { grid = o.count == 1 ? std::vector<double>{lmax} : lambda_grid(lmax, lmin, o.count); });
  const SolverSettings settings = make_settings(o.knobs, kind, grid.front());
  ensure_dir(out);

  ContinuationOptions copt;
  copt.iters_per_lambda = o.iters_per_lambda;
  copt.warm_start = !o.cold_start;
  copt.carry_state = !o.reset_state;
  copt.keep_solutions = true;
  if (src.bundle.x_true) {
    copt.truth = *src.bundle.x_true;
    copt.to_model = [&src](const Vector& x) { return src.to_model(x); };
  }
  const auto t0 = std::chrono::steady_clock::now();
  LCurve lc = run_continuation(src.A, src.b, grid, settings, copt);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json corner{{"solver", o.knobs.solver}, {"count", lc.size()}, {"wall_time_s", wall}};
  std::size_t pick = 0;
  if (lc.size() >= 5) {
    compute_curvature(lc, o.smooth);
    const GridPick c = pick_corner(lc, o.flat_tol);
    pick = c.index;
    corner["corner_index"] = c.index;
    corner["corner_lambda"] = c.lambda;
    corner["no_distinct_corner"] = !c.found;
  } else {
    // Too few points for curvature; the report falls back to the last lambda.
    pick = lc.size() - 1;
    corner["corner_index"] = pick;
    corner["corner_lambda"] = lc.lambdas[pick];
    corner["no_distinct_corner"] = true;
  }
  if (!lc.percent_error.empty()) {
    const auto it = std::min_element(lc.percent_error.begin(), lc.percent_error.end());
    const auto imin = static_cast<std::size_t>(it - lc.percent_error.begin());
    corner["error_min_index"] = imin;
    corner["error_min_lambda"] = lc.lambdas[imin];
    corner["error_min_percent"] = *it;
    corner["corner_percent_error"] = lc.percent_error[pick];
  }
  if (o.noise_norm >= 0.0) {
    const GridPick d = discrepancy_stop(lc, o.noise_norm);
    corner["discrepancy"] = {{"index", d.index}, {"lambda", d.lambda}, {"reached", d.found}};
  }
  corner["monotonicity_violations"] = lc.monotonicity_violations;

  io::write_file((out / "lcurve.csv").string(), [&](std::ostream& os) { write_lcurve_csv(os, lc); });
  write_json(out / "corner.json", corner);
  write_trace(out / "trace.jsonl", lc.trace);
  io::write_vector_file((out / "x_bar.txt").string(), src.to_model(lc.final_x));
  io::write_vector_file((out / "x_corner.txt").string(), src.to_model(lc.solutions[pick]));
  json meta = make_meta("lcurve", sub);
  meta["bundle_meta"] = src.bundle.meta;
  meta["grid"] = {{"lambda_max", lmax}, {"lambda_min", grid.back()}, {"count", grid.size()}};
  write_json(out / "meta.json", meta);
  std::cout << "lcurve " << o.knobs.solver << ": " << lc.size() << " points, corner index " << corner["corner_index"]
            << (corner["no_distinct_corner"].get<bool>() ? " (no distinct corner)" : "");
  if (corner.contains("error_min_index")) std::cout << ", error minimum index " << corner["error_min_index"];
  std::cout << " -> " << out.string() << '\n';
}

// ---------------------------------------------------------------------------
// tomo: robust residual norms on tomography data with outliers. Each l gets
// the lambda with the lowest model RMSE from the grid
// f * ||A||^2 * rms(b)^{l-2}, f in --factors.

struct TomoOpts {
  GenTomo gen;
  std::string ls = "1,1.8,2";
  std::string factors = "0.001,0.003,0.01,0.03,0.1,0.3,1,3,10";
  std::string data = "outliers";
  int iters = 30;
  int inner = 20;
  int dls_inner = 200;
  double eps0 = 0.1;
};

void cmd_tomo(const TomoOpts& o, const CLI::App* sub, const fs::path& out) {
  const auto ls = parse_list(o.ls, "--ls");
  const auto fs_ = parse_list(o.factors, "--factors");
  if (ls.empty() || fs_.empty()) throw UsageError("--ls and --factors must be non-empty");
  if (o.iters < 1 || o.inner < 1 || o.dls_inner < 1) throw UsageError("iteration counts must be >= 1");
  for (double f : fs_)
    if (!(f > 0.0)) throw UsageError("--factors must be positive");

  problems::TomographyGeometry geo;
  Vector xt;
  validate_or_usage([&] {
    geo = problems::build_tomography(o.gen.grid, o.gen.rays, o.gen.seed);
    xt = problems::checkerboard(o.gen.grid, o.gen.block, o.gen.amplitude);
  });
  problems::NoiseModel nm{o.gen.noise, o.gen.outlier_frac, o.gen.outlier_scale, o.gen.seed + 1};
  validate_or_usage([&] { nm.validate(); });
  const Vector b_clean = geo.A.apply(xt);
  const auto nd = problems::add_noise_and_outliers(b_clean, nm);
  const Vector& b = o.data == "clean" ? b_clean : o.data == "noisy" ? nd.b_noisy : nd.b_outliers;
  const double norm2 = std::pow(spectral_norm_estimate(geo.A, 50), 2);
  const double rb = problems::rms(b);

  ensure_dir(out);
  std::ostringstream rows;
  rows << "l,factor,lambda,rmse\n";
  json best = json::array();
  for (double l : ls) {
    double best_rmse = std::numeric_limits<double>::infinity();
    double best_f = 0.0, best_lam = 0.0;
    Vector best_x;
    for (double f : fs_) {
      IrlsConfig c;
      c.pen = Penalty{f * norm2 * std::pow(rb, l - 2.0), l, 2.0};
      c.eps_mode = EpsilonMode::fixed;
      c.eps0 = o.eps0;
      // l = p = 2 is one linear system: a single outer step with a long CG run.
      c.outer_iters = l == 2.0 ? 1 : o.iters;
      c.inner_iters = l == 2.0 ? o.dls_inner : o.inner;
      validate_or_usage([&] { c.validate(); });
      const Vector x = irls_cg_solve(geo.A, b, c, Vector::Zero(geo.A.cols())).x;
      const double e = model_rmse(x, xt);
      rows << io::format_double(l) << ',' << io::format_double(f) << ',' << io::format_double(c.pen.lambda) << ','
           << io::format_double(e) << '\n';
      if (e < best_rmse) {
        best_rmse = e;
        best_f = f;
        best_lam = c.pen.lambda;
        best_x = x;
      }
    }
    best.push_back({{"l", l}, {"factor", best_f}, {"lambda", best_lam}, {"rmse", best_rmse}});
    io::write_vector_file((out / ("x_l" + io::format_double(l) + ".txt")).string(), best_x);
    std::cout << "tomo l=" << io::format_double(l) << ": best rmse " << io::format_double(best_rmse) << " at factor "
              << io::format_double(best_f) << '\n';
  }
  io::write_file((out / "tomo.csv").string(), [&](std::ostream& os) { os << rows.str(); });
  io::write_vector_file((out / "x_true.txt").string(), xt);
  write_json(out / "summary.json", json{{"best", best}, {"outlier_count", nd.outlier_indices.size()}});
  write_json(out / "meta.json", make_meta("tomo", sub));
}

// ---------------------------------------------------------------------------
// compare: median F along the first --steps lambdas of a continuation run,
// per solver, over --trials logspace problems. Trial t uses matrix seed
// seed + 100 + t, truth seed + 200 + t and noise seed + 300 + t for every
// solver, so all solvers see the same instances.

struct CompareOpts {
  std::string solvers = "fista,irls-cg,conv-cg";
  int trials = 10;
  std::uint64_t seed = 0;
  int m = 300;
  int n = 300;
  std::string decay = "0,-2.5";
  double density = 0.1;
  double noise = 0.01;
  int count = 50;
  int steps = 10;
  int iters_per_lambda = 3;
  int threads = 0;
  Knobs knobs;
};

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

void cmd_compare(const CompareOpts& o, const CLI::App* sub, const fs::path& out) {
  const auto names = split_names(o.solvers);
  if (names.size() < 2) throw UsageError("compare needs at least two solvers in --solvers");
  std::vector<SolverSettings> sets;
  for (const auto& nm : names) sets.push_back(make_settings(o.knobs, parse_kind(nm), 1.0));
  const auto decay = parse_list(o.decay, "--decay");
  if (decay.size() != 2) throw UsageError("--decay takes two exponents hi,lo");
  if (o.trials < 1 || o.m < 1 || o.n < 1) throw UsageError("--trials, --m and --n must be >= 1");
  if (o.count < 2 || o.steps < 1 || o.steps > o.count) throw UsageError("need 1 <= --steps <= --count, --count >= 2");
  if (o.iters_per_lambda < 0) throw UsageError("--iters-per-lambda must be >= 0");
  if (!(o.density >= 0.0 && o.density <= 1.0)) throw UsageError("--density must lie in [0, 1]");
  validate_or_usage([&] { problems::NoiseModel{o.noise, 0.0, 0.0, 0}.validate(); });

  const std::size_t S = names.size();
  const auto steps = static_cast<std::size_t>(o.steps);
  // F[trial][solver][step], lam[trial][step]
  std::vector<std::vector<std::vector<double>>> F(static_cast<std::size_t>(o.trials));
  std::vector<std::vector<double>> lam(static_cast<std::size_t>(o.trials));

  auto run_trial = [&](int t) {
    const auto ut = static_cast<std::uint64_t>(t);
    const auto A = problems::logspace_matrix(o.m, o.n, decay[0], decay[1], o.seed + 100 + ut);
    const Vector x = problems::sparse_vector(o.n, static_cast<Index>(std::llround(o.density * o.n)), o.seed + 200 + ut);
    problems::NoiseModel nm{o.noise, 0.0, 0.0, o.seed + 300 + ut};
    const Vector b = problems::add_noise_and_outliers(A.apply(x), nm).b_noisy;
    const double top = A.apply_transpose(b).cwiseAbs().maxCoeff();
    auto grid = lambda_grid(top / 1.2, top / 1e6, o.count);
    grid.resize(steps);
    ContinuationOptions copt;
    copt.iters_per_lambda = o.iters_per_lambda;
    auto& ft = F[static_cast<std::size_t>(t)];
    ft.resize(S);
    for (std::size_t k = 0; k < S; ++k) {
      const LCurve lc = run_continuation(A, b, grid, sets[k], copt);
      ft[k] = lc.F;
    }
    lam[static_cast<std::size_t>(t)] = grid;
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<unsigned>(o.threads > 0 ? static_cast<unsigned>(o.threads) : hw,
                                              static_cast<unsigned>(o.trials));
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int t = next++; t < o.trials; t = next++) {
          try {
            run_trial(t);
          } catch (...) {
            std::lock_guard lock(err_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
  }
  if (first_error) std::rethrow_exception(first_error);

  ensure_dir(out);
  io::write_file((out / "compare.csv").string(), [&](std::ostream& os) {
    os << "solver,trial,step,lambda,F\n";
    for (std::size_t k = 0; k < S; ++k)
      for (int t = 0; t < o.trials; ++t)
        for (std::size_t i = 0; i < steps; ++i) {
          const auto ut = static_cast<std::size_t>(t);
          os << names[k] << ',' << t << ',' << i << ',' << io::format_double(lam[ut][i]) << ','
             << io::format_double(F[ut][k][i]) << '\n';
        }
  });
  json med = json::object();
  std::ostringstream table;
  table << "step";
  for (const auto& nm : names) table << ',' << nm;
  table << '\n';
  for (std::size_t i = 0; i < steps; ++i) {
    table << i;
    for (std::size_t k = 0; k < S; ++k) {
      std::vector<double> v;
      for (int t = 0; t < o.trials; ++t) v.push_back(F[static_cast<std::size_t>(t)][k][i]);
      const double m = median(v);
      med[names[k]].push_back(m);
      table << ',' << io::format_double(m);
    }
    table << '\n';
  }
  io::write_file((out / "compare_median.csv").string(), [&](std::ostream& os) { os << table.str(); });
  write_json(out / "summary.json", json{{"median_F", med}, {"trials", o.trials}, {"steps", o.steps}});
  write_json(out / "meta.json", make_meta("compare", sub));
  std::cout << "median F per lambda step\n" << table.str();
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  args = expand_config(args);

  CLI::App app{"l_p-regularized least squares by IRLS-CG, CONV-CG and FISTA", "lpcg"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string out_dir = default_out_dir();
  std::string config_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out_dir, "output directory (default $LPCG_OUT_DIR or ./lpcg_out)");
    sub->add_option("--config", config_path, "JSON file of option values; command-line flags take precedence");
  };

  // gen
  CLI::App* gen = app.add_subcommand("gen", "generate a problem bundle");
  gen->require_subcommand(1);
  GenTomo gt;
  CLI::App* gen_tomo = gen->add_subcommand("tomo", "straight-ray tomography with a checkerboard truth");
  gen_tomo->add_option("--grid", gt.grid, "pixels per side");
  gen_tomo->add_option("--rays", gt.rays, "number of rays m");
  gen_tomo->add_option("--seed", gt.seed, "geometry seed; noise uses seed + 1");
  gen_tomo->add_option("--block", gt.block, "checkerboard tile size in pixels");
  gen_tomo->add_option("--amplitude", gt.amplitude, "checkerboard amplitude");
  gen_tomo->add_option("--noise", gt.noise, "Gaussian noise std relative to rms(b)");
  gen_tomo->add_option("--outlier-frac", gt.outlier_frac, "fraction of entries hit by outliers");
  gen_tomo->add_option("--outlier-scale", gt.outlier_scale, "outlier magnitude relative to rms(b)");
  add_common(gen_tomo);

  GenMatrix gm;
  CLI::App* gen_matrix = gen->add_subcommand("matrix", "dense matrix with log-spaced singular values and sparse truth");
  gen_matrix->add_option("--m", gm.m, "rows");
  gen_matrix->add_option("--n", gm.n, "columns");
  gen_matrix->add_option("--decay", gm.decay, "singular value exponents hi,lo");
  gen_matrix->add_option("--seed", gm.seed, "matrix seed; truth uses seed + 1, noise seed + 2");
  gen_matrix->add_option("--density", gm.density, "fraction of nonzero truth entries");
  gen_matrix->add_option("--noise", gm.noise, "Gaussian noise std relative to rms(b)");
  gen_matrix->add_option("--outlier-frac", gm.outlier_frac, "fraction of entries hit by outliers");
  gen_matrix->add_option("--outlier-scale", gm.outlier_scale, "outlier magnitude relative to rms(b)");
  add_common(gen_matrix);

  // solve
  SolveOpts so;
  CLI::App* solve = app.add_subcommand("solve", "one solve at a fixed lambda from x0 = 0");
  add_source_opts(solve, so.bundle, so.data, so.wavelet_levels);
  solve->add_option("--lambda", so.lambda, "penalty weight")->required();
  add_knobs(solve, so.knobs, true, true);
  add_common(solve);

  // lcurve
  LcurveOpts lo;
  lo.knobs.iters = 0;  // unused: the budget is --iters-per-lambda
  CLI::App* lcurve = app.add_subcommand("lcurve", "lambda continuation, L-curve and corner");
  add_source_opts(lcurve, lo.bundle, lo.data, lo.wavelet_levels);
  lcurve->add_option("--count", lo.count, "grid size");
  lcurve->add_option("--lambda-max", lo.lambda_max, "largest lambda; 0 = ||A^T b||_inf / 1.2");
  lcurve->add_option("--lambda-min", lo.lambda_min, "smallest lambda; 0 = ||A^T b||_inf / 1e6");
  lcurve->add_option("--iters-per-lambda", lo.iters_per_lambda, "iterations at each lambda");
  lcurve->add_flag("--reset-state", lo.reset_state, "restart epsilon / sigma at every lambda");
  lcurve->add_flag("--cold-start", lo.cold_start, "start every lambda from x = 0");
  lcurve->add_flag("--smooth", lo.smooth, "three-point smoothing of the curvature");
  lcurve->add_option("--flat-tol", lo.flat_tol, "curvature below this means no distinct corner");
  lcurve->add_option("--noise-norm", lo.noise_norm, "report the discrepancy-principle lambda for this ||noise||_2");
  add_knobs(lcurve, lo.knobs, true, false);
  add_common(lcurve);

  // tomo
  TomoOpts to;
  CLI::App* tomo = app.add_subcommand("tomo", "tomography with outliers: IRLS-CG for several residual norms l");
  tomo->add_option("--grid", to.gen.grid, "pixels per side");
  tomo->add_option("--rays", to.gen.rays, "number of rays m");
  tomo->add_option("--seed", to.gen.seed, "geometry seed; noise uses seed + 1");
  tomo->add_option("--block", to.gen.block, "checkerboard tile size");
  tomo->add_option("--amplitude", to.gen.amplitude, "checkerboard amplitude");
  tomo->add_option("--noise", to.gen.noise, "Gaussian noise std relative to rms(b)");
  tomo->add_option("--outlier-frac", to.gen.outlier_frac, "fraction of outliers");
  tomo->add_option("--outlier-scale", to.gen.outlier_scale, "outlier magnitude relative to rms(b)");
  tomo->add_option("--data", to.data, "noisy | outliers | clean")->check(CLI::IsMember({"noisy", "outliers", "clean"}));
  tomo->add_option("--ls", to.ls, "residual norm exponents");
  tomo->add_option("--factors", to.factors, "lambda factors f in f ||A||^2 rms(b)^(l-2)");
  tomo->add_option("--iters", to.iters, "IRLS outer iterations for l != 2");
  tomo->add_option("--inner", to.inner, "CG steps per outer iteration for l != 2");
  tomo->add_option("--dls-inner", to.dls_inner, "CG steps of the l = 2 linear solve");
  tomo->add_option("--eps0", to.eps0, "fixed IRLS smoothing");
  add_common(tomo);

  // compare
  CompareOpts co;
  co.knobs.eps0 = 0.003;
  co.knobs.eps_alpha = 1e-4;
  co.knobs.inner = 20;
  co.knobs.sigma0 = 0.05;
  CLI::App* compare = app.add_subcommand("compare", "median F per lambda step across solvers and trials");
  compare->add_option("--solvers", co.solvers, "comma-separated solver list, at least two");
  compare->add_option("--trials", co.trials, "number of random instances");
  compare->add_option("--seed", co.seed, "base seed");
  compare->add_option("--m", co.m, "rows");
  compare->add_option("--n", co.n, "columns");
  compare->add_option("--decay", co.decay, "singular value exponents hi,lo");
  compare->add_option("--density", co.density, "fraction of nonzero truth entries");
  compare->add_option("--noise", co.noise, "Gaussian noise std relative to rms(b)");
  compare->add_option("--count", co.count, "lambda grid size");
  compare->add_option("--steps", co.steps, "leading grid points to run");
  compare->add_option("--iters-per-lambda", co.iters_per_lambda, "iterations at each lambda");
  compare->add_option("--threads", co.threads, "concurrent trials; 0 = hardware concurrency");
  add_knobs(compare, co.knobs, false, false);
  add_common(compare);

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  const fs::path out = out_dir;
  if (gen_tomo->parsed()) cmd_gen_tomo(gt, gen_tomo, out);
  if (gen_matrix->parsed()) cmd_gen_matrix(gm, gen_matrix, out);
  if (solve->parsed()) cmd_solve(so, solve, out);
  if (lcurve->parsed()) cmd_lcurve(lo, lcurve, out);
  if (tomo->parsed()) cmd_tomo(to, tomo, out);
  if (compare->parsed()) cmd_compare(co, compare, out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "lpcg: usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const io::FileError& e) {
    std::cerr << "lpcg: " << e.what() << '\n';
    return kExitIo;
  } catch (const io::FormatError& e) {
    std::cerr << "lpcg: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "lpcg: solver failure: " << e.what() << '\n';
    return kExitSolver;
  }
}
