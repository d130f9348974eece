#include "semtrack/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "semtrack/csv.hpp"
#include "semtrack/errors.hpp"
#include "semtrack/rng.hpp"
#include "semtrack/svg.hpp"

namespace semtrack {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr double kTheoremSlack = 1e-6;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string() + " for checksum");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[k]);
  return hex.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

template <class Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  fn(out);
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<double> bound_column(const RegretReport& report, int horizon) {
  std::vector<double> col(static_cast<std::size_t>(horizon), kNaN);
  if (report.bound) {
    col = report.bound->trace;
  } else if (report.bound_post_burn) {
    const auto t0 = static_cast<std::size_t>(report.constants.t_burn);
    for (std::size_t k = 0; k < report.bound_post_burn->trace.size(); ++k)
      col[t0 - 1 + k] = report.bound_post_burn->trace[k];
  }
  return col;
}

PlotTrace plot_trace(const std::string& label, const RunResult& result) {
  return {label, result.report.mse, result.report.regret.cumulative,
          bound_column(result.report, result.trace.horizon())};
}

void write_regime_artifacts(const fs::path& dir, const RunResult& result) {
  fs::create_directories(dir);
  const auto& trace = result.trace;
  const int horizon = trace.horizon();

  if (result.synthetic) {
    write_with(dir / "ground_truth.csv",
               [&](std::ostream& out) { csv::write_snapshots(out, result.synthetic->truth.snapshots); });
    csv::write_observations(dir / "observations", result.data);
  }

  std::vector<TopologySnapshot> est;
  est.reserve(static_cast<std::size_t>(horizon));
  const auto estimates = trace.estimates();
  for (int t = 1; t <= horizon; ++t) est.push_back(assemble_snapshot(estimates[static_cast<std::size_t>(t - 1)], t));
  write_with(dir / "estimates.csv", [&](std::ostream& out) { csv::write_snapshots(out, est); });

  write_with(dir / "comparators.csv", [&](std::ostream& out) {
    out << "t,i,coordinate,value,converged,iterations\n";
    for (int t = 1; t <= horizon; ++t) {
      const auto& row = trace.steps[static_cast<std::size_t>(t - 1)];
      for (std::size_t i = 0; i < row.size(); ++i) {
        for (Eigen::Index k = 0; k < row[i].v_star.size(); ++k) {
          out << t << ',' << (i + 1) << ',' << (k + 1) << ',' << csv::format_double(row[i].v_star(k))
              << ',' << (row[i].converged ? 1 : 0) << ',' << row[i].iterations << '\n';
        }
      }
    }
  });

  const auto bound = bound_column(result.report, horizon);
  write_with(dir / "traces.csv", [&](std::ostream& out) {
    out << "t,regret_cumulative,bound_cumulative,mse\n";
    for (int t = 1; t <= horizon; ++t) {
      const auto k = static_cast<std::size_t>(t - 1);
      out << t << ',' << csv::format_double(result.report.regret.cumulative[k]) << ','
          << csv::format_double(bound[k]) << ','
          << csv::format_double(result.report.mse.empty() ? kNaN : result.report.mse[k]) << '\n';
    }
  });

  write_text(dir / "report.json", report_to_json_string(result.report, trace));
  save_checkpoint(trace.final_state, dir / "checkpoint.json");
}

void write_metadata(const fs::path& root, const ExperimentConfig& config,
                    const std::map<std::string, double>& alphas) {
  std::map<std::string, std::string> sums;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), root).generic_string();
    if (rel == "metadata.json") continue;
    sums[rel] = sha256_file(entry.path());
  }
  json meta;
  meta["tool"] = "semtrack";
  meta["version"] = kToolVersion;
  meta["seed"] = config.generator.seed;
  meta["prng"] = {{"algorithm", std::string(Rng::kAlgorithm)}, {"version", Rng::kVersion}};
  meta["config"] = json::parse(config_to_json_string(config));
  json alpha = json::object();
  for (const auto& [k, v] : alphas) alpha[k] = v;
  meta["alpha"] = alpha;
  json artifacts = json::object();
  for (const auto& [k, v] : sums) artifacts[k] = {{"sha256", v}};
  meta["artifacts"] = artifacts;
  write_text(root / "metadata.json", meta.dump(2) + "\n");
}

// Runs `body` against a scratch directory and moves it into place on success.
template <class Body>
int with_atomic_output(const ExperimentConfig& config, std::ostream& log, Body&& body) {
  fs::path target = config.output_dir;
  if (target.filename().empty()) target = target.parent_path();
  fs::path parent = target.parent_path();
  if (parent.empty()) parent = ".";
  const fs::path scratch = parent / ("." + target.filename().string() + ".partial");

  auto cleanup = [&] {
    std::error_code ec;
    fs::remove_all(scratch, ec);
  };
  try {
    fs::create_directories(parent);
    fs::remove_all(scratch);
    fs::create_directories(scratch);
    body(scratch);
    if (fs::exists(target)) {
      if (!fs::exists(target / "metadata.json"))
        throw IoError(target.string() + " exists and is not a semtrack output directory");
      fs::remove_all(target);
    }
    fs::rename(scratch, target);
    return kExitOk;
  } catch (const NonFiniteValue& e) {
    cleanup();
    log << "error: " << e.what() << '\n';
    return kExitNonFinite;
  } catch (const ConfigError& e) {
    cleanup();
    log << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const DegenerateData& e) {
    cleanup();
    log << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const DimensionMismatch& e) {
    cleanup();
    log << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const IoError& e) {
    cleanup();
    log << "i/o error: " << e.what() << '\n';
    return kExitIoError;
  } catch (const fs::filesystem_error& e) {
    cleanup();
    log << "i/o error: " << e.what() << '\n';
    return kExitIoError;
  } catch (const std::exception& e) {
    cleanup();
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  algo.validate();
  if (stride_eig < 1) throw ConfigError("stride_eig must be >= 1");
  if (t_burn < 0) throw ConfigError("t_burn must be >= 0");
  if (repeat < 1) throw ConfigError("repeat must be >= 1");
  if (!(solver.tol > 0.0)) throw ConfigError("solver tol must be > 0");
  if (solver.max_iter < 1) throw ConfigError("solver max_iter must be >= 1");
  if (data_in) {
    if (auto_alpha) throw ConfigError("auto alpha needs the generator; pass an explicit --alpha with data input");
    if (repeat != 1) throw ConfigError("repeat is only available in generator mode");
    if (data_in->y_dir.empty() || data_in->x_file.empty())
      throw ConfigError("data input needs both the Y directory and the X file");
  } else {
    generator.validate();
    if (regimes.empty()) throw ConfigError("at least one regime is required");
  }
}

ExperimentConfig config_from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    if (doc.contains("generator")) {
      const auto& g = doc.at("generator");
      auto& gen = cfg.generator;
      gen.nodes = g.value("nodes", gen.nodes);
      gen.contagions = g.value("contagions", gen.contagions);
      gen.horizon = g.value("horizon", gen.horizon);
      gen.edge_probability = g.value("edge_probability", gen.edge_probability);
      gen.sigma = g.value("sigma", gen.sigma);
      gen.seed = g.value("seed", gen.seed);
      const std::string regime = g.value("regime", std::string("smooth"));
      if (regime == "both")
        cfg.regimes = {Regime::Smooth, Regime::Abrupt};
      else
        cfg.regimes = {regime_from_string(regime)};
      gen.regime = cfg.regimes.front();
    }
    if (doc.contains("algo")) {
      const auto& a = doc.at("algo");
      cfg.algo.gamma = a.value("gamma", cfg.algo.gamma);
      cfg.algo.lambda = a.value("lambda", cfg.algo.lambda);
      if (a.contains("alpha")) {
        if (a.at("alpha").is_string()) {
          if (a.at("alpha").get<std::string>() != "auto") throw ConfigError("alpha must be a number or \"auto\"");
          cfg.auto_alpha = true;
        } else {
          cfg.algo.alpha = a.at("alpha").get<double>();
          cfg.auto_alpha = false;
        }
      }
    }
    if (doc.contains("output_dir")) cfg.output_dir = doc.at("output_dir").get<std::string>();
    cfg.emit_svg = doc.value("emit_svg", cfg.emit_svg);
    cfg.stride_eig = doc.value("stride_eig", cfg.stride_eig);
    cfg.t_burn = doc.value("t_burn", cfg.t_burn);
    cfg.repeat = doc.value("repeat", cfg.repeat);
    if (doc.contains("solver")) {
      cfg.solver.tol = doc.at("solver").value("tol", cfg.solver.tol);
      cfg.solver.max_iter = doc.at("solver").value("max_iter", cfg.solver.max_iter);
    }
    if (doc.contains("data_in") && !doc.at("data_in").is_null()) {
      const auto& d = doc.at("data_in");
      DataInput in;
      in.y_dir = d.at("y_dir").get<std::string>();
      in.x_file = d.at("x_file").get<std::string>();
      if (d.contains("truth_file") && !d.at("truth_file").is_null())
        in.truth_file = d.at("truth_file").get<std::string>();
      cfg.data_in = in;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

std::string config_to_json_string(const ExperimentConfig& config) {
  json doc;
  if (config.data_in) {
    json d = {{"y_dir", config.data_in->y_dir.generic_string()},
              {"x_file", config.data_in->x_file.generic_string()}};
    d["truth_file"] = config.data_in->truth_file ? json(config.data_in->truth_file->generic_string()) : json(nullptr);
    doc["data_in"] = d;
  } else {
    const auto& g = config.generator;
    std::string regime = config.regimes.size() > 1 ? "both" : to_string(config.regimes.front());
    doc["generator"] = {{"nodes", g.nodes},
                        {"contagions", g.contagions},
                        {"horizon", g.horizon},
                        {"edge_probability", g.edge_probability},
                        {"sigma", g.sigma},
                        {"regime", regime},
                        {"seed", g.seed}};
    doc["data_in"] = nullptr;
  }
  doc["algo"] = {{"gamma", config.algo.gamma}, {"lambda", config.algo.lambda}};
  doc["algo"]["alpha"] = config.auto_alpha ? json("auto") : json(config.algo.alpha);
  doc["emit_svg"] = config.emit_svg;
  doc["stride_eig"] = config.stride_eig;
  doc["t_burn"] = config.t_burn;
  doc["repeat"] = config.repeat;
  doc["solver"] = {{"tol", config.solver.tol}, {"max_iter", config.solver.max_iter}};
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Step size

double resolve_alpha(const ObservationStream& data, double gamma) {
  const int n = data.nodes();
  std::vector<NodeState> nodes(static_cast<std::size_t>(n));
  for (auto& node : nodes) {
    node.phi = Matrix::Zero(n, n);
    node.r = Vector::Zero(n);
  }
  double lf = 0.0;
  for (const auto& batch : data.batches) {
    for (int i = 0; i < n; ++i) {
      auto& node = nodes[static_cast<std::size_t>(i)];
      update_moments(node, build_regressor(batch.Y, data.X, i), batch.Y.row(i).transpose(), gamma);
      lf = std::max(lf, extreme_eigenvalues(node.phi).second);
    }
  }
  if (!(lf > 0.0)) throw DegenerateData("all moment matrices are zero; cannot resolve alpha = 1/L_f");
  return 1.0 / lf;
}

double resolve_alpha(const MomentHistory& history) {
  double lf = 0.0;
  for (const auto& row : history)
    for (const auto& m : row) lf = std::max(lf, extreme_eigenvalues(m.phi).second);
  if (!(lf > 0.0)) throw DegenerateData("all moment matrices are zero; cannot resolve alpha = 1/L_f");
  return 1.0 / lf;
}

// ---------------------------------------------------------------------------
// Tracking and analysis

std::vector<std::vector<Vector>> RunTrace::estimates() const {
  std::vector<std::vector<Vector>> out;
  out.reserve(steps.size());
  for (const auto& row : steps) {
    std::vector<Vector> r;
    r.reserve(row.size());
    for (const auto& rec : row) r.push_back(rec.estimate);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::vector<Vector>> RunTrace::comparators() const {
  std::vector<std::vector<Vector>> out;
  out.reserve(steps.size());
  for (const auto& row : steps) {
    std::vector<Vector> r;
    r.reserve(row.size());
    for (const auto& rec : row) r.push_back(rec.v_star);
    out.push_back(std::move(r));
  }
  return out;
}

RunTrace track_and_compare(const ObservationStream& data, const AlgoConfig& algo,
                           const SolverOptions& solver, int stride_eig) {
  if (stride_eig < 1) throw ConfigError("stride_eig must be >= 1");
  const int n = data.nodes();
  RunTrace trace;
  trace.algo = algo;
  trace.nodes = n;
  trace.contagions = data.contagions();
  TrackerState state = init(n, data.contagions(), algo, data.X);
  trace.steps.reserve(data.batches.size());

  std::vector<Vector> previous_star(static_cast<std::size_t>(n));
  int t = 0;
  for (const auto& batch : data.batches) {
    ++t;
    const std::vector<Vector> current = estimates(state);
    step(state, batch.Y);

    const bool with_eig = (t - 1) % stride_eig == 0;
    std::vector<NodeStepRecord> row(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const NodeState& node = state.nodes[k];
      NodeStepRecord& rec = row[k];
      rec.estimate = current[k];
      rec.prediction = node.v;
      rec.r_norm = node.r.norm();

      SolverOptions opts = solver;
      if (with_eig) {
        std::tie(rec.lambda_min, rec.lambda_max) = extreme_eigenvalues(node.phi);
        if (opts.step <= 0.0 && rec.lambda_max > 0.0) opts.step = 1.0 / rec.lambda_max;
      } else {
        rec.lambda_min = rec.lambda_max = kNaN;
      }
      auto sol = solve_comparator(node.phi, node.r, algo.lambda, opts, previous_star[k]);
      rec.v_star = sol.v;
      rec.converged = sol.converged;
      rec.iterations = sol.iterations;
      rec.h_estimate = evaluate_objective(node, rec.estimate, algo.lambda);
      rec.h_star = evaluate_objective(node, rec.v_star, algo.lambda);
      previous_star[k] = std::move(sol.v);
    }
    trace.steps.push_back(std::move(row));
  }
  trace.final_state = std::move(state);
  return trace;
}

RegretReport analyze(const RunTrace& trace, const ObservationStream& data,
                     const GroundTruth* truth, int t_burn) {
  RegretReport report;
  const int n = trace.nodes;
  const int horizon = trace.horizon();
  if (horizon == 0) throw DimensionMismatch("empty run");
  if (t_burn <= 0) t_burn = default_burn_in(n, trace.contagions);
  t_burn = std::min(t_burn, horizon);

  Grid h_est(static_cast<std::size_t>(horizon)), h_star(static_cast<std::size_t>(horizon));
  SpectrumGrid spectrum;
  spectrum.lambda_min.resize(static_cast<std::size_t>(horizon));
  spectrum.lambda_max.resize(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    const auto k = static_cast<std::size_t>(t);
    for (const auto& rec : trace.steps[k]) {
      h_est[k].push_back(rec.h_estimate);
      h_star[k].push_back(rec.h_star);
      spectrum.lambda_min[k].push_back(rec.lambda_min);
      spectrum.lambda_max[k].push_back(rec.lambda_max);
      report.comparators_converged = report.comparators_converged && rec.converged;
    }
  }
  report.regret = dynamic_regret(h_est, h_star);
  const auto v_star = trace.comparators();
  report.constants = empirical_constants(data, spectrum, v_star, trace.algo, t_burn);
  const auto& k = report.constants;

  std::vector<std::vector<double>> prefix(static_cast<std::size_t>(n)), prefix_post(static_cast<std::size_t>(n));
  std::vector<double> init_norm(static_cast<std::size_t>(n)), init_gap_post(static_cast<std::size_t>(n));
  report.nodes.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto ik = static_cast<std::size_t>(i);
    std::vector<Vector> seq;
    seq.reserve(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t) seq.push_back(v_star[static_cast<std::size_t>(t)][ik]);
    prefix[ik] = path_length_prefix(seq);
    prefix_post[ik] = path_length_prefix(std::span<const Vector>(seq).subspan(static_cast<std::size_t>(t_burn - 1)));
    init_norm[ik] = seq.front().norm();
    const auto& first_post = trace.steps[static_cast<std::size_t>(t_burn - 1)][ik];
    init_gap_post[ik] = (first_post.estimate - first_post.v_star).norm();

    auto& s = report.nodes[ik];
    s.regret = report.regret.per_node[ik];
    s.path_length = prefix[ik].back();
    s.v_star_initial_norm = init_norm[ik];
    s.path_length_post_burn = prefix_post[ik].back();
    s.initial_gap_post_burn = init_gap_post[ik];
    for (int t = t_burn - 1; t < horizon; ++t)
      s.regret_post_burn += h_est[static_cast<std::size_t>(t)][ik] - h_star[static_cast<std::size_t>(t)][ik];
  }

  const auto& algo = trace.algo;
  BoundInputs full{k.B_xy, k.beta, k.L_f, algo.lambda, algo.alpha, algo.gamma, trace.contagions, n};
  try {
    report.bound = regret_bound(full, init_norm, prefix);
  } catch (const AssumptionViolated& e) {
    report.bound_reason = e.what();
  }
  BoundInputs post{k.B_xy, k.beta_post_burn, k.L_f_post_burn, algo.lambda, algo.alpha, algo.gamma,
                   trace.contagions, n};
  try {
    report.bound_post_burn = regret_bound(post, init_gap_post, prefix_post);
  } catch (const AssumptionViolated& e) {
    report.bound_post_burn_reason = e.what();
  }

  if (truth != nullptr) {
    if (truth->horizon() != horizon) throw DimensionMismatch("ground truth horizon differs from the data");
    std::vector<std::vector<Vector>> vt(static_cast<std::size_t>(horizon));
    for (int t = 1; t <= horizon; ++t)
      for (int i = 0; i < n; ++i) vt[static_cast<std::size_t>(t - 1)].push_back(truth->v_true(i, t));
    report.mse = mse(trace.estimates(), vt, n);
  }

  report.degenerate = !(k.beta > 0.0);
  report.bounded_process = std::isfinite(k.B_xy);
  report.strong_convexity = k.beta > 0.0;
  report.strong_convexity_post_burn = k.beta_post_burn > 0.0;
  report.step_size_ok = algo.alpha * k.L_f <= 1.0 + 1e-12;
  report.forgetting_ok = algo.gamma < 1.0;
  return report;
}

std::string report_to_json_string(const RegretReport& report, const RunTrace& trace) {
  const auto& k = report.constants;
  json doc;
  doc["constants"] = {{"B_xy", k.B_xy},
                      {"beta", k.beta},
                      {"beta_post_burn", k.beta_post_burn},
                      {"L_f", k.L_f},
                      {"L_f_post_burn", k.L_f_post_burn},
                      {"mu", k.mu},
                      {"rho", k.rho},
                      {"rho_post_burn", k.rho_post_burn},
                      {"d", k.d},
                      {"t_burn", k.t_burn},
                      {"alpha", trace.algo.alpha},
                      {"gamma", trace.algo.gamma},
                      {"lambda", trace.algo.lambda},
                      {"N", trace.nodes},
                      {"C", trace.contagions},
                      {"T", trace.horizon()}};
  doc["D_h"] = report.bound ? json(report.bound->D_h) : json(nullptr);

  json nodes = json::array();
  bool holds = true, holds_post = true;
  for (std::size_t i = 0; i < report.nodes.size(); ++i) {
    const auto& s = report.nodes[i];
    json node = {{"node", i + 1},
                 {"regret", s.regret},
                 {"path_length", s.path_length},
                 {"v_star_initial_norm", s.v_star_initial_norm},
                 {"regret_post_burn", s.regret_post_burn},
                 {"path_length_post_burn", s.path_length_post_burn},
                 {"initial_gap_post_burn", s.initial_gap_post_burn}};
    node["bound"] = report.bound ? json(report.bound->per_node[i]) : json(nullptr);
    node["bound_post_burn"] = report.bound_post_burn ? json(report.bound_post_burn->per_node[i]) : json(nullptr);
    if (report.bound) holds = holds && s.regret <= report.bound->per_node[i] * (1.0 + kTheoremSlack);
    if (report.bound_post_burn)
      holds_post = holds_post && s.regret_post_burn <= report.bound_post_burn->per_node[i] * (1.0 + kTheoremSlack);
    nodes.push_back(std::move(node));
  }
  doc["per_node"] = std::move(nodes);

  double regret_post = 0.0;
  for (const auto& s : report.nodes) regret_post += s.regret_post_burn;
  json totals;
  totals["regret"] = report.regret.cumulative.empty() ? 0.0 : report.regret.cumulative.back();
  totals["bound"] = report.bound ? json(report.bound->total) : json(nullptr);
  totals["bound_reason"] = report.bound_reason;
  totals["theorem_holds"] = report.bound ? json(holds) : json(nullptr);
  totals["regret_post_burn"] = regret_post;
  totals["D_h_post_burn"] = report.bound_post_burn ? json(report.bound_post_burn->D_h) : json(nullptr);
  totals["bound_post_burn"] = report.bound_post_burn ? json(report.bound_post_burn->total) : json(nullptr);
  totals["bound_post_burn_reason"] = report.bound_post_burn_reason;
  totals["theorem_holds_post_burn"] = report.bound_post_burn ? json(holds_post) : json(nullptr);
  totals["mse_final"] = report.mse.empty() ? json(nullptr) : nullable(report.mse.back());
  totals["comparators_converged"] = report.comparators_converged;
  json warnings = json::array();
  if (report.degenerate)
    warnings.push_back("some moment matrix is singular: comparators may be non-unique and path lengths are not well defined");
  if (!report.comparators_converged) warnings.push_back("some comparator solves hit max_iter before reaching tol");
  totals["warnings"] = warnings;
  doc["totals"] = std::move(totals);

  const bool all = report.bounded_process && report.strong_convexity && report.step_size_ok && report.forgetting_ok;
  doc["assumptions_ok"] = {{"bounded_process", report.bounded_process},
                           {"strong_convexity", report.strong_convexity},
                           {"strong_convexity_post_burn", report.strong_convexity_post_burn},
                           {"step_size", report.step_size_ok},
                           {"forgetting_factor", report.forgetting_ok},
                           {"all", all}};
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Plots

Plots render_plots(const std::vector<PlotTrace>& traces) {
  Plots plots;
  std::vector<svg::Series> mse_series, regret_series;
  for (const auto& tr : traces) {
    auto axis = [](std::size_t len) {
      std::vector<double> x(len);
      for (std::size_t k = 0; k < len; ++k) x[k] = static_cast<double>(k + 1);
      return x;
    };
    if (!tr.mse.empty()) mse_series.push_back({tr.label, axis(tr.mse.size()), tr.mse, "", false});
    if (!tr.regret.empty()) {
      regret_series.push_back({"regret " + tr.label, axis(tr.regret.size()), tr.regret, "", false});
      regret_series.push_back({"bound " + tr.label, axis(tr.bound.size()), tr.bound, "", true});
    }
  }
  // Pair each regime's bound colour with its regret colour.
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"};
  for (std::size_t s = 0; s < regret_series.size(); ++s) regret_series[s].color = colours[(s / 2) % 4];
  for (std::size_t s = 0; s < mse_series.size(); ++s) mse_series[s].color = colours[s % 4];

  plots.mse_svg = svg::render_line_chart(mse_series, {"MSE vs time", "t", "MSE", false, 720, 440});
  plots.regret_svg =
      svg::render_line_chart(regret_series, {"Dynamic regret vs time", "t", "cumulative regret", true, 720, 440});
  return plots;
}

// ---------------------------------------------------------------------------
// Runner

RunResult execute(const ExperimentConfig& config, Regime regime, std::uint64_t seed) {
  config.validate();
  RunResult result;
  if (config.data_in) {
    result.data = csv::read_observations(config.data_in->y_dir, config.data_in->x_file);
    if (config.data_in->truth_file) {
      GroundTruth truth;
      truth.snapshots = csv::read_snapshots_file(*config.data_in->truth_file);
      truth.scale.assign(truth.snapshots.size(), 1.0);
      result.truth = std::move(truth);
    }
  } else {
    GeneratorConfig gen = config.generator;
    gen.regime = regime;
    gen.seed = seed;
    result.synthetic = simulate(gen);
    result.data = result.synthetic->data;
    result.truth = result.synthetic->truth;
  }
  result.algo = config.algo;
  if (config.auto_alpha) result.algo.alpha = resolve_alpha(result.data, result.algo.gamma);
  result.trace = track_and_compare(result.data, result.algo, config.solver, config.stride_eig);
  result.report = analyze(result.trace, result.data, result.truth ? &*result.truth : nullptr, config.t_burn);
  return result;
}

int run_experiment(const ExperimentConfig& config, std::ostream& log) {
  try {
    config.validate();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }

  return with_atomic_output(config, log, [&](const fs::path& root) {
    std::map<std::string, double> alphas;
    std::vector<PlotTrace> plots;
    const std::vector<Regime> regimes =
        config.data_in ? std::vector<Regime>{Regime::Smooth} : config.regimes;
    const bool nested = regimes.size() > 1;

    for (Regime regime : regimes) {
      const std::string label = config.data_in ? std::string("data") : to_string(regime);
      RunResult result = execute(config, regime, config.generator.seed);
      const fs::path dir = nested ? root / label : root;
      write_regime_artifacts(dir, result);
      alphas[label] = result.algo.alpha;
      plots.push_back(plot_trace(label, result));
      log << label << ": alpha=" << csv::format_double(result.algo.alpha)
          << " R_d[T]=" << csv::format_double(result.report.regret.cumulative.back());
      if (!result.report.mse.empty()) log << " MSE[T]=" << csv::format_double(result.report.mse.back());
      log << '\n';

      if (config.repeat > 1) {
        const int horizon = result.trace.horizon();
        std::vector<double> mse_sum(result.report.mse), regret_sum(result.report.regret.cumulative);
        for (int r = 1; r < config.repeat; ++r) {
          RunResult extra = execute(config, regime, config.generator.seed + static_cast<std::uint64_t>(r));
          for (int t = 0; t < horizon; ++t) {
            mse_sum[static_cast<std::size_t>(t)] += extra.report.mse[static_cast<std::size_t>(t)];
            regret_sum[static_cast<std::size_t>(t)] += extra.report.regret.cumulative[static_cast<std::size_t>(t)];
          }
        }
        write_with(dir / "summary.csv", [&](std::ostream& out) {
          out << "t,mse_mean,regret_mean\n";
          for (int t = 0; t < horizon; ++t)
            out << (t + 1) << ',' << csv::format_double(mse_sum[static_cast<std::size_t>(t)] / config.repeat) << ','
                << csv::format_double(regret_sum[static_cast<std::size_t>(t)] / config.repeat) << '\n';
        });
      }
    }

    if (config.emit_svg) {
      const Plots p = render_plots(plots);
      write_text(root / "mse.svg", p.mse_svg);
      write_text(root / "regret.svg", p.regret_svg);
    }
    write_metadata(root, config, alphas);
  });
}

int run_generate(const ExperimentConfig& config, std::ostream& log) {
  ExperimentConfig cfg = config;
  cfg.data_in.reset();
  try {
    cfg.generator.validate();
    if (cfg.regimes.empty()) throw ConfigError("at least one regime is required");
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return with_atomic_output(cfg, log, [&](const fs::path& root) {
    const bool nested = cfg.regimes.size() > 1;
    for (Regime regime : cfg.regimes) {
      GeneratorConfig gen = cfg.generator;
      gen.regime = regime;
      const SyntheticRun run = simulate(gen);
      const fs::path dir = nested ? root / to_string(regime) : root;
      fs::create_directories(dir);
      write_with(dir / "ground_truth.csv", [&](std::ostream& out) { csv::write_snapshots(out, run.truth.snapshots); });
      csv::write_observations(dir / "observations", run.data);
      log << to_string(regime) << ": wrote " << run.data.horizon() << " batches\n";
    }
    write_metadata(root, cfg, {});
  });
}

}  // namespace semtrack
