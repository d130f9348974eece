#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "semtrack/hindsight.hpp"
#include "semtrack/metrics.hpp"
#include "semtrack/model.hpp"
#include "semtrack/tracker.hpp"

namespace semtrack {

/// Process exit codes of the runner.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitNonFinite = 3,
  kExitIoError = 4,
};

struct DataInput {
  /// Directory holding Y_<t>.csv files.
  std::filesystem::path y_dir;
  std::filesystem::path x_file;
  /// Optional ground_truth.csv, enables the MSE trace.
  std::optional<std::filesystem::path> truth_file;
};

struct ExperimentConfig {
  GeneratorConfig generator;
  /// Regimes to run in generator mode; two entries produce overlaid plots.
  std::vector<Regime> regimes{Regime::Smooth};
  AlgoConfig algo;
  /// alpha = 1/L_f from a dry pass over the moments (generator mode only).
  bool auto_alpha = true;
  std::filesystem::path output_dir = "semtrack_out";
  bool emit_svg = false;
  std::optional<DataInput> data_in;
  int stride_eig = 1;
  /// 0 selects default_burn_in(N, C).
  int t_burn = 0;
  /// Number of consecutive seeds averaged into summary.csv.
  int repeat = 1;
  SolverOptions solver;

  /// Throws ConfigError.
  void validate() const;
};

ExperimentConfig config_from_json_string(const std::string& text);
/// Output directory is not serialized so that metadata is location independent.
std::string config_to_json_string(const ExperimentConfig& config);

/// alpha = 1/L_f with L_f the largest eigenvalue of any Phi_i^t.
/// Throws DegenerateData when L_f = 0.
double resolve_alpha(const ObservationStream& data, double gamma);
double resolve_alpha(const MomentHistory& history);

struct NodeStepRecord {
  Vector estimate;    // v_i[t]
  Vector prediction;  // v_i[t+1]
  Vector v_star;
  double h_estimate = 0.0;
  double h_star = 0.0;
  /// NaN at time indices skipped by the eigenvalue stride.
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double r_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct RunTrace {
  AlgoConfig algo;
  int nodes = 0;
  int contagions = 0;
  /// steps[t-1][i]
  std::vector<std::vector<NodeStepRecord>> steps;
  TrackerState final_state;

  int horizon() const { return static_cast<int>(steps.size()); }
  std::vector<std::vector<Vector>> estimates() const;
  std::vector<std::vector<Vector>> comparators() const;
};

/// Runs the online tracker over the stream and, at every step, the
/// comparator for the same moments (warm-started from the previous step).
/// Throws NonFiniteValue from the tracker.
RunTrace track_and_compare(const ObservationStream& data, const AlgoConfig& algo,
                           const SolverOptions& solver = {}, int stride_eig = 1);

struct NodeSummary {
  double regret = 0.0;
  double path_length = 0.0;
  double v_star_initial_norm = 0.0;
  double regret_post_burn = 0.0;
  double path_length_post_burn = 0.0;
  double initial_gap_post_burn = 0.0;
};

struct RegretReport {
  EmpiricalConstants constants;
  RegretTrace regret;
  std::vector<NodeSummary> nodes;
  /// Bound over t = 1..T with the global constants.
  std::optional<RegretBound> bound;
  std::string bound_reason;
  /// Bound over t = t_burn..T with the post-burn-in constants.
  std::optional<RegretBound> bound_post_burn;
  std::string bound_post_burn_reason;
  std::vector<double> mse;
  bool comparators_converged = true;
  /// Some Phi_i^t is singular, so v* may be non-unique and W_i is not well defined.
  bool degenerate = false;

  bool bounded_process = true;
  bool strong_convexity = false;
  bool strong_convexity_post_burn = false;
  bool step_size_ok = false;
  bool forgetting_ok = false;
};

RegretReport analyze(const RunTrace& trace, const ObservationStream& data,
                     const GroundTruth* truth, int t_burn);

std::string report_to_json_string(const RegretReport& report, const RunTrace& trace);

/// All in-memory results of one regime/seed.
struct RunResult {
  std::optional<SyntheticRun> synthetic;
  ObservationStream data;
  std::optional<GroundTruth> truth;
  AlgoConfig algo;
  RunTrace trace;
  RegretReport report;
};

/// One labelled series group for the plots (one per regime).
struct PlotTrace {
  std::string label;
  std::vector<double> mse;
  std::vector<double> regret;
  /// Cumulative bound; NaN where not applicable.
  std::vector<double> bound;
};

struct Plots {
  std::string mse_svg;
  std::string regret_svg;
};

/// mse.svg overlays the MSE of every trace; regret.svg shows R_d[t] and the
/// bound trace on a log axis.
Plots render_plots(const std::vector<PlotTrace>& traces);

/// Generates (or loads) the data, resolves alpha and runs the analysis.
RunResult execute(const ExperimentConfig& config, Regime regime, std::uint64_t seed);

/// Writes every artifact of `config` atomically into config.output_dir and
/// returns an ExitCode. Messages go to `log`.
int run_experiment(const ExperimentConfig& config, std::ostream& log);

/// generate-only mode: ground_truth.csv, observations/ and metadata.json.
int run_generate(const ExperimentConfig& config, std::ostream& log);

}  // namespace semtrack
