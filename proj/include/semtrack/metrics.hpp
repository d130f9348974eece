#pragma once

#include <optional>
#include <span>
#include <vector>

#include "semtrack/model.hpp"
#include "semtrack/tracker.hpp"

namespace semtrack {

/// Values indexed [t-1][i].
using Grid = std::vector<std::vector<double>>;

struct RegretTrace {
  /// R_d[t], cumulative over nodes and time.
  std::vector<double> cumulative;
  /// R_d^i[T].
  std::vector<double> per_node;
};

/// Sums h_t^i(v_i[t]) - h_t^i(v_i*[t]) over the (t, i) grid.
RegretTrace dynamic_regret(const Grid& h_estimate, const Grid& h_comparator);

/// Sum over consecutive elements of |seq[k] - seq[k-1]|_2; 0 for a single point.
double path_length(std::span<const Vector> seq);

/// W[t] for every prefix seq[0..t-1].
std::vector<double> path_length_prefix(std::span<const Vector> seq);

/// Per-(i, t) extreme eigenvalues of the moment matrices. Entries that were
/// skipped by a stride are NaN.
struct SpectrumGrid {
  Grid lambda_min;
  Grid lambda_max;
};

struct EmpiricalConstants {
  double B_xy = 0.0;
  /// min lambda_min over all (i, t).
  double beta = 0.0;
  /// min lambda_min over t >= t_burn.
  double beta_post_burn = 0.0;
  double L_f = 0.0;
  double L_f_post_burn = 0.0;
  double d = 0.0;
  double mu = 0.0;
  double rho = 1.0;
  double rho_post_burn = 1.0;
  int t_burn = 1;
};

/// Default burn-in: 3 * ceil(N/C).
int default_burn_in(int nodes, int contagions);

/// max over all squared entries of Y^t and X.
double bounded_process_constant(const ObservationStream& data);

EmpiricalConstants empirical_constants(const ObservationStream& data, const SpectrumGrid& spectrum,
                                       const std::vector<std::vector<Vector>>& v_star,
                                       const AlgoConfig& config, int t_burn);

struct BoundInputs {
  double B_xy = 0.0;
  double beta = 0.0;
  double L_f = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  int contagions = 1;
  int nodes = 1;
};

/// D_h = (1/(alpha beta)) (B_xy C sqrt(N)/(1-gamma) (1 + L_f/beta) + lambda sqrt(N-1)).
/// Throws AssumptionViolated when beta <= 0, alpha > 1/L_f or gamma >= 1.
double regret_constant(const BoundInputs& in);

struct RegretBound {
  double D_h = 0.0;
  /// D_h (initial_i + W_i[T]).
  std::vector<double> per_node;
  double total = 0.0;
  /// D_h sum_i (initial_i + W_i[t]) for every t.
  std::vector<double> trace;
};

/// `initial_gap[i]` is |v_i*[1]| for the full horizon (v_i[1] = 0), or the
/// gap |v_i[t0] - v_i*[t0]| when the bound is applied from t0 onwards.
/// `path_prefix[i][k]` is the path length of node i over its first k+1 points.
RegretBound regret_bound(const BoundInputs& in, std::span<const double> initial_gap,
                         const std::vector<std::vector<double>>& path_prefix);

/// Per-t (1/N^2) sum_i |v_i[t] - v_i^true[t]|^2; inputs indexed [t-1][i].
std::vector<double> mse(const std::vector<std::vector<Vector>>& estimates,
                        const std::vector<std::vector<Vector>>& truth, int nodes);

/// (smallest, largest) eigenvalue of a symmetric matrix.
std::pair<double, double> extreme_eigenvalues(const Matrix& symmetric);

}  // namespace semtrack
