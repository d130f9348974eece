#include "semtrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "semtrack/errors.hpp"

namespace semtrack {

namespace {

// alpha = 1/L_f computed in floating point may overshoot by an ulp.
constexpr double kStepSlack = 1e-12;

}  // namespace

RegretTrace dynamic_regret(const Grid& h_estimate, const Grid& h_comparator) {
  if (h_estimate.size() != h_comparator.size()) throw DimensionMismatch("regret grids differ in T");
  RegretTrace trace;
  trace.cumulative.reserve(h_estimate.size());
  double running = 0.0;
  for (std::size_t t = 0; t < h_estimate.size(); ++t) {
    const auto& est = h_estimate[t];
    const auto& cmp = h_comparator[t];
    if (est.size() != cmp.size()) throw DimensionMismatch("regret grids differ in N");
    if (trace.per_node.empty()) trace.per_node.assign(est.size(), 0.0);
    if (trace.per_node.size() != est.size()) throw DimensionMismatch("ragged regret grid");
    for (std::size_t i = 0; i < est.size(); ++i) {
      const double gap = est[i] - cmp[i];
      trace.per_node[i] += gap;
      running += gap;
    }
    trace.cumulative.push_back(running);
  }
  return trace;
}

double path_length(std::span<const Vector> seq) {
  double total = 0.0;
  for (std::size_t k = 1; k < seq.size(); ++k) total += (seq[k] - seq[k - 1]).norm();
  return total;
}

std::vector<double> path_length_prefix(std::span<const Vector> seq) {
  std::vector<double> prefix;
  prefix.reserve(seq.size());
  double total = 0.0;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    if (k > 0) total += (seq[k] - seq[k - 1]).norm();
    prefix.push_back(total);
  }
  return prefix;
}

int default_burn_in(int nodes, int contagions) {
  return 3 * ((nodes + contagions - 1) / contagions);
}

double bounded_process_constant(const ObservationStream& data) {
  double bound = data.X.size() > 0 ? data.X.array().square().maxCoeff() : 0.0;
  for (const auto& batch : data.batches) {
    if (batch.Y.size() > 0) bound = std::max(bound, batch.Y.array().square().maxCoeff());
  }
  return bound;
}

EmpiricalConstants empirical_constants(const ObservationStream& data, const SpectrumGrid& spectrum,
                                       const std::vector<std::vector<Vector>>& v_star,
                                       const AlgoConfig& config, int t_burn) {
  EmpiricalConstants k;
  k.t_burn = std::max(1, t_burn);
  k.B_xy = bounded_process_constant(data);

  const double inf = std::numeric_limits<double>::infinity();
  double beta = inf, beta_post = inf, lf = 0.0, lf_post = 0.0;
  for (std::size_t t = 0; t < spectrum.lambda_min.size(); ++t) {
    const bool post = static_cast<int>(t) + 1 >= k.t_burn;
    for (std::size_t i = 0; i < spectrum.lambda_min[t].size(); ++i) {
      const double lo = spectrum.lambda_min[t][i];
      const double hi = spectrum.lambda_max[t][i];
      if (std::isnan(lo) || std::isnan(hi)) continue;
      beta = std::min(beta, lo);
      lf = std::max(lf, hi);
      if (post) {
        beta_post = std::min(beta_post, lo);
        lf_post = std::max(lf_post, hi);
      }
    }
  }
  // Rank-deficient moments come back with tiny negative eigenvalues.
  k.beta = beta == inf ? 0.0 : std::max(beta, 0.0);
  k.beta_post_burn = beta_post == inf ? 0.0 : std::max(beta_post, 0.0);
  k.L_f = lf;
  k.L_f_post_burn = lf_post;

  for (std::size_t t = 1; t < v_star.size(); ++t) {
    for (std::size_t i = 0; i < v_star[t].size(); ++i)
      k.d = std::max(k.d, (v_star[t][i] - v_star[t - 1][i]).norm());
  }
  k.mu = 1.0 - config.gamma;
  k.rho = 1.0 - config.alpha * k.beta;
  k.rho_post_burn = 1.0 - config.alpha * k.beta_post_burn;
  return k;
}

double regret_constant(const BoundInputs& in) {
  std::ostringstream why;
  if (!(in.beta > 0.0)) why << "beta = " << in.beta << " is not positive; ";
  if (!(in.alpha > 0.0) || in.alpha * in.L_f > 1.0 + kStepSlack)
    why << "alpha = " << in.alpha << " exceeds 1/L_f = " << 1.0 / in.L_f << "; ";
  if (!(in.gamma < 1.0)) why << "gamma = " << in.gamma << " leaves the bound unbounded; ";
  if (in.nodes < 1 || in.contagions < 1) why << "need N >= 1 and C >= 1; ";
  const auto msg = why.str();
  if (!msg.empty()) throw AssumptionViolated("regret bound not applicable: " + msg);

  const double sqrt_n = std::sqrt(static_cast<double>(in.nodes));
  const double sqrt_n1 = std::sqrt(static_cast<double>(in.nodes - 1));
  const double grad_bound =
      in.B_xy * in.contagions * sqrt_n / (1.0 - in.gamma) * (1.0 + in.L_f / in.beta);
  return (grad_bound + in.lambda * sqrt_n1) / (in.alpha * in.beta);
}

RegretBound regret_bound(const BoundInputs& in, std::span<const double> initial_gap,
                         const std::vector<std::vector<double>>& path_prefix) {
  if (initial_gap.size() != path_prefix.size())
    throw DimensionMismatch("initial gaps and path lengths disagree in N");
  RegretBound bound;
  bound.D_h = regret_constant(in);

  std::size_t horizon = path_prefix.empty() ? 0 : path_prefix.front().size();
  for (const auto& p : path_prefix) {
    if (p.size() != horizon) throw DimensionMismatch("ragged path length prefix");
  }
  bound.trace.assign(horizon, 0.0);
  for (std::size_t i = 0; i < path_prefix.size(); ++i) {
    const double w = horizon > 0 ? path_prefix[i].back() : 0.0;
    bound.per_node.push_back(bound.D_h * (initial_gap[i] + w));
    bound.total += bound.per_node.back();
    for (std::size_t t = 0; t < horizon; ++t)
      bound.trace[t] += bound.D_h * (initial_gap[i] + path_prefix[i][t]);
  }
  return bound;
}

std::vector<double> mse(const std::vector<std::vector<Vector>>& estimates,
                        const std::vector<std::vector<Vector>>& truth, int nodes) {
  if (estimates.size() != truth.size()) throw DimensionMismatch("MSE grids differ in T");
  std::vector<double> out;
  out.reserve(estimates.size());
  const double norm = 1.0 / (static_cast<double>(nodes) * static_cast<double>(nodes));
  for (std::size_t t = 0; t < estimates.size(); ++t) {
    if (estimates[t].size() != truth[t].size()) throw DimensionMismatch("MSE grids differ in N");
    double sum = 0.0;
    for (std::size_t i = 0; i < estimates[t].size(); ++i)
      sum += (estimates[t][i] - truth[t][i]).squaredNorm();
    out.push_back(norm * sum);
  }
  return out;
}

std::pair<double, double> extreme_eigenvalues(const Matrix& symmetric) {
  if (symmetric.size() == 0) return {0.0, 0.0};
  const Vector ev =
      Eigen::SelfAdjointEigenSolver<Matrix>(symmetric, Eigen::EigenvaluesOnly).eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

}  // namespace semtrack
