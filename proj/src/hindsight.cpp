#include "semtrack/hindsight.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semtrack/errors.hpp"
#include "semtrack/tracker.hpp"

namespace semtrack {

ComparatorSolution solve_comparator(const Matrix& phi, const Vector& r, double lambda,
                                    const SolverOptions& options, const Vector& start) {
  const auto n = r.size();
  if (phi.rows() != n || phi.cols() != n) throw DimensionMismatch("Phi must be square and match r");
  if (start.size() != 0 && start.size() != n) throw DimensionMismatch("warm start has wrong length");

  ComparatorSolution sol;
  sol.v = start.size() == n ? start : Vector::Zero(n);

  double step = options.step;
  if (step <= 0.0) {
    const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(phi, Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .maxCoeff();
    if (!(lmax > 0.0)) {
      // Phi = 0 comes from all-zero regressors, for which r = 0 too and any v is optimal.
      sol.converged = r.lpNorm<Eigen::Infinity>() == 0.0;
      sol.residual = sol.converged ? 0.0 : std::numeric_limits<double>::infinity();
      return sol;
    }
    step = 1.0 / lmax;
  }

  Vector next(n);
  for (int it = 1; it <= options.max_iter; ++it) {
    next = prox_partial_l1(sol.v - step * (phi * sol.v - r), step, lambda);
    sol.residual = (next - sol.v).norm();
    sol.v.swap(next);
    sol.iterations = it;
    if (sol.residual <= options.tol) {
      sol.converged = true;
      break;
    }
  }
  return sol;
}

double comparator_objective(const Matrix& phi, const Vector& r, double lambda, const Vector& v) {
  const auto n = v.size();
  return 0.5 * v.dot(phi * v) - r.dot(v) + lambda * v.head(n - 1).lpNorm<1>();
}

Vector exact_oracle(const Matrix& phi, const Vector& r, double lambda) {
  const auto n = r.size();
  if (phi.rows() != n || phi.cols() != n) throw DimensionMismatch("Phi must be square and match r");
  if (n < 1 || n > kExactOracleMaxDim) throw DimensionMismatch("exact oracle supports dimension 1..6");

  const Eigen::Index penalized = n - 1;
  const double scale = std::max({1.0, r.lpNorm<Eigen::Infinity>(), lambda});
  const double eps = 1e-11 * scale;

  int patterns = 1;
  for (Eigen::Index j = 0; j < penalized; ++j) patterns *= 3;

  Vector best;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<int> signs(static_cast<std::size_t>(penalized));
  std::vector<Eigen::Index> active;

  for (int code = 0; code < patterns; ++code) {
    int rest = code;
    active.clear();
    for (Eigen::Index j = 0; j < penalized; ++j) {
      signs[static_cast<std::size_t>(j)] = rest % 3 - 1;  // -1, 0, +1
      rest /= 3;
      if (signs[static_cast<std::size_t>(j)] != 0) active.push_back(j);
    }
    active.push_back(n - 1);  // gain coordinate is always free

    const auto k = static_cast<Eigen::Index>(active.size());
    Matrix sub(k, k);
    Vector rhs(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      const auto ja = active[static_cast<std::size_t>(a)];
      for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = phi(ja, active[static_cast<std::size_t>(b)]);
      const int s = ja < penalized ? signs[static_cast<std::size_t>(ja)] : 0;
      rhs(a) = r(ja) - lambda * s;
    }
    Eigen::LDLT<Matrix> ldlt(sub);
    if (ldlt.info() != Eigen::Success) continue;
    const Vector sol = ldlt.solve(rhs);
    if (!sol.allFinite()) continue;

    Vector v = Vector::Zero(n);
    bool consistent = true;
    for (Eigen::Index a = 0; a < k && consistent; ++a) {
      const auto ja = active[static_cast<std::size_t>(a)];
      v(ja) = sol(a);
      if (ja < penalized && sol(a) * signs[static_cast<std::size_t>(ja)] < -eps) consistent = false;
    }
    if (!consistent) continue;

    const Vector grad = phi * v - r;
    for (Eigen::Index j = 0; j < penalized && consistent; ++j) {
      if (signs[static_cast<std::size_t>(j)] == 0 && std::abs(grad(j)) > lambda + eps)
        consistent = false;
    }
    if (!consistent) continue;

    const double value = comparator_objective(phi, r, lambda, v);
    if (value < best_value) {
      best_value = value;
      best = v;
    }
  }
  if (best.size() == 0) throw NoConsistentPattern("no sign pattern satisfies the KKT conditions");
  return best;
}

MomentHistory collect_moments(const ObservationStream& data, double gamma) {
  const int n = data.nodes();
  MomentHistory history;
  history.reserve(data.batches.size());
  std::vector<NodeState> nodes(static_cast<std::size_t>(n));
  for (auto& node : nodes) {
    node.phi = Matrix::Zero(n, n);
    node.r = Vector::Zero(n);
  }
  for (const auto& batch : data.batches) {
    std::vector<Moments> row;
    row.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      auto& node = nodes[static_cast<std::size_t>(i)];
      update_moments(node, build_regressor(batch.Y, data.X, i), batch.Y.row(i).transpose(), gamma);
      row.push_back({node.phi, node.r, node.c});
    }
    history.push_back(std::move(row));
  }
  return history;
}

bool ComparatorTrace::all_converged() const {
  for (const auto& row : converged) {
    for (bool ok : row) {
      if (!ok) return false;
    }
  }
  return true;
}

std::vector<Vector> ComparatorTrace::node_sequence(int i) const {
  std::vector<Vector> seq;
  seq.reserve(v_star.size());
  for (const auto& row : v_star) seq.push_back(row.at(static_cast<std::size_t>(i)));
  return seq;
}

ComparatorTrace comparator_trace(const MomentHistory& history, double lambda,
                                 const SolverOptions& options, bool warm_start) {
  ComparatorTrace trace;
  const std::size_t horizon = history.size();
  trace.v_star.resize(horizon);
  trace.converged.resize(horizon);
  trace.iterations.resize(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    const auto& row = history[t];
    for (std::size_t i = 0; i < row.size(); ++i) {
      const Vector start = (warm_start && t > 0) ? trace.v_star[t - 1][i] : Vector();
      auto sol = solve_comparator(row[i].phi, row[i].r, lambda, options, start);
      trace.v_star[t].push_back(std::move(sol.v));
      trace.converged[t].push_back(sol.converged);
      trace.iterations[t].push_back(sol.iterations);
    }
  }
  return trace;
}

}  // namespace semtrack
