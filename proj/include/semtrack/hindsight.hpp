#pragma once

#include <vector>

#include "semtrack/model.hpp"

namespace semtrack {

struct SolverOptions {
  /// Fixed-point residual |v - prox(v - grad f(v) * step)| at which to stop.
  double tol = 1e-10;
  int max_iter = 100000;
  /// Step size; <= 0 selects 1/lambda_max(Phi).
  double step = 0.0;
};

struct ComparatorSolution {
  Vector v;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

/// Batch proximal gradient on 1/2 v^T Phi v - r^T v + lambda |v_{1:N-1}|_1,
/// started from `start` (zero when empty). Non-convergence is reported
/// through the flag, never thrown.
ComparatorSolution solve_comparator(const Matrix& phi, const Vector& r, double lambda,
                                    const SolverOptions& options = {},
                                    const Vector& start = Vector());

/// Objective value of the comparator problem without the constant term.
double comparator_objective(const Matrix& phi, const Vector& r, double lambda, const Vector& v);

/// Largest dimension accepted by exact_oracle.
inline constexpr int kExactOracleMaxDim = 6;

/// Enumerates every sign pattern of the penalized coordinates, solves the
/// restricted stationarity system and keeps the KKT-consistent solution.
/// Phi must be positive definite and of dimension <= kExactOracleMaxDim.
/// Throws NoConsistentPattern when no pattern passes.
Vector exact_oracle(const Matrix& phi, const Vector& r, double lambda);

struct Moments {
  Matrix phi;
  Vector r;
  double c = 0.0;
};

/// moments[t-1][i] after consuming batch t.
using MomentHistory = std::vector<std::vector<Moments>>;

MomentHistory collect_moments(const ObservationStream& data, double gamma);

struct ComparatorTrace {
  /// v_star[t-1][i]
  std::vector<std::vector<Vector>> v_star;
  std::vector<std::vector<bool>> converged;
  std::vector<std::vector<int>> iterations;

  bool all_converged() const;
  /// v_star[.][i] as a time-ordered sequence.
  std::vector<Vector> node_sequence(int i) const;
};

/// Solves every (i, t) comparator. With warm_start each solve starts from
/// v_i*[t-1].
ComparatorTrace comparator_trace(const MomentHistory& history, double lambda,
                                 const SolverOptions& options = {}, bool warm_start = true);

}  // namespace semtrack
