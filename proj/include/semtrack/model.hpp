#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semtrack/rng.hpp"

namespace semtrack {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BinaryMatrix = Eigen::MatrixXi;

/// Largest spectral radius a generated A^t may have; anything larger is rescaled.
inline constexpr double kMaxSpectralRadius = 0.9;

enum class Regime { Smooth, Abrupt };

std::string to_string(Regime regime);
Regime regime_from_string(const std::string& name);

/// Time profile of one edge weight in the smooth regime.
enum class EdgeProfile : int { Sine = 0, Cosine = 1, Decay = 2, Zero = 3 };

/// 0.5+0.5 sin(0.1t), 0.5+0.5 cos(0.1t), exp(-0.01t) or 0.
double evaluate_profile(EdgeProfile profile, int t);

struct GeneratorConfig {
  int nodes = 10;
  int contagions = 5;
  int horizon = 300;
  double edge_probability = 0.15;
  /// Noise covariance scale: e ~ N(0, sigma I), so each entry has std dev sqrt(sigma).
  double sigma = 0.1;
  Regime regime = Regime::Smooth;
  std::uint64_t seed = 1;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// SEM coefficients at one time index. A has a zero diagonal, b is diag(B^t).
struct TopologySnapshot {
  int t = 0;
  Matrix A;
  Vector b;
};

/// Endogenous observations Y^t (N x C) at one time index.
struct ObservationBatch {
  int t = 0;
  Matrix Y;
};

/// Static exogenous matrix X plus the batches Y^1..Y^T.
struct ObservationStream {
  Matrix X;
  std::vector<ObservationBatch> batches;

  int nodes() const { return static_cast<int>(X.rows()); }
  int contagions() const { return static_cast<int>(X.cols()); }
  int horizon() const { return static_cast<int>(batches.size()); }
};

struct GroundTruth {
  std::vector<TopologySnapshot> snapshots;
  /// Factor applied to A^t by the stability rescaling (1 when untouched).
  std::vector<double> scale;
  /// Smooth regime only: the profile assigned to every supported entry.
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> profiles;

  int horizon() const { return static_cast<int>(snapshots.size()); }
  /// Stacked [a_{-i}; b_ii] for node i (0-based) at time t (1-based).
  Vector v_true(int i, int t) const;
};

struct SyntheticRun {
  GeneratorConfig config;
  BinaryMatrix support;
  GroundTruth truth;
  ObservationStream data;
};

/// Off-diagonal entries are 1 with probability p_e, the diagonal is 0.
BinaryMatrix generate_binary_support(const GeneratorConfig& config, Rng& rng);

/// Draws b, then the edge weights for the configured regime, then rescales
/// every A^t whose spectral radius exceeds kMaxSpectralRadius.
GroundTruth generate_topology_sequence(const GeneratorConfig& config,
                                       const BinaryMatrix& support, Rng& rng);

/// N x C matrix of i.i.d. standard Gaussians.
Matrix generate_exogenous(const GeneratorConfig& config, Rng& rng);

/// Solves (I - A) Y = diag(b) X + E with E ~ N(0, sigma I) per column.
/// The drawn noise is written to `noise` when non-null.
/// Throws SingularSystem when I - A has a condition estimate above 1e12.
ObservationBatch generate_observations(const TopologySnapshot& snapshot,
                                       const Matrix& X, double sigma, Rng& rng,
                                       Matrix* noise = nullptr);

/// Full synthetic experiment: support, topology sequence, X and Y^1..Y^T,
/// each drawn from its own substream of config.seed.
SyntheticRun simulate(const GeneratorConfig& config);

double spectral_radius(const Matrix& A);

/// Stacks row i of A without its diagonal entry, followed by b(i).
Vector stack_node(const Matrix& A, const Vector& b, int i);

/// Inverse of stack_node over all nodes: v[i] fills row i of A and b(i).
TopologySnapshot assemble_snapshot(const std::vector<Vector>& v, int t);

}  // namespace semtrack
