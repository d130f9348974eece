#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "semtrack/model.hpp"

namespace semtrack {

struct AlgoConfig {
  /// Forgetting factor in (0, 1].
  double gamma = 0.9;
  /// l1 weight on the off-diagonal coefficients.
  double lambda = 15.0;
  /// Fixed step size; must not exceed 1/L_f for the regret bound to apply.
  double alpha = 0.01;

  void validate() const;
};

/// Per-node recursive memory. v stacks [a_{-i}; b_ii]; phi and r are the
/// exponentially weighted moments of the regressor Z_i, c the weighted
/// energy of y_i.
struct NodeState {
  Vector v;
  Matrix phi;
  Vector r;
  double c = 0.0;
  int t = 0;
};

struct TrackerState {
  AlgoConfig config;
  Matrix X;
  std::vector<NodeState> nodes;

  int num_nodes() const { return static_cast<int>(X.rows()); }
  int num_contagions() const { return static_cast<int>(X.cols()); }
  int t() const { return nodes.empty() ? 0 : nodes.front().t; }
};

struct StepResult {
  /// Assembled from v_i[t], the estimate reported for the batch just consumed.
  TopologySnapshot estimate;
  /// Assembled from v_i[t+1], the one-step-ahead prediction.
  TopologySnapshot prediction;
};

/// Zero estimates and zero moments for every node.
/// Throws DimensionMismatch unless X is nodes x contagions.
TrackerState init(int nodes, int contagions, const AlgoConfig& config, const Matrix& X);

/// Z_i: Y with row i removed, followed by row i of X (0-based i).
Matrix build_regressor(const Matrix& Y, const Matrix& X, int i);

/// phi <- gamma*phi + Z Z^T, r <- gamma*r + Z y, c <- gamma*c + |y|^2, t <- t+1.
void update_moments(NodeState& node, const Matrix& Z, const Vector& y, double gamma);

/// Gradient of the weighted least-squares term: phi*v - r.
Vector gradient(const NodeState& node, const Vector& v);

Vector soft_threshold(const Vector& w, double kappa);

/// Soft-thresholds the first N-1 entries by alpha*lambda; the gain entry passes through.
Vector prox_partial_l1(const Vector& v, double alpha, double lambda);

/// 1/2 v^T phi v - r^T v + c/2 + lambda*|v_{1:N-1}|_1.
double evaluate_objective(const NodeState& node, const Vector& v, double lambda);

/// Gradient step + prox for one node given its already updated moments.
Vector node_update(const NodeState& node, double alpha, double lambda);

/// One pass of the online algorithm over a new batch Y^t.
/// Throws DimensionMismatch on a shape error and NonFiniteValue if an
/// iterate blows up.
StepResult step(TrackerState& state, const Matrix& Y);

/// Current estimates v_i for all nodes.
std::vector<Vector> estimates(const TrackerState& state);

std::string checkpoint_to_string(const TrackerState& state);
TrackerState checkpoint_from_string(const std::string& text);
void save_checkpoint(const TrackerState& state, const std::filesystem::path& path);
TrackerState load_checkpoint(const std::filesystem::path& path);

}  // namespace semtrack
