#include "semtrack/model.hpp"

#include <cmath>
#include <sstream>

#include "semtrack/errors.hpp"

namespace semtrack {

namespace {

constexpr double kMaxConditionEstimate = 1e12;

// Abrupt regime: the model switches at t = ceil(T/2).
int breakpoint(int horizon) { return (horizon + 1) / 2; }

void stabilize(Matrix& A, double& scale) {
  scale = 1.0;
  const double rho = spectral_radius(A);
  if (rho > kMaxSpectralRadius) {
    scale = kMaxSpectralRadius / rho;
    A *= scale;
  }
}

}  // namespace

std::string to_string(Regime regime) {
  return regime == Regime::Smooth ? "smooth" : "abrupt";
}

Regime regime_from_string(const std::string& name) {
  if (name == "smooth") return Regime::Smooth;
  if (name == "abrupt") return Regime::Abrupt;
  throw ConfigError("unknown regime '" + name + "' (expected smooth or abrupt)");
}

double evaluate_profile(EdgeProfile profile, int t) {
  const double s = static_cast<double>(t);
  switch (profile) {
    case EdgeProfile::Sine:
      return 0.5 + 0.5 * std::sin(0.1 * s);
    case EdgeProfile::Cosine:
      return 0.5 + 0.5 * std::cos(0.1 * s);
    case EdgeProfile::Decay:
      return std::exp(-0.01 * s);
    case EdgeProfile::Zero:
      return 0.0;
  }
  return 0.0;
}

void GeneratorConfig::validate() const {
  std::ostringstream err;
  if (nodes < 2) err << "nodes must be >= 2 (got " << nodes << "); ";
  if (contagions < 1) err << "contagions must be >= 1 (got " << contagions << "); ";
  if (horizon < 1) err << "horizon must be >= 1 (got " << horizon << "); ";
  if (!(edge_probability >= 0.0 && edge_probability <= 1.0))
    err << "edge probability must lie in [0,1] (got " << edge_probability << "); ";
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    err << "sigma must be finite and >= 0 (got " << sigma << "); ";
  const auto msg = err.str();
  if (!msg.empty()) throw ConfigError("invalid generator config: " + msg);
}

Vector GroundTruth::v_true(int i, int t) const {
  const auto& snap = snapshots.at(static_cast<std::size_t>(t - 1));
  return stack_node(snap.A, snap.b, i);
}

BinaryMatrix generate_binary_support(const GeneratorConfig& config, Rng& rng) {
  config.validate();
  const int n = config.nodes;
  BinaryMatrix support = BinaryMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      support(i, j) = rng.bernoulli(config.edge_probability) ? 1 : 0;
    }
  }
  return support;
}

GroundTruth generate_topology_sequence(const GeneratorConfig& config,
                                       const BinaryMatrix& support, Rng& rng) {
  config.validate();
  const int n = config.nodes;
  const int horizon = config.horizon;
  if (support.rows() != n || support.cols() != n)
    throw DimensionMismatch("support must be N x N");
  for (int i = 0; i < n; ++i) {
    if (support(i, i) != 0) throw DimensionMismatch("support must have a zero diagonal");
  }

  GroundTruth truth;
  truth.snapshots.reserve(static_cast<std::size_t>(horizon));
  truth.scale.reserve(static_cast<std::size_t>(horizon));

  // b first so both regimes share the gains for a given seed.
  Vector b(n);
  for (int i = 0; i < n; ++i) b(i) = rng.normal();

  auto push = [&](int t, Matrix A) {
    double scale = 1.0;
    stabilize(A, scale);
    truth.snapshots.push_back({t, std::move(A), b});
    truth.scale.push_back(scale);
  };

  if (config.regime == Regime::Smooth) {
    truth.profiles = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>::Constant(
        n, n, static_cast<int>(EdgeProfile::Zero));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (support(i, j) != 0) truth.profiles(i, j) = static_cast<int>(rng.index(4));
      }
    }
    for (int t = 1; t <= horizon; ++t) {
      Matrix A = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (support(i, j) != 0)
            A(i, j) = evaluate_profile(static_cast<EdgeProfile>(truth.profiles(i, j)), t);
        }
      }
      push(t, std::move(A));
    }
  } else {
    auto draw = [&] {
      Matrix A = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (support(i, j) != 0) A(i, j) = rng.normal();
        }
      }
      return A;
    };
    const Matrix before = draw();
    const Matrix after = draw();
    const int tb = breakpoint(horizon);
    for (int t = 1; t <= horizon; ++t) push(t, t < tb ? before : after);
  }
  return truth;
}

Matrix generate_exogenous(const GeneratorConfig& config, Rng& rng) {
  config.validate();
  Matrix X(config.nodes, config.contagions);
  for (int c = 0; c < X.cols(); ++c) {
    for (int i = 0; i < X.rows(); ++i) X(i, c) = rng.normal();
  }
  return X;
}

ObservationBatch generate_observations(const TopologySnapshot& snapshot,
                                       const Matrix& X, double sigma, Rng& rng,
                                       Matrix* noise) {
  const auto n = snapshot.A.rows();
  if (snapshot.A.cols() != n || snapshot.b.size() != n || X.rows() != n)
    throw DimensionMismatch("snapshot and X shapes disagree");

  const Matrix system = Matrix::Identity(n, n) - snapshot.A;
  Eigen::PartialPivLU<Matrix> lu(system);
  const double rcond = lu.rcond();
  if (!(rcond * kMaxConditionEstimate >= 1.0)) {
    std::ostringstream msg;
    msg << "I - A is numerically singular at t=" << snapshot.t << " (rcond " << rcond << ")";
    throw SingularSystem(msg.str());
  }

  const double sd = std::sqrt(sigma);
  Matrix E(n, X.cols());
  for (Eigen::Index c = 0; c < E.cols(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i) E(i, c) = sd * rng.normal();
  }

  ObservationBatch batch;
  batch.t = snapshot.t;
  batch.Y = lu.solve(snapshot.b.asDiagonal() * X + E);
  if (noise != nullptr) *noise = std::move(E);
  return batch;
}

SyntheticRun simulate(const GeneratorConfig& config) {
  config.validate();
  SyntheticRun run;
  run.config = config;

  Rng support_rng = Rng::substream(config.seed, Stream::Support);
  Rng weight_rng = Rng::substream(config.seed, Stream::Weights);
  Rng exo_rng = Rng::substream(config.seed, Stream::Exogenous);
  Rng noise_rng = Rng::substream(config.seed, Stream::Noise);

  run.support = generate_binary_support(config, support_rng);
  run.truth = generate_topology_sequence(config, run.support, weight_rng);
  run.data.X = generate_exogenous(config, exo_rng);
  run.data.batches.reserve(static_cast<std::size_t>(config.horizon));
  for (const auto& snap : run.truth.snapshots) {
    run.data.batches.push_back(generate_observations(snap, run.data.X, config.sigma, noise_rng));
  }
  return run;
}

double spectral_radius(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> solver(A, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Vector stack_node(const Matrix& A, const Vector& b, int i) {
  const auto n = A.rows();
  Vector v(n);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j != i) v(k++) = A(i, j);
  }
  v(n - 1) = b(i);
  return v;
}

TopologySnapshot assemble_snapshot(const std::vector<Vector>& v, int t) {
  const auto n = static_cast<Eigen::Index>(v.size());
  TopologySnapshot snap;
  snap.t = t;
  snap.A = Matrix::Zero(n, n);
  snap.b = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector& vi = v[static_cast<std::size_t>(i)];
    if (vi.size() != n) throw DimensionMismatch("node vector must have dimension N");
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) snap.A(i, j) = vi(k++);
    }
    snap.b(i) = vi(n - 1);
  }
  return snap;
}

}  // namespace semtrack
