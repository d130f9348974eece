#include "semtrack/tracker.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "semtrack/errors.hpp"

namespace semtrack {

namespace {

using nlohmann::json;

constexpr const char* kCheckpointFormat = "semtrack-checkpoint";
constexpr int kCheckpointVersion = 1;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from_json(const json& rows, Eigen::Index n_rows, Eigen::Index n_cols) {
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n_rows)
    throw DimensionMismatch("checkpoint matrix has wrong row count");
  Matrix m(n_rows, n_cols);
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n_cols)
      throw DimensionMismatch("checkpoint matrix has wrong column count");
    for (Eigen::Index j = 0; j < n_cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

Vector vector_from_json(const json& values, Eigen::Index n) {
  if (!values.is_array() || static_cast<Eigen::Index>(values.size()) != n)
    throw DimensionMismatch("checkpoint vector has wrong length");
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = values[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

void AlgoConfig::validate() const {
  std::ostringstream err;
  if (!(gamma > 0.0 && gamma <= 1.0)) err << "gamma must lie in (0,1] (got " << gamma << "); ";
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) err << "lambda must be >= 0 (got " << lambda << "); ";
  if (!(alpha > 0.0) || !std::isfinite(alpha)) err << "alpha must be > 0 (got " << alpha << "); ";
  const auto msg = err.str();
  if (!msg.empty()) throw ConfigError("invalid algorithm config: " + msg);
}

TrackerState init(int nodes, int contagions, const AlgoConfig& config, const Matrix& X) {
  config.validate();
  if (nodes < 2 || contagions < 1) throw DimensionMismatch("need N >= 2 and C >= 1");
  if (X.rows() != nodes || X.cols() != contagions) {
    std::ostringstream msg;
    msg << "X is " << X.rows() << "x" << X.cols() << ", expected " << nodes << "x" << contagions;
    throw DimensionMismatch(msg.str());
  }
  TrackerState state;
  state.config = config;
  state.X = X;
  state.nodes.resize(static_cast<std::size_t>(nodes));
  for (auto& node : state.nodes) {
    node.v = Vector::Zero(nodes);
    node.phi = Matrix::Zero(nodes, nodes);
    node.r = Vector::Zero(nodes);
    node.c = 0.0;
    node.t = 0;
  }
  return state;
}

Matrix build_regressor(const Matrix& Y, const Matrix& X, int i) {
  const auto n = Y.rows();
  if (X.rows() != n || X.cols() != Y.cols()) throw DimensionMismatch("Y and X shapes disagree");
  if (i < 0 || i >= n) throw DimensionMismatch("node index out of range");
  Matrix Z(n, Y.cols());
  Z.topRows(i) = Y.topRows(i);
  Z.middleRows(i, n - 1 - i) = Y.bottomRows(n - 1 - i);
  Z.row(n - 1) = X.row(i);
  return Z;
}

void update_moments(NodeState& node, const Matrix& Z, const Vector& y, double gamma) {
  if (Z.rows() != node.phi.rows() || Z.cols() != y.size())
    throw DimensionMismatch("regressor shape disagrees with node state");
  node.phi = gamma * node.phi + Z * Z.transpose();
  node.r = gamma * node.r + Z * y;
  node.c = gamma * node.c + y.squaredNorm();
  ++node.t;
}

Vector gradient(const NodeState& node, const Vector& v) { return node.phi * v - node.r; }

Vector soft_threshold(const Vector& w, double kappa) {
  Vector out(w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const double mag = std::abs(w(j)) - kappa;
    out(j) = mag > 0.0 ? std::copysign(mag, w(j)) : 0.0;
  }
  return out;
}

Vector prox_partial_l1(const Vector& v, double alpha, double lambda) {
  const auto n = v.size();
  if (n < 1) return v;
  Vector out(n);
  out.head(n - 1) = soft_threshold(v.head(n - 1), alpha * lambda);
  out(n - 1) = v(n - 1);
  return out;
}

double evaluate_objective(const NodeState& node, const Vector& v, double lambda) {
  const auto n = v.size();
  return 0.5 * v.dot(node.phi * v) - node.r.dot(v) + 0.5 * node.c +
         lambda * v.head(n - 1).lpNorm<1>();
}

Vector node_update(const NodeState& node, double alpha, double lambda) {
  const Vector forward = node.v - alpha * gradient(node, node.v);
  return prox_partial_l1(forward, alpha, lambda);
}

StepResult step(TrackerState& state, const Matrix& Y) {
  const int n = state.num_nodes();
  if (Y.rows() != n || Y.cols() != state.num_contagions()) {
    std::ostringstream msg;
    msg << "batch is " << Y.rows() << "x" << Y.cols() << ", expected " << n << "x"
        << state.num_contagions();
    throw DimensionMismatch(msg.str());
  }
  if (!Y.allFinite()) throw NonFiniteValue("observation batch contains NaN or Inf");

  std::vector<Vector> current;
  std::vector<Vector> next;
  current.reserve(static_cast<std::size_t>(n));
  next.reserve(static_cast<std::size_t>(n));

  for (int i = 0; i < n; ++i) {
    NodeState& node = state.nodes[static_cast<std::size_t>(i)];
    const Matrix Z = build_regressor(Y, state.X, i);
    update_moments(node, Z, Y.row(i).transpose(), state.config.gamma);
    Vector v_next = node_update(node, state.config.alpha, state.config.lambda);
    if (!v_next.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite iterate at node " << i << ", t=" << node.t
          << " (step size alpha=" << state.config.alpha << " is likely too large)";
      throw NonFiniteValue(msg.str());
    }
    current.push_back(node.v);
    next.push_back(v_next);
  }
  // Commit only after every node succeeded.
  for (int i = 0; i < n; ++i) state.nodes[static_cast<std::size_t>(i)].v = next[static_cast<std::size_t>(i)];

  const int t = state.t();
  return {assemble_snapshot(current, t), assemble_snapshot(next, t + 1)};
}

std::vector<Vector> estimates(const TrackerState& state) {
  std::vector<Vector> out;
  out.reserve(state.nodes.size());
  for (const auto& node : state.nodes) out.push_back(node.v);
  return out;
}

std::string checkpoint_to_string(const TrackerState& state) {
  json doc;
  doc["format"] = kCheckpointFormat;
  doc["version"] = kCheckpointVersion;
  doc["config"] = {{"gamma", state.config.gamma},
                   {"lambda", state.config.lambda},
                   {"alpha", state.config.alpha}};
  doc["nodes_count"] = state.num_nodes();
  doc["contagions"] = state.num_contagions();
  doc["t"] = state.t();
  doc["X"] = matrix_to_json(state.X);
  json nodes = json::array();
  for (const auto& node : state.nodes) {
    nodes.push_back({{"v", vector_to_json(node.v)},
                     {"Phi", matrix_to_json(node.phi)},
                     {"r", vector_to_json(node.r)},
                     {"c", node.c}});
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump(1);
}

TrackerState checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (doc.value("format", "") != kCheckpointFormat || doc.value("version", 0) != kCheckpointVersion)
    throw IoError("not a semtrack checkpoint (format/version mismatch)");

  try {
    AlgoConfig config;
    config.gamma = doc.at("config").at("gamma").get<double>();
    config.lambda = doc.at("config").at("lambda").get<double>();
    config.alpha = doc.at("config").at("alpha").get<double>();
    const int n = doc.at("nodes_count").get<int>();
    const int c = doc.at("contagions").get<int>();
    const int t = doc.at("t").get<int>();

    TrackerState state = init(n, c, config, matrix_from_json(doc.at("X"), n, c));
    const auto& nodes = doc.at("nodes");
    if (!nodes.is_array() || static_cast<int>(nodes.size()) != n)
      throw DimensionMismatch("checkpoint node count disagrees with N");
    for (int i = 0; i < n; ++i) {
      const auto& entry = nodes[static_cast<std::size_t>(i)];
      NodeState& node = state.nodes[static_cast<std::size_t>(i)];
      node.v = vector_from_json(entry.at("v"), n);
      node.phi = matrix_from_json(entry.at("Phi"), n, n);
      node.r = vector_from_json(entry.at("r"), n);
      node.c = entry.at("c").get<double>();
      node.t = t;
    }
    return state;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const TrackerState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << checkpoint_to_string(state) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

TrackerState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_string(buffer.str());
}

}  // namespace semtrack
