#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "semtrack/errors.hpp"
#include "semtrack/tracker.hpp"

using namespace semtrack;

namespace {

NodeState state_from(const std::vector<oracle::Sample>& h, double gamma) {
  NodeState node;
  const int n = static_cast<int>(h.front().Z.rows());
  node.v = Vector::Zero(n);
  node.phi = Matrix::Zero(n, n);
  node.r = Vector::Zero(n);
  for (const auto& s : h) update_moments(node, s.Z, s.y, gamma);
  return node;
}

}  // namespace

TEST_SUITE("tracker") {
  TEST_CASE("init gives zero state") {
    const TrackerState s = init(3, 2, AlgoConfig{}, Matrix::Ones(3, 2));
    REQUIRE(s.nodes.size() == 3);
    for (const auto& n : s.nodes) {
      CHECK(n.v == Vector::Zero(3));
      CHECK(n.phi == Matrix::Zero(3, 3));
      CHECK(n.r == Vector::Zero(3));
      CHECK(n.c == 0.0);
      CHECK(n.t == 0);
    }
    const TopologySnapshot est = assemble_snapshot(estimates(s), 0);
    CHECK(est.A == Matrix::Zero(3, 3));
    CHECK(est.b == Vector::Zero(3));
    CHECK(checkpoint_to_string(s) == checkpoint_to_string(init(3, 2, AlgoConfig{}, Matrix::Ones(3, 2))));
  }

  TEST_CASE("init rejects shape mismatch and bad config") {
    CHECK_THROWS_AS(init(3, 2, AlgoConfig{}, Matrix::Ones(2, 2)), DimensionMismatch);
    AlgoConfig bad;
    bad.gamma = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = {};
    bad.gamma = 1.01;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = {};
    bad.alpha = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = {};
    bad.lambda = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("build_regressor deletes row i and appends row i of X") {
    Matrix Y(2, 2), X(2, 2);
    Y << 1, 2, 3, 4;
    X << 5, 6, 7, 8;
    Matrix z1(2, 2), z2(2, 2);
    z1 << 3, 4, 5, 6;
    z2 << 1, 2, 7, 8;
    CHECK(build_regressor(Y, X, 0) == z1);
    CHECK(build_regressor(Y, X, 1) == z2);
    std::mt19937_64 gen(1);
    const Matrix Yr = oracle::random_matrix(gen, 6, 4), Xr = oracle::random_matrix(gen, 6, 4);
    const Matrix z = build_regressor(Yr, Xr, 3);
    CHECK(z.rows() == 6);
    CHECK(z.cols() == 4);
  }

  TEST_CASE("identity accumulation with gamma = 1") {
    NodeState n{Vector::Zero(3), Matrix::Zero(3, 3), Vector::Zero(3), 0.0, 0};
    update_moments(n, Matrix::Identity(3, 3), Vector::Zero(3), 1.0);
    update_moments(n, Matrix::Identity(3, 3), Vector::Zero(3), 1.0);
    CHECK(n.phi == 2.0 * Matrix::Identity(3, 3));
    CHECK(n.t == 2);
  }

  TEST_CASE("moments match direct sums") {
    std::mt19937_64 gen(2);
    for (double gamma : {0.9, 0.5}) {
      const auto h = oracle::random_history(gen, 4, 3, gamma == 0.9 ? 2 : 3);
      const NodeState n = state_from(h, gamma);
      CHECK((n.phi - oracle::direct_phi(h, gamma)).norm() <= 1e-12 * oracle::direct_phi(h, gamma).norm());
      CHECK((n.r - oracle::direct_r(h, gamma)).norm() <= 1e-12 * oracle::direct_r(h, gamma).norm());
      CHECK(std::abs(n.c - oracle::direct_c(h, gamma)) <= 1e-12 * oracle::direct_c(h, gamma));
    }
  }

  TEST_CASE("moment matrix stays symmetric PSD and c nonnegative") {
    std::mt19937_64 gen(3);
    const auto h = oracle::random_history(gen, 6, 2, 100);
    const NodeState n = state_from(h, 0.9);
    CHECK((n.phi - n.phi.transpose()).norm() <= 1e-10 * n.phi.norm());
    Eigen::SelfAdjointEigenSolver<Matrix> es(n.phi);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9 * es.eigenvalues().maxCoeff());
    CHECK(n.c >= 0.0);
  }

  TEST_CASE("gradient") {
    std::mt19937_64 gen(4);
    const auto h = oracle::random_history(gen, 5, 3, 20);
    const NodeState n = state_from(h, 0.9);
    CHECK(gradient(n, Vector::Zero(5)) == -n.r);
    NodeState id{Vector::Zero(3), Matrix::Identity(3, 3), Vector::Zero(3), 0.0, 1};
    const Vector v = oracle::random_vector(gen, 3);
    CHECK(gradient(id, v) == v);

    for (int k = 0; k < 10; ++k) {
      const Vector w = oracle::random_vector(gen, 5);
      const Vector fd = oracle::central_difference(
          [&](const Vector& x) { return oracle::direct_loss(h, 0.9, x); }, w, 1e-4);
      const Vector g = gradient(n, w);
      CHECK((g - fd).norm() <= 1e-5 * g.norm());
    }
  }

  TEST_CASE("soft threshold") {
    Vector w(3);
    w << 3.0, -0.5, 0.0;
    Vector expect(3);
    expect << 2.0, 0.0, 0.0;
    CHECK(soft_threshold(w, 1.0) == expect);
    CHECK(soft_threshold(w, 0.0) == w);
    Vector ties(2);
    ties << 0.5, -0.5;
    CHECK(soft_threshold(ties, 0.5) == Vector::Zero(2));
  }

  TEST_CASE("partial prox leaves the gain entry untouched") {
    Vector v(3);
    v << 2.0, -2.0, 2.0;
    Vector expect(3);
    expect << 1.0, -1.0, 2.0;
    CHECK(prox_partial_l1(v, 0.5, 2.0) == expect);
    CHECK(prox_partial_l1(Vector::Zero(3), 0.5, 2.0) == Vector::Zero(3));
  }

  TEST_CASE("partial prox matches per-coordinate minimization") {
    std::mt19937_64 gen(5);
    const double alpha = 0.3, lambda = 2.0;
    for (int k = 0; k < 20; ++k) {
      const Vector v = oracle::random_vector(gen, 6, 2.0);
      const Vector s = prox_partial_l1(v, alpha, lambda);
      for (int j = 0; j < 6; ++j) {
        const bool penalized = j < 5;
        const double ref = oracle::scalar_l1_prox(v(j), alpha, penalized ? lambda : 0.0);
        CHECK(std::abs(s(j) - ref) <= 1e-8);
      }
      // Subgradient condition: (v - s)/alpha in lambda * d|s|.
      for (int j = 0; j < 5; ++j) {
        const double g = (v(j) - s(j)) / alpha;
        if (s(j) == 0.0)
          CHECK(std::abs(g) <= lambda + 1e-12);
        else
          CHECK(g == doctest::Approx(lambda * (s(j) > 0 ? 1.0 : -1.0)).epsilon(1e-12));
      }
      CHECK(s(5) == v(5));
    }
  }

  TEST_CASE("objective value") {
    std::mt19937_64 gen(6);
    const auto h = oracle::random_history(gen, 4, 3, 15);
    const NodeState n = state_from(h, 0.8);
    CHECK(evaluate_objective(n, Vector::Zero(4), 3.0) == doctest::Approx(0.5 * n.c).epsilon(1e-14));
    NodeState q{Vector::Zero(3), Matrix::Identity(3, 3), Vector::Zero(3), 0.0, 1};
    const Vector v = oracle::random_vector(gen, 3);
    CHECK(evaluate_objective(q, v, 0.0) == doctest::Approx(0.5 * v.squaredNorm()).epsilon(1e-14));
    for (int k = 0; k < 10; ++k) {
      const Vector w = oracle::random_vector(gen, 4);
      const double ref = oracle::direct_loss(h, 0.8, w) + 1.5 * w.head(3).cwiseAbs().sum();
      CHECK(std::abs(evaluate_objective(n, w, 1.5) - ref) <= 1e-9 * std::abs(ref));
    }
  }

  TEST_CASE("hand step-through of the first update") {
    AlgoConfig cfg{1.0, 1.0, 0.1};
    Matrix X(2, 1);
    X << 1.0, 0.0;
    TrackerState s = init(2, 1, cfg, X);
    Matrix Y(2, 1);
    Y << 1.0, 2.0;
    const StepResult res = step(s, Y);
    // Node 1: Z = [y_2; x_1] = [2; 1], r = Z y_1 = [2; 1], grad(0) = -r,
    // forward = 0.1 r = [0.2; 0.1], prox with kappa 0.1 -> [0.1; 0.1].
    CHECK(s.nodes[0].r == (Vector(2) << 2.0, 1.0).finished());
    CHECK(s.nodes[0].v(0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(s.nodes[0].v(1) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(res.estimate.A == Matrix::Zero(2, 2));
    CHECK(res.estimate.b == Vector::Zero(2));
    CHECK(res.prediction.A(0, 1) == s.nodes[0].v(0));
    CHECK(res.prediction.A(0, 0) == 0.0);
    CHECK(res.prediction.b(0) == s.nodes[0].v(1));
    CHECK(s.t() == 1);
  }

  TEST_CASE("zero data leaves the state at zero") {
    TrackerState s = init(3, 2, AlgoConfig{}, Matrix::Zero(3, 2));
    for (int t = 0; t < 5; ++t) {
      const StepResult r = step(s, Matrix::Zero(3, 2));
      CHECK(r.estimate.A == Matrix::Zero(3, 3));
      CHECK(r.estimate.b == Vector::Zero(3));
    }
    CHECK(s.t() == 5);
    for (const auto& n : s.nodes) CHECK(n.v == Vector::Zero(3));
  }

  TEST_CASE("step equals manual composition of the primitives") {
    std::mt19937_64 gen(7);
    const int N = 5, C = 3;
    const Matrix X = oracle::random_matrix(gen, N, C);
    AlgoConfig cfg{0.9, 0.5, 0.01};
    TrackerState s = init(N, C, cfg, X);
    std::vector<NodeState> manual = s.nodes;
    for (int t = 0; t < 20; ++t) {
      const Matrix Y = oracle::random_matrix(gen, N, C);
      const StepResult res = step(s, Y);
      for (int i = 0; i < N; ++i) {
        NodeState& m = manual[static_cast<std::size_t>(i)];
        const Vector before = m.v;
        update_moments(m, build_regressor(Y, X, i), Y.row(i).transpose(), cfg.gamma);
        m.v = prox_partial_l1(m.v - cfg.alpha * gradient(m, m.v), cfg.alpha, cfg.lambda);
        CHECK(m.v == s.nodes[static_cast<std::size_t>(i)].v);
        CHECK(m.phi == s.nodes[static_cast<std::size_t>(i)].phi);
        CHECK(stack_node(res.estimate.A, res.estimate.b, i) == before);
      }
      CHECK(res.estimate.A.diagonal() == Vector::Zero(N));
      CHECK(res.prediction.A.diagonal() == Vector::Zero(N));
    }
  }

  TEST_CASE("separability: node objectives sum to the matrix objective") {
    std::mt19937_64 gen(8);
    const int N = 4, C = 3, T = 12;
    const double g = 0.85;
    const Matrix X = oracle::random_matrix(gen, N, C);
    TrackerState s = init(N, C, AlgoConfig{g, 0.0, 0.01}, X);
    std::vector<Matrix> Ys;
    for (int t = 0; t < T; ++t) {
      Ys.push_back(oracle::random_matrix(gen, N, C));
      step(s, Ys.back());
    }
    Matrix A = oracle::random_matrix(gen, N, N);
    A.diagonal().setZero();
    const Vector b = oracle::random_vector(gen, N);
    double direct = 0.0;
    for (int t = 1; t <= T; ++t) {
      const Matrix& Y = Ys[static_cast<std::size_t>(t - 1)];
      direct += 0.5 * std::pow(g, T - t) * (Y - A * Y - b.asDiagonal() * X).squaredNorm();
    }
    double sum = 0.0;
    for (int i = 0; i < N; ++i) sum += evaluate_objective(s.nodes[static_cast<std::size_t>(i)], stack_node(A, b, i), 0.0);
    CHECK(std::abs(sum - direct) <= 1e-8 * std::abs(direct));
  }

  TEST_CASE("step rejects bad input and reports blow-up") {
    TrackerState s = init(3, 2, AlgoConfig{0.9, 0.0, 1e6}, Matrix::Ones(3, 2));
    CHECK_THROWS_AS(step(s, Matrix::Ones(2, 2)), DimensionMismatch);
    Matrix bad = Matrix::Ones(3, 2);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(step(s, bad), NonFiniteValue);
    CHECK(s.t() == 0);
    std::mt19937_64 gen(9);
    bool threw = false;
    try {
      for (int t = 0; t < 200; ++t) step(s, oracle::random_matrix(gen, 3, 2, 10.0));
    } catch (const NonFiniteValue&) {
      threw = true;
    }
    CHECK(threw);
  }

  TEST_CASE("checkpoint round-trips bit-exactly") {
    std::mt19937_64 gen(10);
    TrackerState s = init(4, 3, AlgoConfig{0.9, 1.0, 0.003}, oracle::random_matrix(gen, 4, 3));
    for (int t = 0; t < 7; ++t) step(s, oracle::random_matrix(gen, 4, 3));
    const std::string text = checkpoint_to_string(s);
    TrackerState back = checkpoint_from_string(text);
    CHECK(checkpoint_to_string(back) == text);
    CHECK(back.t() == 7);
    for (int i = 0; i < 4; ++i) {
      CHECK(back.nodes[static_cast<std::size_t>(i)].phi == s.nodes[static_cast<std::size_t>(i)].phi);
      CHECK(back.nodes[static_cast<std::size_t>(i)].v == s.nodes[static_cast<std::size_t>(i)].v);
    }
    const Matrix Y = oracle::random_matrix(gen, 4, 3);
    step(s, Y);
    step(back, Y);
    CHECK(checkpoint_to_string(back) == checkpoint_to_string(s));
    CHECK_THROWS(checkpoint_from_string("{\"format\":\"other\"}"));
  }
}
