#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "semtrack/csv.hpp"
#include "semtrack/errors.hpp"
#include "semtrack/svg.hpp"

using namespace semtrack;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("semtrack_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("doubles round-trip through text") {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int k = 0; k < 1000; ++k) {
      const double x = u(gen) * std::pow(10.0, static_cast<int>(k % 40) - 20);
      CHECK(csv::parse_double(csv::format_double(x)) == x);
    }
    CHECK(csv::format_double(0.1) == "0.10000000000000001");
    CHECK(std::isnan(csv::parse_double(csv::format_double(std::nan("")))));
    CHECK(csv::parse_double(csv::format_double(-std::numeric_limits<double>::infinity())) ==
          -std::numeric_limits<double>::infinity());
    CHECK_THROWS(csv::parse_double("1.5abc"));
  }

  TEST_CASE("matrix CSV round-trip") {
    std::mt19937_64 gen(2);
    const Matrix m = oracle::random_matrix(gen, 4, 3);
    std::stringstream ss;
    csv::write_matrix(ss, m);
    const std::string text = ss.str();
    CHECK(text.rfind("c1,c2,c3\n", 0) == 0);
    CHECK(csv::read_matrix(ss) == m);
  }

  TEST_CASE("snapshot CSV round-trip and schema") {
    Matrix A(2, 2);
    A << 0.0, 0.25, -1.0 / 3.0, 0.0;
    Vector b(2);
    b << 1.5, -0.1;
    std::vector<TopologySnapshot> snaps{{1, A, b}, {2, 2.0 * A, b}};
    std::stringstream ss;
    csv::write_snapshots(ss, snaps);
    const std::string text = ss.str();
    CHECK(text.rfind("matrix,t,i,j,value\n", 0) == 0);
    CHECK(count(text, "\nA,") == 4);
    CHECK(count(text, "\nB,") == 4);
    CHECK(text.find("\nA,1,1,2,0.25\n") != std::string::npos);
    CHECK(text.find("\nB,1,2,2,-0.10000000000000001\n") != std::string::npos);
    const auto back = csv::read_snapshots(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[1].t == 2);
    CHECK(back[1].A == 2.0 * A);
    CHECK(back[0].b == b);
  }

  TEST_CASE("observation directory round-trip") {
    std::mt19937_64 gen(3);
    ObservationStream data;
    data.X = oracle::random_matrix(gen, 3, 2);
    for (int t = 1; t <= 12; ++t) data.batches.push_back({t, oracle::random_matrix(gen, 3, 2)});
    const fs::path dir = fresh_dir("obs");
    csv::write_observations(dir, data);
    CHECK(fs::exists(dir / "X.csv"));
    CHECK(fs::exists(dir / csv::batch_file_name(12)));
    CHECK(csv::batch_file_name(7) == "Y_000007.csv");
    const ObservationStream back = csv::read_observations(dir, dir / "X.csv");
    CHECK(back.X == data.X);
    REQUIRE(back.horizon() == 12);
    for (int t = 0; t < 12; ++t) CHECK(back.batches[static_cast<std::size_t>(t)].Y == data.batches[static_cast<std::size_t>(t)].Y);

    fs::remove(dir / csv::batch_file_name(5));
    CHECK_THROWS(csv::read_observations(dir, dir / "X.csv"));
    CHECK_THROWS_AS(csv::read_observations(dir / "missing", dir / "X.csv"), IoError);
  }

  TEST_CASE("shape errors on ingest") {
    const fs::path dir = fresh_dir("shape");
    csv::write_matrix_file(dir / "X.csv", Matrix::Ones(3, 2));
    csv::write_matrix_file(dir / csv::batch_file_name(1), Matrix::Ones(2, 2));
    CHECK_THROWS_AS(csv::read_observations(dir, dir / "X.csv"), IoError);
  }

  TEST_CASE("svg: single point renders a marker") {
    const std::string s = svg::render_line_chart({{"one", {1.0}, {2.0}, "", false}}, {"t", "t", "y", false, 400, 300});
    CHECK(s.rfind("<svg", 0) == 0);
    CHECK(s.find("</svg>") != std::string::npos);
    CHECK(count(s, "<circle") == 1);
  }

  TEST_CASE("svg: labelled series and log axis") {
    svg::Series a{"smooth", {1, 2, 3}, {1, 10, 100}, "", false};
    svg::Series b{"abrupt", {1, 2, 3}, {2, 0, std::nan("")}, "", true};
    const std::string s = svg::render_line_chart({a, b}, {"title", "t", "y", true, 720, 440});
    CHECK(count(s, "class=\"series\"") == 2);
    CHECK(s.find("data-label=\"smooth\"") != std::string::npos);
    CHECK(s.find("data-label=\"abrupt\"") != std::string::npos);
    CHECK(s.find("stroke-dasharray") != std::string::npos);
    CHECK(s.find("nan") == std::string::npos);
  }

  TEST_CASE("svg: labels are escaped") {
    const std::string s = svg::render_line_chart({{"a<b&c", {1, 2}, {1, 2}, "", false}}, {"x", "t", "y", false, 720, 440});
    CHECK(s.find("a<b&c") == std::string::npos);
    CHECK(s.find("a&lt;b&amp;c") != std::string::npos);
  }
}
