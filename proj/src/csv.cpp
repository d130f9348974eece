#include "semtrack/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "semtrack/errors.hpp"

namespace semtrack::csv {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

int parse_index(const std::string& text) {
  char* end = nullptr;
  errno = 0;
  const long value = std::strtol(text.c_str(), &end, 10);
  if (errno != 0 || end == text.c_str() || *end != '\0' || value < 1 || value > 1'000'000'000)
    throw IoError("bad index field '" + text + "'");
  return static_cast<int>(value);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& text) {
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') throw IoError("bad numeric field '" + text + "'");
  return value;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << 'c' << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

Matrix read_matrix(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw IoError("matrix CSV is empty");
  const auto cols = static_cast<Eigen::Index>(split(line).size());
  std::vector<double> values;
  Eigen::Index rows = 0;
  while (next_line(in, line)) {
    const auto fields = split(line);
    if (static_cast<Eigen::Index>(fields.size()) != cols)
      throw IoError("matrix CSV row " + std::to_string(rows + 1) + " has " +
                    std::to_string(fields.size()) + " fields, expected " + std::to_string(cols));
    for (const auto& f : fields) values.push_back(parse_double(f));
    ++rows;
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return m;
}

void write_matrix_file(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path);
  write_matrix(out, m);
  if (!out) throw IoError("failed writing " + path.string());
}

Matrix read_matrix_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_matrix(in);
}

void write_snapshots(std::ostream& out, const std::vector<TopologySnapshot>& snapshots) {
  out << "matrix,t,i,j,value\n";
  for (const auto& snap : snapshots) {
    const auto n = snap.A.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        out << "A," << snap.t << ',' << (i + 1) << ',' << (j + 1) << ','
            << format_double(snap.A(i, j)) << '\n';
      }
    }
    for (Eigen::Index i = 0; i < n; ++i)
      out << "B," << snap.t << ',' << (i + 1) << ',' << (i + 1) << ',' << format_double(snap.b(i))
          << '\n';
  }
}

std::vector<TopologySnapshot> read_snapshots(std::istream& in) {
  std::string line;
  if (!next_line(in, line) || line != "matrix,t,i,j,value")
    throw IoError("snapshot CSV must start with header matrix,t,i,j,value");

  struct Entry {
    bool is_a;
    int i, j;
    double value;
  };
  std::map<int, std::vector<Entry>> by_time;
  int n = 0;
  while (next_line(in, line)) {
    const auto f = split(line);
    if (f.size() != 5 || (f[0] != "A" && f[0] != "B")) throw IoError("bad snapshot row '" + line + "'");
    Entry e{f[0] == "A", parse_index(f[2]), parse_index(f[3]), parse_double(f[4])};
    if (!e.is_a && e.i != e.j) throw IoError("B rows must be diagonal: '" + line + "'");
    if (e.is_a && e.i == e.j) throw IoError("A rows must be off-diagonal: '" + line + "'");
    n = std::max({n, e.i, e.j});
    by_time[parse_index(f[1])].push_back(e);
  }
  std::vector<TopologySnapshot> snapshots;
  for (const auto& [t, entries] : by_time) {
    TopologySnapshot snap{t, Matrix::Zero(n, n), Vector::Zero(n)};
    for (const auto& e : entries) {
      if (e.is_a)
        snap.A(e.i - 1, e.j - 1) = e.value;
      else
        snap.b(e.i - 1) = e.value;
    }
    snapshots.push_back(std::move(snap));
  }
  return snapshots;
}

std::vector<TopologySnapshot> read_snapshots_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_snapshots(in);
}

std::string batch_file_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "Y_%06d.csv", t);
  return buf;
}

void write_observations(const std::filesystem::path& dir, const ObservationStream& data) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_matrix_file(dir / "X.csv", data.X);
  for (const auto& batch : data.batches) write_matrix_file(dir / batch_file_name(batch.t), batch.Y);
}

ObservationStream read_observations(const std::filesystem::path& y_dir,
                                    const std::filesystem::path& x_file) {
  ObservationStream data;
  data.X = read_matrix_file(x_file);

  static const std::regex pattern(R"(Y_(\d+)\.csv)");
  std::map<int, std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(y_dir, ec)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) files[parse_index(m[1].str())] = entry.path();
  }
  if (ec) throw IoError("cannot list " + y_dir.string() + ": " + ec.message());
  if (files.empty()) throw IoError("no Y_<t>.csv files in " + y_dir.string());

  int expected = 1;
  for (const auto& [t, path] : files) {
    if (t != expected) throw IoError("observation files are not contiguous: missing t=" + std::to_string(expected));
    Matrix Y = read_matrix_file(path);
    if (Y.rows() != data.X.rows() || Y.cols() != data.X.cols())
      throw IoError(path.string() + " has shape " + std::to_string(Y.rows()) + "x" +
                    std::to_string(Y.cols()) + ", X is " + std::to_string(data.X.rows()) + "x" +
                    std::to_string(data.X.cols()));
    data.batches.push_back({t, std::move(Y)});
    ++expected;
  }
  return data;
}

}  // namespace semtrack::csv
