#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "semtrack/model.hpp"

namespace semtrack::csv {

/// Shortest form that still round-trips: printf %.17g.
std::string format_double(double x);
double parse_double(const std::string& text);

/// Header c1..cC followed by one row per matrix row.
void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in);
void write_matrix_file(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_file(const std::filesystem::path& path);

/// Rows `matrix,t,i,j,value` with matrix in {A,B}; every off-diagonal entry
/// of A and the diagonal of B. Indices are 1-based.
void write_snapshots(std::ostream& out, const std::vector<TopologySnapshot>& snapshots);
std::vector<TopologySnapshot> read_snapshots(std::istream& in);
std::vector<TopologySnapshot> read_snapshots_file(const std::filesystem::path& path);

/// File name of the batch at time t inside an observation directory.
std::string batch_file_name(int t);

/// X.csv plus Y_<t>.csv files inside `dir`.
void write_observations(const std::filesystem::path& dir, const ObservationStream& data);
/// Loads every Y_<t>.csv of `y_dir` in time order.
ObservationStream read_observations(const std::filesystem::path& y_dir,
                                    const std::filesystem::path& x_file);

}  // namespace semtrack::csv
