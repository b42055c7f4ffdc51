#pragma once

#include "bnngp/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace bnngp {

/// Inputs X (N x M) and targets Y (N x L). The mean/std vectors map the
/// stored values back to the raw ones: raw = stored * std + mean. They are
/// (0, 1) for data that was never standardized.
struct Dataset {
  Matrix X;
  Matrix Y;
  Vector x_mean, x_std, y_mean, y_std;

  Dataset() = default;
  Dataset(Matrix X, Matrix Y);

  Eigen::Index size() const { return X.rows(); }
  /// Throws invalid-input on empty or mismatched shapes or non-finite values.
  void validate() const;
};

/// The two interlocked cylindrical bands: a 12 x 5 lattice over
/// theta in [0, 2 pi) and z in [-1/2, 1/2] mapped to (cos theta, sin theta, z)
/// with label 0, and a copy turned by (x, y, z) -> (z, y, -x) and shifted by 1
/// along y with label 1. Ring 1 comes first, theta-major.
Dataset generate_rings();

/// Column-wise (v - mean) / std with the population std. Zero-variance
/// columns become 0 with std recorded as 1. Metadata composes, so
/// unstandardize always returns the raw data.
Dataset standardize(const Dataset& d);
Dataset unstandardize(const Dataset& d);

Dataset subset(const Dataset& d, const std::vector<Eigen::Index>& rows);

/// Every (N / n)-th row, starting at row 0. For standardized Rings and n = 10
/// this picks 5 points from each ring.
Dataset every_kth_subset(const Dataset& d, int n);

/// CSV with a header naming x_* feature columns and y_* target columns.
/// Lines starting with '#' are comments. Throws parse on malformed content
/// (with the line number) and io when the file cannot be read.
Dataset load_csv(const std::string& path);
Dataset parse_csv(const std::string& text);

/// Writes x_0.., y_0.. columns with 17 significant digits.
void save_csv(const std::string& path, const Dataset& d);
std::string to_csv(const Dataset& d);

/// %.17g formatting used by every CSV writer.
std::string format_double(double v);

/// Long-format result table with a '#'-prefixed configuration header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void add_config(const std::string& key, const std::string& value);
  /// Cells are already formatted; the count must match the columns.
  void add_row(std::vector<std::string> cells);

  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& row(std::size_t i) const { return rows_[i]; }
  std::string str() const;
  /// Throws io when the file cannot be written.
  void write(const std::string& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::pair<std::string, std::string>> config_;
  std::vector<std::vector<std::string>> rows_;
};

void write_text_file(const std::string& path, const std::string& text);

}  // namespace bnngp
