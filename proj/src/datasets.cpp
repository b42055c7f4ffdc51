#include "bnngp/datasets.hpp"

#include "bnngp/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bnngp {

Dataset::Dataset(Matrix X_, Matrix Y_) : X(std::move(X_)), Y(std::move(Y_)) {
  x_mean = Vector::Zero(X.cols());
  x_std = Vector::Ones(X.cols());
  y_mean = Vector::Zero(Y.cols());
  y_std = Vector::Ones(Y.cols());
}

void Dataset::validate() const {
  if (X.rows() < 1 || X.cols() < 1 || Y.cols() < 1)
    throw Error(ErrorKind::InvalidInput, "dataset needs N, M, L >= 1");
  if (X.rows() != Y.rows()) throw Error(ErrorKind::InvalidInput, "X and Y row counts differ");
  if (!X.allFinite() || !Y.allFinite()) throw Error(ErrorKind::InvalidInput, "dataset has non-finite values");
  if (x_mean.size() != X.cols() || x_std.size() != X.cols() || y_mean.size() != Y.cols() ||
      y_std.size() != Y.cols())
    throw Error(ErrorKind::InvalidInput, "standardization metadata has the wrong size");
}

Dataset generate_rings() {
  constexpr int n_theta = 12, n_z = 5, per_ring = n_theta * n_z;
  Matrix X(2 * per_ring, 3);
  Matrix Y(2 * per_ring, 1);
  int row = 0;
  for (int i = 0; i < n_theta; ++i) {
    const double theta = 2.0 * M_PI * i / n_theta;
    for (int j = 0; j < n_z; ++j) {
      const double z = -0.5 + j / 4.0;
      X.row(row) << std::cos(theta), std::sin(theta), z;
      Y(row, 0) = 0.0;
      ++row;
    }
  }
  for (int k = 0; k < per_ring; ++k) {
    const double x = X(k, 0), y = X(k, 1), z = X(k, 2);
    X.row(per_ring + k) << z, y + 1.0, -x;
    Y(per_ring + k, 0) = 1.0;
  }
  return Dataset(std::move(X), std::move(Y));
}

namespace {

// Standardizes the columns of M in place; returns (mean, std) per column.
std::pair<Vector, Vector> standardize_columns(Matrix& M) {
  const Eigen::Index n = M.rows();
  Vector mean(M.cols()), sd(M.cols());
  for (Eigen::Index c = 0; c < M.cols(); ++c) {
    const double mu = M.col(c).mean();
    const double var = (M.col(c).array() - mu).square().sum() / static_cast<double>(n);
    const double s = std::sqrt(var);
    mean(c) = mu;
    if (s > 0.0) {
      sd(c) = s;
      M.col(c) = (M.col(c).array() - mu) / s;
    } else {
      sd(c) = 1.0;
      M.col(c).setZero();
    }
  }
  return {mean, sd};
}

}  // namespace

Dataset standardize(const Dataset& d) {
  d.validate();
  if (d.size() < 2) throw Error(ErrorKind::InvalidInput, "standardize needs at least two rows");
  Dataset out = d;
  const auto [xm, xs] = standardize_columns(out.X);
  const auto [ym, ys] = standardize_columns(out.Y);
  // stored = (prev - m) / s and raw = prev * std + mean
  out.x_mean = d.x_mean.array() + d.x_std.array() * xm.array();
  out.x_std = d.x_std.array() * xs.array();
  out.y_mean = d.y_mean.array() + d.y_std.array() * ym.array();
  out.y_std = d.y_std.array() * ys.array();
  return out;
}

Dataset unstandardize(const Dataset& d) {
  d.validate();
  Matrix X = (d.X.array().rowwise() * d.x_std.transpose().array()).rowwise() + d.x_mean.transpose().array();
  Matrix Y = (d.Y.array().rowwise() * d.y_std.transpose().array()).rowwise() + d.y_mean.transpose().array();
  return Dataset(std::move(X), std::move(Y));
}

Dataset subset(const Dataset& d, const std::vector<Eigen::Index>& rows) {
  if (rows.empty()) throw Error(ErrorKind::InvalidInput, "empty subset");
  Dataset out = d;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), d.X.cols());
  out.Y.resize(static_cast<Eigen::Index>(rows.size()), d.Y.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= d.size()) throw Error(ErrorKind::InvalidInput, "subset row out of range");
    out.X.row(static_cast<Eigen::Index>(i)) = d.X.row(rows[i]);
    out.Y.row(static_cast<Eigen::Index>(i)) = d.Y.row(rows[i]);
  }
  return out;
}

Dataset every_kth_subset(const Dataset& d, int n) {
  if (n < 1 || n > d.size()) throw Error(ErrorKind::InvalidInput, "subset size out of range");
  const Eigen::Index step = d.size() / n;
  std::vector<Eigen::Index> rows;
  for (int i = 0; i < n; ++i) rows.push_back(i * step);
  return subset(d, rows);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Error parse_error(int line, const std::string& what) {
  return Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

Dataset parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<int> x_cols, y_cols;
  std::size_t n_cols = 0;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = split_commas(t);
    if (!have_header) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const std::string name = trim(cells[c]);
        if (name.rfind("x_", 0) == 0)
          x_cols.push_back(static_cast<int>(c));
        else if (name.rfind("y_", 0) == 0)
          y_cols.push_back(static_cast<int>(c));
        else
          throw parse_error(line_no, "column '" + name + "' is neither x_* nor y_*");
      }
      if (x_cols.empty() || y_cols.empty()) throw parse_error(line_no, "header needs x_* and y_* columns");
      n_cols = cells.size();
      have_header = true;
      continue;
    }
    if (cells.size() != n_cols)
      throw parse_error(line_no, "expected " + std::to_string(n_cols) + " cells, found " +
                                     std::to_string(cells.size()));
    std::vector<double> values(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
      const std::string cell = trim(cells[c]);
      const char* first = cell.data();
      const char* last = first + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, values[c]);
      if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(values[c]))
        throw parse_error(line_no, "cell '" + cell + "' is not a finite number");
    }
    rows.push_back(std::move(values));
  }
  if (!have_header) throw parse_error(line_no, "missing header row");
  if (rows.empty()) throw parse_error(line_no, "no data rows");
  const auto N = static_cast<Eigen::Index>(rows.size());
  Matrix X(N, static_cast<Eigen::Index>(x_cols.size()));
  Matrix Y(N, static_cast<Eigen::Index>(y_cols.size()));
  for (Eigen::Index r = 0; r < N; ++r) {
    for (std::size_t k = 0; k < x_cols.size(); ++k) X(r, static_cast<Eigen::Index>(k)) = rows[r][x_cols[k]];
    for (std::size_t k = 0; k < y_cols.size(); ++k) Y(r, static_cast<Eigen::Index>(k)) = rows[r][y_cols[k]];
  }
  return Dataset(std::move(X), std::move(Y));
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string to_csv(const Dataset& d) {
  d.validate();
  std::string out;
  for (Eigen::Index c = 0; c < d.X.cols(); ++c) out += (c ? ",x_" : "x_") + std::to_string(c);
  for (Eigen::Index c = 0; c < d.Y.cols(); ++c) out += ",y_" + std::to_string(c);
  out += '\n';
  for (Eigen::Index r = 0; r < d.size(); ++r) {
    for (Eigen::Index c = 0; c < d.X.cols(); ++c) out += (c ? "," : "") + format_double(d.X(r, c));
    for (Eigen::Index c = 0; c < d.Y.cols(); ++c) out += "," + format_double(d.Y(r, c));
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write to " + path + " failed");
}

void save_csv(const std::string& path, const Dataset& d) { write_text_file(path, to_csv(d)); }

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_config(const std::string& key, const std::string& value) { config_.emplace_back(key, value); }

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size())
    throw Error(ErrorKind::InvalidInput, "row has " + std::to_string(cells.size()) + " cells, table has " +
                                             std::to_string(columns_.size()) + " columns");
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::string out;
  for (const auto& [k, v] : config_) out += "# " + k + " = " + v + "\n";
  for (std::size_t c = 0; c < columns_.size(); ++c) out += (c ? "," : "") + columns_[c];
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + row[c];
    out += '\n';
  }
  return out;
}

void CsvTable::write(const std::string& path) const { write_text_file(path, str()); }

}  // namespace bnngp
