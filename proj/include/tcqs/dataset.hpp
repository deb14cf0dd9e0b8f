#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcqs {

struct Dataset {
  Eigen::MatrixXd x;                 // n x p predictors
  Eigen::VectorXd y;                 // n responses
  std::vector<std::string> names;    // p predictor column names
  std::string response_name;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
};

inline void validate_dataset(const Dataset& d) {
  if (d.x.rows() != d.y.size())
    throw std::invalid_argument("dataset: predictor rows and response length differ");
  if (d.x.rows() < 2) throw std::invalid_argument("dataset: need at least 2 rows");
  if (d.x.cols() < 1) throw std::invalid_argument("dataset: need at least 1 predictor");
  if (d.names.size() != static_cast<std::size_t>(d.x.cols()))
    throw std::invalid_argument("dataset: column name count mismatch");
  if (!d.x.allFinite() || !d.y.allFinite())
    throw std::invalid_argument("dataset: non-finite entries");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

inline double parse_cell(const std::string& cell, std::size_t row,
                         const std::string& col) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != cell.size() || cell.empty())
    throw std::runtime_error("csv parse error at row " + std::to_string(row) +
                             ", column '" + col + "': not a number: '" + cell + "'");
  return v;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace detail

// Comma-delimited with a mandatory header row. `response_col` empty selects the
// last column as the response.
inline Dataset load_dataset(const std::string& path, const std::string& response_col = "") {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
  const auto header = detail::split_csv_line(detail::strip_cr(line));
  if (header.size() < 2)
    throw std::runtime_error("csv header needs at least 2 columns: " + path);

  std::size_t resp_idx = header.size() - 1;
  if (!response_col.empty()) {
    bool found = false;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == response_col) {
        resp_idx = j;
        found = true;
        break;
      }
    }
    if (!found)
      throw std::runtime_error("response column '" + response_col +
                               "' not found in " + path);
  }

  std::vector<std::vector<double>> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    const std::string stripped = detail::strip_cr(line);
    if (stripped.empty()) continue;
    const auto cells = detail::split_csv_line(stripped);
    if (cells.size() != header.size())
      throw std::runtime_error("csv parse error at row " + std::to_string(row_no) +
                               ": expected " + std::to_string(header.size()) +
                               " fields, got " + std::to_string(cells.size()));
    std::vector<double> vals(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j)
      vals[j] = detail::parse_cell(cells[j], row_no, header[j]);
    rows.push_back(std::move(vals));
  }
  if (rows.size() < 2)
    throw std::runtime_error("csv needs at least 2 data rows: " + path);

  Dataset d;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(header.size() - 1);
  d.x.resize(n, p);
  d.y.resize(n);
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != resp_idx) d.names.push_back(header[j]);
  d.response_name = header[resp_idx];
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index k = 0;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == resp_idx)
        d.y[i] = rows[static_cast<std::size_t>(i)][j];
      else
        d.x(i, k++) = rows[static_cast<std::size_t>(i)][j];
    }
  }
  validate_dataset(d);
  return d;
}

// All file output goes through a temp-file-plus-rename so readers never see a
// partially written result.
inline void atomic_write_text(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

inline void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                             const std::vector<std::string>& headers) {
  if (headers.size() != static_cast<std::size_t>(m.cols()))
    throw std::invalid_argument("write_matrix_csv: header count mismatch");
  std::string out;
  for (std::size_t j = 0; j < headers.size(); ++j) {
    if (j) out += ',';
    out += headers[j];
  }
  out += '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += detail::format_double(m(i, j));
    }
    out += '\n';
  }
  atomic_write_text(path, out);
}

// Loads a numeric matrix (basis files, predictor blocks) with its header names.
inline std::pair<Eigen::MatrixXd, std::vector<std::string>> load_matrix_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
  const auto header = detail::split_csv_line(detail::strip_cr(line));
  std::vector<std::vector<double>> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    const std::string stripped = detail::strip_cr(line);
    if (stripped.empty()) continue;
    const auto cells = detail::split_csv_line(stripped);
    if (cells.size() != header.size())
      throw std::runtime_error("csv parse error at row " + std::to_string(row_no) +
                               ": expected " + std::to_string(header.size()) +
                               " fields, got " + std::to_string(cells.size()));
    std::vector<double> vals(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j)
      vals[j] = detail::parse_cell(cells[j], row_no, header[j]);
    rows.push_back(std::move(vals));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(header.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return {m, header};
}

inline void save_dataset_csv(const std::string& path, const Dataset& d) {
  validate_dataset(d);
  std::string out;
  for (const auto& nm : d.names) {
    out += nm;
    out += ',';
  }
  out += d.response_name.empty() ? "y" : d.response_name;
  out += '\n';
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    for (Eigen::Index j = 0; j < d.p(); ++j) {
      out += detail::format_double(d.x(i, j));
      out += ',';
    }
    out += detail::format_double(d.y[i]);
    out += '\n';
  }
  atomic_write_text(path, out);
}

}  // namespace tcqs
