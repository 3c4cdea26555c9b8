// src/csv.cpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "codaa/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace codaa {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  double v = 0.0;
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc()) {
    throw std::runtime_error("malformed number: '" + s + "'");
  }
  return v;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty matrix file " + path.string());
  auto first = split_line(lines[0]);
  Eigen::MatrixXd m(lines.size(), first.size());
  for (std::size_t r = 0; r < lines.size(); ++r) {
    auto cells = split_line(lines[r]);
    if (cells.size() != first.size()) {
      throw std::runtime_error("ragged row " + std::to_string(r) + " in " +
                               path.string());
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      m(r, c) = parse_double(cells[c]);
    }
  }
  return m;
}

void write_matrix_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

std::vector<std::vector<int>> read_int_csv(const std::filesystem::path& path,
                                           int columns) {
  auto lines = read_lines(path);
  std::vector<std::vector<int>> rows;
  rows.reserve(lines.size());
  for (std::size_t r = 0; r < lines.size(); ++r) {
    auto cells = split_line(lines[r]);
    if (static_cast<int>(cells.size()) != columns) {
      throw std::runtime_error("expected " + std::to_string(columns) +
                               " columns at row " + std::to_string(r) +
                               " in " + path.string());
    }
    std::vector<int> row(columns);
    for (int c = 0; c < columns; ++c) {
      row[c] = static_cast<int>(std::stol(cells[c]));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_int_csv(const std::filesystem::path& path,
                   const std::vector<std::vector<int>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << row[c];
    }
    out << '\n';
  }
}

}  // namespace codaa
