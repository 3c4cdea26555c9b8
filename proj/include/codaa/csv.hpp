// include/codaa/csv.hpp
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

#ifndef CODAA_CSV_HPP_
#define CODAA_CSV_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace codaa {

// Shortest round-trippable decimal rendering; locale independent.
std::string format_double(double v);

// Locale-independent parse; throws std::runtime_error on malformed input.
double parse_double(const std::string& s);

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& m);

// Integer-valued CSV with a fixed number of columns per row, no header.
std::vector<std::vector<int>> read_int_csv(const std::filesystem::path& path,
                                           int columns);
void write_int_csv(const std::filesystem::path& path,
                   const std::vector<std::vector<int>>& rows);

}  // namespace codaa

#endif  // CODAA_CSV_HPP_
