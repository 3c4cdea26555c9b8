// src/eval.cpp
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

#include "codaa/eval.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace codaa {

namespace {

struct Contingency {
  Eigen::MatrixXd counts;  // rows: predicted clusters, cols: truth clusters
  Eigen::VectorXd row_sums, col_sums;
  double n = 0;
};

Contingency contingency(std::span<const int> predicted,
                        std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("label arrays have different lengths");
  }
  if (predicted.empty()) {
    throw std::invalid_argument("label arrays are empty");
  }
  std::map<int, int> pid, tid;
  for (int x : predicted) pid.emplace(x, static_cast<int>(pid.size()));
  for (int x : truth) tid.emplace(x, static_cast<int>(tid.size()));
  Contingency c;
  c.counts = Eigen::MatrixXd::Zero(pid.size(), tid.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    c.counts(pid[predicted[i]], tid[truth[i]]) += 1.0;
  }
  c.row_sums = c.counts.rowwise().sum();
  c.col_sums = c.counts.colwise().sum();
  c.n = static_cast<double>(predicted.size());
  return c;
}

double entropy(const Eigen::VectorXd& counts, double n) {
  double h = 0.0;
  for (int i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) {
      const double p = counts[i] / n;
      h -= p * std::log(p);
    }
  }
  return h;
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

double nmi(std::span<const int> predicted, std::span<const int> truth) {
  const Contingency c = contingency(predicted, truth);
  const double hu = entropy(c.row_sums, c.n);
  const double hv = entropy(c.col_sums, c.n);
  if (hu == 0.0 && hv == 0.0) return 1.0;
  double mi = 0.0;
  for (int i = 0; i < c.counts.rows(); ++i) {
    for (int j = 0; j < c.counts.cols(); ++j) {
      const double nij = c.counts(i, j);
      if (nij > 0) {
        mi += (nij / c.n) *
              std::log(nij * c.n / (c.row_sums[i] * c.col_sums[j]));
      }
    }
  }
  if (mi < 0.0) mi = 0.0;  // guard tiny negative round-off
  return mi / (0.5 * (hu + hv));
}

double ari(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() < 2) {
    throw std::invalid_argument("ari requires at least 2 items");
  }
  const Contingency c = contingency(predicted, truth);
  double index = 0.0;
  for (int i = 0; i < c.counts.rows(); ++i) {
    for (int j = 0; j < c.counts.cols(); ++j) {
      index += choose2(c.counts(i, j));
    }
  }
  double sum_rows = 0.0, sum_cols = 0.0;
  for (int i = 0; i < c.row_sums.size(); ++i) sum_rows += choose2(c.row_sums[i]);
  for (int j = 0; j < c.col_sums.size(); ++j) sum_cols += choose2(c.col_sums[j]);
  const double expected = sum_rows * sum_cols / choose2(c.n);
  const double maximum = 0.5 * (sum_rows + sum_cols);
  const double denom = maximum - expected;
  if (std::abs(denom) < 1e-12) return 1.0;  // both partitions trivial
  return (index - expected) / denom;
}

double acc(std::span<const int> predicted, std::span<const int> truth) {
  const Contingency c = contingency(predicted, truth);
  const auto assign = detail::hungarian_max(c.counts);
  double matched = 0.0;
  for (int i = 0; i < c.counts.rows(); ++i) {
    if (assign[i] >= 0) matched += c.counts(i, assign[i]);
  }
  return matched / c.n;
}

namespace detail {

// Min-cost assignment with potentials on an n x m matrix, n <= m.
// Returns column assigned to each row.
static std::vector<int> assign_min(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

std::vector<int> hungarian_max(const Eigen::MatrixXd& score) {
  const int rows = static_cast<int>(score.rows());
  const int cols = static_cast<int>(score.cols());
  if (rows <= cols) {
    return assign_min(-score);
  }
  // Transpose so the matched side is the smaller one, then invert the map.
  const auto col_to_row = assign_min(Eigen::MatrixXd(-score.transpose()));
  std::vector<int> row_to_col(rows, -1);
  for (int j = 0; j < cols; ++j) {
    if (col_to_row[j] >= 0) row_to_col[col_to_row[j]] = j;
  }
  return row_to_col;
}

}  // namespace detail

}  // namespace codaa
