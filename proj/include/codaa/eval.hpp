// include/codaa/eval.hpp
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

#ifndef CODAA_EVAL_HPP_
#define CODAA_EVAL_HPP_

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace codaa {

// Clustering agreement metrics between two integer labelings of the same
// items. Labels may be any integers; no contiguity is assumed. All three are
// invariant under relabeling bijections of either side.

// Mutual information normalized by the arithmetic mean of the entropies
// (natural log). Both-partitions-trivial is defined as 1.
double nmi(std::span<const int> predicted, std::span<const int> truth);

// Hubert-Arabie adjusted Rand index.
double ari(std::span<const int> predicted, std::span<const int> truth);

// Best-match accuracy: maximum confusion-matrix trace over one-to-one cluster
// relabelings (exact rectangular assignment), divided by n.
double acc(std::span<const int> predicted, std::span<const int> truth);

namespace detail {
// Exact maximum-score assignment on a rectangular score matrix; returns, for
// each row, the assigned column or -1. Unassigned rows/columns score 0.
std::vector<int> hungarian_max(const Eigen::MatrixXd& score);
}  // namespace detail

}  // namespace codaa

#endif  // CODAA_EVAL_HPP_
