// tests/test_eval.cc
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "codaa/eval.hpp"

using namespace codaa;

namespace {

std::vector<int> rand_labels(std::mt19937& rng, int n, int k) {
  std::uniform_int_distribution<int> d(0, k - 1);
  std::vector<int> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Relabels through a random bijection on the label values.
std::vector<int> relabel(std::mt19937& rng, const std::vector<int>& v) {
  std::map<int, int> seen;
  for (int x : v) seen.emplace(x, 0);
  std::vector<int> targets;
  for (auto& [x, _] : seen) targets.push_back(x + 1000);
  std::shuffle(targets.begin(), targets.end(), rng);
  int i = 0;
  for (auto& [x, t] : seen) t = targets[i++];
  std::vector<int> out;
  for (int x : v) out.push_back(seen[x]);
  return out;
}

// Exhaustive best-mapping accuracy for small cluster counts.
double acc_bruteforce(const std::vector<int>& pred,
                      const std::vector<int>& truth) {
  std::map<int, int> pid, tid;
  for (int x : pred) pid.emplace(x, static_cast<int>(pid.size()));
  for (int x : truth) tid.emplace(x, static_cast<int>(tid.size()));
  const int kp = static_cast<int>(pid.size());
  const int kt = static_cast<int>(tid.size());
  std::vector<int> perm(std::max(kp, kt));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0;
  do {
    int hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (perm[pid[pred[i]]] == tid[truth[i]]) ++hits;
    }
    best = std::max(best, double(hits));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / pred.size();
}

}  // namespace

TEST_CASE("nmi golden values") {
  std::vector<int> a = {0, 0, 1, 1};
  CHECK(nmi(a, a) == doctest::Approx(1.0));
  std::vector<int> ones = {5, 5, 5, 5};
  std::vector<int> two = {0, 1, 0, 1};
  CHECK(nmi(ones, two) == doctest::Approx(0.0));
  // Independent partitions have zero mutual information.
  std::vector<int> b = {0, 1, 0, 1};
  CHECK(nmi(a, b) == doctest::Approx(0.0));
  // Both trivial: defined as 1.
  CHECK(nmi(ones, ones) == doctest::Approx(1.0));
}

TEST_CASE("ari golden values") {
  std::vector<int> a = {0, 0, 1, 1};
  std::vector<int> swapped = {1, 1, 0, 0};
  CHECK(ari(a, swapped) == doctest::Approx(1.0));
  CHECK(ari(a, a) == doctest::Approx(1.0));
  std::vector<int> b = {0, 1, 0, 1};
  CHECK(ari(a, b) == doctest::Approx(-0.5));
}

TEST_CASE("acc golden values") {
  std::vector<int> a = {0, 0, 1};
  std::vector<int> b = {1, 1, 0};
  CHECK(acc(a, b) == doctest::Approx(1.0));
  std::vector<int> p = {0, 1, 2, 2};
  std::vector<int> t = {0, 0, 1, 1};
  CHECK(acc(p, t) == doctest::Approx(0.75));
  CHECK(acc(t, t) == doctest::Approx(1.0));
}

TEST_CASE("errors on malformed input") {
  std::vector<int> a = {0, 1};
  std::vector<int> b = {0, 1, 2};
  CHECK_THROWS_AS(nmi(a, b), std::invalid_argument);
  CHECK_THROWS_AS(ari(a, b), std::invalid_argument);
  CHECK_THROWS_AS(acc(a, b), std::invalid_argument);
  std::vector<int> one = {0};
  CHECK_THROWS_AS(ari(one, one), std::invalid_argument);
}

TEST_CASE("relabeling invariance") {
  std::mt19937 rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    auto p = rand_labels(rng, 60, 4);
    auto t = rand_labels(rng, 60, 3);
    auto p2 = relabel(rng, p);
    auto t2 = relabel(rng, t);
    CHECK(nmi(p2, t2) == doctest::Approx(nmi(p, t)).epsilon(1e-12));
    CHECK(ari(p2, t2) == doctest::Approx(ari(p, t)).epsilon(1e-12));
    CHECK(acc(p2, t2) == doctest::Approx(acc(p, t)).epsilon(1e-12));
  }
}

TEST_CASE("acc matches brute-force mapping for small K") {
  std::mt19937 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    auto p = rand_labels(rng, 40, 2 + rep % 5);
    auto t = rand_labels(rng, 40, 2 + (rep + 2) % 5);
    CHECK(acc(p, t) == doctest::Approx(acc_bruteforce(p, t)).epsilon(1e-12));
  }
}

TEST_CASE("acc lower bound and random-partition ari near zero") {
  std::mt19937 rng(23);
  double ari_sum = 0.0;
  const int trials = 1000;
  for (int rep = 0; rep < trials; ++rep) {
    auto p = rand_labels(rng, 100, 4);
    auto t = rand_labels(rng, 100, 4);
    CHECK(acc(p, t) >= 1.0 / 4 - 1e-12);
    ari_sum += ari(p, t);
  }
  CHECK(std::abs(ari_sum / trials) < 0.05);
}

TEST_CASE("hungarian on rectangular matrices") {
  Eigen::MatrixXd score(2, 3);
  score << 5, 1, 0,
           0, 2, 7;
  auto assign = detail::hungarian_max(score);
  CHECK(assign[0] == 0);
  CHECK(assign[1] == 2);

  Eigen::MatrixXd tall(3, 2);
  tall << 5, 1,
          4, 9,
          8, 2;
  auto a2 = detail::hungarian_max(tall);
  // Best: row 1 -> col 1 (9), row 2 -> col 0 (8); row 0 unmatched.
  CHECK(a2[0] == -1);
  CHECK(a2[1] == 1);
  CHECK(a2[2] == 0);
}
