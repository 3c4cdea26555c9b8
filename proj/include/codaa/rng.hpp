// include/codaa/rng.hpp
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

#ifndef CODAA_RNG_HPP_
#define CODAA_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace codaa {

// Stream tags used to derive independent substreams from one master seed.
// Every sampling site in the project owes its randomness to a stream derived
// from (seed, tag, indices...), never to a shared mutable generator, so the
// results do not depend on scheduling.
enum class Stream : std::uint64_t {
  kInitParams = 1,
  kFfbs = 2,
  kAcoustic = 3,
  kLanguageModel = 4,
  kWordModel = 5,
  kSpelling = 6,
  kMldaInit = 7,
  kMldaSweep = 8,
  kSirResample = 9,
  kCategoryAssign = 10,
  kSynth = 11,
  kCandidateInit = 12,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Hashes a master seed and a key path into a substream seed.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  static Rng derive(std::uint64_t seed, Stream tag,
                    std::initializer_list<std::uint64_t> keys = {}) {
    std::uint64_t h = derive_seed(seed, {static_cast<std::uint64_t>(tag)});
    for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
    return Rng(h);
  }

  std::mt19937_64& engine() { return eng_; }

  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng_);
  }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    return std::uniform_int_distribution<int>(0, n - 1)(eng_);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    std::normal_distribution<double> d(mean, stddev);
    return d(eng_);
  }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd v(n);
    std::normal_distribution<double> d(0.0, 1.0);
    for (int i = 0; i < n; ++i) v[i] = d(eng_);
    return v;
  }

  // Gamma with shape/rate parameterization.
  double gamma(double shape, double rate) {
    std::gamma_distribution<double> d(shape, 1.0 / rate);
    return d(eng_);
  }

  double chi_squared(double dof) {
    std::chi_squared_distribution<double> d(dof);
    return d(eng_);
  }

  Eigen::VectorXd dirichlet(const Eigen::VectorXd& alpha) {
    Eigen::VectorXd v(alpha.size());
    double total = 0.0;
    for (int i = 0; i < alpha.size(); ++i) {
      v[i] = gamma(alpha[i], 1.0);
      total += v[i];
    }
    if (total <= 0.0) {
      // All-gamma-underflow fallback for very small concentrations.
      int j = uniform_int(static_cast<int>(alpha.size()));
      v.setZero();
      v[j] = 1.0;
      return v;
    }
    return v / total;
  }

  // Draws an index proportional to the (unnormalized, nonnegative) weights.
  int discrete(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::runtime_error("discrete: zero total weight");
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  // Draws an index proportional to exp(logw), stable under shifting.
  int discrete_log(std::span<const double> logw) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : logw) m = std::max(m, x);
    if (m == -std::numeric_limits<double>::infinity()) {
      throw std::runtime_error("discrete_log: all weights are -inf");
    }
    double total = 0.0;
    for (double x : logw) total += std::exp(x - m);
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < logw.size(); ++i) {
      acc += std::exp(logw[i] - m);
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(logw.size()) - 1;
  }

  // Number of occupied tables when n customers enter a CRP with mass a.
  int crt_count(int n, double a) {
    int m = 0;
    for (int l = 0; l < n; ++l) {
      if (uniform() < a / (a + l)) ++m;
    }
    return m;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace codaa

#endif  // CODAA_RNG_HPP_
