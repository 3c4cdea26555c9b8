// include/codaa/logmath.hpp
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

#ifndef CODAA_LOGMATH_HPP_
#define CODAA_LOGMATH_HPP_

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace codaa {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

inline double logsumexp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline double log_poisson_pmf(int k, double lambda) {
  return k * std::log(lambda) - lambda - std::lgamma(k + 1.0);
}

// Poisson restricted to [1, dmax] and renormalized; log pmf table.
struct TruncatedPoisson {
  std::vector<double> logpmf;  // index d in [1, dmax]; logpmf[0] unused
  int dmax = 0;

  TruncatedPoisson() = default;
  TruncatedPoisson(double lambda, int dmax_in) : dmax(dmax_in) {
    logpmf.assign(dmax + 1, kNegInf);
    for (int d = 1; d <= dmax; ++d) logpmf[d] = log_poisson_pmf(d, lambda);
    double z = logsumexp(std::span<const double>(logpmf.data() + 1, dmax));
    for (int d = 1; d <= dmax; ++d) logpmf[d] -= z;
  }

  double operator()(int d) const {
    return (d >= 1 && d <= dmax) ? logpmf[d] : kNegInf;
  }
};

}  // namespace codaa

#endif  // CODAA_LOGMATH_HPP_
