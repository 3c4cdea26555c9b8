// tests/oracles.hpp
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
//
// Brute-force reference computations used to validate the samplers. These
// deliberately avoid the library's DP/counting code paths.

#ifndef CODAA_TESTS_ORACLES_HPP_
#define CODAA_TESTS_ORACLES_HPP_

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "codaa/hdp_hlm.hpp"
#include "codaa/logmath.hpp"

namespace codaa::oracles {

// ---- Collapsed MLDA joint -------------------------------------------------

struct MldaToken {
  int object;
  int modality;
  int bin;
};

struct MldaInstance {
  std::vector<MldaToken> tokens;
  int objects = 0;
  int categories = 0;
  std::vector<int> dims;   // per modality
  std::vector<double> beta;
  double alpha = 1.0;
};

// log P(z, o) with pi and theta integrated out.
inline double collapsed_log_joint(const MldaInstance& inst,
                                  const std::vector<int>& z) {
  const int k = inst.categories;
  const int mods = static_cast<int>(inst.dims.size());
  std::vector<std::vector<int>> n_kd(k, std::vector<int>(inst.objects, 0));
  // n_mko[m][k][o]
  std::vector<std::vector<std::vector<int>>> n_mko(mods);
  for (int m = 0; m < mods; ++m) {
    n_mko[m].assign(k, std::vector<int>(inst.dims[m], 0));
  }
  std::vector<int> n_d(inst.objects, 0);
  for (std::size_t i = 0; i < inst.tokens.size(); ++i) {
    const auto& t = inst.tokens[i];
    n_kd[z[i]][t.object] += 1;
    n_mko[t.modality][z[i]][t.bin] += 1;
    n_d[t.object] += 1;
  }
  double lp = 0.0;
  for (int d = 0; d < inst.objects; ++d) {
    lp += std::lgamma(k * inst.alpha) - std::lgamma(n_d[d] + k * inst.alpha);
    for (int c = 0; c < k; ++c) {
      lp += std::lgamma(n_kd[c][d] + inst.alpha) - std::lgamma(inst.alpha);
    }
  }
  for (int m = 0; m < mods; ++m) {
    const double b = inst.beta[m];
    for (int c = 0; c < k; ++c) {
      int n_mk = 0;
      for (int o = 0; o < inst.dims[m]; ++o) n_mk += n_mko[m][c][o];
      lp += std::lgamma(inst.dims[m] * b) - std::lgamma(n_mk + inst.dims[m] * b);
      for (int o = 0; o < inst.dims[m]; ++o) {
        lp += std::lgamma(n_mko[m][c][o] + b) - std::lgamma(b);
      }
    }
  }
  return lp;
}

// Exact posterior over all K^n assignment vectors, keyed by the vector
// encoded as a base-K string.
inline std::map<std::string, double> enumerate_mlda_posterior(
    const MldaInstance& inst) {
  const int n = static_cast<int>(inst.tokens.size());
  const int k = inst.categories;
  std::vector<int> z(n, 0);
  std::vector<std::string> keys;
  std::vector<double> logw;
  for (;;) {
    std::string key;
    for (int v : z) key.push_back(static_cast<char>('0' + v));
    keys.push_back(key);
    logw.push_back(collapsed_log_joint(inst, z));
    int i = 0;
    while (i < n && ++z[i] == k) z[i++] = 0;
    if (i == n) break;
  }
  const double lz = logsumexp(logw);
  std::map<std::string, double> posterior;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    posterior[keys[i]] = std::exp(logw[i] - lz);
  }
  return posterior;
}

// ---- Brute-force segment likelihood ----------------------------------------

// Sum over every letter-duration composition of the spelling, durations in
// [1, dmax], computed directly from Gaussian/Poisson factors.
inline double segment_loglik_bruteforce(const std::vector<int>& spelling,
                                        const Eigen::MatrixXd& frames, int t1,
                                        int t2, const AcousticModel& am,
                                        int dmax) {
  const int len = static_cast<int>(spelling.size());
  const int n = t2 - t1;
  std::vector<TruncatedPoisson> dur;
  for (std::size_t j = 0; j < am.emission.size(); ++j) {
    dur.emplace_back(am.duration_rate[j], dmax);
  }
  std::vector<double> terms;
  std::vector<int> d(len, 0);
  // Recursive enumeration of compositions.
  std::function<void(int, int, double)> rec = [&](int k, int t, double acc) {
    if (k == len) {
      if (t == t2) terms.push_back(acc);
      return;
    }
    const int letter = spelling[k];
    for (int dd = 1; dd <= dmax && t + dd <= t2; ++dd) {
      double w = dur[letter](dd);
      for (int tt = t; tt < t + dd; ++tt) {
        w += am.emission[letter].loglik(frames.row(tt).transpose());
      }
      rec(k + 1, t + dd, acc + w);
    }
  };
  rec(0, t1, 0.0);
  if (terms.empty()) return kNegInf;
  return logsumexp(terms);
}

// ---- Frozen tiny instance for the sampler exactness oracle ------------------

struct TinyInstance {
  GlobalParams params;
  Eigen::MatrixXd frames;  // T x 1
};

// T=8, F=1, V=2 (spellings (0) and (0,1)), J=2, frozen parameters with
// informative frames: four near 0 then four near 2.5.
inline TinyInstance make_tiny_instance() {
  TinyInstance inst;
  HlmHyper hyper;
  hyper.letters = 2;
  hyper.words = 2;
  hyper.max_letter_duration = 4;
  hyper.niw.mu0 = Eigen::VectorXd::Zero(1);
  hyper.niw.sigma0 = Eigen::MatrixXd::Identity(1, 1);
  hyper.niw.nu0 = 6;
  inst.params.hyper = hyper;

  auto gauss = [](double mean) {
    Gaussian g;
    g.mean = Eigen::VectorXd::Constant(1, mean);
    g.cov = Eigen::MatrixXd::Identity(1, 1);
    g.finalize();
    return g;
  };
  inst.params.am.emission = {gauss(0.0), gauss(2.5)};
  inst.params.am.duration_rate = {3.0, 2.0};

  inst.params.wm.spellings = {{0}, {0, 1}};
  inst.params.wm.trans.resize(3, 2);
  inst.params.wm.trans << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5;
  inst.params.wm.base = Eigen::Vector2d(0.5, 0.5);

  inst.params.lm.trans.resize(3, 2);
  inst.params.lm.trans << 0.6, 0.4,
                          0.5, 0.5,
                          0.7, 0.3;
  inst.params.lm.base = Eigen::Vector2d(0.5, 0.5);

  inst.frames.resize(8, 1);
  inst.frames << 0.1, -0.2, 0.05, 0.3, 2.4, 2.6, 2.2, 2.5;
  return inst;
}

// ---- Total variation -------------------------------------------------------

inline double total_variation(const std::map<std::string, double>& p,
                              const std::map<std::string, double>& q) {
  double tv = 0.0;
  for (const auto& [k, v] : p) {
    auto it = q.find(k);
    tv += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : q) {
    if (!p.count(k)) tv += v;
  }
  return 0.5 * tv;
}

}  // namespace codaa::oracles

#endif  // CODAA_TESTS_ORACLES_HPP_
