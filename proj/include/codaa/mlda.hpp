// include/codaa/mlda.hpp
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

#ifndef CODAA_MLDA_HPP_
#define CODAA_MLDA_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "codaa/rng.hpp"

namespace codaa {

// Multimodal LDA over per-object, per-modality histograms of discrete
// tokens. Tokens in every modality of one object share the object's category
// mixture; each (modality, category) pair owns a bin distribution.

struct MldaConfig {
  int categories = 7;     // K
  double alpha = 7.1;     // category mixture concentration
  double beta = 0.1;      // shared bin smoothing
  // Optional per-modality beta; falls back to `beta` when a name is absent.
  std::map<std::string, double> beta_override;
  int sweeps = 1000;
};

struct CategoryModel {
  // modality -> K x Dim(m); row k is the bin distribution of category k.
  std::map<std::string, Eigen::MatrixXd> theta;
  // D x K; row d is object d's category mixture.
  Eigen::MatrixXd pi;

  std::string to_json() const;  // category-major dump consumed by reporting
};

// Normalizes, scales by the modality weight, and rounds to integer token
// multiplicities with a largest-remainder rule; the total equals
// round(weight) and each bin is within one token of its exact share.
// Throws std::invalid_argument on an all-zero histogram or negative weight.
std::vector<int> scale_histogram(const Eigen::VectorXd& hist, double weight);

// One integer histogram per modality per object.
using ObjectHists = std::vector<std::map<std::string, std::vector<int>>>;

class MldaSampler {
 public:
  MldaSampler(const ObjectHists& objects, const MldaConfig& config);

  std::size_t num_tokens() const { return tokens_.size(); }
  int num_objects() const { return num_objects_; }

  // Uniform random initial assignment of every token.
  void init_assignments(Rng& rng);

  // Removes the token's current assignment from all counts.
  void remove_token(std::size_t token);

  // Samples a category for a token whose counts are currently removed, and
  // re-increments the counts at the sampled category. Returns the category.
  int gibbs_assign(std::size_t token, Rng& rng);

  // Exact conditional distribution used by gibbs_assign (token removed).
  std::vector<double> assignment_probs(std::size_t token) const;

  // One full sweep over all tokens in fixed order.
  void sweep(Rng& rng);

  Eigen::MatrixXd theta(const std::string& modality) const;
  CategoryModel extract() const;

  const std::vector<int>& assignments() const { return z_; }

  // Verifies that all derived counts equal their definitions; throws on
  // mismatch. Meant for tests.
  void check_counts() const;

 private:
  struct Token {
    int object;
    int modality;
    int bin;
  };

  int k_ = 0;
  double alpha_ = 0;
  int num_objects_ = 0;
  std::vector<std::string> modality_names_;
  std::vector<double> beta_;           // per modality
  std::vector<int> dim_;               // per modality
  std::vector<Token> tokens_;
  std::vector<int> z_;                 // per-token assignment, -1 = removed
  std::vector<Eigen::MatrixXi> n_mko_; // per modality: K x Dim
  Eigen::MatrixXi n_kd_;               // K x D
  std::vector<Eigen::VectorXi> n_mk_;  // per modality: K
  Eigen::VectorXi n_d_;                // per object token totals (fixed)
};

// Runs `config.sweeps` collapsed Gibbs sweeps from a random initialization
// and extracts the posterior-mean category model. Deterministic given seed.
CategoryModel run_mlda(const ObjectHists& objects, const MldaConfig& config,
                       std::uint64_t seed);

}  // namespace codaa

#endif  // CODAA_MLDA_HPP_
