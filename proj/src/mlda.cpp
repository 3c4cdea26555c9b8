// src/mlda.cpp
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

#include "codaa/mlda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace codaa {

std::vector<int> scale_histogram(const Eigen::VectorXd& hist, double weight) {
  if (weight < 0.0) throw std::invalid_argument("negative modality weight");
  const double total = hist.sum();
  if (!(total > 0.0)) throw std::invalid_argument("all-zero histogram");
  const long target = std::llround(weight);
  const int bins = static_cast<int>(hist.size());
  std::vector<int> out(bins, 0);
  if (target == 0) return out;

  std::vector<double> remainder(bins);
  long assigned = 0;
  for (int b = 0; b < bins; ++b) {
    const double exact = hist[b] / total * static_cast<double>(target);
    out[b] = static_cast<int>(std::floor(exact));
    remainder[b] = exact - out[b];
    assigned += out[b];
  }
  // Hand out the leftover tokens to the largest remainders; ties go to the
  // lower bin index.
  std::vector<int> order(bins);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (long i = 0; i < target - assigned; ++i) {
    out[order[i % bins]] += 1;
  }
  return out;
}

MldaSampler::MldaSampler(const ObjectHists& objects, const MldaConfig& config)
    : k_(config.categories), alpha_(config.alpha) {
  if (k_ < 1) throw std::invalid_argument("MLDA requires K >= 1");
  num_objects_ = static_cast<int>(objects.size());
  if (num_objects_ < 1) throw std::invalid_argument("MLDA requires objects");

  // Fixed modality order from the first object's keys (all objects must
  // agree; empty histograms simply contribute no tokens).
  for (const auto& [name, hist] : objects[0]) {
    modality_names_.push_back(name);
    dim_.push_back(static_cast<int>(hist.size()));
    auto it = config.beta_override.find(name);
    beta_.push_back(it == config.beta_override.end() ? config.beta
                                                     : it->second);
  }
  const int num_mod = static_cast<int>(modality_names_.size());
  for (int m = 0; m < num_mod; ++m) {
    n_mko_.emplace_back(Eigen::MatrixXi::Zero(k_, dim_[m]));
    n_mk_.emplace_back(Eigen::VectorXi::Zero(k_));
  }
  n_kd_ = Eigen::MatrixXi::Zero(k_, num_objects_);
  n_d_ = Eigen::VectorXi::Zero(num_objects_);

  for (int d = 0; d < num_objects_; ++d) {
    if (static_cast<int>(objects[d].size()) != num_mod) {
      throw std::invalid_argument("object modality sets differ");
    }
    int m = 0;
    for (const auto& [name, hist] : objects[d]) {
      if (name != modality_names_[m] ||
          static_cast<int>(hist.size()) != dim_[m]) {
        throw std::invalid_argument("object modality layout differs");
      }
      for (int b = 0; b < dim_[m]; ++b) {
        for (int c = 0; c < hist[b]; ++c) tokens_.push_back({d, m, b});
        n_d_[d] += hist[b];
      }
      ++m;
    }
    if (n_d_[d] == 0) {
      throw std::invalid_argument("object " + std::to_string(d) +
                                  " has no tokens after scaling");
    }
  }
  if (tokens_.empty()) throw std::invalid_argument("MLDA token set is empty");
  z_.assign(tokens_.size(), -1);
}

void MldaSampler::init_assignments(Rng& rng) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const auto& t = tokens_[i];
    const int k = rng.uniform_int(k_);
    z_[i] = k;
    n_mko_[t.modality](k, t.bin) += 1;
    n_mk_[t.modality][k] += 1;
    n_kd_(k, t.object) += 1;
  }
}

void MldaSampler::remove_token(std::size_t token) {
  const auto& t = tokens_[token];
  const int k = z_[token];
  if (k < 0) throw std::logic_error("token already removed");
  n_mko_[t.modality](k, t.bin) -= 1;
  n_mk_[t.modality][k] -= 1;
  n_kd_(k, t.object) -= 1;
  z_[token] = -1;
}

std::vector<double> MldaSampler::assignment_probs(std::size_t token) const {
  const auto& t = tokens_[token];
  const double beta = beta_[t.modality];
  const double dim_beta = dim_[t.modality] * beta;
  std::vector<double> p(k_);
  double total = 0.0;
  for (int k = 0; k < k_; ++k) {
    p[k] = (n_kd_(k, t.object) + alpha_) *
           (n_mko_[t.modality](k, t.bin) + beta) /
           (n_mk_[t.modality][k] + dim_beta);
    total += p[k];
  }
  for (int k = 0; k < k_; ++k) p[k] /= total;
  return p;
}

int MldaSampler::gibbs_assign(std::size_t token, Rng& rng) {
  const auto& t = tokens_[token];
  const double beta = beta_[t.modality];
  const double dim_beta = dim_[t.modality] * beta;
  double p[256];
  std::vector<double> heap;
  double* w = p;
  if (k_ > 256) {
    heap.resize(k_);
    w = heap.data();
  }
  for (int k = 0; k < k_; ++k) {
    w[k] = (n_kd_(k, t.object) + alpha_) *
           (n_mko_[t.modality](k, t.bin) + beta) /
           (n_mk_[t.modality][k] + dim_beta);
  }
  const int k = rng.discrete(std::span<const double>(w, k_));
  z_[token] = k;
  n_mko_[t.modality](k, t.bin) += 1;
  n_mk_[t.modality][k] += 1;
  n_kd_(k, t.object) += 1;
  return k;
}

void MldaSampler::sweep(Rng& rng) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    remove_token(i);
    gibbs_assign(i, rng);
  }
}

Eigen::MatrixXd MldaSampler::theta(const std::string& modality) const {
  for (std::size_t m = 0; m < modality_names_.size(); ++m) {
    if (modality_names_[m] != modality) continue;
    Eigen::MatrixXd th(k_, dim_[m]);
    const double beta = beta_[m];
    for (int k = 0; k < k_; ++k) {
      const double denom = n_mk_[m][k] + dim_[m] * beta;
      for (int b = 0; b < dim_[m]; ++b) {
        th(k, b) = (n_mko_[m](k, b) + beta) / denom;
      }
    }
    return th;
  }
  throw std::invalid_argument("unknown modality '" + modality + "'");
}

CategoryModel MldaSampler::extract() const {
  CategoryModel model;
  for (const auto& name : modality_names_) model.theta[name] = theta(name);
  model.pi = Eigen::MatrixXd(num_objects_, k_);
  for (int d = 0; d < num_objects_; ++d) {
    const double denom = n_d_[d] + k_ * alpha_;
    for (int k = 0; k < k_; ++k) {
      model.pi(d, k) = (n_kd_(k, d) + alpha_) / denom;
    }
  }
  return model;
}

void MldaSampler::check_counts() const {
  const int num_mod = static_cast<int>(modality_names_.size());
  std::vector<Eigen::MatrixXi> mko(num_mod);
  for (int m = 0; m < num_mod; ++m) mko[m] = Eigen::MatrixXi::Zero(k_, dim_[m]);
  Eigen::MatrixXi kd = Eigen::MatrixXi::Zero(k_, num_objects_);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const auto& t = tokens_[i];
    if (z_[i] < 0 || z_[i] >= k_) throw std::logic_error("unassigned token");
    mko[t.modality](z_[i], t.bin) += 1;
    kd(z_[i], t.object) += 1;
  }
  for (int m = 0; m < num_mod; ++m) {
    if (mko[m] != n_mko_[m]) throw std::logic_error("N_mko count drift");
    for (int k = 0; k < k_; ++k) {
      if (mko[m].row(k).sum() != n_mk_[m][k]) {
        throw std::logic_error("N_mk count drift");
      }
    }
  }
  if (kd != n_kd_) throw std::logic_error("N_kd count drift");
  for (int d = 0; d < num_objects_; ++d) {
    if (kd.col(d).sum() != n_d_[d]) throw std::logic_error("N_d count drift");
  }
}

CategoryModel run_mlda(const ObjectHists& objects, const MldaConfig& config,
                       std::uint64_t seed) {
  if (config.sweeps < 1) throw std::invalid_argument("MLDA sweeps must be >= 1");
  MldaSampler sampler(objects, config);
  Rng init_rng = Rng::derive(seed, Stream::kMldaInit);
  sampler.init_assignments(init_rng);
  Rng sweep_rng = Rng::derive(seed, Stream::kMldaSweep);
  for (int it = 0; it < config.sweeps; ++it) sampler.sweep(sweep_rng);
  return sampler.extract();
}

std::string CategoryModel::to_json() const {
  nlohmann::json j;
  for (const auto& [name, th] : theta) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index k = 0; k < th.rows(); ++k) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index b = 0; b < th.cols(); ++b) row.push_back(th(k, b));
      rows.push_back(std::move(row));
    }
    j["theta"][name] = std::move(rows);
  }
  nlohmann::json pis = nlohmann::json::array();
  for (Eigen::Index d = 0; d < pi.rows(); ++d) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < pi.cols(); ++k) row.push_back(pi(d, k));
    pis.push_back(std::move(row));
  }
  j["pi"] = std::move(pis);
  return j.dump();
}

}  // namespace codaa
