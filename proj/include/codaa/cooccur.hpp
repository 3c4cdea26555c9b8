// include/codaa/cooccur.hpp
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

#ifndef CODAA_COOCCUR_HPP_
#define CODAA_COOCCUR_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "codaa/corpus.hpp"
#include "codaa/hdp_hlm.hpp"
#include "codaa/mlda.hpp"

namespace codaa {

// Sampling-importance-resampling loop coupling segmentation candidates to
// multimodal categorization: each outer iteration runs one blocked Gibbs
// step per candidate, categorizes its bag of discovered words together with
// the objects' sensory histograms, weights candidates by how well their
// words fit the categories, and resamples.

enum class ScheduleMode { kFixed, kIncrease, kDecrease };

struct WeightSchedule {
  ScheduleMode mode = ScheduleMode::kFixed;
  double fixed_value = 200.0;
};

// Word-modality weight at outer iteration t.
double word_schedule(int t, const WeightSchedule& schedule);

enum class SirMode { kUnigramRescale, kMutualInformation };

struct RunConfig {
  int candidates = 10;       // Q
  int outer_iterations = 100;
  MldaConfig mlda;
  std::map<std::string, double> modality_weights;  // non-word, fixed
  WeightSchedule word_weight;
  SirMode sir_mode = SirMode::kUnigramRescale;
  // Eq. weight denominator uses the plain sum over categories of theta; this
  // flag switches to the pi-weighted mixture for ablation.
  bool ur_pi_weighted_denominator = false;
  HlmHyper hlm;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

// One word token of a candidate's segmentation, pooled per object.
struct WordToken {
  int object = 0;
  int word = 0;
};

struct Candidate {
  GlobalParams params;
  std::vector<WordSequence> sequences;
  CategoryModel categories;
  std::vector<WordToken> tokens;
  std::vector<int> token_category;  // sampled k-hat per token
  double joint_loglik = 0.0;
  double weight_raw = 0.0;   // log scale for UR, plain for MI
  double weight_norm = 0.0;
};

// Raw per-object word-token counts over V bins.
std::vector<std::vector<int>> raw_word_counts(
    const std::vector<WordSequence>& seqs, const Corpus& corpus, int words);

// Scaled per-object word histograms; empty result when word_weight is 0
// (word modality excluded).
std::vector<std::vector<int>> bag_of_words(
    const std::vector<WordSequence>& seqs, const Corpus& corpus, int words,
    double word_weight);

std::vector<WordToken> collect_word_tokens(
    const std::vector<WordSequence>& seqs, const Corpus& corpus);

// Draws a category for every word token from theta_w and pi.
std::vector<int> assign_word_categories(const std::vector<WordToken>& tokens,
                                        const Eigen::MatrixXd& theta_w,
                                        const Eigen::MatrixXd& pi, Rng& rng);

// Log candidate weight: sum over tokens of log(theta[k-hat][word] /
// sum_k theta[k][word]); with pi_weighted, the denominator mixes theta
// columns by pi[d].
double candidate_weight_ur(const std::vector<WordToken>& tokens,
                           const std::vector<int>& token_category,
                           const Eigen::MatrixXd& theta_w,
                           const Eigen::MatrixXd& pi, bool pi_weighted);

// Plug-in sample mutual information between word identity and assigned
// category; 0 when fewer than 2 tokens.
double candidate_weight_mi(const std::vector<WordToken>& tokens,
                           const std::vector<int>& token_category);

// Normalizes raw weights (exponentiating from log space for UR) and draws Q
// candidate indices i.i.d. from the normalized weights. All-zero weights
// fall back to uniform with `degenerate` set.
std::vector<int> normalize_and_resample(const std::vector<double>& raw,
                                        SirMode mode, int draws, Rng& rng,
                                        std::vector<double>* normalized,
                                        bool* degenerate = nullptr);

struct IterationTrace {
  int iteration = 0;
  int candidate = 0;
  double word_weight = 0.0;
  double weight_raw = 0.0;
  double weight_norm = 0.0;
  int copies = 0;  // times resampled into the next iteration
  bool best = false;
  double joint_loglik = 0.0;
  std::optional<double> word_ari, letter_ari, category_ari;
};

struct RunResult {
  GlobalParams final_params;
  std::vector<WordSequence> final_sequences;
  CategoryModel final_categories;
  std::vector<int> best_per_iteration;
  std::vector<IterationTrace> trace;
};

// Called with the best candidate after each iteration (for state dumps).
using IterationCallback =
    std::function<void(int iteration, const Candidate& best)>;

RunResult run_cooccurrence_daa(const Corpus& corpus, const RunConfig& config,
                               const IterationCallback& callback = nullptr);

}  // namespace codaa

#endif  // CODAA_COOCCUR_HPP_
