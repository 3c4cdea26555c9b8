// include/codaa/hdp_hlm.hpp
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

#ifndef CODAA_HDP_HLM_HPP_
#define CODAA_HDP_HLM_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "codaa/logmath.hpp"
#include "codaa/rng.hpp"
#include "codaa/word_sequence.hpp"

namespace codaa {

// Weak-limit hierarchical word/letter model over continuous feature
// sequences: a word bigram over a truncated dictionary, per-word letter
// spellings drawn from a letter bigram, per-letter Gaussian emissions with
// Poisson segment durations. Blocked Gibbs inference alternates exact
// segmentation draws (semi-Markov forward-backward over word/letter states)
// with conjugate resamples of all global parameters.

struct NiwParams {
  Eigen::VectorXd mu0;
  Eigen::MatrixXd sigma0;
  double kappa0 = 0.01;
  double nu0 = 0.0;  // must exceed feature_dim - 1
};

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  // Cached Cholesky factor and normalization; call finalize() after any
  // change to mean/cov.
  Eigen::MatrixXd chol;
  double log_norm = 0.0;

  void finalize();
  double loglik(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  // Log density of every row of `frames`.
  Eigen::VectorXd loglik_rows(const Eigen::MatrixXd& frames) const;
};

struct AcousticModel {
  std::vector<Gaussian> emission;     // one per letter
  std::vector<double> duration_rate;  // Poisson rate per letter
};

struct WordModel {
  std::vector<std::vector<int>> spellings;  // V spellings over [0, J)
  Eigen::MatrixXd trans;  // (J+1) x J; row 0 is the word-start state
  Eigen::VectorXd base;   // shared letter base measure
};

struct LanguageModel {
  Eigen::MatrixXd trans;  // (V+1) x V; row 0 is the sentence-start state
  Eigen::VectorXd base;   // shared word base measure
};

enum class ArticulationMode { kDoubleArticulation, kFlatHsmm };
enum class SpellingResampleRule { kRedecode, kCopy };

struct HlmHyper {
  int letters = 50;  // J truncation
  int words = 50;    // V truncation
  int max_letter_duration = 40;
  int max_spelling_len = 8;
  double mean_spelling_len = 3.0;
  NiwParams niw;  // mu0/sigma0 default to 0/I at init when left empty
  double duration_shape0 = 200.0;  // Gamma prior on Poisson rates
  double duration_rate0 = 10.0;
  double alpha_lm = 10.0, gamma_lm = 10.0;
  double alpha_wm = 10.0, gamma_wm = 10.0;
  ArticulationMode mode = ArticulationMode::kDoubleArticulation;
  SpellingResampleRule spelling_rule = SpellingResampleRule::kRedecode;
  int max_utterance_frames = 4000;
};

struct GlobalParams {
  HlmHyper hyper;
  AcousticModel am;
  WordModel wm;
  LanguageModel lm;

  int num_letters() const { return static_cast<int>(am.emission.size()); }
  int num_words() const { return static_cast<int>(wm.spellings.size()); }
  std::string to_json() const;
};

// Draws all global parameters from their priors. In flat mode the dictionary
// collapses to one single-letter spelling per word with J = V.
GlobalParams init_params(const HlmHyper& hyper, int feature_dim,
                         std::uint64_t seed);

// log P(y[t1:t2) | word): sum over all letter-duration compositions of the
// word's spelling, inner forward DP over (letter position, frames consumed).
// Returns -inf when the segment is shorter than the spelling.
double segment_loglik(int word, const Eigen::MatrixXd& frames, int t1, int t2,
                      const AcousticModel& am, const WordModel& wm,
                      int max_letter_duration);

// Exact draw from P(segmentation, letter alignment | frames, params).
WordSequence sample_word_sequence(const Eigen::MatrixXd& frames,
                                  const GlobalParams& params,
                                  std::uint64_t seed,
                                  double* joint_loglik = nullptr);

// Per-letter sufficient statistics pooled over utterances.
struct LetterStats {
  std::vector<double> frame_count;
  std::vector<Eigen::VectorXd> frame_sum;
  std::vector<Eigen::MatrixXd> frame_sumsq;
  std::vector<double> segment_count;
  std::vector<double> duration_sum;

  LetterStats(int letters, int dim);
  void add_frames(int letter, const Eigen::MatrixXd& frames, int t1, int t2);
  void add_segment(int letter, int duration);
};

LetterStats collect_letter_stats(
    const std::vector<const Eigen::MatrixXd*>& utterances,
    const std::vector<WordSequence>& seqs, int letters, int dim);

// Conjugate refresh of every letter's Gaussian (normal-inverse-Wishart) and
// Poisson duration rate (Gamma). Letters without data revert to prior draws.
AcousticModel resample_acoustic(const LetterStats& stats,
                                const HlmHyper& hyper, Rng& rng);

// Weak-limit hierarchical refresh of the word bigram and the letter bigram,
// plus spelling updates: words owning segments take the letter sequence of a
// freshly decoded owning segment (or keep the recorded alignment under the
// kCopy rule); unused words redraw from the letter-bigram prior.
// `params.am` must already hold the acoustic model to decode against.
std::pair<LanguageModel, WordModel> resample_language_and_word_models(
    const std::vector<const Eigen::MatrixXd*>& utterances,
    const std::vector<WordSequence>& seqs, const GlobalParams& params,
    std::uint64_t seed);

struct IterationResult {
  GlobalParams params;
  std::vector<WordSequence> sequences;
  double joint_loglik = 0.0;  // of the sampled configuration under the input params
};

// One blocked Gibbs iteration: segmentation draws for every utterance under
// frozen params, then acoustic, word-model, and language-model resamples.
IterationResult npb_daa_iteration(
    const std::vector<const Eigen::MatrixXd*>& utterances,
    const GlobalParams& params, std::uint64_t seed, int workers = 1);

namespace detail {

// Per-utterance per-letter Gaussian log densities with prefix sums, so any
// (letter, span) emission total is O(1).
class FrameLoglik {
 public:
  FrameLoglik(const Eigen::MatrixXd& frames, const AcousticModel& am);
  double range(int letter, int t1, int t2) const {
    return cum_(letter, t2) - cum_(letter, t1);
  }
  int frames() const { return static_cast<int>(cum_.cols()) - 1; }

 private:
  Eigen::MatrixXd cum_;  // J x (T+1)
};

// Word/letter-position state space shared by every utterance decode under
// one parameter set.
struct DecodeContext {
  int num_words = 0;
  int max_letter_duration = 0;
  std::vector<int> state_letter;      // per super-state
  std::vector<int> state_word;
  std::vector<int> state_next;        // -1 when the state ends its word
  std::vector<int> word_first_state;  // per word
  Eigen::MatrixXd log_lm;             // (V+1) x V
  std::vector<TruncatedPoisson> duration;  // per letter

  DecodeContext(const GlobalParams& params);
};

WordSequence ffbs_sample(const Eigen::MatrixXd& frames,
                         const DecodeContext& ctx, const FrameLoglik& ll,
                         Rng& rng, double* joint_loglik);

// Unconstrained letter-chain decode of one span: states are letters, entered
// from the word-start row of the letter bigram; used by spelling resampling.
std::vector<int> decode_letter_chain(const Eigen::MatrixXd& frames, int t1,
                                     int t2, const AcousticModel& am,
                                     const WordModel& wm,
                                     int max_letter_duration, Rng& rng);

// Weak-limit bigram refresh shared by the word and language models: table
// counts drawn per cell, base ~ Dirichlet(gamma/C + tables), rows ~
// Dirichlet(alpha * base + counts).
void resample_hdp_bigram(const Eigen::MatrixXi& counts, double alpha,
                         double gamma, const Eigen::VectorXd& old_base,
                         Eigen::MatrixXd* trans, Eigen::VectorXd* base,
                         Rng& rng);

Gaussian draw_niw(const NiwParams& prior, Rng& rng);
std::vector<int> draw_spelling_prior(const Eigen::MatrixXd& wm_trans,
                                     double mean_len, int max_len, Rng& rng);

}  // namespace detail

}  // namespace codaa

#endif  // CODAA_HDP_HLM_HPP_
