// include/codaa/synth.hpp
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

#ifndef CODAA_SYNTH_HPP_
#define CODAA_SYNTH_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "codaa/corpus.hpp"
#include "codaa/hdp_hlm.hpp"

namespace codaa {

// Synthetic corpus generator with a two-level structure: objects carry
// category-dependent modality histograms, and each utterance is a word
// sequence mixing category-typical content words with shared function words,
// realized phoneme by phoneme with Poisson durations and Gaussian frames.
// Full frame-level ground truth is recorded.

struct SynthModality {
  std::string name;
  int bins = 8;
  // Probability mass a category concentrates on its own bin block; the rest
  // spreads uniformly. Smaller values make the modality less informative.
  double block_mass = 0.5;
  int tokens = 40;  // histogram total per object
};

struct SynthSpec {
  int phonemes = 6;  // P_true
  int feature_dim = 3;
  double separation = 3.0;    // distance scale between phoneme means
  double mean_duration = 8.0; // frames per phoneme
  std::vector<std::vector<int>> lexicon;  // spellings over [0, phonemes)
  int categories = 3;  // K_true
  // categories x |lexicon|; rows sum to 1.
  std::vector<std::vector<double>> category_word_dist;
  std::vector<SynthModality> modalities;
  int objects = 12;
  int utterances_per_object = 4;
  int words_per_utterance = 4;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

// Desk-scale defaults: 9-word lexicon (6 category-bound content words, 3
// shared function words), 3 categories, 12 objects, 3 modalities.
SynthSpec default_synth_spec();

struct GroundTruth {
  std::vector<int> object_category;   // per object
  std::vector<int> content_words;     // lexicon indices predictive of category
  std::vector<int> function_words;
  std::vector<std::vector<int>> lexicon;

  std::string to_json() const;
  static GroundTruth from_json(const std::string& json_text);
};

std::pair<Corpus, GroundTruth> generate(const SynthSpec& spec);

// Exhaustive posterior over (segmentation, letter alignment) for a tiny
// utterance under frozen params; probabilities sum to 1. Enforces the
// enumeration caps (T <= 10, V <= 3, spellings <= 3 letters) and throws
// beyond them.
struct EnumeratedPosterior {
  std::vector<WordSequence> configs;
  std::vector<double> probs;
};

EnumeratedPosterior enumerate_segmentation_posterior(
    const Eigen::MatrixXd& frames, const GlobalParams& params);

// Canonical key of a full configuration, for matching sampler draws against
// enumerated configurations.
std::string sequence_key(const WordSequence& seq);

}  // namespace codaa

#endif  // CODAA_SYNTH_HPP_
