// include/codaa/corpus.hpp
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

#ifndef CODAA_CORPUS_HPP_
#define CODAA_CORPUS_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "codaa/word_sequence.hpp"

namespace codaa {

class CorpusError : public std::runtime_error {
 public:
  explicit CorpusError(const std::string& what) : std::runtime_error(what) {}
};

struct Utterance {
  std::string id;
  std::string object_id;
  Eigen::MatrixXd frames;            // T x F
  std::vector<int> gt_word_labels;   // empty, or length T
  std::vector<int> gt_letter_labels; // empty, or length T

  int num_frames() const { return static_cast<int>(frames.rows()); }
  bool has_labels() const { return !gt_word_labels.empty(); }
};

struct ObjectRecord {
  std::string object_id;
  // modality name -> nonnegative histogram; std::map keeps modality order
  // stable across the project.
  std::map<std::string, Eigen::VectorXd> histograms;
  std::optional<int> gt_category;
};

struct Corpus {
  std::vector<Utterance> utterances;
  std::vector<ObjectRecord> objects;

  int feature_dim() const {
    return utterances.empty() ? 0
                              : static_cast<int>(utterances[0].frames.cols());
  }
  // Index into objects for an utterance's object_id; throws CorpusError if
  // the reference dangles.
  int object_index(const std::string& object_id) const;
  int total_frames() const;

  // Verifies every corpus invariant; throws CorpusError naming the offending
  // record.
  void validate() const;
};

// Directory layout: manifest.json, objects.json, features/<utt>.csv and
// optional labels/<utt>.csv (two columns: word,letter per frame).
Corpus load_corpus(const std::filesystem::path& dir);

// `manifest_extra`, when present, is merged into manifest.json under the key
// "extra" (ignored by load_corpus; used by the synthetic generator to carry
// ground-truth metadata).
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir,
                  const std::string* manifest_extra_json = nullptr);

// Reads back the "extra" manifest block as a JSON string, empty if absent.
std::string read_manifest_extra(const std::filesystem::path& dir);

struct FrameLabels {
  std::vector<int> word;
  std::vector<int> letter;
};

// Flattens one WordSequence per utterance (corpus order) into per-frame label
// arrays of total length sum(T). Throws CorpusError on span gaps or overlaps.
FrameLabels frame_label_matrix(const Corpus& corpus,
                               const std::vector<WordSequence>& seqs);

// Ground-truth frame labels; throws CorpusError if any utterance lacks them.
FrameLabels gt_frame_labels(const Corpus& corpus);

}  // namespace codaa

#endif  // CODAA_CORPUS_HPP_
