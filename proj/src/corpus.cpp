// src/corpus.cpp
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

#include "codaa/corpus.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "codaa/csv.hpp"

namespace codaa {

using nlohmann::json;

int Corpus::object_index(const std::string& object_id) const {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].object_id == object_id) return static_cast<int>(i);
  }
  throw CorpusError("dangling object reference: '" + object_id + "'");
}

int Corpus::total_frames() const {
  int total = 0;
  for (const auto& u : utterances) total += u.num_frames();
  return total;
}

void Corpus::validate() const {
  if (utterances.empty()) throw CorpusError("corpus has no utterances");
  if (objects.empty()) throw CorpusError("corpus has no objects");

  std::unordered_map<std::string, int> obj_idx;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (!obj_idx.emplace(objects[i].object_id, i).second) {
      throw CorpusError("duplicate object id '" + objects[i].object_id + "'");
    }
  }

  // Per-modality bin counts must agree across objects.
  const auto& ref = objects[0].histograms;
  for (const auto& obj : objects) {
    if (obj.histograms.size() != ref.size()) {
      throw CorpusError("object '" + obj.object_id +
                        "' has a different modality set");
    }
    for (const auto& [name, hist] : obj.histograms) {
      auto it = ref.find(name);
      if (it == ref.end()) {
        throw CorpusError("object '" + obj.object_id +
                          "' has unexpected modality '" + name + "'");
      }
      if (hist.size() < 1) {
        throw CorpusError("object '" + obj.object_id + "' modality '" + name +
                          "' has no bins");
      }
      if (hist.size() != it->second.size()) {
        throw CorpusError("object '" + obj.object_id + "' modality '" + name +
                          "' bin count mismatch");
      }
      for (int b = 0; b < hist.size(); ++b) {
        if (!std::isfinite(hist[b]) || hist[b] < 0.0) {
          throw CorpusError("object '" + obj.object_id + "' modality '" +
                            name + "' bin " + std::to_string(b) +
                            " is negative or non-finite");
        }
      }
    }
  }

  const int dim = feature_dim();
  std::set<std::string> referenced;
  std::set<std::string> utt_ids;
  for (const auto& u : utterances) {
    if (!utt_ids.insert(u.id).second) {
      throw CorpusError("duplicate utterance id '" + u.id + "'");
    }
    if (u.frames.rows() < 1 || u.frames.cols() < 1) {
      throw CorpusError("utterance '" + u.id + "' has an empty frame matrix");
    }
    if (u.frames.cols() != dim) {
      throw CorpusError("utterance '" + u.id + "' feature dim " +
                        std::to_string(u.frames.cols()) +
                        " mismatches corpus dim " + std::to_string(dim));
    }
    if (!u.frames.allFinite()) {
      throw CorpusError("utterance '" + u.id + "' contains non-finite values");
    }
    if (!obj_idx.count(u.object_id)) {
      throw CorpusError("dangling object reference: utterance '" + u.id +
                        "' refers to unknown object '" + u.object_id + "'");
    }
    referenced.insert(u.object_id);
    const auto t = static_cast<std::size_t>(u.num_frames());
    if (!u.gt_word_labels.empty() && u.gt_word_labels.size() != t) {
      throw CorpusError("utterance '" + u.id + "' word labels length " +
                        std::to_string(u.gt_word_labels.size()) +
                        " != frames " + std::to_string(t));
    }
    if (!u.gt_letter_labels.empty() && u.gt_letter_labels.size() != t) {
      throw CorpusError("utterance '" + u.id + "' letter labels length " +
                        std::to_string(u.gt_letter_labels.size()) +
                        " != frames " + std::to_string(t));
    }
    if (u.gt_word_labels.empty() != u.gt_letter_labels.empty()) {
      throw CorpusError("utterance '" + u.id +
                        "' has only one of word/letter label arrays");
    }
  }
  for (const auto& obj : objects) {
    if (!referenced.count(obj.object_id)) {
      throw CorpusError("object '" + obj.object_id + "' has no utterances");
    }
  }
}

namespace {

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("missing file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw CorpusError("cannot parse " + path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& dir) {
  Corpus corpus;
  const json manifest = load_json_file(dir / "manifest.json");
  const json objects = load_json_file(dir / "objects.json");

  if (!objects.is_array()) throw CorpusError("objects.json must be an array");
  for (const auto& jo : objects) {
    ObjectRecord obj;
    obj.object_id = jo.at("object_id").get<std::string>();
    for (const auto& [name, arr] : jo.at("histograms").items()) {
      Eigen::VectorXd h(arr.size());
      for (std::size_t b = 0; b < arr.size(); ++b) h[b] = arr[b].get<double>();
      obj.histograms[name] = std::move(h);
    }
    if (jo.contains("gt_category") && !jo["gt_category"].is_null()) {
      obj.gt_category = jo["gt_category"].get<int>();
    }
    corpus.objects.push_back(std::move(obj));
  }

  for (const auto& ju : manifest.at("utterances")) {
    Utterance u;
    u.id = ju.at("id").get<std::string>();
    u.object_id = ju.at("object_id").get<std::string>();
    const auto feat_path = dir / "features" / (u.id + ".csv");
    if (!std::filesystem::exists(feat_path)) {
      throw CorpusError("missing feature file for utterance '" + u.id +
                        "': " + feat_path.string());
    }
    u.frames = read_matrix_csv(feat_path);
    const auto label_path = dir / "labels" / (u.id + ".csv");
    if (std::filesystem::exists(label_path)) {
      auto rows = read_int_csv(label_path, 2);
      u.gt_word_labels.reserve(rows.size());
      u.gt_letter_labels.reserve(rows.size());
      for (const auto& r : rows) {
        u.gt_word_labels.push_back(r[0]);
        u.gt_letter_labels.push_back(r[1]);
      }
    }
    corpus.utterances.push_back(std::move(u));
  }

  corpus.validate();
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir,
                  const std::string* manifest_extra_json) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "features");
  bool any_labels = false;
  for (const auto& u : corpus.utterances) any_labels |= u.has_labels();
  if (any_labels) fs::create_directories(dir / "labels");

  json manifest;
  manifest["feature_dim"] = corpus.feature_dim();
  json mods = json::object();
  if (!corpus.objects.empty()) {
    for (const auto& [name, hist] : corpus.objects[0].histograms) {
      mods[name] = hist.size();
    }
  }
  manifest["modalities"] = mods;
  manifest["utterances"] = json::array();
  for (const auto& u : corpus.utterances) {
    manifest["utterances"].push_back({{"id", u.id}, {"object_id", u.object_id}});
    write_matrix_csv(dir / "features" / (u.id + ".csv"), u.frames);
    if (u.has_labels()) {
      std::vector<std::vector<int>> rows;
      rows.reserve(u.gt_word_labels.size());
      for (std::size_t t = 0; t < u.gt_word_labels.size(); ++t) {
        rows.push_back({u.gt_word_labels[t], u.gt_letter_labels[t]});
      }
      write_int_csv(dir / "labels" / (u.id + ".csv"), rows);
    }
  }
  if (manifest_extra_json) {
    manifest["extra"] = json::parse(*manifest_extra_json);
  }
  std::ofstream mf(dir / "manifest.json");
  mf << manifest.dump(2) << '\n';

  json objects = json::array();
  for (const auto& obj : corpus.objects) {
    json jo;
    jo["object_id"] = obj.object_id;
    json hists = json::object();
    for (const auto& [name, hist] : obj.histograms) {
      json arr = json::array();
      for (int b = 0; b < hist.size(); ++b) arr.push_back(hist[b]);
      hists[name] = std::move(arr);
    }
    jo["histograms"] = std::move(hists);
    if (obj.gt_category) jo["gt_category"] = *obj.gt_category;
    objects.push_back(std::move(jo));
  }
  std::ofstream of(dir / "objects.json");
  of << objects.dump(2) << '\n';
}

std::string read_manifest_extra(const std::filesystem::path& dir) {
  const json manifest = load_json_file(dir / "manifest.json");
  if (!manifest.contains("extra")) return "";
  return manifest["extra"].dump();
}

FrameLabels frame_label_matrix(const Corpus& corpus,
                               const std::vector<WordSequence>& seqs) {
  if (seqs.size() != corpus.utterances.size()) {
    throw CorpusError("expected one word sequence per utterance");
  }
  FrameLabels out;
  out.word.reserve(corpus.total_frames());
  out.letter.reserve(corpus.total_frames());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const int t = corpus.utterances[i].num_frames();
    try {
      seqs[i].check(t);
    } catch (const std::exception& e) {
      throw CorpusError("utterance '" + corpus.utterances[i].id +
                        "': " + e.what());
    }
    std::vector<int> w, l;
    seqs[i].frame_labels(&w, &l);
    out.word.insert(out.word.end(), w.begin(), w.end());
    out.letter.insert(out.letter.end(), l.begin(), l.end());
  }
  return out;
}

FrameLabels gt_frame_labels(const Corpus& corpus) {
  FrameLabels out;
  for (const auto& u : corpus.utterances) {
    if (!u.has_labels()) {
      throw CorpusError("utterance '" + u.id +
                        "' lacks ground-truth labels required for evaluation");
    }
    out.word.insert(out.word.end(), u.gt_word_labels.begin(),
                    u.gt_word_labels.end());
    out.letter.insert(out.letter.end(), u.gt_letter_labels.begin(),
                      u.gt_letter_labels.end());
  }
  return out;
}

}  // namespace codaa
