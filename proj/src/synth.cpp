// src/synth.cpp
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

#include "codaa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "codaa/logmath.hpp"

namespace codaa {

using nlohmann::json;

void SynthSpec::validate() const {
  if (phonemes < 1 || feature_dim < 1) {
    throw std::invalid_argument("phonemes and feature_dim must be >= 1");
  }
  if (!(separation > 0.0)) {
    throw std::invalid_argument("separation must be positive");
  }
  if (!(mean_duration >= 1.0)) {
    throw std::invalid_argument("mean duration must be >= 1 frame");
  }
  if (lexicon.empty()) throw std::invalid_argument("lexicon is empty");
  for (const auto& sp : lexicon) {
    if (sp.empty()) throw std::invalid_argument("lexicon spelling is empty");
    for (int p : sp) {
      if (p < 0 || p >= phonemes) {
        throw std::invalid_argument("lexicon phoneme out of range");
      }
    }
  }
  if (categories < 1) throw std::invalid_argument("categories must be >= 1");
  if (static_cast<int>(category_word_dist.size()) != categories) {
    throw std::invalid_argument("category_word_dist must have K rows");
  }
  for (const auto& row : category_word_dist) {
    if (row.size() != lexicon.size()) {
      throw std::invalid_argument("category_word_dist row size mismatch");
    }
    double total = 0.0;
    for (double p : row) {
      if (p < 0.0) throw std::invalid_argument("negative word probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument("category word distribution must sum to 1");
    }
  }
  if (modalities.empty()) throw std::invalid_argument("no modalities");
  for (const auto& m : modalities) {
    if (m.bins < categories) {
      throw std::invalid_argument("modality needs at least one bin per category");
    }
    if (m.tokens < 1) throw std::invalid_argument("modality tokens must be >= 1");
    if (m.block_mass <= 0.0 || m.block_mass >= 1.0) {
      throw std::invalid_argument("block_mass must lie in (0, 1)");
    }
  }
  if (objects < categories) {
    throw std::invalid_argument("need at least one object per category");
  }
  if (utterances_per_object < 1 || words_per_utterance < 1) {
    throw std::invalid_argument("utterance counts must be >= 1");
  }
}

SynthSpec default_synth_spec() {
  SynthSpec spec;
  spec.lexicon = {
      {0, 1, 2}, {2, 3, 0},            // content, category 0
      {1, 4, 3}, {3, 5, 1},            // content, category 1
      {4, 2, 5}, {5, 0, 4},            // content, category 2
      {0, 3},    {2, 4},    {5, 1},    // shared function words
  };
  spec.category_word_dist.assign(3, std::vector<double>(9, 0.0));
  for (int k = 0; k < 3; ++k) {
    spec.category_word_dist[k][2 * k] = 0.3;
    spec.category_word_dist[k][2 * k + 1] = 0.3;
    for (int f = 6; f < 9; ++f) spec.category_word_dist[k][f] = 0.4 / 3.0;
  }
  spec.modalities = {
      {"audio", 6, 0.38, 30},
      {"haptic", 6, 0.40, 30},
      {"vision", 8, 0.42, 30},
  };
  return spec;
}

namespace {

// Phoneme mean layout: signed axes for up to 2F phonemes, then random unit
// directions.
std::vector<Eigen::VectorXd> phoneme_means(const SynthSpec& spec, Rng& rng) {
  std::vector<Eigen::VectorXd> means;
  for (int p = 0; p < spec.phonemes; ++p) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(spec.feature_dim);
    if (p < 2 * spec.feature_dim) {
      mu[p / 2] = (p % 2 == 0 ? 1.0 : -1.0) * spec.separation;
    } else {
      Eigen::VectorXd dir = rng.normal_vector(spec.feature_dim);
      mu = spec.separation * dir / dir.norm();
    }
    means.push_back(std::move(mu));
  }
  return means;
}

std::vector<double> block_distribution(int bins, int blocks, int block,
                                       double mass) {
  const int width = bins / blocks;
  std::vector<double> dist(bins, 0.0);
  const int begin = block * width;
  const int end = (block == blocks - 1) ? bins : begin + width;
  for (int b = begin; b < end; ++b) dist[b] = mass / (end - begin);
  const int rest = bins - (end - begin);
  for (int b = 0; b < bins; ++b) {
    if (b < begin || b >= end) dist[b] += (1.0 - mass) / rest;
  }
  return dist;
}

int poisson_draw(double lambda, Rng& rng) {
  std::poisson_distribution<int> d(lambda);
  return d(rng.engine());
}

}  // namespace

std::pair<Corpus, GroundTruth> generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng = Rng::derive(spec.seed, Stream::kSynth);

  GroundTruth gt;
  gt.lexicon = spec.lexicon;
  for (std::size_t w = 0; w < spec.lexicon.size(); ++w) {
    double lo = 1.0, hi = 0.0;
    for (int k = 0; k < spec.categories; ++k) {
      lo = std::min(lo, spec.category_word_dist[k][w]);
      hi = std::max(hi, spec.category_word_dist[k][w]);
    }
    if (hi - lo > 1e-12) {
      gt.content_words.push_back(static_cast<int>(w));
    } else {
      gt.function_words.push_back(static_cast<int>(w));
    }
  }

  const auto means = phoneme_means(spec, rng);
  const int dur_cap = std::max<int>(2, static_cast<int>(2.0 * spec.mean_duration));

  Corpus corpus;
  char buf[32];
  for (int d = 0; d < spec.objects; ++d) {
    const int category = d % spec.categories;
    gt.object_category.push_back(category);
    ObjectRecord obj;
    std::snprintf(buf, sizeof(buf), "obj%03d", d);
    obj.object_id = buf;
    obj.gt_category = category;
    for (const auto& mod : spec.modalities) {
      const auto dist =
          block_distribution(mod.bins, spec.categories, category, mod.block_mass);
      Eigen::VectorXd hist = Eigen::VectorXd::Zero(mod.bins);
      for (int i = 0; i < mod.tokens; ++i) {
        hist[rng.discrete(dist)] += 1.0;
      }
      obj.histograms[mod.name] = std::move(hist);
    }
    corpus.objects.push_back(std::move(obj));
  }

  int utt_counter = 0;
  for (int d = 0; d < spec.objects; ++d) {
    const int category = gt.object_category[d];
    const auto& word_dist = spec.category_word_dist[category];
    int positive_words = 0;
    for (double p : word_dist) positive_words += p > 0.0;
    for (int r = 0; r < spec.utterances_per_object; ++r) {
      Utterance utt;
      std::snprintf(buf, sizeof(buf), "utt%04d", utt_counter++);
      utt.id = buf;
      utt.object_id = corpus.objects[d].object_id;

      std::vector<Eigen::VectorXd> rows;
      int prev_word = -1;
      for (int s = 0; s < spec.words_per_utterance; ++s) {
        int word = rng.discrete(word_dist);
        // Avoid immediate repeats so ground-truth word tokens equal label
        // runs (only possible when the category has another word to use).
        for (int tries = 0; word == prev_word && positive_words > 1 && tries < 100;
             ++tries) {
          word = rng.discrete(word_dist);
        }
        prev_word = word;
        for (int phoneme : spec.lexicon[word]) {
          int dur = std::clamp(poisson_draw(spec.mean_duration, rng), 1, dur_cap);
          for (int f = 0; f < dur; ++f) {
            rows.push_back(means[phoneme] + rng.normal_vector(spec.feature_dim));
            utt.gt_word_labels.push_back(word);
            utt.gt_letter_labels.push_back(phoneme);
          }
        }
      }
      utt.frames.resize(rows.size(), spec.feature_dim);
      for (std::size_t t = 0; t < rows.size(); ++t) {
        utt.frames.row(t) = rows[t].transpose();
      }
      corpus.utterances.push_back(std::move(utt));
    }
  }

  corpus.validate();
  return {std::move(corpus), std::move(gt)};
}

std::string GroundTruth::to_json() const {
  json j;
  j["object_category"] = object_category;
  j["content_words"] = content_words;
  j["function_words"] = function_words;
  j["lexicon"] = lexicon;
  return j.dump();
}

GroundTruth GroundTruth::from_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  GroundTruth gt;
  gt.object_category = j.at("object_category").get<std::vector<int>>();
  gt.content_words = j.at("content_words").get<std::vector<int>>();
  gt.function_words = j.at("function_words").get<std::vector<int>>();
  gt.lexicon = j.at("lexicon").get<std::vector<std::vector<int>>>();
  return gt;
}

std::string sequence_key(const WordSequence& seq) {
  std::ostringstream os;
  for (const auto& seg : seq.segments) {
    os << 'w' << seg.word << ':';
    for (const auto& ls : seg.letters) os << ls.duration << ',';
    os << ';';
  }
  return os.str();
}

namespace {

// Recursively extends a partial tiling at frame t with every word and every
// letter-duration composition.
struct Enumerator {
  const Eigen::MatrixXd* frames;
  const GlobalParams* params;
  Eigen::MatrixXd log_lm;
  std::vector<TruncatedPoisson> dur;
  Eigen::MatrixXd emit_cum;  // J x (T+1) prefix sums

  std::vector<WordSequence> configs;
  std::vector<double> logw;

  WordSequence partial;
  double partial_logw = 0.0;

  int total_frames = 0;

  void run() {
    extend(0, 0);
  }

  void extend(int t, int lm_row) {
    if (t == total_frames) {
      configs.push_back(partial);
      logw.push_back(partial_logw);
      return;
    }
    const int words = static_cast<int>(params->wm.spellings.size());
    for (int v = 0; v < words; ++v) {
      const double ltrans = log_lm(lm_row, v);
      if (ltrans == kNegInf) continue;
      Segment seg;
      seg.word = v;
      seg.begin = t;
      partial.segments.push_back(seg);
      partial_logw += ltrans;
      compose(t, v, 0, t);
      partial_logw -= ltrans;
      partial.segments.pop_back();
    }
  }

  // Chooses the duration of letter `k` of word v, starting at frame `t`.
  void compose(int seg_begin, int v, int k, int t) {
    const auto& spelling = params->wm.spellings[v];
    if (k == static_cast<int>(spelling.size())) {
      partial.segments.back().end = t;
      extend(t, v + 1);
      return;
    }
    const int j = spelling[k];
    const int remaining_letters = static_cast<int>(spelling.size()) - k - 1;
    const int dmax = std::min(params->hyper.max_letter_duration,
                              total_frames - t - remaining_letters);
    for (int d = 1; d <= dmax; ++d) {
      const double w = dur[j].logpmf[d] + (emit_cum(j, t + d) - emit_cum(j, t));
      partial.segments.back().letters.push_back({j, d});
      partial_logw += w;
      compose(seg_begin, v, k + 1, t + d);
      partial_logw -= w;
      partial.segments.back().letters.pop_back();
    }
  }
};

}  // namespace

EnumeratedPosterior enumerate_segmentation_posterior(
    const Eigen::MatrixXd& frames, const GlobalParams& params) {
  const int t = static_cast<int>(frames.rows());
  if (t > 10 || params.num_words() > 3) {
    throw std::invalid_argument("instance exceeds enumeration caps");
  }
  for (const auto& sp : params.wm.spellings) {
    if (sp.size() > 3) {
      throw std::invalid_argument("instance exceeds enumeration caps");
    }
  }

  Enumerator e;
  e.frames = &frames;
  e.params = &params;
  e.total_frames = t;
  e.log_lm = params.lm.trans.unaryExpr(
      [](double x) { return x > 0 ? std::log(x) : kNegInf; });
  for (int j = 0; j < params.num_letters(); ++j) {
    e.dur.emplace_back(params.am.duration_rate[j],
                       params.hyper.max_letter_duration);
  }
  e.emit_cum = Eigen::MatrixXd::Zero(params.num_letters(), t + 1);
  for (int j = 0; j < params.num_letters(); ++j) {
    Eigen::VectorXd ll = params.am.emission[j].loglik_rows(frames);
    for (int i = 0; i < t; ++i) e.emit_cum(j, i + 1) = e.emit_cum(j, i) + ll[i];
  }
  e.run();

  EnumeratedPosterior out;
  out.configs = std::move(e.configs);
  const double z = logsumexp(e.logw);
  out.probs.reserve(e.logw.size());
  for (double lw : e.logw) out.probs.push_back(std::exp(lw - z));
  return out;
}

}  // namespace codaa
