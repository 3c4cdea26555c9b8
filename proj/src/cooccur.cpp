// src/cooccur.cpp
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

#include "codaa/cooccur.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "codaa/eval.hpp"
#include "codaa/logmath.hpp"
#include "codaa/parallel.hpp"

namespace codaa {

double word_schedule(int t, const WeightSchedule& schedule) {
  if (t < 0) throw std::invalid_argument("schedule iteration must be >= 0");
  switch (schedule.mode) {
    case ScheduleMode::kFixed:
      return schedule.fixed_value;
    case ScheduleMode::kIncrease:
      return std::max(0.0, std::min(30.0 + 10.0 * (t - 10), 200.0));
    case ScheduleMode::kDecrease:
      return std::min(std::max(20.0, 10.0 * (30 - t)), 200.0);
  }
  return schedule.fixed_value;
}

void RunConfig::validate() const {
  if (candidates < 1) throw std::invalid_argument("Q must be >= 1");
  if (outer_iterations < 1) {
    throw std::invalid_argument("outer iterations must be >= 1");
  }
  if (mlda.sweeps < 1) throw std::invalid_argument("MLDA sweeps must be >= 1");
  for (const auto& [name, w] : modality_weights) {
    if (w < 0) {
      throw std::invalid_argument("negative weight for modality '" + name + "'");
    }
  }
}

std::vector<std::vector<int>> raw_word_counts(
    const std::vector<WordSequence>& seqs, const Corpus& corpus, int words) {
  if (seqs.size() != corpus.utterances.size()) {
    throw std::invalid_argument("need one sequence per utterance");
  }
  std::vector<std::vector<int>> counts(corpus.objects.size(),
                                       std::vector<int>(words, 0));
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const int d = corpus.object_index(corpus.utterances[i].object_id);
    for (const auto& seg : seqs[i].segments) {
      counts[d][seg.word] += 1;
    }
  }
  return counts;
}

std::vector<std::vector<int>> bag_of_words(
    const std::vector<WordSequence>& seqs, const Corpus& corpus, int words,
    double word_weight) {
  if (word_weight <= 0.0) return {};
  const auto raw = raw_word_counts(seqs, corpus, words);
  std::vector<std::vector<int>> scaled;
  scaled.reserve(raw.size());
  for (const auto& counts : raw) {
    Eigen::VectorXd h(words);
    for (int v = 0; v < words; ++v) h[v] = counts[v];
    scaled.push_back(scale_histogram(h, word_weight));
  }
  return scaled;
}

std::vector<WordToken> collect_word_tokens(
    const std::vector<WordSequence>& seqs, const Corpus& corpus) {
  std::vector<WordToken> tokens;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const int d = corpus.object_index(corpus.utterances[i].object_id);
    for (const auto& seg : seqs[i].segments) {
      tokens.push_back({d, seg.word});
    }
  }
  return tokens;
}

std::vector<int> assign_word_categories(const std::vector<WordToken>& tokens,
                                        const Eigen::MatrixXd& theta_w,
                                        const Eigen::MatrixXd& pi, Rng& rng) {
  const int k = static_cast<int>(theta_w.rows());
  std::vector<int> out(tokens.size());
  std::vector<double> p(k);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& tok = tokens[i];
    for (int c = 0; c < k; ++c) {
      p[c] = theta_w(c, tok.word) * pi(tok.object, c);
    }
    out[i] = rng.discrete(p);
  }
  return out;
}

double candidate_weight_ur(const std::vector<WordToken>& tokens,
                           const std::vector<int>& token_category,
                           const Eigen::MatrixXd& theta_w,
                           const Eigen::MatrixXd& pi, bool pi_weighted) {
  double logw = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& tok = tokens[i];
    double denom = 0.0;
    if (pi_weighted) {
      for (int c = 0; c < theta_w.rows(); ++c) {
        denom += theta_w(c, tok.word) * pi(tok.object, c);
      }
    } else {
      denom = theta_w.col(tok.word).sum();
    }
    logw += std::log(theta_w(token_category[i], tok.word)) - std::log(denom);
  }
  return logw;
}

double candidate_weight_mi(const std::vector<WordToken>& tokens,
                           const std::vector<int>& token_category) {
  const double n = static_cast<double>(tokens.size());
  if (tokens.size() < 2) return 0.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pw, pk;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    joint[{token_category[i], tokens[i].word}] += 1.0;
    pk[token_category[i]] += 1.0;
    pw[tokens[i].word] += 1.0;
  }
  double mi = 0.0;
  for (const auto& [kv, c] : joint) {
    const double pj = c / n;
    mi += pj * std::log(pj * n * n / (pk[kv.first] * pw[kv.second]));
  }
  return std::max(0.0, mi);
}

std::vector<int> normalize_and_resample(const std::vector<double>& raw,
                                        SirMode mode, int draws, Rng& rng,
                                        std::vector<double>* normalized,
                                        bool* degenerate) {
  const std::size_t q = raw.size();
  std::vector<double> w(q, 0.0);
  if (mode == SirMode::kUnigramRescale) {
    const double m = *std::max_element(raw.begin(), raw.end());
    for (std::size_t i = 0; i < q; ++i) w[i] = std::exp(raw[i] - m);
  } else {
    w = raw;
  }
  double total = 0.0;
  for (double x : w) total += x;
  bool degen = !(total > 0.0);
  if (degen) {
    std::fprintf(stderr,
                 "warning: all candidate weights are zero; resampling "
                 "uniformly\n");
    std::fill(w.begin(), w.end(), 1.0);
    total = static_cast<double>(q);
  }
  if (degenerate) *degenerate = degen;
  for (double& x : w) x /= total;
  if (normalized) *normalized = w;
  std::vector<int> picks(draws);
  for (int i = 0; i < draws; ++i) picks[i] = rng.discrete(w);
  return picks;
}

namespace {

// Per-object sensory histograms scaled once up front; the word modality is
// appended per candidate per iteration.
ObjectHists scaled_sensory_hists(const Corpus& corpus,
                                 const std::map<std::string, double>& weights) {
  ObjectHists hists(corpus.objects.size());
  for (std::size_t d = 0; d < corpus.objects.size(); ++d) {
    for (const auto& [name, hist] : corpus.objects[d].histograms) {
      auto it = weights.find(name);
      const double w = it == weights.end() ? 0.0 : it->second;
      if (w <= 0.0) continue;
      try {
        hists[d][name] = scale_histogram(hist, w);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("object '" + corpus.objects[d].object_id +
                                    "' modality '" + name + "': " + e.what());
      }
    }
  }
  return hists;
}

std::optional<double> frame_metric(const Corpus& corpus,
                                   const std::vector<WordSequence>& seqs,
                                   bool letters) {
  for (const auto& u : corpus.utterances) {
    if (!u.has_labels()) return std::nullopt;
  }
  const FrameLabels pred = frame_label_matrix(corpus, seqs);
  const FrameLabels truth = gt_frame_labels(corpus);
  return letters ? ari(pred.letter, truth.letter) : ari(pred.word, truth.word);
}

std::optional<double> category_metric(const Corpus& corpus,
                                      const CategoryModel& model) {
  std::vector<int> pred, truth;
  for (std::size_t d = 0; d < corpus.objects.size(); ++d) {
    if (!corpus.objects[d].gt_category) return std::nullopt;
    truth.push_back(*corpus.objects[d].gt_category);
    int best = 0;
    for (int k = 1; k < model.pi.cols(); ++k) {
      if (model.pi(d, k) > model.pi(d, best)) best = k;
    }
    pred.push_back(best);
  }
  return ari(pred, truth);
}

}  // namespace

RunResult run_cooccurrence_daa(const Corpus& corpus, const RunConfig& config,
                               const IterationCallback& callback) {
  config.validate();
  corpus.validate();
  const int q = config.candidates;
  const int feature_dim = corpus.feature_dim();

  std::vector<const Eigen::MatrixXd*> frames;
  frames.reserve(corpus.utterances.size());
  for (const auto& u : corpus.utterances) frames.push_back(&u.frames);

  const ObjectHists sensory =
      scaled_sensory_hists(corpus, config.modality_weights);

  std::vector<Candidate> candidates(q);
  for (int c = 0; c < q; ++c) {
    candidates[c].params = init_params(
        config.hlm, feature_dim,
        derive_seed(config.seed, {static_cast<std::uint64_t>(Stream::kCandidateInit),
                                  static_cast<std::uint64_t>(c)}));
  }

  RunResult result;
  std::vector<double> prev_weights;  // empty on the first iteration

  for (int t = 1; t <= config.outer_iterations; ++t) {
    // Step I: resample candidate slots from the previous weights, then one
    // blocked Gibbs iteration per slot. At t=1 the initial draws pass through.
    std::vector<int> copies(q, 1);
    if (!prev_weights.empty()) {
      Rng rng = Rng::derive(config.seed, Stream::kSirResample,
                            {static_cast<std::uint64_t>(t)});
      const auto picks = normalize_and_resample(
          prev_weights, config.sir_mode, q, rng, nullptr, nullptr);
      std::fill(copies.begin(), copies.end(), 0);
      std::vector<Candidate> next(q);
      for (int c = 0; c < q; ++c) {
        next[c] = candidates[picks[c]];
        copies[picks[c]] += 1;
      }
      // Record copy counts on the trace entries of the previous iteration.
      const std::size_t base = result.trace.size() - q;
      for (int c = 0; c < q; ++c) result.trace[base + c].copies = copies[c];
      candidates = std::move(next);
    }

    const double ww = word_schedule(t, config.word_weight);
    const int inner_workers = q == 1 ? config.workers : 1;

    parallel_for(q, config.workers, [&](std::size_t c) {
      Candidate& cand = candidates[c];
      const std::uint64_t chain_seed =
          derive_seed(config.seed, {0xC0DAull, static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(c)});
      IterationResult it =
          npb_daa_iteration(frames, cand.params, chain_seed, inner_workers);
      cand.params = std::move(it.params);
      cand.sequences = std::move(it.sequences);
      cand.joint_loglik = it.joint_loglik;

      // Step II: fresh categorization of this candidate's words plus the
      // fixed sensory modalities.
      ObjectHists hists = sensory;
      const auto words = bag_of_words(cand.sequences, corpus,
                                      cand.params.num_words(), ww);
      for (std::size_t d = 0; d < hists.size(); ++d) {
        if (!words.empty()) hists[d]["word"] = words[d];
      }
      cand.categories = run_mlda(hists, config.mlda, chain_seed);

      // Steps III and IV: per-token categories and the candidate weight.
      cand.tokens = collect_word_tokens(cand.sequences, corpus);
      if (!words.empty()) {
        Rng krng = Rng::derive(chain_seed, Stream::kCategoryAssign);
        cand.token_category = assign_word_categories(
            cand.tokens, cand.categories.theta.at("word"), cand.categories.pi,
            krng);
        if (config.sir_mode == SirMode::kUnigramRescale) {
          cand.weight_raw = candidate_weight_ur(
              cand.tokens, cand.token_category, cand.categories.theta.at("word"),
              cand.categories.pi, config.ur_pi_weighted_denominator);
        } else {
          cand.weight_raw =
              candidate_weight_mi(cand.tokens, cand.token_category);
        }
      } else {
        // Word modality excluded: categorization carries no information about
        // the candidate, so weights are flat.
        cand.token_category.assign(cand.tokens.size(), 0);
        cand.weight_raw = 0.0;
      }
    });

    // Normalization (the resample itself happens at the top of t+1).
    std::vector<double> raw(q);
    for (int c = 0; c < q; ++c) raw[c] = candidates[c].weight_raw;
    std::vector<double> norm;
    {
      Rng dummy(0);
      normalize_and_resample(raw, config.sir_mode, 0, dummy, &norm, nullptr);
    }
    for (int c = 0; c < q; ++c) candidates[c].weight_norm = norm[c];

    // Step V: adopt the largest weight; ties break to the lowest index.
    int best = 0;
    for (int c = 1; c < q; ++c) {
      if (norm[c] > norm[best]) best = c;
    }
    result.best_per_iteration.push_back(best);

    for (int c = 0; c < q; ++c) {
      IterationTrace tr;
      tr.iteration = t;
      tr.candidate = c;
      tr.word_weight = ww;
      tr.weight_raw = candidates[c].weight_raw;
      tr.weight_norm = norm[c];
      tr.best = c == best;
      tr.joint_loglik = candidates[c].joint_loglik;
      tr.word_ari = frame_metric(corpus, candidates[c].sequences, false);
      tr.letter_ari = frame_metric(corpus, candidates[c].sequences, true);
      tr.category_ari = category_metric(corpus, candidates[c].categories);
      result.trace.push_back(std::move(tr));
    }

    if (callback) callback(t, candidates[best]);
    prev_weights = std::move(raw);

    if (t == config.outer_iterations) {
      result.final_params = candidates[best].params;
      result.final_sequences = candidates[best].sequences;
      result.final_categories = candidates[best].categories;
    }
  }
  return result;
}

}  // namespace codaa
