// tests/test_cooccur.cc
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "codaa/cooccur.hpp"
#include "codaa/experiment.hpp"
#include "codaa/synth.hpp"

using namespace codaa;

TEST_CASE("word schedules evaluate the exact formulas") {
  WeightSchedule inc{ScheduleMode::kIncrease, 0};
  WeightSchedule dec{ScheduleMode::kDecrease, 0};
  WeightSchedule fixed{ScheduleMode::kFixed, 123.0};

  CHECK(word_schedule(0, inc) == 0.0);
  CHECK(word_schedule(5, inc) == 0.0);
  CHECK(word_schedule(10, inc) == 30.0);
  CHECK(word_schedule(27, inc) == 200.0);
  CHECK(word_schedule(28, inc) == 200.0);
  CHECK(word_schedule(100, inc) == 200.0);

  CHECK(word_schedule(0, dec) == 200.0);
  CHECK(word_schedule(5, dec) == 200.0);
  CHECK(word_schedule(10, dec) == 200.0);
  // min(max(20, 10*(30-t)), 200): t=27 gives 30, the floor of 20 is reached
  // from t=28 on.
  CHECK(word_schedule(27, dec) == 30.0);
  CHECK(word_schedule(28, dec) == 20.0);
  CHECK(word_schedule(100, dec) == 20.0);

  for (int t : {0, 3, 50}) CHECK(word_schedule(t, fixed) == 123.0);
  for (int t = 0; t <= 300; ++t) {
    CHECK(word_schedule(t, inc) >= 0.0);
    CHECK(word_schedule(t, inc) <= 200.0);
    CHECK(word_schedule(t, dec) >= 0.0);
    CHECK(word_schedule(t, dec) <= 200.0);
  }
}

namespace {

Corpus two_object_corpus() {
  Corpus c;
  for (int d = 0; d < 2; ++d) {
    ObjectRecord obj;
    obj.object_id = "obj" + std::to_string(d);
    obj.histograms["vision"] = Eigen::Vector2d(1.0, 1.0);
    c.objects.push_back(obj);
    Utterance u;
    u.id = "utt" + std::to_string(d);
    u.object_id = obj.object_id;
    u.frames = Eigen::MatrixXd::Zero(6, 1);
    c.utterances.push_back(u);
  }
  return c;
}

WordSequence seq_of_words(const std::vector<int>& words, int frames) {
  WordSequence s;
  int t = 0;
  const int step = frames / static_cast<int>(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    const int end = i + 1 == words.size() ? frames : t + step;
    s.segments.push_back(
        {words[i], t, end, {{0, end - t}}});
    t = end;
  }
  return s;
}

}  // namespace

TEST_CASE("bag_of_words counts tokens per object") {
  Corpus c = two_object_corpus();
  std::vector<WordSequence> seqs(2);
  seqs[0] = seq_of_words({3, 3, 7}, 6);
  seqs[1] = seq_of_words({1}, 6);
  auto raw = raw_word_counts(seqs, c, 8);
  CHECK(raw[0][3] == 2);
  CHECK(raw[0][7] == 1);
  CHECK(raw[0][1] == 0);
  CHECK(raw[1][1] == 1);

  // Scaled totals: {3:2, 7:1} at weight 200 -> {133, 67}.
  auto scaled = bag_of_words(seqs, c, 8, 200.0);
  CHECK(scaled[0][3] == 133);
  CHECK(scaled[0][7] == 67);

  // Weight zero excludes the modality entirely.
  CHECK(bag_of_words(seqs, c, 8, 0.0).empty());
}

TEST_CASE("assign_word_categories reduces to pi under uniform theta") {
  Eigen::MatrixXd theta = Eigen::MatrixXd::Constant(2, 4, 0.25);
  Eigen::MatrixXd pi(1, 2);
  pi << 0.8, 0.2;
  std::vector<WordToken> tokens(20000, WordToken{0, 1});
  Rng rng(5);
  auto k = assign_word_categories(tokens, theta, pi, rng);
  double frac = 0;
  for (int x : k) frac += x == 0;
  frac /= k.size();
  const double sigma = std::sqrt(0.8 * 0.2 / k.size());
  CHECK(std::abs(frac - 0.8) < 3 * sigma);
}

TEST_CASE("assign_word_categories is deterministic under one-hot pi") {
  Eigen::MatrixXd theta = Eigen::MatrixXd::Constant(2, 3, 0.5);
  Eigen::MatrixXd pi(1, 2);
  pi << 0.0, 1.0;
  std::vector<WordToken> tokens(50, WordToken{0, 2});
  Rng rng(6);
  for (int k : assign_word_categories(tokens, theta, pi, rng)) CHECK(k == 1);
}

TEST_CASE("assign_word_categories matches the normalized product") {
  // theta column (0.3, 0.1), pi = (0.5, 0.5): P = (0.75, 0.25).
  Eigen::MatrixXd theta(2, 1);
  theta << 0.3, 0.1;
  Eigen::MatrixXd pi(1, 2);
  pi << 0.5, 0.5;
  std::vector<WordToken> tokens(10000, WordToken{0, 0});
  Rng rng(7);
  auto k = assign_word_categories(tokens, theta, pi, rng);
  double frac = 0;
  for (int x : k) frac += x == 0;
  frac /= k.size();
  const double sigma = std::sqrt(0.75 * 0.25 / k.size());
  CHECK(std::abs(frac - 0.75) < 3 * sigma);
}

TEST_CASE("unigram rescale weight golden cases") {
  {
    // K=1: every ratio is 1.
    Eigen::MatrixXd theta = Eigen::MatrixXd::Constant(1, 3, 0.2);
    Eigen::MatrixXd pi = Eigen::MatrixXd::Constant(1, 1, 1.0);
    std::vector<WordToken> tokens = {{0, 0}, {0, 2}, {0, 1}};
    std::vector<int> cat = {0, 0, 0};
    CHECK(candidate_weight_ur(tokens, cat, theta, pi, false) ==
          doctest::Approx(0.0));
  }
  {
    // One token, theta column (0.3, 0.1), k-hat = 0: log(0.3 / 0.4).
    Eigen::MatrixXd theta(2, 1);
    theta << 0.3, 0.1;
    Eigen::MatrixXd pi(1, 2);
    pi << 0.5, 0.5;
    std::vector<WordToken> tokens = {{0, 0}};
    std::vector<int> cat = {0};
    CHECK(candidate_weight_ur(tokens, cat, theta, pi, false) ==
          doctest::Approx(std::log(0.3 / 0.4)));
    // Pi-weighted denominator variant: log(0.3 / (0.3*0.5 + 0.1*0.5)).
    CHECK(candidate_weight_ur(tokens, cat, theta, pi, true) ==
          doctest::Approx(std::log(0.3 / 0.2)));
  }
}

TEST_CASE("equal theta columns give equal weights across candidates") {
  Eigen::MatrixXd theta(2, 2);
  theta << 0.4, 0.2,
           0.4, 0.2;
  Eigen::MatrixXd pi(2, 2);
  pi << 0.5, 0.5, 0.5, 0.5;
  std::vector<WordToken> a = {{0, 0}, {1, 1}};
  std::vector<WordToken> b = {{0, 1}, {1, 0}};
  std::vector<int> cat = {0, 1};
  CHECK(candidate_weight_ur(a, cat, theta, pi, false) ==
        doctest::Approx(candidate_weight_ur(b, cat, theta, pi, false)));
}

TEST_CASE("mutual information weight golden cases") {
  {
    // Independent product table: MI = 0.
    std::vector<WordToken> tokens;
    std::vector<int> cat;
    for (int k = 0; k < 2; ++k) {
      for (int v = 0; v < 2; ++v) {
        tokens.push_back({0, v});
        cat.push_back(k);
      }
    }
    CHECK(candidate_weight_mi(tokens, cat) == doctest::Approx(0.0));
  }
  {
    // Deterministic mapping of two equiprobable words: MI = log 2.
    std::vector<WordToken> tokens = {{0, 0}, {0, 1}, {0, 0}, {0, 1}};
    std::vector<int> cat = {0, 1, 0, 1};
    CHECK(candidate_weight_mi(tokens, cat) == doctest::Approx(std::log(2.0)));
  }
  {
    // Joint counts {(0,0):3, (1,1):1}: MI = H(1/4, 3/4).
    std::vector<WordToken> tokens = {{0, 0}, {0, 0}, {0, 0}, {0, 1}};
    std::vector<int> cat = {0, 0, 0, 1};
    const double h = -(0.25 * std::log(0.25) + 0.75 * std::log(0.75));
    CHECK(candidate_weight_mi(tokens, cat) ==
          doctest::Approx(h).epsilon(1e-12));
  }
  {
    // Fewer than two tokens.
    std::vector<WordToken> tokens = {{0, 0}};
    std::vector<int> cat = {0};
    CHECK(candidate_weight_mi(tokens, cat) == 0.0);
  }
}

TEST_CASE("ur and mi agree when one candidate dominates") {
  // Candidate A: deterministic word-category coupling with sharp theta.
  // Candidate B: independent coupling with flat theta.
  Eigen::MatrixXd theta_a(2, 2), theta_b(2, 2);
  theta_a << 0.9, 0.1,
             0.1, 0.9;
  theta_b << 0.5, 0.5,
             0.5, 0.5;
  Eigen::MatrixXd pi = Eigen::MatrixXd::Constant(1, 2, 0.5);
  std::vector<WordToken> tokens;
  std::vector<int> cat_a, cat_b;
  for (int i = 0; i < 8; ++i) {
    tokens.push_back({0, i % 2});
    cat_a.push_back(i % 2);
    cat_b.push_back((i / 2) % 2);
  }
  const double ur_a = candidate_weight_ur(tokens, cat_a, theta_a, pi, false);
  const double ur_b = candidate_weight_ur(tokens, cat_b, theta_b, pi, false);
  const double mi_a = candidate_weight_mi(tokens, cat_a);
  const double mi_b = candidate_weight_mi(tokens, cat_b);
  CHECK(ur_a > ur_b);
  CHECK(mi_a > mi_b);
}

TEST_CASE("normalize_and_resample behaves like the weights say") {
  Rng rng(8);
  {
    std::vector<double> norm;
    auto picks = normalize_and_resample({std::log(1.0), std::log(1.0)},
                                        SirMode::kUnigramRescale, 1000, rng,
                                        &norm);
    CHECK(norm[0] == doctest::Approx(0.5));
    int zero = 0;
    for (int p : picks) zero += p == 0;
    CHECK(std::abs(zero / 1000.0 - 0.5) < 3 * std::sqrt(0.25 / 1000));
  }
  {
    std::vector<double> norm;
    auto picks = normalize_and_resample({std::log(0.9), std::log(0.1)},
                                        SirMode::kUnigramRescale, 10000, rng,
                                        &norm);
    CHECK(norm[0] == doctest::Approx(0.9));
    int zero = 0;
    for (int p : picks) zero += p == 0;
    CHECK(std::abs(zero / 10000.0 - 0.9) < 3 * std::sqrt(0.09 / 10000));
  }
  {
    // One-hot weight: every draw is that candidate.
    std::vector<double> norm;
    auto picks = normalize_and_resample({1.0, 0.0, 0.0},
                                        SirMode::kMutualInformation, 50, rng,
                                        &norm);
    for (int p : picks) CHECK(p == 0);
  }
  {
    // All-zero MI weights fall back to uniform with a warning.
    std::vector<double> norm;
    bool degenerate = false;
    auto picks = normalize_and_resample({0.0, 0.0}, SirMode::kMutualInformation,
                                        100, rng, &norm, &degenerate);
    CHECK(degenerate);
    CHECK(norm[0] == doctest::Approx(0.5));
  }
  {
    // Normalized weights always sum to 1.
    std::vector<double> norm;
    normalize_and_resample({-1000.0, -1001.0, -999.0},
                           SirMode::kUnigramRescale, 0, rng, &norm);
    CHECK(norm[0] + norm[1] + norm[2] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("argmax selection is invariant to positive rescaling") {
  Rng rng(9);
  std::vector<double> raw = {-50.0, -48.5, -60.0, -49.0};
  std::vector<double> norm_a, norm_b;
  normalize_and_resample(raw, SirMode::kUnigramRescale, 0, rng, &norm_a);
  std::vector<double> shifted = raw;
  for (double& x : shifted) x += 123.4;  // log-domain positive rescale
  normalize_and_resample(shifted, SirMode::kUnigramRescale, 0, rng, &norm_b);
  const auto argmax = [](const std::vector<double>& v) {
    return std::distance(v.begin(), std::max_element(v.begin(), v.end()));
  };
  CHECK(argmax(norm_a) == argmax(norm_b));
  for (std::size_t i = 0; i < norm_a.size(); ++i) {
    CHECK(norm_a[i] == doctest::Approx(norm_b[i]).epsilon(1e-9));
  }
}

TEST_CASE("q=1 reduces to the plain chain with unit weights") {
  SynthSpec spec = default_synth_spec();
  spec.seed = 14;
  spec.objects = 6;
  spec.utterances_per_object = 2;
  auto [corpus, gt] = generate(spec);
  ExperimentConfig base = preset_config("desk-fast");
  RunConfig run = base.run;
  run.candidates = 1;
  run.outer_iterations = 3;
  run.mlda.sweeps = 20;
  run.seed = 77;
  auto res = run_cooccurrence_daa(corpus, run, nullptr);
  for (const auto& tr : res.trace) {
    CHECK(tr.weight_norm == doctest::Approx(1.0));
    CHECK(tr.best);
  }
  CHECK(res.best_per_iteration == std::vector<int>(3, 0));
}

TEST_CASE("word weight zero gives candidate-independent uniform weights") {
  SynthSpec spec = default_synth_spec();
  spec.seed = 15;
  spec.objects = 6;
  spec.utterances_per_object = 2;
  auto [corpus, gt] = generate(spec);
  ExperimentConfig base = preset_config("desk-fast");
  RunConfig run = base.run;
  run.candidates = 3;
  run.outer_iterations = 2;
  run.mlda.sweeps = 20;
  run.word_weight = {ScheduleMode::kFixed, 0.0};
  run.seed = 78;
  auto res = run_cooccurrence_daa(corpus, run, nullptr);
  for (const auto& tr : res.trace) {
    CHECK(tr.weight_raw == 0.0);
    CHECK(tr.weight_norm == doctest::Approx(1.0 / 3));
  }
}

TEST_CASE("full loop is deterministic including across worker counts") {
  SynthSpec spec = default_synth_spec();
  spec.seed = 16;
  spec.objects = 6;
  spec.utterances_per_object = 2;
  auto [corpus, gt] = generate(spec);
  ExperimentConfig base = preset_config("desk-fast");
  RunConfig run = base.run;
  run.candidates = 2;
  run.outer_iterations = 3;
  run.mlda.sweeps = 30;
  run.seed = 79;
  run.workers = 1;
  auto a = run_cooccurrence_daa(corpus, run, nullptr);
  run.workers = 4;
  auto b = run_cooccurrence_daa(corpus, run, nullptr);
  CHECK(a.best_per_iteration == b.best_per_iteration);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].weight_raw == b.trace[i].weight_raw);
    CHECK(a.trace[i].joint_loglik == b.trace[i].joint_loglik);
  }
  CHECK(a.final_categories.pi == b.final_categories.pi);
}
