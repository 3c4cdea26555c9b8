// tests/test_hdp_hlm.cc
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

#include <algorithm>

#include "codaa/eval.hpp"
#include "codaa/hdp_hlm.hpp"
#include "codaa/parallel.hpp"
#include "codaa/synth.hpp"
#include "oracles.hpp"

using namespace codaa;

namespace {

HlmHyper desk_hyper(int letters = 9, int words = 40) {
  HlmHyper h;
  h.letters = letters;
  h.words = words;
  h.max_letter_duration = 20;
  h.duration_shape0 = 100;
  h.duration_rate0 = 10;
  h.gamma_lm = 20;
  return h;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return 0.5 * (v[(v.size() - 1) / 2] + v[v.size() / 2]);
}

}  // namespace

TEST_CASE("init_params is deterministic and honors truncations") {
  HlmHyper h = desk_hyper(4, 5);
  GlobalParams a = init_params(h, 3, 99);
  GlobalParams b = init_params(h, 3, 99);
  CHECK(a.wm.spellings == b.wm.spellings);
  CHECK(a.lm.trans == b.lm.trans);
  CHECK(a.am.emission[0].mean == b.am.emission[0].mean);
  CHECK(a.am.duration_rate == b.am.duration_rate);
  GlobalParams c = init_params(h, 3, 100);
  CHECK(a.lm.trans != c.lm.trans);

  for (const auto& sp : a.wm.spellings) {
    CHECK(!sp.empty());
    CHECK(sp.size() <= static_cast<std::size_t>(h.max_spelling_len));
    for (int letter : sp) CHECK(letter < h.letters);
  }
  for (int r = 0; r < a.lm.trans.rows(); ++r) {
    CHECK(a.lm.trans.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
  for (int r = 0; r < a.wm.trans.rows(); ++r) {
    CHECK(a.wm.trans.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("degenerate truncation forces the single spelling") {
  HlmHyper h = desk_hyper(1, 1);
  GlobalParams g = init_params(h, 2, 5);
  REQUIRE(g.wm.spellings.size() == 1);
  for (int letter : g.wm.spellings[0]) CHECK(letter == 0);
}

TEST_CASE("flat mode pins identity spellings with J = V") {
  HlmHyper h = desk_hyper(6, 40);
  h.mode = ArticulationMode::kFlatHsmm;
  GlobalParams g = init_params(h, 2, 8);
  CHECK(g.num_words() == 6);
  CHECK(g.num_letters() == 6);
  for (int v = 0; v < g.num_words(); ++v) {
    CHECK(g.wm.spellings[v] == std::vector<int>{v});
  }
}

TEST_CASE("niw prior concentrates as kappa0 grows") {
  NiwParams p;
  p.mu0 = Eigen::Vector2d(1.0, -2.0);
  p.sigma0 = Eigen::Matrix2d::Identity();
  p.kappa0 = 1e8;
  p.nu0 = 10;
  Rng rng(4);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    mean += detail::draw_niw(p, rng).mean;
  }
  mean /= draws;
  CHECK((mean - p.mu0).norm() < 1e-2);
}

TEST_CASE("niw posterior mean matches the conjugate closed form") {
  // n identical frames at c with kappa0 = 0.01: E[mu | data] = n c / (kappa0 + n).
  const int n = 50;
  const double c = 3.0;
  HlmHyper h = desk_hyper(1, 1);
  h.niw.mu0 = Eigen::VectorXd::Zero(1);
  h.niw.sigma0 = Eigen::MatrixXd::Identity(1, 1);
  h.niw.kappa0 = 0.01;
  h.niw.nu0 = 6;
  LetterStats stats(1, 1);
  Eigen::MatrixXd frames = Eigen::MatrixXd::Constant(n, 1, c);
  stats.add_frames(0, frames, 0, n);
  stats.add_segment(0, n);

  Rng rng(8);
  const int draws = 10000;
  double mean = 0.0, sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    AcousticModel am = resample_acoustic(stats, h, rng);
    mean += am.emission[0].mean[0];
    sq += am.emission[0].mean[0] * am.emission[0].mean[0];
  }
  mean /= draws;
  sq = sq / draws - mean * mean;
  const double expected = n * c / (h.niw.kappa0 + n);
  const double sigma = std::sqrt(sq / draws);
  CHECK(std::abs(mean - expected) < 3 * sigma + 1e-9);
}

TEST_CASE("poisson rate posterior matches gamma closed form") {
  // Segments with durations {2,3,4}: posterior Gamma(200+9, 10+3).
  HlmHyper h = desk_hyper(1, 1);
  h.duration_shape0 = 200;
  h.duration_rate0 = 10;
  h.niw.mu0 = Eigen::VectorXd::Zero(1);
  h.niw.sigma0 = Eigen::MatrixXd::Identity(1, 1);
  h.niw.nu0 = 6;
  LetterStats stats(1, 1);
  for (int d : {2, 3, 4}) stats.add_segment(0, d);

  Rng rng(9);
  const int draws = 10000;
  double mean = 0.0;
  for (int i = 0; i < draws; ++i) {
    mean += resample_acoustic(stats, h, rng).duration_rate[0];
  }
  mean /= draws;
  const double expected = 209.0 / 13.0;
  const double sd = std::sqrt(209.0) / 13.0;  // Gamma(209, 13) std
  CHECK(std::abs(mean - expected) < 3 * sd / std::sqrt(draws));
}

TEST_CASE("no-data letters revert to prior draws") {
  HlmHyper h = desk_hyper(1, 1);
  h.niw.mu0 = Eigen::VectorXd::Constant(1, 5.0);
  h.niw.sigma0 = Eigen::MatrixXd::Identity(1, 1);
  h.niw.kappa0 = 4.0;
  h.niw.nu0 = 8;
  LetterStats stats(1, 1);  // empty
  Rng rng(10);
  const int draws = 8000;
  double mean = 0.0, rate = 0.0;
  for (int i = 0; i < draws; ++i) {
    AcousticModel am = resample_acoustic(stats, h, rng);
    mean += am.emission[0].mean[0];
    rate += am.duration_rate[0];
  }
  mean /= draws;
  rate /= draws;
  // Prior: mu ~ N(5, sigma/kappa0) with E[sigma] = I/(nu0-2); lambda ~
  // Gamma(100, 10) with mean 10.
  CHECK(mean == doctest::Approx(5.0).epsilon(0.02));
  CHECK(rate == doctest::Approx(10.0).epsilon(0.02));
}

TEST_CASE("segment_loglik single letter is duration plus emissions") {
  auto inst = oracles::make_tiny_instance();
  const auto& am = inst.params.am;
  const auto& wm = inst.params.wm;
  const int dmax = inst.params.hyper.max_letter_duration;
  const double direct =
      TruncatedPoisson(am.duration_rate[0], dmax)(3) +
      am.emission[0].loglik(inst.frames.row(0).transpose()) +
      am.emission[0].loglik(inst.frames.row(1).transpose()) +
      am.emission[0].loglik(inst.frames.row(2).transpose());
  CHECK(segment_loglik(0, inst.frames, 0, 3, am, wm, dmax) ==
        doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("segment_loglik two letters over two frames has one composition") {
  auto inst = oracles::make_tiny_instance();
  const auto& am = inst.params.am;
  const auto& wm = inst.params.wm;
  const int dmax = inst.params.hyper.max_letter_duration;
  const double direct =
      TruncatedPoisson(am.duration_rate[0], dmax)(1) +
      am.emission[0].loglik(inst.frames.row(2).transpose()) +
      TruncatedPoisson(am.duration_rate[1], dmax)(1) +
      am.emission[1].loglik(inst.frames.row(3).transpose());
  CHECK(segment_loglik(1, inst.frames, 2, 4, am, wm, dmax) ==
        doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("segment_loglik equals brute-force composition sums") {
  auto inst = oracles::make_tiny_instance();
  const auto& am = inst.params.am;
  const auto& wm = inst.params.wm;
  const int dmax = inst.params.hyper.max_letter_duration;
  // Two letters, five frames: exactly the four compositions (1,4)..(4,1).
  const double brute = oracles::segment_loglik_bruteforce(
      wm.spellings[1], inst.frames, 1, 6, am, dmax);
  const double dp = segment_loglik(1, inst.frames, 1, 6, am, wm, dmax);
  CHECK(dp == doctest::Approx(brute).epsilon(1e-10));

  // Shorter than the spelling: log 0.
  CHECK(segment_loglik(1, inst.frames, 0, 1, am, wm, dmax) == kNegInf);

  // Randomized parameterizations, words up to 3 letters, segments up to 8.
  Rng rng(77);
  for (int rep = 0; rep < 100; ++rep) {
    const int letters = 1 + rng.uniform_int(3);
    const int dim = 1 + rng.uniform_int(2);
    AcousticModel ram;
    for (int j = 0; j < letters; ++j) {
      Gaussian g;
      g.mean = rng.normal_vector(dim) * 2.0;
      Eigen::MatrixXd a(dim, dim);
      for (int r = 0; r < dim; ++r) a.row(r) = rng.normal_vector(dim).transpose();
      g.cov = a * a.transpose() + Eigen::MatrixXd::Identity(dim, dim) * 0.5;
      g.finalize();
      ram.emission.push_back(g);
      ram.duration_rate.push_back(0.5 + 4.0 * rng.uniform());
    }
    WordModel rwm;
    const int len = 1 + rng.uniform_int(3);
    std::vector<int> spelling;
    for (int k = 0; k < len; ++k) spelling.push_back(rng.uniform_int(letters));
    rwm.spellings = {spelling};
    const int frames_n = len + rng.uniform_int(9 - len);
    Eigen::MatrixXd frames(frames_n, dim);
    for (int t = 0; t < frames_n; ++t) {
      frames.row(t) = rng.normal_vector(dim).transpose();
    }
    const int rdmax = 2 + rng.uniform_int(6);
    const double b = oracles::segment_loglik_bruteforce(spelling, frames, 0,
                                                        frames_n, ram, rdmax);
    const double d = segment_loglik(0, frames, 0, frames_n, ram, rwm, rdmax);
    if (b == kNegInf) {
      CHECK(d == kNegInf);
    } else {
      CHECK(d == doctest::Approx(b).epsilon(1e-10));
    }
  }
}

TEST_CASE("single word with duration mass at T yields one segment") {
  auto inst = oracles::make_tiny_instance();
  inst.params.wm.spellings = {{0}};
  inst.params.lm.trans = Eigen::MatrixXd::Constant(2, 1, 1.0);
  inst.params.lm.base = Eigen::VectorXd::Constant(1, 1.0);
  inst.params.hyper.words = 1;
  inst.params.hyper.max_letter_duration = 8;
  // Truncated Poisson with a huge rate puts essentially all mass at d = 8.
  inst.params.am.duration_rate = {400.0, 400.0};
  for (int rep = 0; rep < 100; ++rep) {
    const WordSequence seq =
        sample_word_sequence(inst.frames, inst.params, 1000 + rep);
    REQUIRE(seq.segments.size() == 1);
    CHECK(seq.segments[0].word == 0);
    CHECK(seq.segments[0].end == 8);
  }
}

TEST_CASE("sampler matches the enumerated posterior on the tiny instance") {
  auto inst = oracles::make_tiny_instance();
  const auto exact = enumerate_segmentation_posterior(inst.frames, inst.params);
  double mass = 0.0;
  for (double p : exact.probs) mass += p;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

  std::map<std::string, double> exact_map;
  for (std::size_t i = 0; i < exact.configs.size(); ++i) {
    exact_map[sequence_key(exact.configs[i])] = exact.probs[i];
  }
  const int draws = 10000;
  std::map<std::string, double> freq;
  double jll = 0.0;
  for (int i = 0; i < draws; ++i) {
    const WordSequence seq =
        sample_word_sequence(inst.frames, inst.params, 50000 + i, &jll);
    seq.check(8);
    freq[sequence_key(seq)] += 1.0 / draws;
  }
  const double tv = oracles::total_variation(exact_map, freq);
  MESSAGE("tiny-instance total variation: " << tv << " over "
                                            << exact.configs.size()
                                            << " configurations");
  CHECK(tv <= 0.05);
}

TEST_CASE("language model concentrates on a repeated transition") {
  // One observed transition word0 -> word1 repeated many times.
  HlmHyper h = desk_hyper(2, 2);
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(3, 2);
  counts(1, 1) = 10000;  // from word 0 to word 1
  Eigen::MatrixXd trans;
  Eigen::VectorXd base;
  Rng rng(12);
  detail::resample_hdp_bigram(counts, h.alpha_lm, h.gamma_lm,
                              Eigen::Vector2d(0.5, 0.5), &trans, &base, rng);
  CHECK(trans(1, 1) > 0.99);
  for (int r = 0; r < 3; ++r) {
    CHECK(trans.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(base.sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("no observed transitions yield proper prior rows") {
  HlmHyper h = desk_hyper(3, 3);
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(4, 3);
  Eigen::MatrixXd trans;
  Eigen::VectorXd base;
  Rng rng(13);
  detail::resample_hdp_bigram(counts, h.alpha_lm, h.gamma_lm,
                              Eigen::Vector3d(1 / 3.0, 1 / 3.0, 1 / 3.0),
                              &trans, &base, rng);
  for (int r = 0; r < 4; ++r) {
    CHECK(trans.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
    for (int c = 0; c < 3; ++c) CHECK(trans(r, c) >= 0.0);
  }
}

namespace {

std::pair<Corpus, GroundTruth> planted_corpus(double separation,
                                              std::uint64_t seed) {
  SynthSpec spec = default_synth_spec();
  spec.seed = seed;
  spec.separation = separation;
  return generate(spec);
}

}  // namespace

TEST_CASE("iteration keeps sequences tiling and rows normalized") {
  auto [corpus, gt] = planted_corpus(3.0, 21);
  std::vector<const Eigen::MatrixXd*> frames;
  for (const auto& u : corpus.utterances) frames.push_back(&u.frames);
  GlobalParams g = init_params(desk_hyper(), corpus.feature_dim(), 31);
  for (int t = 0; t < 3; ++t) {
    auto res = npb_daa_iteration(frames, g, 500 + t, 1);
    g = res.params;
    REQUIRE(res.sequences.size() == corpus.utterances.size());
    for (std::size_t i = 0; i < res.sequences.size(); ++i) {
      res.sequences[i].check(corpus.utterances[i].num_frames());
      for (const auto& seg : res.sequences[i].segments) {
        const auto& sp = g.wm.spellings[seg.word];
        (void)sp;
      }
    }
    for (int r = 0; r < g.lm.trans.rows(); ++r) {
      CHECK(g.lm.trans.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
    for (int r = 0; r < g.wm.trans.rows(); ++r) {
      CHECK(g.wm.trans.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("letter alignments follow spellings in order") {
  auto inst = oracles::make_tiny_instance();
  for (int rep = 0; rep < 50; ++rep) {
    const WordSequence seq =
        sample_word_sequence(inst.frames, inst.params, 7000 + rep);
    for (const auto& seg : seq.segments) {
      const auto& sp = inst.params.wm.spellings[seg.word];
      REQUIRE(seg.letters.size() == sp.size());
      for (std::size_t k = 0; k < sp.size(); ++k) {
        CHECK(seg.letters[k].letter == sp[k]);
      }
    }
  }
}

TEST_CASE("iteration is deterministic and scheduling independent") {
  auto [corpus, gt] = planted_corpus(3.0, 22);
  std::vector<const Eigen::MatrixXd*> frames;
  for (const auto& u : corpus.utterances) frames.push_back(&u.frames);
  GlobalParams g = init_params(desk_hyper(), corpus.feature_dim(), 77);
  auto a = npb_daa_iteration(frames, g, 900, 1);
  auto b = npb_daa_iteration(frames, g, 900, 4);
  CHECK(a.joint_loglik == b.joint_loglik);
  REQUIRE(a.sequences.size() == b.sequences.size());
  for (std::size_t i = 0; i < a.sequences.size(); ++i) {
    REQUIRE(a.sequences[i].segments.size() == b.sequences[i].segments.size());
    for (std::size_t s = 0; s < a.sequences[i].segments.size(); ++s) {
      CHECK(a.sequences[i].segments[s].word == b.sequences[i].segments[s].word);
      CHECK(a.sequences[i].segments[s].begin ==
            b.sequences[i].segments[s].begin);
    }
  }
  CHECK(a.params.lm.trans == b.params.lm.trans);
}

TEST_CASE("joint log likelihood trends upward") {
  auto [corpus, gt] = planted_corpus(3.0, 23);
  std::vector<const Eigen::MatrixXd*> frames;
  for (const auto& u : corpus.utterances) frames.push_back(&u.frames);
  std::vector<double> deltas(5);
  parallel_for(5, 2, [&](std::size_t s) {
    GlobalParams g = init_params(desk_hyper(), corpus.feature_dim(),
                                 derive_seed(s, {11}));
    std::vector<double> ll;
    for (int t = 0; t < 20; ++t) {
      auto res = npb_daa_iteration(frames, g,
                                   derive_seed(s, {12, (std::uint64_t)t}), 1);
      g = res.params;
      ll.push_back(res.joint_loglik);
    }
    double early = 0, late = 0;
    for (int i = 0; i < 5; ++i) early += ll[i];
    for (int i = 15; i < 20; ++i) late += ll[i];
    deltas[s] = late - early;
  });
  CHECK(median(deltas) > 0.0);
}

TEST_CASE("utterance shorter than every spelling falls back with a warning") {
  auto inst = oracles::make_tiny_instance();
  inst.params.wm.spellings = {{0, 1}, {0, 1}};  // both need >= 2 frames
  Eigen::MatrixXd one_frame(1, 1);
  one_frame << 0.0;
  const WordSequence seq = sample_word_sequence(one_frame, inst.params, 3);
  seq.check(1);
  REQUIRE(seq.segments.size() == 1);
  CHECK(seq.segments[0].letters.size() == 1);
}

TEST_CASE("planted corpus is learned") {
  // Well-separated Gaussians and a compact six-word lexicon; median
  // frame-level word ARI over 10 seeds after 100 iterations.
  SynthSpec spec = default_synth_spec();
  spec.seed = 3;
  spec.separation = 5.0;
  spec.lexicon = {{0, 1, 2}, {2, 3, 4}, {4, 5, 0}, {1, 3, 5}, {0, 4}, {2, 5}};
  spec.category_word_dist.assign(3, std::vector<double>(6, 0.0));
  for (int k = 0; k < 3; ++k) {
    spec.category_word_dist[k][k] = 0.45;
    spec.category_word_dist[k][3] = 0.15;
    spec.category_word_dist[k][4] = 0.2;
    spec.category_word_dist[k][5] = 0.2;
  }
  spec.words_per_utterance = 5;
  auto [corpus, gt] = generate(spec);
  std::vector<const Eigen::MatrixXd*> frames;
  for (const auto& u : corpus.utterances) frames.push_back(&u.frames);
  const FrameLabels truth = gt_frame_labels(corpus);
  std::vector<double> aris(10);
  parallel_for(10, 2, [&](std::size_t s) {
    GlobalParams g = init_params(desk_hyper(), corpus.feature_dim(),
                                 derive_seed(1000 + s, {1}));
    std::vector<WordSequence> seqs;
    for (int t = 1; t <= 100; ++t) {
      auto res = npb_daa_iteration(
          frames, g, derive_seed(1000 + s, {2, (std::uint64_t)t}), 1);
      g = res.params;
      seqs = std::move(res.sequences);
    }
    FrameLabels pred = frame_label_matrix(corpus, seqs);
    aris[s] = ari(pred.word, truth.word);
  });
  MESSAGE("planted word ARI median: " << median(aris));
  CHECK(median(aris) >= 0.6);
}

TEST_CASE("flat mode recovers single-letter-word boundaries") {
  SynthSpec spec = default_synth_spec();
  spec.seed = 5;
  spec.separation = 4.0;
  spec.lexicon = {{0}, {1}, {2}, {3}, {4}, {5}};
  spec.category_word_dist.assign(3, std::vector<double>(6, 0.0));
  for (int k = 0; k < 3; ++k) {
    spec.category_word_dist[k][2 * k] = 0.4;
    spec.category_word_dist[k][2 * k + 1] = 0.3;
    spec.category_word_dist[k][(2 * k + 2) % 6] = 0.3;
  }
  spec.words_per_utterance = 5;
  auto [corpus, gt] = generate(spec);
  std::vector<const Eigen::MatrixXd*> frames;
  for (const auto& u : corpus.utterances) frames.push_back(&u.frames);
  const FrameLabels truth = gt_frame_labels(corpus);

  HlmHyper h = desk_hyper(8, 8);
  h.mode = ArticulationMode::kFlatHsmm;
  std::vector<double> aris(6);
  parallel_for(6, 2, [&](std::size_t s) {
    GlobalParams g = init_params(h, corpus.feature_dim(),
                                 derive_seed(2000 + s, {1}));
    std::vector<WordSequence> seqs;
    for (int t = 1; t <= 50; ++t) {
      auto res = npb_daa_iteration(
          frames, g, derive_seed(2000 + s, {2, (std::uint64_t)t}), 1);
      g = res.params;
      seqs = std::move(res.sequences);
      // Spellings never change in flat mode.
      for (int v = 0; v < g.num_words(); ++v) {
        REQUIRE(g.wm.spellings[v] == std::vector<int>{v});
      }
    }
    FrameLabels pred = frame_label_matrix(corpus, seqs);
    aris[s] = ari(pred.word, truth.word);
  });
  MESSAGE("flat-mode word ARI median: " << median(aris));
  CHECK(median(aris) >= 0.6);
}
