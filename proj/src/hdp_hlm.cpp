// src/hdp_hlm.cpp
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

#include "codaa/hdp_hlm.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "codaa/parallel.hpp"

namespace codaa {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

// Online log-sum-exp accumulator for tight inner loops.
struct LogAcc {
  double m = kNegInf;
  double s = 0.0;
  void add(double x) {
    if (x == kNegInf) return;
    if (x <= m) {
      s += std::exp(x - m);
    } else {
      s = s * std::exp(m - x) + 1.0;
      m = x;
    }
  }
  double value() const { return m == kNegInf ? kNegInf : m + std::log(s); }
};

Eigen::MatrixXd log_matrix(const Eigen::MatrixXd& m) {
  return m.unaryExpr([](double x) { return x > 0 ? std::log(x) : kNegInf; });
}

}  // namespace

void Gaussian::finalize() {
  const int dim = static_cast<int>(cov.rows());
  Eigen::MatrixXd c = 0.5 * (cov + cov.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  double jitter = 1e-8 * c.trace() / dim;
  int attempts = 0;
  while (llt.info() != Eigen::Success && attempts < 8) {
    c += jitter * Eigen::MatrixXd::Identity(dim, dim);
    llt.compute(c);
    jitter *= 10.0;
    ++attempts;
  }
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("covariance is not positive definite");
  }
  cov = c;
  chol = llt.matrixL();
  log_norm = -0.5 * dim * kLog2Pi;
  for (int i = 0; i < dim; ++i) log_norm -= std::log(chol(i, i));
}

double Gaussian::loglik(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  Eigen::VectorXd v = chol.triangularView<Eigen::Lower>().solve(y - mean);
  return log_norm - 0.5 * v.squaredNorm();
}

Eigen::VectorXd Gaussian::loglik_rows(const Eigen::MatrixXd& frames) const {
  Eigen::MatrixXd centered = frames.transpose().colwise() - mean;
  Eigen::MatrixXd v = chol.triangularView<Eigen::Lower>().solve(centered);
  return (-0.5 * v.colwise().squaredNorm().array() + log_norm)
      .matrix()
      .transpose();
}

namespace detail {

FrameLoglik::FrameLoglik(const Eigen::MatrixXd& frames,
                         const AcousticModel& am) {
  const int letters = static_cast<int>(am.emission.size());
  const int frames_n = static_cast<int>(frames.rows());
  cum_ = Eigen::MatrixXd::Zero(letters, frames_n + 1);
  for (int j = 0; j < letters; ++j) {
    Eigen::VectorXd ll = am.emission[j].loglik_rows(frames);
    double acc = 0.0;
    for (int t = 0; t < frames_n; ++t) {
      acc += ll[t];
      cum_(j, t + 1) = acc;
    }
  }
}

Gaussian draw_niw(const NiwParams& prior, Rng& rng) {
  const int dim = static_cast<int>(prior.mu0.size());
  if (prior.nu0 <= dim - 1) {
    throw std::invalid_argument("NIW nu0 must exceed dim - 1");
  }
  // Inverse Wishart via Bartlett: with psi = L L^T and A the Bartlett factor
  // for an identity-scale Wishart, sigma = (L A^-T)(L A^-T)^T.
  Eigen::LLT<Eigen::MatrixXd> llt(prior.sigma0);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("NIW sigma0 is not positive definite");
  }
  Eigen::MatrixXd l = llt.matrixL();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(prior.nu0 - i));
    for (int j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  Eigen::MatrixXd a_inv = a.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(dim, dim));
  Eigen::MatrixXd m = l * a_inv.transpose();
  Gaussian g;
  g.cov = m * m.transpose();
  g.finalize();
  // mu | sigma ~ N(mu0, sigma / kappa0)
  Eigen::VectorXd z = rng.normal_vector(dim);
  g.mean = prior.mu0 + g.chol * z / std::sqrt(prior.kappa0);
  return g;
}

std::vector<int> draw_spelling_prior(const Eigen::MatrixXd& wm_trans,
                                     double mean_len, int max_len, Rng& rng) {
  const double p = 1.0 / std::max(1.0, mean_len);
  std::geometric_distribution<int> geom(p);
  int len = 1 + geom(rng.engine());
  len = std::min(len, max_len);
  std::vector<int> spelling;
  spelling.reserve(len);
  int row = 0;  // word-start state
  const int letters = static_cast<int>(wm_trans.cols());
  for (int i = 0; i < len; ++i) {
    Eigen::VectorXd r = wm_trans.row(row);
    const int c = rng.discrete(std::span<const double>(r.data(), letters));
    spelling.push_back(c);
    row = c + 1;
  }
  return spelling;
}

void resample_hdp_bigram(const Eigen::MatrixXi& counts, double alpha,
                         double gamma, const Eigen::VectorXd& old_base,
                         Eigen::MatrixXd* trans, Eigen::VectorXd* base,
                         Rng& rng) {
  const int rows = static_cast<int>(counts.rows());
  const int cols = static_cast<int>(counts.cols());
  Eigen::VectorXd tables = Eigen::VectorXd::Zero(cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (counts(r, c) > 0) {
        tables[c] += rng.crt_count(counts(r, c), alpha * old_base[c]);
      }
    }
  }
  *base = rng.dirichlet(Eigen::VectorXd::Constant(cols, gamma / cols) + tables);
  trans->resize(rows, cols);
  for (int r = 0; r < rows; ++r) {
    Eigen::VectorXd conc = alpha * (*base) + counts.row(r).cast<double>().transpose();
    trans->row(r) = rng.dirichlet(conc).transpose();
  }
}

DecodeContext::DecodeContext(const GlobalParams& params) {
  num_words = params.num_words();
  max_letter_duration = params.hyper.max_letter_duration;
  log_lm = log_matrix(params.lm.trans);
  const int letters = params.num_letters();
  duration.reserve(letters);
  for (int j = 0; j < letters; ++j) {
    duration.emplace_back(params.am.duration_rate[j], max_letter_duration);
  }
  word_first_state.resize(num_words);
  for (int v = 0; v < num_words; ++v) {
    const auto& sp = params.wm.spellings[v];
    word_first_state[v] = static_cast<int>(state_letter.size());
    for (std::size_t k = 0; k < sp.size(); ++k) {
      state_letter.push_back(sp[k]);
      state_word.push_back(v);
      state_next.push_back(k + 1 < sp.size()
                               ? static_cast<int>(state_letter.size())
                               : -1);
    }
  }
}

namespace {

// Degenerate path used when no tiling of [0, T) exists (every spelling is
// longer than the utterance): emit one segment of the shortest word with a
// one-frame prefix alignment and warn.
WordSequence fallback_sequence(const GlobalParams& params, int frames_n,
                               double* joint_loglik) {
  int best = 0;
  for (int v = 1; v < params.num_words(); ++v) {
    if (params.wm.spellings[v].size() < params.wm.spellings[best].size()) {
      best = v;
    }
  }
  std::fprintf(stderr,
               "warning: utterance of %d frames is shorter than every "
               "spelling; assigning word %d with truncated alignment\n",
               frames_n, best);
  WordSequence seq;
  Segment seg;
  seg.word = best;
  seg.begin = 0;
  seg.end = frames_n;
  const auto& sp = params.wm.spellings[best];
  for (int t = 0; t < frames_n; ++t) {
    seg.letters.push_back({sp[t % sp.size()], 1});
  }
  seq.segments.push_back(seg);
  if (joint_loglik) *joint_loglik = kNegInf;
  return seq;
}

}  // namespace

WordSequence ffbs_sample(const Eigen::MatrixXd& frames,
                         const DecodeContext& ctx, const FrameLoglik& ll,
                         Rng& rng, double* joint_loglik) {
  const int frames_n = static_cast<int>(frames.rows());
  const int states = static_cast<int>(ctx.state_letter.size());
  const int words = ctx.num_words;
  const int dmax = ctx.max_letter_duration;

  // beta[t][u]: probability of finishing the utterance given a segment of
  // super-state u just ended at t. betastar[t][u]: same given a segment of u
  // is about to start at t. Tiling is enforced through the t == T boundary.
  std::vector<double> beta(static_cast<std::size_t>(frames_n + 1) * states);
  std::vector<double> betastar(beta.size());
  auto b = [&](int t, int u) -> double& {
    return beta[static_cast<std::size_t>(t) * states + u];
  };
  auto bs = [&](int t, int u) -> double& {
    return betastar[static_cast<std::size_t>(t) * states + u];
  };

  for (int u = 0; u < states; ++u) {
    b(frames_n, u) = ctx.state_next[u] < 0 ? 0.0 : kNegInf;
  }
  std::vector<double> first(words);
  for (int t = frames_n - 1; t >= 0; --t) {
    const int dcap = std::min(dmax, frames_n - t);
    for (int u = 0; u < states; ++u) {
      const int j = ctx.state_letter[u];
      const auto& dur = ctx.duration[j];
      LogAcc acc;
      for (int d = 1; d <= dcap; ++d) {
        acc.add(dur.logpmf[d] + ll.range(j, t, t + d) + b(t + d, u));
      }
      bs(t, u) = acc.value();
    }
    for (int v = 0; v < words; ++v) first[v] = bs(t, ctx.word_first_state[v]);
    for (int u = 0; u < states; ++u) {
      if (ctx.state_next[u] >= 0) {
        b(t, u) = bs(t, ctx.state_next[u]);
      } else {
        const int row = ctx.state_word[u] + 1;
        LogAcc acc;
        for (int v = 0; v < words; ++v) acc.add(ctx.log_lm(row, v) + first[v]);
        b(t, u) = acc.value();
      }
    }
  }

  // Forward sampling.
  std::vector<double> wbuf(std::max(words, dmax + 1));
  auto sample_word = [&](int row, int t) {
    for (int v = 0; v < words; ++v) {
      wbuf[v] = ctx.log_lm(row, v) + bs(t, ctx.word_first_state[v]);
    }
    return rng.discrete_log(std::span<const double>(wbuf.data(), words));
  };

  double total = kNegInf;
  {
    LogAcc acc;
    for (int v = 0; v < words; ++v) {
      acc.add(ctx.log_lm(0, v) + bs(0, ctx.word_first_state[v]));
    }
    total = acc.value();
  }
  if (total == kNegInf) {
    // No feasible tiling; the caller's params make every word longer than T.
    GlobalParams dummy;  // only spellings are needed by the fallback
    dummy.wm.spellings.resize(words);
    for (int u = 0; u < states; ++u) {
      dummy.wm.spellings[ctx.state_word[u]].push_back(ctx.state_letter[u]);
    }
    return fallback_sequence(dummy, frames_n, joint_loglik);
  }

  WordSequence seq;
  double jll = 0.0;
  int t = 0;
  int word = sample_word(0, 0);
  jll += ctx.log_lm(0, word);
  int u = ctx.word_first_state[word];
  Segment seg;
  seg.word = word;
  seg.begin = 0;
  while (t < frames_n) {
    const int j = ctx.state_letter[u];
    const auto& dur = ctx.duration[j];
    const int dcap = std::min(dmax, frames_n - t);
    for (int d = 1; d <= dcap; ++d) {
      wbuf[d - 1] = dur.logpmf[d] + ll.range(j, t, t + d) + b(t + d, u);
    }
    const int d =
        1 + rng.discrete_log(std::span<const double>(wbuf.data(), dcap));
    jll += dur.logpmf[d] + ll.range(j, t, t + d);
    seg.letters.push_back({j, d});
    t += d;
    if (ctx.state_next[u] >= 0) {
      u = ctx.state_next[u];
      continue;
    }
    seg.end = t;
    seq.segments.push_back(std::move(seg));
    seg = Segment{};
    if (t == frames_n) break;
    const int row = seq.segments.back().word + 1;
    word = sample_word(row, t);
    jll += ctx.log_lm(row, word);
    u = ctx.word_first_state[word];
    seg.word = word;
    seg.begin = t;
  }
  if (joint_loglik) *joint_loglik = jll;
  return seq;
}

std::vector<int> decode_letter_chain(const Eigen::MatrixXd& frames, int t1,
                                     int t2, const AcousticModel& am,
                                     const WordModel& wm,
                                     int max_letter_duration, Rng& rng) {
  const int n = t2 - t1;
  const int letters = static_cast<int>(am.emission.size());
  const int dmax = std::min(max_letter_duration, n);

  // Local per-letter frame log densities with prefix sums over [t1, t2).
  Eigen::MatrixXd cum = Eigen::MatrixXd::Zero(letters, n + 1);
  const Eigen::MatrixXd span = frames.middleRows(t1, n);
  for (int j = 0; j < letters; ++j) {
    Eigen::VectorXd ll = am.emission[j].loglik_rows(span);
    for (int t = 0; t < n; ++t) cum(j, t + 1) = cum(j, t) + ll[t];
  }
  std::vector<TruncatedPoisson> dur;
  dur.reserve(letters);
  for (int j = 0; j < letters; ++j) {
    dur.emplace_back(am.duration_rate[j], max_letter_duration);
  }
  const Eigen::MatrixXd log_wm = log_matrix(wm.trans);

  std::vector<double> beta(static_cast<std::size_t>(n + 1) * letters, 0.0);
  std::vector<double> betastar(beta.size(), kNegInf);
  auto b = [&](int t, int j) -> double& {
    return beta[static_cast<std::size_t>(t) * letters + j];
  };
  auto s = [&](int t, int j) -> double& {
    return betastar[static_cast<std::size_t>(t) * letters + j];
  };
  for (int t = n - 1; t >= 0; --t) {
    const int dcap = std::min(dmax, n - t);
    for (int j = 0; j < letters; ++j) {
      LogAcc acc;
      for (int d = 1; d <= dcap; ++d) {
        acc.add(dur[j].logpmf[d] + (cum(j, t + d) - cum(j, t)) + b(t + d, j));
      }
      s(t, j) = acc.value();
    }
    for (int j = 0; j < letters; ++j) {
      LogAcc acc;
      for (int j2 = 0; j2 < letters; ++j2) {
        acc.add(log_wm(j + 1, j2) + s(t, j2));
      }
      b(t, j) = acc.value();
    }
  }

  std::vector<double> wbuf(std::max(letters, dmax + 1));
  std::vector<int> chain;
  int t = 0;
  int row = 0;
  while (t < n) {
    for (int j = 0; j < letters; ++j) wbuf[j] = log_wm(row, j) + s(t, j);
    const int j = rng.discrete_log(std::span<const double>(wbuf.data(), letters));
    const int dcap = std::min(dmax, n - t);
    for (int d = 1; d <= dcap; ++d) {
      wbuf[d - 1] = dur[j].logpmf[d] + (cum(j, t + d) - cum(j, t)) + b(t + d, j);
    }
    const int d = 1 + rng.discrete_log(std::span<const double>(wbuf.data(), dcap));
    chain.push_back(j);
    t += d;
    row = j + 1;
  }
  return chain;
}

}  // namespace detail

GlobalParams init_params(const HlmHyper& hyper, int feature_dim,
                         std::uint64_t seed) {
  HlmHyper h = hyper;
  if (h.mode == ArticulationMode::kFlatHsmm) h.words = h.letters;
  if (h.niw.mu0.size() == 0) h.niw.mu0 = Eigen::VectorXd::Zero(feature_dim);
  if (h.niw.sigma0.size() == 0) {
    h.niw.sigma0 = Eigen::MatrixXd::Identity(feature_dim, feature_dim);
  }
  if (h.niw.nu0 <= 0.0) h.niw.nu0 = feature_dim + 5;
  if (h.letters < 1 || h.words < 1) {
    throw std::invalid_argument("truncations must be >= 1");
  }

  GlobalParams params;
  params.hyper = h;

  Rng rng = Rng::derive(seed, Stream::kInitParams);
  params.am.emission.reserve(h.letters);
  for (int j = 0; j < h.letters; ++j) {
    params.am.emission.push_back(detail::draw_niw(h.niw, rng));
    params.am.duration_rate.push_back(
        rng.gamma(h.duration_shape0, h.duration_rate0));
  }

  // Letter bigram from its weak-limit prior.
  params.wm.base = rng.dirichlet(
      Eigen::VectorXd::Constant(h.letters, h.gamma_wm / h.letters));
  params.wm.trans.resize(h.letters + 1, h.letters);
  for (int r = 0; r <= h.letters; ++r) {
    params.wm.trans.row(r) =
        rng.dirichlet(h.alpha_wm * params.wm.base).transpose();
  }

  params.wm.spellings.resize(h.words);
  if (h.mode == ArticulationMode::kFlatHsmm) {
    for (int v = 0; v < h.words; ++v) params.wm.spellings[v] = {v};
  } else {
    for (int v = 0; v < h.words; ++v) {
      params.wm.spellings[v] = detail::draw_spelling_prior(
          params.wm.trans, h.mean_spelling_len, h.max_spelling_len, rng);
    }
  }

  params.lm.base =
      rng.dirichlet(Eigen::VectorXd::Constant(h.words, h.gamma_lm / h.words));
  params.lm.trans.resize(h.words + 1, h.words);
  for (int r = 0; r <= h.words; ++r) {
    params.lm.trans.row(r) =
        rng.dirichlet(h.alpha_lm * params.lm.base).transpose();
  }
  return params;
}

double segment_loglik(int word, const Eigen::MatrixXd& frames, int t1, int t2,
                      const AcousticModel& am, const WordModel& wm,
                      int max_letter_duration) {
  if (t2 <= t1 || t1 < 0 || t2 > frames.rows()) {
    throw std::invalid_argument("bad segment bounds");
  }
  const auto& spelling = wm.spellings.at(word);
  const int len = static_cast<int>(spelling.size());
  const int n = t2 - t1;
  if (n < len) return kNegInf;

  // Emission prefix sums for the letters this spelling uses.
  Eigen::MatrixXd cum = Eigen::MatrixXd::Zero(len, n + 1);
  const Eigen::MatrixXd span = frames.middleRows(t1, n);
  for (int k = 0; k < len; ++k) {
    Eigen::VectorXd ll = am.emission[spelling[k]].loglik_rows(span);
    for (int t = 0; t < n; ++t) cum(k, t + 1) = cum(k, t) + ll[t];
  }

  // a[k][tau] = log P(first k letters consume first tau frames).
  std::vector<double> prev(n + 1, kNegInf), cur(n + 1, kNegInf);
  prev[0] = 0.0;
  for (int k = 1; k <= len; ++k) {
    const TruncatedPoisson dur(am.duration_rate[spelling[k - 1]],
                               max_letter_duration);
    std::fill(cur.begin(), cur.end(), kNegInf);
    for (int tau = k; tau <= n; ++tau) {
      LogAcc acc;
      const int dcap = std::min(max_letter_duration, tau - (k - 1));
      for (int d = 1; d <= dcap; ++d) {
        acc.add(prev[tau - d] + dur.logpmf[d] +
                (cum(k - 1, tau) - cum(k - 1, tau - d)));
      }
      cur[tau] = acc.value();
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

WordSequence sample_word_sequence(const Eigen::MatrixXd& frames,
                                  const GlobalParams& params,
                                  std::uint64_t seed, double* joint_loglik) {
  if (frames.rows() > params.hyper.max_utterance_frames) {
    throw std::invalid_argument("utterance exceeds configured maximum length");
  }
  detail::DecodeContext ctx(params);
  detail::FrameLoglik ll(frames, params.am);
  Rng rng = Rng::derive(seed, Stream::kFfbs);
  return detail::ffbs_sample(frames, ctx, ll, rng, joint_loglik);
}

LetterStats::LetterStats(int letters, int dim)
    : frame_count(letters, 0.0),
      frame_sum(letters, Eigen::VectorXd::Zero(dim)),
      frame_sumsq(letters, Eigen::MatrixXd::Zero(dim, dim)),
      segment_count(letters, 0.0),
      duration_sum(letters, 0.0) {}

void LetterStats::add_frames(int letter, const Eigen::MatrixXd& frames,
                             int t1, int t2) {
  for (int t = t1; t < t2; ++t) {
    const Eigen::VectorXd y = frames.row(t).transpose();
    frame_count[letter] += 1.0;
    frame_sum[letter] += y;
    frame_sumsq[letter] += y * y.transpose();
  }
}

void LetterStats::add_segment(int letter, int duration) {
  segment_count[letter] += 1.0;
  duration_sum[letter] += duration;
}

LetterStats collect_letter_stats(
    const std::vector<const Eigen::MatrixXd*>& utterances,
    const std::vector<WordSequence>& seqs, int letters, int dim) {
  LetterStats stats(letters, dim);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    for (const auto& seg : seqs[i].segments) {
      int t = seg.begin;
      for (const auto& ls : seg.letters) {
        stats.add_frames(ls.letter, *utterances[i], t, t + ls.duration);
        stats.add_segment(ls.letter, ls.duration);
        t += ls.duration;
      }
    }
  }
  return stats;
}

AcousticModel resample_acoustic(const LetterStats& stats,
                                const HlmHyper& hyper, Rng& rng) {
  const int letters = static_cast<int>(stats.frame_count.size());
  const int dim = static_cast<int>(hyper.niw.mu0.size());
  AcousticModel am;
  am.emission.reserve(letters);
  for (int j = 0; j < letters; ++j) {
    const double n = stats.frame_count[j];
    NiwParams post = hyper.niw;
    if (n > 0) {
      const Eigen::VectorXd ybar = stats.frame_sum[j] / n;
      const Eigen::MatrixXd scatter =
          stats.frame_sumsq[j] - n * ybar * ybar.transpose();
      const Eigen::VectorXd diff = ybar - hyper.niw.mu0;
      post.kappa0 = hyper.niw.kappa0 + n;
      post.nu0 = hyper.niw.nu0 + n;
      post.mu0 = (hyper.niw.kappa0 * hyper.niw.mu0 + stats.frame_sum[j]) /
                 post.kappa0;
      post.sigma0 = hyper.niw.sigma0 + scatter +
                    (hyper.niw.kappa0 * n / post.kappa0) * diff *
                        diff.transpose();
      post.sigma0 = 0.5 * (post.sigma0 + post.sigma0.transpose()).eval();
      // Guard round-off from the scatter subtraction.
      post.sigma0 +=
          1e-10 * post.sigma0.trace() / dim * Eigen::MatrixXd::Identity(dim, dim);
    }
    am.emission.push_back(detail::draw_niw(post, rng));
    am.duration_rate.push_back(
        rng.gamma(hyper.duration_shape0 + stats.duration_sum[j],
                  hyper.duration_rate0 + stats.segment_count[j]));
  }
  return am;
}

std::pair<LanguageModel, WordModel> resample_language_and_word_models(
    const std::vector<const Eigen::MatrixXd*>& utterances,
    const std::vector<WordSequence>& seqs, const GlobalParams& params,
    std::uint64_t seed) {
  const int words = params.num_words();
  const int letters = params.num_letters();
  const HlmHyper& h = params.hyper;

  // Owning segments per word.
  std::vector<std::vector<std::pair<int, int>>> owners(words);
  Eigen::MatrixXi lm_counts = Eigen::MatrixXi::Zero(words + 1, words);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    int prev = 0;
    for (std::size_t s = 0; s < seqs[i].segments.size(); ++s) {
      const auto& seg = seqs[i].segments[s];
      owners[seg.word].push_back({static_cast<int>(i), static_cast<int>(s)});
      lm_counts(prev, seg.word) += 1;
      prev = seg.word + 1;
    }
  }

  WordModel wm = params.wm;
  if (h.mode != ArticulationMode::kFlatHsmm) {
    Rng spelling_rng = Rng::derive(seed, Stream::kSpelling);
    for (int v = 0; v < words; ++v) {
      if (owners[v].empty()) {
        wm.spellings[v] = detail::draw_spelling_prior(
            params.wm.trans, h.mean_spelling_len, h.max_spelling_len,
            spelling_rng);
        continue;
      }
      const auto [ui, si] =
          owners[v][spelling_rng.uniform_int(static_cast<int>(owners[v].size()))];
      const auto& seg = seqs[ui].segments[si];
      std::vector<int> spelling;
      if (h.spelling_rule == SpellingResampleRule::kCopy) {
        for (const auto& ls : seg.letters) spelling.push_back(ls.letter);
      } else {
        spelling = detail::decode_letter_chain(
            *utterances[ui], seg.begin, seg.end, params.am, params.wm,
            h.max_letter_duration, spelling_rng);
      }
      if (static_cast<int>(spelling.size()) > h.max_spelling_len) {
        spelling.resize(h.max_spelling_len);
      }
      wm.spellings[v] = std::move(spelling);
    }

    Eigen::MatrixXi wm_counts = Eigen::MatrixXi::Zero(letters + 1, letters);
    for (const auto& sp : wm.spellings) {
      int prev = 0;
      for (int c : sp) {
        wm_counts(prev, c) += 1;
        prev = c + 1;
      }
    }
    Rng wm_rng = Rng::derive(seed, Stream::kWordModel);
    detail::resample_hdp_bigram(wm_counts, h.alpha_wm, h.gamma_wm,
                                params.wm.base, &wm.trans, &wm.base, wm_rng);
  }

  LanguageModel lm;
  Rng lm_rng = Rng::derive(seed, Stream::kLanguageModel);
  detail::resample_hdp_bigram(lm_counts, h.alpha_lm, h.gamma_lm,
                              params.lm.base, &lm.trans, &lm.base, lm_rng);
  return {std::move(lm), std::move(wm)};
}

IterationResult npb_daa_iteration(
    const std::vector<const Eigen::MatrixXd*>& utterances,
    const GlobalParams& params, std::uint64_t seed, int workers) {
  IterationResult result;
  result.sequences.resize(utterances.size());
  std::vector<double> jll(utterances.size(), 0.0);

  detail::DecodeContext ctx(params);
  parallel_for(utterances.size(), workers, [&](std::size_t i) {
    const Eigen::MatrixXd& frames = *utterances[i];
    if (frames.rows() > params.hyper.max_utterance_frames) {
      throw std::invalid_argument("utterance exceeds configured maximum length");
    }
    detail::FrameLoglik ll(frames, params.am);
    Rng rng = Rng::derive(seed, Stream::kFfbs, {static_cast<std::uint64_t>(i)});
    result.sequences[i] = detail::ffbs_sample(frames, ctx, ll, rng, &jll[i]);
  });
  for (double x : jll) result.joint_loglik += x;

  const int dim = static_cast<int>(utterances[0]->cols());
  LetterStats stats = collect_letter_stats(utterances, result.sequences,
                                           params.num_letters(), dim);
  result.params = params;
  Rng am_rng = Rng::derive(seed, Stream::kAcoustic);
  result.params.am = resample_acoustic(stats, params.hyper, am_rng);

  GlobalParams mid = result.params;  // new AM, old WM/LM for the decode step
  mid.wm = params.wm;
  mid.lm = params.lm;
  auto [lm, wm] =
      resample_language_and_word_models(utterances, result.sequences, mid, seed);
  result.params.lm = std::move(lm);
  result.params.wm = std::move(wm);
  return result;
}

std::string GlobalParams::to_json() const {
  nlohmann::json j;
  j["letters"] = num_letters();
  j["words"] = num_words();
  j["mode"] = hyper.mode == ArticulationMode::kFlatHsmm ? "flat-hsmm"
                                                        : "double-articulation";
  j["spellings"] = wm.spellings;
  j["duration_rate"] = am.duration_rate;
  auto dump_matrix = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  j["lm_trans"] = dump_matrix(lm.trans);
  j["wm_trans"] = dump_matrix(wm.trans);
  nlohmann::json gauss = nlohmann::json::array();
  for (const auto& g : am.emission) {
    nlohmann::json e;
    e["mean"] = std::vector<double>(g.mean.data(), g.mean.data() + g.mean.size());
    e["cov"] = dump_matrix(g.cov);
    gauss.push_back(std::move(e));
  }
  j["emission"] = std::move(gauss);
  return j.dump();
}

}  // namespace codaa
