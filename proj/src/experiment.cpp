// src/experiment.cpp
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

#include "codaa/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "codaa/csv.hpp"
#include "codaa/eval.hpp"

namespace codaa {

using nlohmann::json;

namespace {

const std::set<std::string> kMethods = {"npb-daa", "mlda-only",
                                        "hdp-hsmm-mlda", "cooccur-daa"};

std::string schedule_name(ScheduleMode mode) {
  switch (mode) {
    case ScheduleMode::kFixed: return "fixed";
    case ScheduleMode::kIncrease: return "increase";
    case ScheduleMode::kDecrease: return "decrease";
  }
  return "fixed";
}

ScheduleMode schedule_from_name(const std::string& name) {
  if (name == "fixed") return ScheduleMode::kFixed;
  if (name == "increase") return ScheduleMode::kIncrease;
  if (name == "decrease") return ScheduleMode::kDecrease;
  throw ConfigError("unknown word weight schedule '" + name + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!kMethods.count(method)) {
    throw ConfigError("unknown method '" + method + "'");
  }
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (!seeds.empty() && static_cast<int>(seeds.size()) != trials) {
    throw ConfigError("seeds list must match the trial count");
  }
  run.validate();
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  if (name == "paper-desk") {
    c.run.candidates = 10;
    c.run.outer_iterations = 100;
    c.run.mlda.categories = 7;
    c.run.mlda.alpha = 7.1;
    c.run.mlda.beta = 0.1;
    c.run.mlda.sweeps = 1000;
    c.run.modality_weights = {{"audio", 50}, {"haptic", 100}, {"vision", 100}};
    c.run.word_weight = {ScheduleMode::kFixed, 200.0};
    c.run.hlm.letters = 50;
    c.run.hlm.words = 50;
    c.run.hlm.max_letter_duration = 40;
    c.run.hlm.duration_shape0 = 200.0;
    c.run.hlm.duration_rate0 = 10.0;
  } else if (name == "desk-fast") {
    c.run.candidates = 4;
    c.run.outer_iterations = 50;
    c.run.mlda.categories = 3;
    c.run.mlda.alpha = 50.0 / 3.0;
    c.run.mlda.beta = 0.1;
    c.run.mlda.sweeps = 200;
    c.run.modality_weights = {{"audio", 50}, {"haptic", 100}, {"vision", 100}};
    c.run.word_weight = {ScheduleMode::kFixed, 200.0};
    c.run.hlm.letters = 9;
    c.run.hlm.words = 40;
    c.run.hlm.max_letter_duration = 20;
    c.run.hlm.duration_shape0 = 100.0;
    c.run.hlm.duration_rate0 = 10.0;
    c.run.hlm.gamma_lm = 20.0;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  if (j.contains("preset")) c = preset_config(j["preset"].get<std::string>());

  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  get("method", c.method);
  if (j.contains("corpus")) c.corpus_path = j["corpus"].get<std::string>();
  if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
  get("trials", c.trials);
  get("seed", c.base_seed);
  get("seeds", c.seeds);
  get("dump_state", c.dump_state);
  get("mlda_use_gt_words", c.mlda_use_gt_words);
  get("gt_word_weight", c.gt_word_weight);
  get("candidates", c.run.candidates);
  get("outer_iterations", c.run.outer_iterations);
  get("workers", c.run.workers);
  if (j.contains("mlda")) {
    const auto& m = j["mlda"];
    if (m.contains("categories")) c.run.mlda.categories = m["categories"];
    if (m.contains("alpha")) c.run.mlda.alpha = m["alpha"];
    if (m.contains("beta")) c.run.mlda.beta = m["beta"];
    if (m.contains("sweeps")) c.run.mlda.sweeps = m["sweeps"];
    if (m.contains("beta_override")) {
      c.run.mlda.beta_override =
          m["beta_override"].get<std::map<std::string, double>>();
    }
  }
  if (j.contains("modality_weights")) {
    c.run.modality_weights =
        j["modality_weights"].get<std::map<std::string, double>>();
  }
  if (j.contains("word_weight")) {
    const auto& w = j["word_weight"];
    if (w.contains("mode")) {
      c.run.word_weight.mode = schedule_from_name(w["mode"]);
    }
    if (w.contains("value")) c.run.word_weight.fixed_value = w["value"];
  }
  if (j.contains("sir_mode")) {
    const std::string s = j["sir_mode"];
    if (s == "ur") {
      c.run.sir_mode = SirMode::kUnigramRescale;
    } else if (s == "mi") {
      c.run.sir_mode = SirMode::kMutualInformation;
    } else {
      throw ConfigError("sir_mode must be 'ur' or 'mi'");
    }
  }
  get("ur_pi_weighted_denominator", c.run.ur_pi_weighted_denominator);
  if (j.contains("hlm")) {
    const auto& h = j["hlm"];
    auto& hl = c.run.hlm;
    if (h.contains("letters")) hl.letters = h["letters"];
    if (h.contains("words")) hl.words = h["words"];
    if (h.contains("max_letter_duration")) {
      hl.max_letter_duration = h["max_letter_duration"];
    }
    if (h.contains("max_spelling_len")) hl.max_spelling_len = h["max_spelling_len"];
    if (h.contains("mean_spelling_len")) {
      hl.mean_spelling_len = h["mean_spelling_len"];
    }
    if (h.contains("duration_shape0")) hl.duration_shape0 = h["duration_shape0"];
    if (h.contains("duration_rate0")) hl.duration_rate0 = h["duration_rate0"];
    if (h.contains("alpha_lm")) hl.alpha_lm = h["alpha_lm"];
    if (h.contains("gamma_lm")) hl.gamma_lm = h["gamma_lm"];
    if (h.contains("alpha_wm")) hl.alpha_wm = h["alpha_wm"];
    if (h.contains("gamma_wm")) hl.gamma_wm = h["gamma_wm"];
    if (h.contains("kappa0")) hl.niw.kappa0 = h["kappa0"];
    if (h.contains("nu0")) hl.niw.nu0 = h["nu0"];
    if (h.contains("max_utterance_frames")) {
      hl.max_utterance_frames = h["max_utterance_frames"];
    }
    if (h.contains("spelling_resample")) {
      const std::string s = h["spelling_resample"];
      if (s == "redecode") {
        hl.spelling_rule = SpellingResampleRule::kRedecode;
      } else if (s == "copy") {
        hl.spelling_rule = SpellingResampleRule::kCopy;
      } else {
        throw ConfigError("spelling_resample must be 'redecode' or 'copy'");
      }
    }
  }
  c.validate();
  return c;
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["method"] = method;
  j["corpus"] = corpus_path.string();
  j["out"] = out_dir.string();
  j["trials"] = trials;
  j["seed"] = base_seed;
  if (!seeds.empty()) j["seeds"] = seeds;
  j["dump_state"] = dump_state;
  j["mlda_use_gt_words"] = mlda_use_gt_words;
  j["gt_word_weight"] = gt_word_weight;
  j["candidates"] = run.candidates;
  j["outer_iterations"] = run.outer_iterations;
  j["workers"] = run.workers;
  j["mlda"] = {{"categories", run.mlda.categories},
               {"alpha", run.mlda.alpha},
               {"beta", run.mlda.beta},
               {"sweeps", run.mlda.sweeps}};
  j["modality_weights"] = run.modality_weights;
  j["word_weight"] = {{"mode", schedule_name(run.word_weight.mode)},
                      {"value", run.word_weight.fixed_value}};
  j["sir_mode"] =
      run.sir_mode == SirMode::kUnigramRescale ? "ur" : "mi";
  j["ur_pi_weighted_denominator"] = run.ur_pi_weighted_denominator;
  j["hlm"] = {{"letters", run.hlm.letters},
              {"words", run.hlm.words},
              {"max_letter_duration", run.hlm.max_letter_duration},
              {"max_spelling_len", run.hlm.max_spelling_len},
              {"mean_spelling_len", run.hlm.mean_spelling_len},
              {"duration_shape0", run.hlm.duration_shape0},
              {"duration_rate0", run.hlm.duration_rate0},
              {"alpha_lm", run.hlm.alpha_lm},
              {"gamma_lm", run.hlm.gamma_lm},
              {"alpha_wm", run.hlm.alpha_wm},
              {"gamma_wm", run.hlm.gamma_wm},
              {"kappa0", run.hlm.niw.kappa0},
              {"spelling_resample",
               run.hlm.spelling_rule == SpellingResampleRule::kRedecode
                   ? "redecode"
                   : "copy"}};
  return j.dump(2);
}

std::vector<std::string> metric_columns(const std::string& method) {
  if (method == "npb-daa") {
    return {"word_nmi", "word_ari", "letter_nmi", "letter_ari"};
  }
  if (method == "mlda-only") return {"cat_acc", "cat_nmi", "cat_ari"};
  return {"word_nmi", "word_ari", "letter_nmi", "letter_ari",
          "cat_acc",  "cat_nmi",  "cat_ari"};
}

Metrics sequence_metrics(const Corpus& corpus,
                         const std::vector<WordSequence>& seqs) {
  const FrameLabels pred = frame_label_matrix(corpus, seqs);
  const FrameLabels truth = gt_frame_labels(corpus);
  return {{"word_nmi", nmi(pred.word, truth.word)},
          {"word_ari", ari(pred.word, truth.word)},
          {"letter_nmi", nmi(pred.letter, truth.letter)},
          {"letter_ari", ari(pred.letter, truth.letter)}};
}

std::vector<int> predicted_categories(const CategoryModel& model) {
  std::vector<int> pred(model.pi.rows());
  for (Eigen::Index d = 0; d < model.pi.rows(); ++d) {
    Eigen::Index best = 0;
    model.pi.row(d).maxCoeff(&best);
    pred[d] = static_cast<int>(best);
  }
  return pred;
}

Metrics category_metrics(const Corpus& corpus, const CategoryModel& model) {
  std::vector<int> truth;
  for (const auto& obj : corpus.objects) {
    if (!obj.gt_category) {
      throw CorpusError("object '" + obj.object_id +
                        "' lacks the ground-truth category required for "
                        "evaluation");
    }
    truth.push_back(*obj.gt_category);
  }
  const auto pred = predicted_categories(model);
  return {{"cat_acc", acc(pred, truth)},
          {"cat_nmi", nmi(pred, truth)},
          {"cat_ari", ari(pred, truth)}};
}

std::vector<std::vector<int>> gt_word_histograms(const Corpus& corpus,
                                                 double weight) {
  int bins = 0;
  for (const auto& u : corpus.utterances) {
    if (!u.has_labels()) {
      throw CorpusError("utterance '" + u.id +
                        "' lacks labels required for ground-truth word "
                        "histograms");
    }
    for (int w : u.gt_word_labels) bins = std::max(bins, w + 1);
  }
  std::vector<Eigen::VectorXd> counts(corpus.objects.size(),
                                      Eigen::VectorXd::Zero(bins));
  for (const auto& u : corpus.utterances) {
    const int d = corpus.object_index(u.object_id);
    int prev = -1;
    for (int w : u.gt_word_labels) {
      if (w != prev) counts[d][w] += 1.0;  // one token per label run
      prev = w;
    }
  }
  std::vector<std::vector<int>> out;
  out.reserve(counts.size());
  for (const auto& c : counts) out.push_back(scale_histogram(c, weight));
  return out;
}

namespace {

ObjectHists sensory_hists(const Corpus& corpus,
                          const std::map<std::string, double>& weights) {
  ObjectHists hists(corpus.objects.size());
  for (std::size_t d = 0; d < corpus.objects.size(); ++d) {
    for (const auto& [name, hist] : corpus.objects[d].histograms) {
      auto it = weights.find(name);
      const double w = it == weights.end() ? 0.0 : it->second;
      if (w <= 0.0) continue;
      hists[d][name] = scale_histogram(hist, w);
    }
  }
  return hists;
}

void write_predictions(const std::filesystem::path& dir, const Corpus& corpus,
                       const std::vector<WordSequence>& seqs) {
  std::filesystem::create_directories(dir / "preds");
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    std::vector<int> w, l;
    seqs[i].frame_labels(&w, &l);
    std::vector<std::vector<int>> rows;
    rows.reserve(w.size());
    for (std::size_t t = 0; t < w.size(); ++t) rows.push_back({w[t], l[t]});
    write_int_csv(dir / "preds" / (corpus.utterances[i].id + ".csv"), rows);
  }
}

void write_pred_categories(const std::filesystem::path& dir,
                           const Corpus& corpus, const CategoryModel& model) {
  std::ofstream out(dir / "pred_categories.csv");
  const auto pred = predicted_categories(model);
  for (std::size_t d = 0; d < corpus.objects.size(); ++d) {
    out << corpus.objects[d].object_id << ',' << pred[d] << '\n';
  }
}

void append_trace(std::ofstream& out, const IterationTrace& tr) {
  json j;
  j["t"] = tr.iteration;
  j["q"] = tr.candidate;
  j["word_weight"] = tr.word_weight;
  j["weight_raw"] = tr.weight_raw;
  j["weight_norm"] = tr.weight_norm;
  j["copies"] = tr.copies;
  j["best"] = tr.best;
  j["joint_loglik"] = tr.joint_loglik;
  if (tr.word_ari) j["word_ari"] = *tr.word_ari;
  if (tr.letter_ari) j["letter_ari"] = *tr.letter_ari;
  if (tr.category_ari) j["cat_ari"] = *tr.category_ari;
  out << j.dump() << '\n';
}

void dump_state_files(const std::filesystem::path& trial_dir, int iteration,
                      const Corpus& corpus, const GlobalParams& params,
                      const std::vector<WordSequence>& seqs) {
  char name[32];
  std::snprintf(name, sizeof(name), "iter_%04d", iteration);
  const auto dir = trial_dir / "state" / name;
  std::filesystem::create_directories(dir);
  std::ofstream model(dir / "model.json");
  model << params.to_json() << '\n';
  std::ofstream seg(dir / "segments.csv");
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    std::vector<int> w, l;
    seqs[i].frame_labels(&w, &l);
    for (std::size_t t = 0; t < w.size(); ++t) {
      seg << corpus.utterances[i].id << ',' << t << ',' << w[t] << ',' << l[t]
          << '\n';
    }
  }
}

// Plain blocked-Gibbs chain without categorization; seed derivations match
// the SIR loop's candidate 0, so a Q=1 co-occurrence run reproduces it.
struct NpbDaaResult {
  GlobalParams params;
  std::vector<WordSequence> sequences;
  std::vector<IterationTrace> trace;
};

NpbDaaResult run_npb_daa_chain(const Corpus& corpus, const RunConfig& config,
                               const IterationCallback& callback) {
  std::vector<const Eigen::MatrixXd*> frames;
  for (const auto& u : corpus.utterances) frames.push_back(&u.frames);
  NpbDaaResult result;
  result.params = init_params(
      config.hlm, corpus.feature_dim(),
      derive_seed(config.seed,
                  {static_cast<std::uint64_t>(Stream::kCandidateInit), 0}));
  bool labeled = true;
  for (const auto& u : corpus.utterances) labeled &= u.has_labels();
  for (int t = 1; t <= config.outer_iterations; ++t) {
    const std::uint64_t chain_seed =
        derive_seed(config.seed, {0xC0DAull, static_cast<std::uint64_t>(t), 0});
    IterationResult it =
        npb_daa_iteration(frames, result.params, chain_seed, config.workers);
    result.params = std::move(it.params);
    result.sequences = std::move(it.sequences);
    IterationTrace tr;
    tr.iteration = t;
    tr.candidate = 0;
    tr.weight_norm = 1.0;
    tr.best = true;
    tr.joint_loglik = it.joint_loglik;
    if (labeled) {
      const auto m = sequence_metrics(corpus, result.sequences);
      tr.word_ari = m.at("word_ari");
      tr.letter_ari = m.at("letter_ari");
    }
    result.trace.push_back(tr);
    if (callback) {
      Candidate best;
      best.params = result.params;
      best.sequences = result.sequences;
      callback(t, best);
    }
  }
  return result;
}

}  // namespace

Metrics run_single_trial(const Corpus& corpus, const ExperimentConfig& config,
                         std::uint64_t seed,
                         const std::filesystem::path* trial_dir) {
  RunConfig run = config.run;
  run.seed = seed;
  if (config.method == "hdp-hsmm-mlda") {
    run.hlm.mode = ArticulationMode::kFlatHsmm;
  }

  std::ofstream trace_out;
  if (trial_dir) {
    std::filesystem::create_directories(*trial_dir);
    trace_out.open(*trial_dir / "trace.jsonl");
  }

  Metrics metrics;
  if (config.method == "mlda-only") {
    ObjectHists hists = sensory_hists(corpus, run.modality_weights);
    if (config.mlda_use_gt_words && config.gt_word_weight > 0) {
      const auto words = gt_word_histograms(corpus, config.gt_word_weight);
      for (std::size_t d = 0; d < hists.size(); ++d) {
        hists[d]["word"] = words[d];
      }
    }
    const CategoryModel model = run_mlda(hists, run.mlda, seed);
    metrics = category_metrics(corpus, model);
    if (trial_dir) {
      std::ofstream cats(*trial_dir / "categories.json");
      cats << model.to_json() << '\n';
      write_pred_categories(*trial_dir, corpus, model);
    }
    return metrics;
  }

  IterationCallback callback;
  if (trial_dir && config.dump_state) {
    callback = [&](int iteration, const Candidate& best) {
      dump_state_files(*trial_dir, iteration, corpus, best.params,
                       best.sequences);
    };
  }

  if (config.method == "npb-daa") {
    const auto result = run_npb_daa_chain(corpus, run, callback);
    metrics = sequence_metrics(corpus, result.sequences);
    if (trial_dir) {
      for (const auto& tr : result.trace) append_trace(trace_out, tr);
      std::ofstream model(*trial_dir / "model.json");
      model << result.params.to_json() << '\n';
      write_predictions(*trial_dir, corpus, result.sequences);
    }
    return metrics;
  }

  // cooccur-daa and hdp-hsmm-mlda share the SIR loop.
  const RunResult result = run_cooccurrence_daa(corpus, run, callback);
  metrics = sequence_metrics(corpus, result.final_sequences);
  for (const auto& [k, v] : category_metrics(corpus, result.final_categories)) {
    metrics[k] = v;
  }
  if (trial_dir) {
    for (const auto& tr : result.trace) append_trace(trace_out, tr);
    std::ofstream model(*trial_dir / "model.json");
    model << result.final_params.to_json() << '\n';
    std::ofstream cats(*trial_dir / "categories.json");
    cats << result.final_categories.to_json() << '\n';
    write_predictions(*trial_dir, corpus, result.final_sequences);
    write_pred_categories(*trial_dir, corpus, result.final_categories);
  }
  return metrics;
}

namespace {

void write_metrics_csv(const std::filesystem::path& path,
                       const std::string& method,
                       const std::vector<std::uint64_t>& seeds,
                       const std::vector<Metrics>& rows) {
  std::ofstream out(path);
  // Population (n) convention for the aggregate std reported downstream.
  out << "trial,seed";
  const auto cols = metric_columns(method);
  for (const auto& c : cols) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << i << ',' << seeds[i];
    for (const auto& c : cols) out << ',' << format_double(rows[i].at(c));
    out << '\n';
  }
}

}  // namespace

std::vector<Metrics> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Corpus corpus = load_corpus(config.corpus_path);
  std::filesystem::create_directories(config.out_dir);
  {
    std::ofstream cfg(config.out_dir / "config.json");
    cfg << config.to_json() << '\n';
  }
  std::vector<Metrics> rows;
  std::vector<std::uint64_t> seeds;
  for (int trial = 0; trial < config.trials; ++trial) {
    const std::uint64_t seed = config.trial_seed(trial);
    seeds.push_back(seed);
    char name[32];
    std::snprintf(name, sizeof(name), "trial_%03d", trial);
    const auto trial_dir = config.out_dir / name;
    rows.push_back(run_single_trial(corpus, config, seed, &trial_dir));
  }
  write_metrics_csv(config.out_dir / "metrics.csv", config.method, seeds, rows);
  return rows;
}

void run_sweep(const ExperimentConfig& config,
               const std::vector<double>& weights) {
  if (weights.empty()) throw ConfigError("sweep weight list is empty");
  config.validate();
  const Corpus corpus = load_corpus(config.corpus_path);
  std::filesystem::create_directories(config.out_dir);
  std::ofstream out(config.out_dir / "sweep.csv");
  const auto cols = metric_columns(config.method);
  out << "word_weight,trial,seed";
  for (const auto& c : cols) out << ',' << c;
  out << '\n';
  for (double w : weights) {
    ExperimentConfig c = config;
    c.run.word_weight = {ScheduleMode::kFixed, w};
    c.gt_word_weight = w;
    if (c.method == "mlda-only") c.mlda_use_gt_words = w > 0;
    for (int trial = 0; trial < c.trials; ++trial) {
      const std::uint64_t seed = c.trial_seed(trial);
      const Metrics m = run_single_trial(corpus, c, seed, nullptr);
      out << format_double(w) << ',' << trial << ',' << seed;
      for (const auto& col : cols) out << ',' << format_double(m.at(col));
      out << '\n';
    }
  }
}

namespace {

struct RunSummary {
  std::string method;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

RunSummary read_run_metrics(const std::filesystem::path& dir) {
  std::ifstream cfg(dir / "config.json");
  if (!cfg) throw ConfigError("missing config.json in " + dir.string());
  json j;
  cfg >> j;
  RunSummary s;
  s.method = j.at("method").get<std::string>();

  std::ifstream in(dir / "metrics.csv");
  if (!in) throw ConfigError("missing metrics.csv in " + dir.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty metrics.csv");
  std::stringstream header(line);
  std::string cell;
  std::vector<std::string> cols;
  while (std::getline(header, cell, ',')) cols.push_back(cell);
  if (cols.size() < 3 || cols[0] != "trial") {
    throw ConfigError("unexpected metrics.csv header in " + dir.string());
  }
  s.columns.assign(cols.begin() + 2, cols.end());  // skip trial,seed
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::vector<double> values;
    int idx = 0;
    while (std::getline(row, cell, ',')) {
      if (idx++ >= 2) values.push_back(parse_double(cell));
    }
    if (values.size() != s.columns.size()) {
      throw ConfigError("inconsistent metrics row in " + dir.string());
    }
    s.rows.push_back(std::move(values));
  }
  return s;
}

void export_trace_grids(const std::filesystem::path& run_dir,
                        const std::filesystem::path& out_dir) {
  // Collect per-utterance word-id rows from state dumps:
  // grid[utt] is (iterations x T).
  for (const auto& trial :
       std::filesystem::directory_iterator(run_dir)) {
    if (!trial.is_directory()) continue;
    const auto state = trial.path() / "state";
    if (!std::filesystem::exists(state)) continue;
    std::vector<std::filesystem::path> iters;
    for (const auto& it : std::filesystem::directory_iterator(state)) {
      if (it.is_directory()) iters.push_back(it.path());
    }
    std::sort(iters.begin(), iters.end());
    std::map<std::string, std::vector<std::vector<int>>> grids;
    for (const auto& iter_dir : iters) {
      std::ifstream seg(iter_dir / "segments.csv");
      std::string line;
      std::map<std::string, std::vector<int>> row;
      while (std::getline(seg, line)) {
        std::stringstream ss(line);
        std::string utt, frame, word, letter;
        std::getline(ss, utt, ',');
        std::getline(ss, frame, ',');
        std::getline(ss, word, ',');
        std::getline(ss, letter, ',');
        row[utt].push_back(std::stoi(word));
      }
      for (auto& [utt, words] : row) grids[utt].push_back(std::move(words));
    }
    for (const auto& [utt, grid] : grids) {
      write_int_csv(out_dir / ("trace_" + utt + ".csv"), grid);
    }
    return;  // grids from the first trial that has dumps
  }
}

}  // namespace

void write_report(const std::vector<std::filesystem::path>& run_dirs,
                  const std::filesystem::path& out_dir) {
  if (run_dirs.empty()) throw ConfigError("report needs at least one run dir");
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / "aggregate.csv");
  out << "# std uses the population (divide by n) convention\n";
  out << "method,metric,mean,std,trials\n";
  std::map<std::string, std::vector<std::string>> schema_by_method;
  for (const auto& dir : run_dirs) {
    const RunSummary s = read_run_metrics(dir);
    auto it = schema_by_method.find(s.method);
    if (it == schema_by_method.end()) {
      schema_by_method[s.method] = s.columns;
    } else if (it->second != s.columns) {
      throw ConfigError("inconsistent metric schema for method '" + s.method +
                        "' in " + dir.string());
    }
    const std::size_t n = s.rows.size();
    for (std::size_t c = 0; c < s.columns.size(); ++c) {
      double mean = 0.0;
      for (const auto& row : s.rows) mean += row[c];
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (const auto& row : s.rows) var += (row[c] - mean) * (row[c] - mean);
      var /= static_cast<double>(n);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f", mean, std::sqrt(var));
      out << s.method << ',' << s.columns[c] << ',' << buf << ',' << n << '\n';
    }
    export_trace_grids(dir, out_dir);
  }
}

std::vector<std::tuple<std::string, std::string, double>> evaluate_run(
    const std::filesystem::path& trial_dir, const Corpus& corpus) {
  std::vector<std::tuple<std::string, std::string, double>> rows;
  const auto preds = trial_dir / "preds";
  if (std::filesystem::exists(preds)) {
    FrameLabels pred;
    for (const auto& u : corpus.utterances) {
      const auto rows_csv = read_int_csv(preds / (u.id + ".csv"), 2);
      if (static_cast<int>(rows_csv.size()) != u.num_frames()) {
        throw CorpusError("prediction dump for '" + u.id +
                          "' does not match the utterance length");
      }
      for (const auto& r : rows_csv) {
        pred.word.push_back(r[0]);
        pred.letter.push_back(r[1]);
      }
    }
    const FrameLabels truth = gt_frame_labels(corpus);
    rows.push_back({"word", "nmi", nmi(pred.word, truth.word)});
    rows.push_back({"word", "ari", ari(pred.word, truth.word)});
    rows.push_back({"letter", "nmi", nmi(pred.letter, truth.letter)});
    rows.push_back({"letter", "ari", ari(pred.letter, truth.letter)});
  }
  const auto cat_path = trial_dir / "pred_categories.csv";
  if (std::filesystem::exists(cat_path)) {
    std::ifstream in(cat_path);
    std::map<std::string, int> pred_by_object;
    std::string line;
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      if (comma == std::string::npos) continue;
      pred_by_object[line.substr(0, comma)] =
          std::stoi(line.substr(comma + 1));
    }
    std::vector<int> pred, truth;
    for (const auto& obj : corpus.objects) {
      if (!obj.gt_category) {
        throw CorpusError("object '" + obj.object_id +
                          "' lacks ground-truth category");
      }
      auto it = pred_by_object.find(obj.object_id);
      if (it == pred_by_object.end()) {
        throw CorpusError("no predicted category for object '" +
                          obj.object_id + "'");
      }
      pred.push_back(it->second);
      truth.push_back(*obj.gt_category);
    }
    rows.push_back({"category", "acc", acc(pred, truth)});
    rows.push_back({"category", "nmi", nmi(pred, truth)});
    rows.push_back({"category", "ari", ari(pred, truth)});
  }
  if (rows.empty()) {
    throw ConfigError("no prediction dumps found in " + trial_dir.string());
  }
  return rows;
}

}  // namespace codaa
