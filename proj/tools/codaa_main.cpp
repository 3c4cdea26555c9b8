// tools/codaa_main.cpp
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

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "codaa/csv.hpp"
#include "codaa/experiment.hpp"
#include "codaa/synth.hpp"

namespace {

// Exit codes: 0 success, 2 usage, 3 data error, 4 runtime failure.
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw codaa::ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunFlags {
  std::string config_path, preset, method, corpus, out, sir_mode, schedule;
  int trials = -1;
  int workers = -1;
  long long seed = -1;
  bool dump_state = false;
};

codaa::ExperimentConfig build_config(const RunFlags& flags) {
  codaa::ExperimentConfig config;
  if (!flags.config_path.empty()) {
    config = codaa::parse_config(read_file(flags.config_path));
  } else if (!flags.preset.empty()) {
    config = codaa::preset_config(flags.preset);
  }
  if (!flags.preset.empty() && !flags.config_path.empty()) {
    // Config files may themselves name a preset; an explicit flag wins.
    codaa::ExperimentConfig base = codaa::preset_config(flags.preset);
    base.method = config.method;
    base.corpus_path = config.corpus_path;
    base.out_dir = config.out_dir;
    base.trials = config.trials;
    base.base_seed = config.base_seed;
    base.seeds = config.seeds;
    config = base;
  }
  if (!flags.method.empty()) config.method = flags.method;
  if (!flags.corpus.empty()) config.corpus_path = flags.corpus;
  if (!flags.out.empty()) config.out_dir = flags.out;
  if (flags.trials >= 0) config.trials = flags.trials;
  if (flags.seed >= 0) config.base_seed = static_cast<std::uint64_t>(flags.seed);
  if (flags.workers >= 0) config.run.workers = flags.workers;
  if (flags.dump_state) config.dump_state = true;
  if (!flags.sir_mode.empty()) {
    if (flags.sir_mode == "ur") {
      config.run.sir_mode = codaa::SirMode::kUnigramRescale;
    } else if (flags.sir_mode == "mi") {
      config.run.sir_mode = codaa::SirMode::kMutualInformation;
    } else {
      throw codaa::ConfigError("--sir-mode must be ur or mi");
    }
  }
  if (!flags.schedule.empty()) {
    if (flags.schedule == "fixed") {
      config.run.word_weight.mode = codaa::ScheduleMode::kFixed;
    } else if (flags.schedule == "increase") {
      config.run.word_weight.mode = codaa::ScheduleMode::kIncrease;
    } else if (flags.schedule == "decrease") {
      config.run.word_weight.mode = codaa::ScheduleMode::kDecrease;
    } else {
      throw codaa::ConfigError(
          "--word-weight-schedule must be fixed, increase, or decrease");
    }
  }
  if (config.corpus_path.empty()) throw codaa::ConfigError("no corpus path");
  if (config.out_dir.empty()) throw codaa::ConfigError("no output directory");
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unsupervised word discovery with multimodal co-occurrence"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string synth_out;
  long long synth_seed = 0;
  int synth_objects = -1, synth_upo = -1, synth_wpu = -1;
  double synth_sep = -1.0;
  synth->add_option("--out", synth_out, "output corpus directory")->required();
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--objects", synth_objects, "object count");
  synth->add_option("--utterances-per-object", synth_upo);
  synth->add_option("--words-per-utterance", synth_wpu);
  synth->add_option("--separation", synth_sep, "phoneme mean separation");

  // run
  auto* run = app.add_subcommand("run", "run an experiment");
  RunFlags flags;
  run->add_option("--config", flags.config_path, "JSON config file");
  run->add_option("--preset", flags.preset, "paper-desk or desk-fast");
  run->add_option("--method", flags.method,
                  "npb-daa | mlda-only | hdp-hsmm-mlda | cooccur-daa");
  run->add_option("--corpus", flags.corpus, "corpus directory");
  run->add_option("--out", flags.out, "output directory");
  run->add_option("--trials", flags.trials);
  run->add_option("--seed", flags.seed);
  run->add_option("--workers", flags.workers);
  run->add_flag("--dump-state", flags.dump_state,
                "write per-iteration model and segmentation dumps");
  run->add_option("--sir-mode", flags.sir_mode, "ur | mi");
  run->add_option("--word-weight-schedule", flags.schedule,
                  "fixed | increase | decrease");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "word-weight sweep");
  RunFlags sweep_flags;
  std::string weight_list;
  sweep->add_option("--config", sweep_flags.config_path, "JSON config file");
  sweep->add_option("--preset", sweep_flags.preset);
  sweep->add_option("--method", sweep_flags.method);
  sweep->add_option("--corpus", sweep_flags.corpus);
  sweep->add_option("--out", sweep_flags.out);
  sweep->add_option("--trials", sweep_flags.trials);
  sweep->add_option("--seed", sweep_flags.seed);
  sweep->add_option("--workers", sweep_flags.workers);
  sweep->add_option("--weights", weight_list, "comma-separated weight values")
      ->required();

  // eval
  auto* eval = app.add_subcommand("eval", "score prediction dumps");
  std::string eval_run, eval_corpus, eval_out;
  eval->add_option("--run", eval_run, "trial directory with preds/")->required();
  eval->add_option("--corpus", eval_corpus, "corpus directory")->required();
  eval->add_option("--out", eval_out, "output CSV (default stdout)");

  // report
  auto* report = app.add_subcommand("report", "aggregate finished runs");
  std::vector<std::string> report_runs;
  std::string report_out;
  report->add_option("--runs", report_runs, "run directories")->required();
  report->add_option("--out", report_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      codaa::SynthSpec spec = codaa::default_synth_spec();
      spec.seed = static_cast<std::uint64_t>(synth_seed);
      if (synth_objects > 0) spec.objects = synth_objects;
      if (synth_upo > 0) spec.utterances_per_object = synth_upo;
      if (synth_wpu > 0) spec.words_per_utterance = synth_wpu;
      if (synth_sep > 0) spec.separation = synth_sep;
      const auto [corpus, gt] = codaa::generate(spec);
      const std::string extra = gt.to_json();
      codaa::write_corpus(corpus, synth_out, &extra);
      std::cout << "wrote " << corpus.utterances.size() << " utterances, "
                << corpus.objects.size() << " objects to " << synth_out
                << '\n';
    } else if (run->parsed()) {
      const auto config = build_config(flags);
      codaa::run_experiment(config);
      std::cout << "metrics written to "
                << (config.out_dir / "metrics.csv").string() << '\n';
    } else if (sweep->parsed()) {
      const auto config = build_config(sweep_flags);
      std::vector<double> weights;
      std::stringstream ss(weight_list);
      std::string cell;
      while (std::getline(ss, cell, ',')) {
        weights.push_back(codaa::parse_double(cell));
      }
      codaa::run_sweep(config, weights);
      std::cout << "sweep written to "
                << (config.out_dir / "sweep.csv").string() << '\n';
    } else if (eval->parsed()) {
      const codaa::Corpus corpus = codaa::load_corpus(eval_corpus);
      const auto rows = codaa::evaluate_run(eval_run, corpus);
      std::ostream* out = &std::cout;
      std::ofstream file;
      if (!eval_out.empty()) {
        file.open(eval_out);
        out = &file;
      }
      *out << "target,metric,value\n";
      for (const auto& [target, metric, value] : rows) {
        *out << target << ',' << metric << ','
             << codaa::format_double(value) << '\n';
      }
    } else if (report->parsed()) {
      std::vector<std::filesystem::path> dirs(report_runs.begin(),
                                              report_runs.end());
      codaa::write_report(dirs, report_out);
      std::cout << "aggregate written to "
                << (std::filesystem::path(report_out) / "aggregate.csv").string()
                << '\n';
    }
  } catch (const codaa::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const codaa::CorpusError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
