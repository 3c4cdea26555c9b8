// include/codaa/experiment.hpp
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

#ifndef CODAA_EXPERIMENT_HPP_
#define CODAA_EXPERIMENT_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "codaa/cooccur.hpp"
#include "codaa/corpus.hpp"

namespace codaa {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ExperimentConfig {
  std::string method = "cooccur-daa";
  std::filesystem::path corpus_path;
  std::filesystem::path out_dir;
  int trials = 1;
  std::uint64_t base_seed = 0;
  std::vector<std::uint64_t> seeds;  // overrides base_seed + trial when set
  bool dump_state = false;
  // mlda-only word source: sensory only, or ground-truth word histograms.
  bool mlda_use_gt_words = false;
  double gt_word_weight = 200.0;
  RunConfig run;

  std::uint64_t trial_seed(int trial) const {
    if (!seeds.empty()) return seeds.at(trial);
    return base_seed + static_cast<std::uint64_t>(trial);
  }
  void validate() const;
  std::string to_json() const;
};

// Named presets: "paper-desk" carries the full-scale hyperparameters,
// "desk-fast" the reduced settings used in CI and the acceptance runs.
ExperimentConfig preset_config(const std::string& name);

// Parses a JSON config (optionally starting from its "preset" key).
ExperimentConfig parse_config(const std::string& json_text);

using Metrics = std::map<std::string, double>;

// Ordered metric columns for a method's CSV schema.
std::vector<std::string> metric_columns(const std::string& method);

Metrics sequence_metrics(const Corpus& corpus,
                         const std::vector<WordSequence>& seqs);
Metrics category_metrics(const Corpus& corpus, const CategoryModel& model);
std::vector<int> predicted_categories(const CategoryModel& model);

// Ground-truth word histograms (token counts over label runs) for the
// mlda-only topline; fails when labels are missing.
std::vector<std::vector<int>> gt_word_histograms(const Corpus& corpus,
                                                 double weight);

// Runs one trial of the configured method; when trial_dir is non-null the
// run artifacts (trace, model dumps, prediction dumps) are written there.
Metrics run_single_trial(const Corpus& corpus, const ExperimentConfig& config,
                         std::uint64_t seed,
                         const std::filesystem::path* trial_dir);

// Full experiment: all trials, metrics.csv, config echo. Returns the
// metrics rows in trial order.
std::vector<Metrics> run_experiment(const ExperimentConfig& config);

// One run per word-modality weight value; writes sweep.csv under out_dir.
void run_sweep(const ExperimentConfig& config,
               const std::vector<double>& weights);

// Aggregates metrics.csv files from several run directories into
// aggregate.csv (population mean/std per metric) and exports
// iteration-by-frame word-id grids from any state dumps found.
void write_report(const std::vector<std::filesystem::path>& run_dirs,
                  const std::filesystem::path& out_dir);

// Metric rows for a finished trial directory, recomputed from prediction
// dumps; used by the eval subcommand.
std::vector<std::tuple<std::string, std::string, double>> evaluate_run(
    const std::filesystem::path& trial_dir, const Corpus& corpus);

}  // namespace codaa

#endif  // CODAA_EXPERIMENT_HPP_
