/*
 * Copyright 2026 The tabgan-ts Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Command implementations behind the tabgan-ts executable, the pipeline
// configuration, and the mapping from failures to exit codes.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "tabgan/data_model.hpp"
#include "tabgan/evaluation.hpp"
#include "tabgan/feature_importance.hpp"
#include "tabgan/gan.hpp"
#include "tabgan/prognosis.hpp"

namespace tabgan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Invalid flags, configuration, or input files (exit code 2).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ErrorInfo {
  int exit_code = kExitRuntime;
  std::string type;  // usage, validation, diverged, numeric, runtime
  std::string message;
};
ErrorInfo classify(const std::exception& e);
/// {"error": {"type": ..., "exit_code": ..., "message": ...}}
std::string error_json(const ErrorInfo& e);

using Log = std::function<void(const std::string&)>;

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

/// Schema from a JSON file, or inferred from the CSV when `schema_path` is empty.
data::FeatureSchema resolve_schema(const std::string& csv_path, const std::string& schema_path);
/// Labeled dataset restricted to `schema`; requires a label or healed_at_week column.
data::Dataset load_labeled(const std::string& csv_path, const data::FeatureSchema& schema);
/// Comma-separated names, or a JSON file holding a list of names.
std::vector<std::string> parse_feature_list(const std::string& spec);
data::Dataset subsample(const data::Dataset& d, std::size_t count, std::uint64_t seed);

// --- commands ----------------------------------------------------------------

struct SurrogateOptions {
  data::SurrogateConfig config;
  std::string out;
  std::string schema_out;  // optional
};
void cmd_surrogate(const SurrogateOptions& o);

struct ImportanceOptions {
  std::string data;
  std::string schema;  // optional
  double threshold = 0.3;
  std::size_t min_visits = 3;
  forest::ForestConfig forest;
  std::string out;           // importance CSV
  std::string selected_out;  // selected-features JSON
};
forest::ImportanceReport cmd_importance(const ImportanceOptions& o);

struct GanTrainOptions {
  std::string data;
  std::string schema;    // optional
  std::string features;  // optional, see parse_feature_list
  std::size_t min_visits = 3;
  std::size_t visits = 3;
  gan::TrainConfig config;
  std::string out;          // checkpoint
  std::string history_out;  // optional
};
gan::GanModel cmd_gan_train(const GanTrainOptions& o, const Log& log = {});

struct GanSampleOptions {
  std::string checkpoint;
  std::size_t count = 0;
  gan::LabelMix mix = gan::LabelMix::match_prevalence;
  std::uint64_t seed = 0;
  std::string out;
};
void cmd_gan_sample(const GanSampleOptions& o);

struct EvalOptions {
  std::string real;
  std::string synth;
  std::string schema;      // optional when a checkpoint is given
  std::string checkpoint;  // optional, supplies the schema
  std::vector<std::string> which{"js", "disc", "tsne", "hist"};
  std::size_t bins = 10;
  eval::DiscriminativeConfig disc;
  eval::TsneConfig tsne;
  std::uint64_t seed = 0;
  std::string out_dir;
};
/// Writes js.csv/js.json, discriminative.json, embedding.csv, histograms.csv.
nlohmann::json cmd_eval(const EvalOptions& o);

enum class SamplerKind { gan, oracle, shuffled };
SamplerKind parse_sampler(const std::string& s);

struct TstrOptions {
  std::string checkpoint;  // required for the gan and shuffled samplers
  std::string schema;      // used when no checkpoint is given
  std::string train;
  std::string test;
  std::vector<std::size_t> horizons{1, 2, 3};
  SamplerKind sampler = SamplerKind::gan;
  data::SurrogateConfig oracle;  // generator of the oracle sampler
  prognosis::TstrConfig config;
  std::string out;       // T,accuracy,auc CSV
  std::string json_out;  // optional
};
std::vector<prognosis::TstrResult> cmd_tstr(const TstrOptions& o);

// --- pipeline ----------------------------------------------------------------

struct PipelineConfig {
  std::string data_csv;     // empty means the surrogate
  std::string schema_path;  // optional with data_csv
  data::SurrogateConfig surrogate;
  std::size_t min_visits = 3;
  std::size_t visits = 3;
  double train_fraction = 0.75;
  double importance_threshold = 0.3;
  std::size_t min_features = 3;  // top-ranked features kept even below the threshold
  forest::ForestConfig forest;
  gan::TrainConfig gan;
  std::size_t synth_multiplier = 10;
  std::vector<std::size_t> horizons{1, 2, 3};
  prognosis::ProgConfig prog;
  std::size_t tstr_replicates = 3;
  std::size_t control_replicates = 10;
  bool augment = false;
  std::size_t js_bins = 10;
  std::size_t hist_bins = 10;
  std::size_t disc_replicates = 1;
  eval::TsneConfig tsne;
  std::uint64_t seed = 0;
};

/// Surrogate defaults sized for a single CPU core: the network widths are
/// reduced, the topology is unchanged.
PipelineConfig default_pipeline_config();
nlohmann::json to_json(const PipelineConfig& c);
/// Unspecified keys keep their defaults; throws UsageError naming every
/// missing required key (gan.epochs) or unknown top-level key.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

/// Child seeds of every stage, derived from the master seed by stage name.
nlohmann::json stage_seeds(std::uint64_t master);

/// Runs every stage and writes the report directory. Returns the summary
/// that is also written to report.json.
nlohmann::json cmd_pipeline(const PipelineConfig& config, const std::string& out_dir, const Log& log = {});

}  // namespace tabgan::cli
