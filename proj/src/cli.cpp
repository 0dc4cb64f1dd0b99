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

#include "tabgan/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tabgan/checkpoint.hpp"
#include "tabgan/rng.hpp"

#ifndef TABGAN_VERSION
#define TABGAN_VERSION "unknown"
#endif

namespace tabgan::cli {

namespace fs = std::filesystem;

// --- errors and files --------------------------------------------------------

ErrorInfo classify(const std::exception& e) {
  if (dynamic_cast<const gan::TrainingDiverged*>(&e)) return {kExitRuntime, "diverged", e.what()};
  if (dynamic_cast<const NumericError*>(&e)) return {kExitRuntime, "numeric", e.what()};
  if (dynamic_cast<const UsageError*>(&e)) return {kExitUsage, "usage", e.what()};
  if (dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const std::out_of_range*>(&e) ||
      dynamic_cast<const nlohmann::json::exception*>(&e))
    return {kExitUsage, "validation", e.what()};
  return {kExitRuntime, "runtime", e.what()};
}

std::string error_json(const ErrorInfo& e) {
  return nlohmann::json{{"error", {{"type", e.type}, {"exit_code", e.exit_code}, {"message", e.message}}}}.dump();
}

namespace {

void require_readable(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " path is required");
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read " + what + " '" + path + "'");
}

void write_json(const std::string& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

data::Dataset prepare(const data::Dataset& d, std::size_t min_visits, std::size_t visits) {
  if (visits < 1) throw UsageError("visits must be at least 1");
  const auto eligible = data::filter_eligibility(d, std::max(min_visits, visits));
  if (eligible.size() == 0) throw std::invalid_argument("no patient has enough visits");
  return data::impute(data::truncate(eligible, visits));
}

std::vector<std::string> feature_names(const data::FeatureSchema& s) {
  std::vector<std::string> names;
  for (const auto& f : s.features()) names.push_back(f.name);
  return names;
}

std::vector<double> as_reals(const std::vector<int>& y) { return {y.begin(), y.end()}; }

}  // namespace

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw std::runtime_error("cannot write " + path);
}

std::string read_text(const std::string& path) {
  require_readable(path, "file");
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

data::FeatureSchema resolve_schema(const std::string& csv_path, const std::string& schema_path) {
  if (!schema_path.empty()) {
    require_readable(schema_path, "schema");
    return data::load_schema(schema_path);
  }
  require_readable(csv_path, "data");
  return data::infer_schema(data::read_csv(csv_path));
}

data::Dataset load_labeled(const std::string& csv_path, const data::FeatureSchema& schema) {
  require_readable(csv_path, "data");
  return data::dataset_from_table(data::read_csv(csv_path), schema);
}

std::vector<std::string> parse_feature_list(const std::string& spec) {
  std::vector<std::string> names;
  if (spec.empty()) return names;
  if (spec.size() > 5 && spec.ends_with(".json")) {
    const auto j = nlohmann::json::parse(read_text(spec));
    return (j.is_object() ? j.at("selected") : j).get<std::vector<std::string>>();
  }
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) names.push_back(item);
  return names;
}

data::Dataset subsample(const data::Dataset& d, std::size_t count, std::uint64_t seed) {
  if (count >= d.size()) return d;
  Rng rng(seed);
  auto idx = rng.permutation(d.size());
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  data::Dataset out{d.schema, {}, d.provenance};
  for (std::size_t i : idx) out.series.push_back(d.series[i]);
  return out;
}

// --- commands ----------------------------------------------------------------

void cmd_surrogate(const SurrogateOptions& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  const auto d = data::surrogate_generate(o.config);
  write_text(o.out, data::to_csv(d));
  if (!o.schema_out.empty()) write_json(o.schema_out, data::to_json(d.schema));
}

forest::ImportanceReport cmd_importance(const ImportanceOptions& o) {
  const auto schema = resolve_schema(o.data, o.schema);
  const auto d = prepare(load_labeled(o.data, schema), o.min_visits, 1);
  const auto f = forest::fit_forest(data::first_visit_rows(d), as_reals(data::labels(d)), o.forest);
  const auto report = forest::importance(f, feature_names(d.schema));
  if (!o.out.empty()) write_text(o.out, forest::to_csv(report));
  if (!o.selected_out.empty()) {
    auto j = forest::to_json(report);
    j["threshold"] = o.threshold;
    j["selected"] = forest::select(report, o.threshold);
    write_json(o.selected_out, j);
  }
  return report;
}

gan::GanModel cmd_gan_train(const GanTrainOptions& o, const Log& log) {
  if (o.out.empty()) throw UsageError("--out is required");
  const auto schema = resolve_schema(o.data, o.schema);
  auto d = prepare(load_labeled(o.data, schema), o.min_visits, o.visits);
  const auto features = parse_feature_list(o.features);
  if (!features.empty()) d = data::select_features(d, features);
  if (log) log("training on " + std::to_string(d.size()) + " series, " + std::to_string(d.schema.size()) + " features");
  try {
    auto m = gan::train(d, o.config);
    checkpoint::save(m, o.out);
    if (!o.history_out.empty()) write_text(o.history_out, gan::history_csv(m.history));
    return m;
  } catch (const gan::TrainingDiverged& e) {
    checkpoint::save(e.last_good(), o.out + ".last_good");
    throw;
  }
}

void cmd_gan_sample(const GanSampleOptions& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  require_readable(o.checkpoint, "checkpoint");
  const auto m = checkpoint::load(o.checkpoint);
  write_text(o.out, data::to_csv(gan::sample(m, o.count, o.mix, o.seed)));
}

nlohmann::json cmd_eval(const EvalOptions& o) {
  if (o.out_dir.empty()) throw UsageError("--out-dir is required");
  data::FeatureSchema schema;
  if (!o.checkpoint.empty()) {
    require_readable(o.checkpoint, "checkpoint");
    schema = checkpoint::load(o.checkpoint).schema;
  } else {
    schema = resolve_schema(o.real, o.schema);
  }
  const auto real = load_labeled(o.real, schema);
  const auto synth = load_labeled(o.synth, schema);
  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& w : o.which) {
    if (w == "js") {
      const auto r = eval::js_report(real, synth, o.bins, derive_seed(o.seed, "js"));
      write_text((dir / "js.csv").string(), eval::to_csv(r));
      write_json((dir / "js.json").string(), eval::to_json(r));
      summary["js_visit_average"] = r.visit_average;
    } else if (w == "disc") {
      auto c = o.disc;
      c.seed = derive_seed(o.seed, "disc");
      const auto r = eval::discriminative_accuracy(real, synth, c);
      write_json((dir / "discriminative.json").string(), eval::to_json(r));
      summary["discriminative_accuracy"] = r.accuracy;
    } else if (w == "tsne") {
      const auto s = subsample(synth, real.size(), derive_seed(o.seed, "embed-subsample"));
      auto c = o.tsne;
      c.seed = derive_seed(o.seed, "tsne");
      eval::TsneResult details;
      const auto pts = eval::embed({{"real", &real}, {"synthetic", &s}}, c, &details);
      write_text((dir / "embedding.csv").string(), eval::embedding_csv(pts));
      summary["tsne_final_kl"] = details.kl.empty() ? 0.0 : details.kl.back();
    } else if (w == "hist") {
      std::vector<std::string> cont;
      for (const auto& f : schema.features())
        if (f.kind == data::FeatureKind::continuous) cont.push_back(f.name);
      write_text((dir / "histograms.csv").string(),
                 eval::histograms_csv(eval::export_histograms(real, synth, cont, o.bins)));
    } else {
      throw UsageError("unknown evaluation '" + w + "' (expected js, disc, tsne, hist)");
    }
  }
  return summary;
}

SamplerKind parse_sampler(const std::string& s) {
  if (s == "gan") return SamplerKind::gan;
  if (s == "oracle") return SamplerKind::oracle;
  if (s == "shuffled") return SamplerKind::shuffled;
  throw UsageError("unknown sampler '" + s + "' (expected gan, oracle, shuffled)");
}

std::vector<prognosis::TstrResult> cmd_tstr(const TstrOptions& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  if (o.horizons.empty()) throw UsageError("at least one horizon is required");
  std::optional<gan::GanModel> model;
  data::FeatureSchema schema;
  if (!o.checkpoint.empty()) {
    require_readable(o.checkpoint, "checkpoint");
    model = checkpoint::load(o.checkpoint);
    schema = model->schema;
  } else if (o.sampler == SamplerKind::oracle) {
    schema = resolve_schema(o.train, o.schema);
  } else {
    throw UsageError("--checkpoint is required for the gan and shuffled samplers");
  }
  const auto train = load_labeled(o.train, schema);
  const auto test = load_labeled(o.test, schema);

  prognosis::Sampler sampler;
  if (o.sampler == SamplerKind::oracle) {
    const auto names = feature_names(schema);
    const std::size_t visits = data::visit_count(test);
    sampler = [base = o.oracle, names, visits, schema](std::size_t count, std::uint64_t seed) {
      auto c = base;
      c.n_patients = count;
      c.seed = seed;
      c.visits = std::max(c.visits, visits);
      auto d = data::select_features(prepare(data::surrogate_generate(c), 1, visits), names);
      // Raw values are reinterpreted under the target schema (an inferred
      // schema has observed rather than fixed ranges).
      for (std::size_t j = 0; j < schema.size(); ++j)
        if (schema[j].kind != d.schema[j].kind) throw UsageError("oracle sampler: feature kinds differ for " + names[j]);
      d.schema = schema;
      return d;
    };
  } else {
    sampler = [&m = *model](std::size_t count, std::uint64_t seed) {
      return gan::sample(m, count, gan::LabelMix::match_prevalence, seed);
    };
    if (o.sampler == SamplerKind::shuffled) sampler = prognosis::label_shuffling(sampler);
  }
  std::vector<prognosis::TstrResult> rows;
  for (std::size_t T : o.horizons) {
    auto c = o.config;
    c.seed = derive_seed(o.config.seed, T);
    rows.push_back(prognosis::tstr(sampler, train, test, T, c));
  }
  write_text(o.out, prognosis::tstr_csv(rows));
  if (!o.json_out.empty()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) j.push_back(prognosis::to_json(r));
    write_json(o.json_out, j);
  }
  return rows;
}

// --- pipeline ----------------------------------------------------------------

PipelineConfig default_pipeline_config() {
  PipelineConfig c;
  c.gan.epochs = 300;
  c.gan.batch_size = 16;
  c.gan.architecture = {32, 32, {32, 16}, {16, 32}, 0.25};
  return c;
}

namespace {

nlohmann::json surrogate_json(const data::SurrogateConfig& s) {
  return {{"n_patients", s.n_patients},         {"visits", s.visits},
          {"planted_effect", s.planted_effect}, {"distractors", s.distractors},
          {"healed_fraction", s.healed_fraction}, {"missing_rate", s.missing_rate}};
}

data::SurrogateConfig surrogate_from_json(const nlohmann::json& j) {
  data::SurrogateConfig s;
  s.n_patients = j.value("n_patients", s.n_patients);
  s.visits = j.value("visits", s.visits);
  s.planted_effect = j.value("planted_effect", s.planted_effect);
  s.distractors = j.value("distractors", s.distractors);
  s.healed_fraction = j.value("healed_fraction", s.healed_fraction);
  s.missing_rate = j.value("missing_rate", s.missing_rate);
  return s;
}

nlohmann::json tsne_json(const eval::TsneConfig& t) {
  return {{"perplexity", t.perplexity},
          {"iterations", t.iterations},
          {"learning_rate", t.learning_rate},
          {"exaggeration", t.exaggeration},
          {"exaggeration_iterations", t.exaggeration_iterations},
          {"initial_momentum", t.initial_momentum},
          {"final_momentum", t.final_momentum},
          {"momentum_switch", t.momentum_switch},
          {"adaptive_gains", t.adaptive_gains},
          {"monotone", t.monotone}};
}

eval::TsneConfig tsne_from_json(const nlohmann::json& j) {
  eval::TsneConfig t;
  t.perplexity = j.value("perplexity", t.perplexity);
  t.iterations = j.value("iterations", t.iterations);
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  t.exaggeration = j.value("exaggeration", t.exaggeration);
  t.exaggeration_iterations = j.value("exaggeration_iterations", t.exaggeration_iterations);
  t.initial_momentum = j.value("initial_momentum", t.initial_momentum);
  t.final_momentum = j.value("final_momentum", t.final_momentum);
  t.momentum_switch = j.value("momentum_switch", t.momentum_switch);
  t.adaptive_gains = j.value("adaptive_gains", t.adaptive_gains);
  t.monotone = j.value("monotone", t.monotone);
  return t;
}

nlohmann::json forest_json(const forest::ForestConfig& f) {
  return {{"n_trees", f.n_trees}, {"max_depth", f.max_depth}, {"min_leaf", f.min_leaf},
          {"features_per_split", f.features_per_split}};
}

forest::ForestConfig forest_from_json(const nlohmann::json& j) {
  forest::ForestConfig f;
  f.n_trees = j.value("n_trees", f.n_trees);
  f.max_depth = j.value("max_depth", f.max_depth);
  f.min_leaf = j.value("min_leaf", f.min_leaf);
  f.features_per_split = j.value("features_per_split", f.features_per_split);
  return f;
}

const std::set<std::string> kPipelineKeys{
    "data_csv", "schema_path", "surrogate", "min_visits", "visits", "train_fraction", "importance_threshold",
    "min_features", "forest", "gan", "synth_multiplier", "horizons", "prog", "tstr_replicates",
    "control_replicates", "augment", "js_bins", "hist_bins", "disc_replicates", "tsne", "seed"};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

nlohmann::json to_json(const PipelineConfig& c) {
  auto gan = gan::to_json(c.gan);
  gan.erase("seed");  // derived from the master seed
  return {{"data_csv", c.data_csv},
          {"schema_path", c.schema_path},
          {"surrogate", surrogate_json(c.surrogate)},
          {"min_visits", c.min_visits},
          {"visits", c.visits},
          {"train_fraction", c.train_fraction},
          {"importance_threshold", c.importance_threshold},
          {"min_features", c.min_features},
          {"forest", forest_json(c.forest)},
          {"gan", gan},
          {"synth_multiplier", c.synth_multiplier},
          {"horizons", c.horizons},
          {"prog", [&] {
             auto p = prognosis::to_json(c.prog);
             p.erase("seed");
             return p;
           }()},
          {"tstr_replicates", c.tstr_replicates},
          {"control_replicates", c.control_replicates},
          {"augment", c.augment},
          {"js_bins", c.js_bins},
          {"hist_bins", c.hist_bins},
          {"disc_replicates", c.disc_replicates},
          {"tsne", tsne_json(c.tsne)},
          {"seed", c.seed}};
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("pipeline config must be a JSON object");
  std::vector<std::string> missing, unknown;
  for (const auto& [k, v] : j.items())
    if (!kPipelineKeys.count(k)) unknown.push_back(k);
  if (!j.contains("gan") || !j["gan"].is_object() || !j["gan"].contains("epochs")) missing.push_back("gan.epochs");
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
  };
  if (!missing.empty()) throw UsageError("pipeline config is missing required key(s): " + join(missing));
  if (!unknown.empty()) throw UsageError("pipeline config has unknown key(s): " + join(unknown));

  PipelineConfig c = default_pipeline_config();
  c.data_csv = j.value("data_csv", c.data_csv);
  c.schema_path = j.value("schema_path", c.schema_path);
  if (j.contains("surrogate")) c.surrogate = surrogate_from_json(j["surrogate"]);
  c.min_visits = j.value("min_visits", c.min_visits);
  c.visits = j.value("visits", c.visits);
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  c.importance_threshold = j.value("importance_threshold", c.importance_threshold);
  c.min_features = j.value("min_features", c.min_features);
  if (j.contains("forest")) c.forest = forest_from_json(j["forest"]);
  auto g = j["gan"];
  if (!g.contains("architecture")) g["architecture"] = gan::to_json(c.gan.architecture);
  c.gan = gan::train_config_from_json(g);
  c.synth_multiplier = j.value("synth_multiplier", c.synth_multiplier);
  c.horizons = j.value("horizons", c.horizons);
  if (j.contains("prog")) c.prog = prognosis::prog_config_from_json(j["prog"]);
  c.tstr_replicates = j.value("tstr_replicates", c.tstr_replicates);
  c.control_replicates = j.value("control_replicates", c.control_replicates);
  c.augment = j.value("augment", c.augment);
  c.js_bins = j.value("js_bins", c.js_bins);
  c.hist_bins = j.value("hist_bins", c.hist_bins);
  c.disc_replicates = j.value("disc_replicates", c.disc_replicates);
  if (j.contains("tsne")) c.tsne = tsne_from_json(j["tsne"]);
  c.seed = j.value("seed", c.seed);
  if (c.horizons.empty()) throw UsageError("horizons must not be empty");
  for (std::size_t T : c.horizons)
    if (T < 1 || T > c.visits) throw UsageError("horizons must lie in [1, visits]");
  return c;
}

nlohmann::json stage_seeds(std::uint64_t master) {
  nlohmann::json j = nlohmann::json::object();
  for (const char* stage : {"surrogate", "split", "forest", "gan", "sample", "tstr", "control", "reference", "js",
                            "disc", "tsne", "embed-subsample"})
    j[stage] = derive_seed(master, stage);
  return j;
}

nlohmann::json cmd_pipeline(const PipelineConfig& cfg, const std::string& out_dir, const Log& log_fn) {
  if (out_dir.empty()) throw UsageError("--out-dir is required");
  const std::string started = utc_now();
  auto log = [&](const std::string& s) {
    if (log_fn) log_fn(s);
  };
  const auto seeds = stage_seeds(cfg.seed);
  auto seed_of = [&](const char* stage) { return seeds.at(stage).get<std::uint64_t>(); };
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  auto path = [&](const char* name) { return (dir / name).string(); };
  write_json(path("config.json"), to_json(cfg));

  // data
  data::Dataset raw;
  if (cfg.data_csv.empty()) {
    auto s = cfg.surrogate;
    s.seed = seed_of("surrogate");
    s.visits = std::max(s.visits, cfg.visits);
    raw = data::surrogate_generate(s);
    write_text(path("data.csv"), data::to_csv(raw));
    log("surrogate: " + std::to_string(raw.size()) + " patients");
  } else {
    raw = load_labeled(cfg.data_csv, resolve_schema(cfg.data_csv, cfg.schema_path));
    log("loaded " + std::to_string(raw.size()) + " patients from " + cfg.data_csv);
  }
  const auto prepared = prepare(raw, cfg.min_visits, cfg.visits);
  const auto split = data::split(prepared, cfg.train_fraction, seed_of("split"));

  // importance on the first visit of the training split
  auto fc = cfg.forest;
  fc.seed = seed_of("forest");
  const auto forest = forest::fit_forest(data::first_visit_rows(split.train), as_reals(data::labels(split.train)), fc);
  const auto report = forest::importance(forest, feature_names(prepared.schema));
  std::vector<std::string> selected;
  for (const auto& f : report.features)
    if (f.score >= cfg.importance_threshold || selected.size() < cfg.min_features) selected.push_back(f.name);
  write_text(path("importance.csv"), forest::to_csv(report));
  {
    auto j = forest::to_json(report);
    j["threshold"] = cfg.importance_threshold;
    j["selected"] = selected;
    write_json(path("importance.json"), j);
  }
  log("importance: kept " + std::to_string(selected.size()) + " of " + std::to_string(report.features.size()) +
      " features");
  const auto train = data::select_features(split.train, selected);
  const auto test = data::select_features(split.test, selected);
  write_text(path("real_train.csv"), data::to_csv(train));
  write_text(path("real_test.csv"), data::to_csv(test));
  write_json(path("schema.json"), data::to_json(train.schema));

  // GAN
  auto gc = cfg.gan;
  gc.seed = seed_of("gan");
  gan::GanModel model;
  try {
    log("gan: training " + std::to_string(gc.epochs) + " epochs");
    model = gan::train(train, gc);
  } catch (const gan::TrainingDiverged& e) {
    checkpoint::save(e.last_good(), path("checkpoint_last_good.tgck"));
    throw;
  }
  checkpoint::save(model, path("checkpoint.tgck"));
  write_text(path("history.csv"), gan::history_csv(model.history));
  const std::size_t synth_count = cfg.synth_multiplier * train.size();
  const auto synth = gan::sample(model, synth_count, gan::LabelMix::match_prevalence, seed_of("sample"));
  write_text(path("synthetic.csv"), data::to_csv(synth));
  log("gan: " + std::to_string(model.history.size()) + " steps, " + std::to_string(synth_count) + " synthetic series");

  // TSTR, the shuffled-label control, and the train-on-real reference
  const prognosis::Sampler sampler = [&](std::size_t count, std::uint64_t seed) {
    return gan::sample(model, count, gan::LabelMix::match_prevalence, seed);
  };
  prognosis::TstrConfig tc;
  tc.synth_count = synth_count;
  tc.replicates = cfg.tstr_replicates;
  tc.augment = cfg.augment;
  tc.prog = cfg.prog;
  std::vector<prognosis::TstrResult> rows, reference;
  for (std::size_t T : cfg.horizons) {
    tc.seed = derive_seed(seed_of("tstr"), T);
    rows.push_back(prognosis::tstr(sampler, train, test, T, tc));
    tc.seed = derive_seed(seed_of("reference"), T);
    reference.push_back(prognosis::train_on_real(train, test, T, tc));
    log("tstr: T=" + std::to_string(T) + " auc " + std::to_string(rows.back().auc));
  }
  const std::size_t control_T = *std::max_element(cfg.horizons.begin(), cfg.horizons.end());
  auto cc = tc;
  cc.replicates = cfg.control_replicates;
  cc.augment = false;
  cc.seed = seed_of("control");
  const auto control = prognosis::tstr(prognosis::label_shuffling(sampler), train, test, control_T, cc);
  log("tstr: shuffled-label control auc " + std::to_string(control.auc));
  write_text(path("tstr.csv"), prognosis::tstr_csv(rows));
  {
    nlohmann::json j{{"tstr", nlohmann::json::array()}, {"train_on_real", nlohmann::json::array()},
                     {"shuffled_control", prognosis::to_json(control)}};
    for (const auto& r : rows) j["tstr"].push_back(prognosis::to_json(r));
    for (const auto& r : reference) j["train_on_real"].push_back(prognosis::to_json(r));
    write_json(path("tstr.json"), j);
  }

  // fidelity
  const auto js = eval::js_report(train, synth, cfg.js_bins, seed_of("js"));
  write_text(path("js.csv"), eval::to_csv(js));
  write_json(path("js.json"), eval::to_json(js));
  eval::DiscriminativeConfig dc;
  dc.replicates = cfg.disc_replicates;
  dc.classifier = cfg.prog;
  dc.seed = seed_of("disc");
  const auto disc = eval::discriminative_accuracy(train, synth, dc);
  write_json(path("discriminative.json"), eval::to_json(disc));
  log("eval: discriminative accuracy " + std::to_string(disc.accuracy) + "%");
  const auto synth_small = subsample(synth, train.size(), seed_of("embed-subsample"));
  auto tsc = cfg.tsne;
  tsc.seed = seed_of("tsne");
  eval::TsneResult tsne_details;
  const auto points =
      eval::embed({{"train", &train}, {"test", &test}, {"synthetic", &synth_small}}, tsc, &tsne_details);
  write_text(path("embedding.csv"), eval::embedding_csv(points));
  std::vector<std::string> continuous;
  for (const auto& f : train.schema.features())
    if (f.kind == data::FeatureKind::continuous) continuous.push_back(f.name);
  write_text(path("histograms.csv"),
             eval::histograms_csv(eval::export_histograms(train, synth, continuous, cfg.hist_bins)));

  nlohmann::json summary{
      {"n_patients", prepared.size()},
      {"n_train", train.size()},
      {"n_test", test.size()},
      {"n_synthetic", synth.size()},
      {"importance_ranking", nlohmann::json::array()},
      {"selected_features", selected},
      {"gan",
       {{"steps", model.history.size()},
        {"diverged", false},
        {"final_wasserstein", model.history.empty() ? 0.0 : model.history.back().wasserstein},
        {"final_grad_norm", model.history.empty() ? 0.0 : model.history.back().mean_grad_norm}}},
      {"tstr", nlohmann::json::array()},
      {"train_on_real", nlohmann::json::array()},
      {"shuffled_control_auc", control.auc},
      {"js_visit_average", js.visit_average},
      {"discriminative_accuracy", disc.accuracy},
      {"tsne_final_kl", tsne_details.kl.empty() ? 0.0 : tsne_details.kl.back()}};
  for (const auto& f : report.features) summary["importance_ranking"].push_back(f.name);
  for (const auto& r : rows) summary["tstr"].push_back({{"T", r.horizon}, {"accuracy", r.accuracy}, {"auc", r.auc}});
  for (const auto& r : reference)
    summary["train_on_real"].push_back({{"T", r.horizon}, {"accuracy", r.accuracy}, {"auc", r.auc}});
  write_json(path("report.json"), summary);

  nlohmann::json files = nlohmann::json::array();
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());
  for (const auto& p : entries) {
    const auto bytes = read_text(p.string());
    files.push_back({{"name", p.filename().string()}, {"bytes", bytes.size()}, {"fnv1a64", checkpoint::digest(bytes)}});
  }
  write_json(path("manifest.json"), {{"tool", "tabgan-ts"},
                                     {"version", TABGAN_VERSION},
                                     {"checkpoint_format", checkpoint::kFormatVersion},
                                     {"compiler", __VERSION__},
                                     {"master_seed", cfg.seed},
                                     {"seeds", seeds},
                                     {"config", to_json(cfg)},
                                     {"files", files},
                                     {"started_utc", started},
                                     {"finished_utc", utc_now()}});
  return summary;
}

}  // namespace tabgan::cli
