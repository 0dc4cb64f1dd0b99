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

// tabgan-ts: surrogate data, feature importance, GAN training and sampling,
// fidelity evaluation, TSTR, and the end-to-end pipeline.

#include <cstdio>
#include <iostream>
#include <string>
#include <string_view>

#include "CLI11.hpp"

#include "tabgan/cli.hpp"

using namespace tabgan;

namespace {

void log_line(const std::string& s) { std::cerr << "tabgan-ts: " << s << "\n"; }

int report_error(const cli::ErrorInfo& e, bool json) {
  if (json) std::cerr << cli::error_json(e) << "\n";
  else std::cerr << "tabgan-ts: error: " << e.message << "\n";
  return e.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  bool json_errors = false;
  for (int i = 1; i < argc; ++i)
    if (std::string_view(argv[i]) == "--json-errors") json_errors = true;

  CLI::App app{"Conditional WGAN-GP synthesis and evaluation of time-series tabular records", "tabgan-ts"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json-errors", json_errors, "Write errors to stderr as JSON");
  app.set_version_flag("--version", "tabgan-ts 0.1.0");

  std::uint64_t seed = 0;

  // surrogate
  cli::SurrogateOptions sur;
  auto* s_cmd = app.add_subcommand("surrogate", "Write a seeded surrogate wound-care dataset");
  s_cmd->add_option("--n", sur.config.n_patients, "Patients")->capture_default_str();
  s_cmd->add_option("--visits", sur.config.visits, "Visits per patient")->capture_default_str();
  s_cmd->add_option("--effect", sur.config.planted_effect, "Planted effect strength")->capture_default_str();
  s_cmd->add_option("--distractors", sur.config.distractors, "Uniform noise features")->capture_default_str();
  s_cmd->add_option("--healed-fraction", sur.config.healed_fraction, "Healed prevalence")->capture_default_str();
  s_cmd->add_option("--missing-rate", sur.config.missing_rate, "Missing continuous cells after visit 1")
      ->capture_default_str();
  s_cmd->add_option("--seed", seed, "Seed")->required();
  s_cmd->add_option("--out", sur.out, "Output CSV")->required();
  s_cmd->add_option("--schema-out", sur.schema_out, "Output schema JSON");

  // importance
  cli::ImportanceOptions imp;
  auto* i_cmd = app.add_subcommand("importance", "Random-forest importance of first-visit features");
  i_cmd->add_option("--data", imp.data, "Input CSV")->required();
  i_cmd->add_option("--schema", imp.schema, "Schema JSON (inferred when omitted)");
  i_cmd->add_option("--threshold", imp.threshold, "Selection threshold")->capture_default_str();
  i_cmd->add_option("--min-visits", imp.min_visits, "Eligibility: minimum visits")->capture_default_str();
  i_cmd->add_option("--trees", imp.forest.n_trees, "Trees")->capture_default_str();
  i_cmd->add_option("--max-depth", imp.forest.max_depth, "Maximum tree depth")->capture_default_str();
  i_cmd->add_option("--min-leaf", imp.forest.min_leaf, "Minimum leaf size")->capture_default_str();
  i_cmd->add_option("--seed", seed, "Seed")->required();
  i_cmd->add_option("--out", imp.out, "Importance CSV")->required();
  i_cmd->add_option("--selected-out", imp.selected_out, "Selected-features JSON");

  // gan-train
  cli::GanTrainOptions gt;
  gt.config = cli::default_pipeline_config().gan;
  std::string gt_config;
  bool full_size = false;
  auto* gt_cmd = app.add_subcommand("gan-train", "Train the conditional WGAN-GP and write a checkpoint");
  gt_cmd->add_option("--data", gt.data, "Training CSV")->required();
  gt_cmd->add_option("--schema", gt.schema, "Schema JSON (inferred when omitted)");
  gt_cmd->add_option("--features", gt.features, "Comma-separated features or a selected-features JSON");
  gt_cmd->add_option("--config", gt_config, "Training config JSON (flags below override it)");
  gt_cmd->add_option("--epochs", gt.config.epochs, "Epochs")->capture_default_str();
  gt_cmd->add_option("--batch-size", gt.config.batch_size, "Minibatch size")->capture_default_str();
  gt_cmd->add_option("--steps-per-epoch", gt.config.steps_per_epoch, "Generator iterations per epoch (0: N/B)");
  gt_cmd->add_option("--critic-lr", gt.config.critic_optimizer.lr, "Critic learning rate")->capture_default_str();
  gt_cmd->add_option("--generator-lr", gt.config.generator_optimizer.lr, "Generator learning rate")
      ->capture_default_str();
  gt_cmd->add_flag("--full-size", full_size, "Full-width networks instead of the reduced widths");
  gt_cmd->add_option("--visits", gt.visits, "Visits used per series")->capture_default_str();
  gt_cmd->add_option("--min-visits", gt.min_visits, "Eligibility: minimum visits")->capture_default_str();
  gt_cmd->add_option("--seed", seed, "Seed")->required();
  gt_cmd->add_option("--out", gt.out, "Checkpoint path")->required();
  gt_cmd->add_option("--history-out", gt.history_out, "Training-history CSV");

  // gan-sample
  cli::GanSampleOptions gs;
  std::string mix = "match-train-prevalence";
  auto* gs_cmd = app.add_subcommand("gan-sample", "Sample labeled synthetic series from a checkpoint");
  gs_cmd->add_option("--checkpoint", gs.checkpoint, "Checkpoint")->required();
  gs_cmd->add_option("--count", gs.count, "Series to generate")->required();
  gs_cmd->add_option("--label-mix", mix, "match-train-prevalence, balanced, healed, not-healed")
      ->capture_default_str();
  gs_cmd->add_option("--seed", seed, "Seed")->required();
  gs_cmd->add_option("--out", gs.out, "Output CSV")->required();

  // eval
  cli::EvalOptions ev;
  auto* e_cmd = app.add_subcommand("eval", "JS divergence, discriminative accuracy, t-SNE, densities");
  e_cmd->add_option("--real", ev.real, "Real CSV")->required();
  e_cmd->add_option("--synth", ev.synth, "Synthetic CSV")->required();
  e_cmd->add_option("--schema", ev.schema, "Schema JSON");
  e_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint supplying the schema");
  e_cmd->add_option("--which", ev.which, "Any of js,disc,tsne,hist")->delimiter(',')->capture_default_str();
  e_cmd->add_option("--bins", ev.bins, "Bins for continuous features")->capture_default_str();
  e_cmd->add_option("--perplexity", ev.tsne.perplexity, "t-SNE perplexity")->capture_default_str();
  e_cmd->add_option("--tsne-iterations", ev.tsne.iterations, "t-SNE iterations")->capture_default_str();
  e_cmd->add_option("--disc-replicates", ev.disc.replicates, "Discriminative replicates")->capture_default_str();
  e_cmd->add_option("--seed", seed, "Seed")->required();
  e_cmd->add_option("--out-dir", ev.out_dir, "Report directory")->required();

  // tstr
  cli::TstrOptions ts;
  std::string sampler = "gan";
  auto* t_cmd = app.add_subcommand("tstr", "Train Prog-CNN on synthetic records, test on real ones");
  t_cmd->add_option("--checkpoint", ts.checkpoint, "Checkpoint (gan and shuffled samplers)");
  t_cmd->add_option("--schema", ts.schema, "Schema JSON (oracle sampler without checkpoint)");
  t_cmd->add_option("--train", ts.train, "Real training CSV")->required();
  t_cmd->add_option("--test", ts.test, "Real test CSV")->required();
  t_cmd->add_option("--horizons", ts.horizons, "Visit horizons")->delimiter(',')->capture_default_str();
  t_cmd->add_option("--sampler", sampler, "gan, oracle (surrogate generator), shuffled (label control)")
      ->capture_default_str();
  t_cmd->add_option("--oracle-effect", ts.oracle.planted_effect, "Oracle surrogate effect")->capture_default_str();
  t_cmd->add_option("--oracle-distractors", ts.oracle.distractors, "Oracle surrogate distractors")
      ->capture_default_str();
  t_cmd->add_option("--synth-count", ts.config.synth_count, "Synthetic series (0: 10x training set)")
      ->capture_default_str();
  t_cmd->add_option("--replicates", ts.config.replicates, "Replicates averaged per horizon")->capture_default_str();
  t_cmd->add_flag("--augment", ts.config.augment, "Train on real plus synthetic records");
  t_cmd->add_option("--epochs", ts.config.prog.epochs, "Prog-CNN epochs")->capture_default_str();
  t_cmd->add_option("--seed", seed, "Seed")->required();
  t_cmd->add_option("--out", ts.out, "T,accuracy,auc CSV")->required();
  t_cmd->add_option("--json-out", ts.json_out, "Detailed JSON");

  // pipeline
  std::string p_config, p_out, p_data, p_schema;
  bool quiet = false;
  auto* p_cmd = app.add_subcommand("pipeline", "Run every stage and write a report directory");
  p_cmd->add_option("--config", p_config, "Pipeline config JSON (surrogate defaults when omitted)");
  p_cmd->add_option("--data", p_data, "EMR CSV instead of the surrogate");
  p_cmd->add_option("--schema", p_schema, "Schema JSON for --data");
  p_cmd->add_option("--seed", seed, "Master seed")->required();
  p_cmd->add_option("--out-dir", p_out, "Report directory")->required();
  p_cmd->add_flag("--quiet", quiet, "No progress lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error({cli::kExitUsage, "usage", e.what()}, json_errors);
  }

  try {
    if (*s_cmd) {
      sur.config.seed = seed;
      cli::cmd_surrogate(sur);
    } else if (*i_cmd) {
      imp.forest.seed = seed;
      const auto r = cli::cmd_importance(imp);
      std::cout << forest::to_csv(r);
    } else if (*gt_cmd) {
      if (!gt_config.empty()) {
        auto j = nlohmann::json::parse(cli::read_text(gt_config));
        auto base = gan::train_config_from_json(j);
        for (auto* opt : gt_cmd->get_options()) {
          if (opt->count() == 0) continue;
          const auto name = opt->get_name();
          if (name == "--epochs") base.epochs = gt.config.epochs;
          if (name == "--batch-size") base.batch_size = gt.config.batch_size;
          if (name == "--steps-per-epoch") base.steps_per_epoch = gt.config.steps_per_epoch;
          if (name == "--critic-lr") base.critic_optimizer.lr = gt.config.critic_optimizer.lr;
          if (name == "--generator-lr") base.generator_optimizer.lr = gt.config.generator_optimizer.lr;
        }
        if (!j.contains("architecture")) base.architecture = gt.config.architecture;
        gt.config = base;
      }
      if (full_size) gt.config.architecture = gan::Architecture{};
      gt.config.seed = seed;
      const auto m = cli::cmd_gan_train(gt, log_line);
      log_line("wrote " + gt.out + " (" + std::to_string(m.history.size()) + " generator iterations)");
    } else if (*gs_cmd) {
      gs.mix = gan::parse_label_mix(mix);
      gs.seed = seed;
      cli::cmd_gan_sample(gs);
    } else if (*e_cmd) {
      ev.seed = seed;
      std::cout << cli::cmd_eval(ev).dump(2) << "\n";
    } else if (*t_cmd) {
      ts.sampler = cli::parse_sampler(sampler);
      ts.config.seed = seed;
      std::cout << prognosis::tstr_csv(cli::cmd_tstr(ts));
    } else if (*p_cmd) {
      auto cfg = p_config.empty() ? cli::default_pipeline_config()
                                  : cli::pipeline_config_from_json(nlohmann::json::parse(cli::read_text(p_config)));
      if (!p_data.empty()) cfg.data_csv = p_data;
      if (!p_schema.empty()) cfg.schema_path = p_schema;
      cfg.seed = seed;
      const auto summary = cli::cmd_pipeline(cfg, p_out, quiet ? cli::Log{} : cli::Log{log_line});
      std::cout << summary.dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    return report_error(cli::classify(e), json_errors);
  }
  return cli::kExitOk;
}
