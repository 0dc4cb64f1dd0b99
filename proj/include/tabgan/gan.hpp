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

// Conditional WGAN-GP over encoded T x n matrices. The generator maps
// (z, label) to a matrix in [-1, 1]; the critic scores a matrix together with
// a constant label plane.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "tabgan/data_model.hpp"
#include "tabgan/nn.hpp"
#include "tabgan/optim.hpp"

namespace tabgan::gan {

/// Layer widths. The defaults are the full-size networks; smaller widths keep
/// the same topology.
struct Architecture {
  std::size_t latent_dim = 100;
  std::size_t base_channels = 256;
  std::vector<std::size_t> generator_filters{128, 64};  // a final 1-filter deconv follows
  std::vector<std::size_t> critic_filters{64, 128, 256, 512};
  double dropout = 0.25;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

nlohmann::json to_json(const Architecture& a);
Architecture architecture_from_json(const nlohmann::json& j);

/// dense(ceil(T/2)*ceil(n/2)*base) -> BN -> LeakyReLU -> reshape ->
/// deconv stride 2, then stride-1 deconvs, each BN -> LeakyReLU -> dropout ->
/// deconv(1) -> tanh -> crop to T x n. Input is [latent_dim + 1] (noise and
/// the +1/-1 label); output is [T, n, 1].
nn::NetworkSpec build_generator(std::size_t T, std::size_t n, const Architecture& arch = {});

/// Input [T, n, 2] (data plane and label plane); 3x3 stride-1 same convs,
/// each LeakyReLU -> dropout; flatten; dense(1) linear.
nn::NetworkSpec build_critic(std::size_t T, std::size_t n, const Architecture& arch = {});

enum class LabelMix { match_prevalence, balanced, fixed_healed, fixed_not_healed };
const char* label_mix_name(LabelMix m);
LabelMix parse_label_mix(const std::string& s);

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 16;
  /// Generator iterations per epoch; zero means ceil(N / batch_size).
  std::size_t steps_per_epoch = 0;
  std::size_t n_critic = 5;
  double lambda_gp = 10.0;
  AdamConfig critic_optimizer{};
  AdamConfig generator_optimizer{};
  std::uint64_t seed = 0;
  LabelMix label_balance = LabelMix::match_prevalence;
  Architecture architecture{};

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// One generator iteration. Critic quantities are means over its n_critic
/// critic updates.
struct StepRecord {
  std::size_t step = 0;
  double critic_loss = 0.0;
  double gen_loss = 0.0;
  double gp_term = 0.0;
  double mean_grad_norm = 0.0;
  double wasserstein = 0.0;  // mean C(real) - mean C(fake)

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct GanModel {
  data::FeatureSchema schema;
  std::size_t visits = 0;
  nn::NetworkSpec generator;
  nn::NetworkSpec critic;
  ParameterStore generator_params;
  ParameterStore critic_params;
  nn::BatchNormState generator_bn;
  TrainConfig config;
  double healed_prevalence = 0.5;
  std::vector<StepRecord> history;
};

/// Fresh networks for the dataset's (T, n); no training.
GanModel init_model(const data::FeatureSchema& schema, std::size_t visits, const TrainConfig& config);

/// Thrown when a loss or gradient stops being finite. Carries the model as it
/// was after the last completed generator iteration.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, GanModel last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const GanModel& last_good() const { return last_good_; }

 private:
  GanModel last_good_;
};

enum class Phase { critic, generator };
/// Called after every optimizer update.
using TrainObserver = std::function<void(Phase, const GanModel&)>;

struct PenaltyResult {
  ad::Var penalty;  // differentiable in the critic parameters
  Tensor interpolates;
  std::vector<double> grad_norms;
};

/// Mean over the batch of (||grad_x C(x_hat)|| - 1)^2 with
/// x_hat = eps * real + (1 - eps) * fake, one eps per sample.
PenaltyResult gradient_penalty(const std::function<ad::Var(const ad::Var&)>& critic, const Tensor& real,
                               const Tensor& fake, const std::vector<double>& eps);
PenaltyResult gradient_penalty(const std::function<ad::Var(const ad::Var&)>& critic, const Tensor& real,
                               const Tensor& fake, Rng& rng);

/// Encoded data as [N, T, n, 1] and labels as +1 (healed) / -1.
struct EncodedData {
  Tensor x;
  std::vector<double> labels;
};
EncodedData encode_for_gan(const data::Dataset& d);

/// Runs `config.epochs * steps_per_epoch` generator iterations, each preceded
/// by n_critic critic updates on fresh minibatches. Deterministic given the
/// seed. Throws std::invalid_argument for a single-label dataset.
GanModel train(const data::Dataset& dataset, const TrainConfig& config, const TrainObserver& observer = {});
/// Continues training an existing model on `encoded` data for `steps`
/// generator iterations.
void train_steps(GanModel& model, const EncodedData& encoded, std::size_t steps, Rng& rng,
                 const TrainObserver& observer = {});

/// Generator output in eval mode, [count, T, n, 1], with labels +1/-1.
EncodedData sample_encoded(const GanModel& model, std::size_t count, LabelMix mix, std::uint64_t seed);
/// Decoded synthetic records labeled with their conditioning label.
data::Dataset sample(const GanModel& model, std::size_t count, LabelMix mix, std::uint64_t seed);

/// Labels for `count` samples: exact counts for prevalence and balanced
/// mixes, in seeded random order.
std::vector<double> draw_labels(std::size_t count, LabelMix mix, double prevalence, Rng& rng);

std::string history_csv(const std::vector<StepRecord>& history);

}  // namespace tabgan::gan
