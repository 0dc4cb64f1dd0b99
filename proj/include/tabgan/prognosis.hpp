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

// Prog-CNN: a small convolutional classifier predicting 12-week healing from
// the first T visits, and the train-on-synthetic, test-on-real protocol.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "tabgan/data_model.hpp"
#include "tabgan/nn.hpp"
#include "tabgan/optim.hpp"

namespace tabgan::prognosis {

inline constexpr std::size_t kMinRows = 3;

/// Input [max(T, 3), n, 1]: conv16 -> LeakyReLU -> conv16 -> LeakyReLU ->
/// dropout -> flatten -> dense5 -> sigmoid -> dense1 -> sigmoid.
nn::NetworkSpec build_prog_cnn(std::size_t T, std::size_t n, double dropout = 0.5);

struct ProgConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  double dropout = 0.5;
  std::uint64_t seed = 0;

  friend bool operator==(const ProgConfig&, const ProgConfig&) = default;
};

nlohmann::json to_json(const ProgConfig& c);
ProgConfig prog_config_from_json(const nlohmann::json& j);

struct ProgModel {
  nn::NetworkSpec spec;
  ParameterStore params;
  std::size_t visits = 0;
};

/// Encoded first-T visits zero-padded to at least three rows: [N, max(T,3), n, 1].
Tensor prog_inputs(const data::Dataset& d, std::size_t T);

/// Minimizes binary cross-entropy (computed from the final pre-sigmoid
/// activation) with Adam. Throws for single-label training data.
ProgModel train_prog(const data::Dataset& train, std::size_t T, const ProgConfig& config);
ProgModel init_prog(std::size_t T, std::size_t n, const ProgConfig& config);

/// Healing probabilities in eval mode.
std::vector<double> predict(const ProgModel& model, const data::Dataset& d);

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Throws unless both classes are present.
double auc(const std::vector<int>& labels, const std::vector<double>& scores);

struct Metrics {
  double accuracy = 0.0;  // percent, predicted healed when score >= 0.5
  double auc = 0.0;
};
Metrics score(const std::vector<int>& labels, const std::vector<double>& scores);
Metrics evaluate(const ProgModel& model, const data::Dataset& test);

/// Draws `count` labeled records.
using Sampler = std::function<data::Dataset(std::size_t count, std::uint64_t seed)>;
/// Sampler whose records keep their features but get a seeded permutation of
/// the labels, destroying any feature-label relation.
Sampler label_shuffling(Sampler inner);

struct TstrConfig {
  std::size_t synth_count = 0;  // zero means 10 x |real_train|
  std::size_t replicates = 1;   // metrics are averaged over replicate seeds
  bool augment = false;         // train on real_train plus synthetic
  ProgConfig prog{};
  std::uint64_t seed = 0;
};

struct TstrResult {
  std::size_t horizon = 0;
  double accuracy = 0.0;
  double auc = 0.0;
  std::size_t test_positives = 0;
  std::size_t test_negatives = 0;
  std::size_t synth_count = 0;
  std::size_t replicates = 1;
  bool augment = false;
  std::vector<double> replicate_auc;
};

TstrResult tstr(const Sampler& sampler, const data::Dataset& real_train, const data::Dataset& real_test,
                std::size_t T, const TstrConfig& config);
/// Reference: the same protocol trained on the real training set.
TstrResult train_on_real(const data::Dataset& real_train, const data::Dataset& real_test, std::size_t T,
                         const TstrConfig& config);

nlohmann::json to_json(const TstrResult& r);
/// `T,accuracy,auc` rows.
std::string tstr_csv(const std::vector<TstrResult>& rows);

}  // namespace tabgan::prognosis
