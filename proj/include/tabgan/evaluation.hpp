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

// Fidelity metrics for synthetic against real records: Jensen-Shannon
// divergence per feature and visit, discriminative accuracy, exact t-SNE,
// and density exports for plotting.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "tabgan/data_model.hpp"
#include "tabgan/prognosis.hpp"
#include "tabgan/tensor.hpp"

namespace tabgan::eval {

/// Probability vector: entries >= 0 summing to 1 within 1e-9.
using Distribution = std::vector<double>;

/// Throws std::invalid_argument for an invalid distribution.
void validate_distribution(const Distribution& p);

/// -sum p ln p in nats, with 0 ln 0 = 0.
double shannon_entropy(const Distribution& p);

/// H(w1 p1 + w2 p2) - w1 H(p1) - w2 H(p2). Rounding is clamped to [0, ln 2].
double js_divergence(const Distribution& p1, const Distribution& p2, double w1 = 0.5, double w2 = 0.5);

/// Equal-width histogram over [lo, hi]; values outside fall into the edge bins.
Distribution histogram(const std::vector<double>& values, double lo, double hi, std::size_t bins);

struct JsEntry {
  std::string feature;
  std::size_t visit = 0;  // 1-based
  bool continuous = false;
  double js = 0.0;
};

struct JsReport {
  std::size_t bins = 10;
  std::size_t real_count = 0;
  std::size_t synth_count = 0;  // after subsampling
  std::vector<JsEntry> entries;  // schema order within each visit
  std::vector<double> visit_average;             // over all features
  std::vector<double> visit_continuous_average;  // over continuous features
};

/// Categorical features compare level frequencies; continuous features use
/// `bins` equal-width bins over the real values' range at that visit. When
/// synth is larger it is subsampled (seeded) to |real| after a canonical
/// sort, so the report does not depend on the row order of either dataset.
JsReport js_report(const data::Dataset& real, const data::Dataset& synth, std::size_t bins, std::uint64_t seed);

nlohmann::json to_json(const JsReport& r);
/// `feature,visit,js` rows.
std::string to_csv(const JsReport& r);

struct DiscriminativeConfig {
  double train_fraction = 0.75;
  std::size_t replicates = 1;  // the reported accuracy averages replicates
  prognosis::ProgConfig classifier{};
  std::uint64_t seed = 0;
};

struct DiscriminativeResult {
  double accuracy = 0.0;  // percent of held-out synthetic records called fake
  std::size_t train_real = 0;
  std::size_t train_synth = 0;
  std::size_t held_out_synth = 0;
  std::vector<double> replicate_accuracy;
};

/// Trains the Prog-CNN skeleton to tell floor(train_fraction * |real|) real
/// records from as many synthetic ones, then classifies the synthetic records
/// it never saw. Requires |synth| >= |real|.
DiscriminativeResult discriminative_accuracy(const data::Dataset& real, const data::Dataset& synth,
                                             const DiscriminativeConfig& config);
nlohmann::json to_json(const DiscriminativeResult& r);

struct TsneConfig {
  double perplexity = 15.0;
  std::size_t iterations = 1000;
  double learning_rate = 200.0;
  double exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t momentum_switch = 250;
  bool adaptive_gains = false;  // delta-bar-delta step sizes
  /// After exaggeration, a step that raises KL is undone, momentum is reset,
  /// and the step is halved until one descends.
  bool monotone = true;
  std::uint64_t seed = 0;
};

struct Affinities {
  Tensor conditional;  // [N, N], rows sum to 1, zero diagonal
  std::vector<double> beta;     // precision 1 / (2 sigma^2) per row
  std::vector<double> entropy;  // achieved row entropy in nats
};

/// Per-row Gaussian conditionals whose entropy matches ln(perplexity).
Affinities calibrate_affinities(const Tensor& points, double perplexity);
/// (P_cond + P_cond^T) / 2N.
Tensor joint_probabilities(const Tensor& conditional);

struct TsneResult {
  Tensor embedding;         // [N, 2]
  std::vector<double> kl;   // KL(P || Q) at the start of every iteration
  std::size_t rejected_steps = 0;
  std::vector<double> row_entropy;
};

/// Exact t-SNE of [N, d] points. Throws unless 3 <= perplexity <= (N-1)/3
/// and N <= 2000. Exact duplicates are separated by a seeded 1e-10 jitter.
TsneResult tsne(const Tensor& points, const TsneConfig& config);

struct EmbeddingPoint {
  double x = 0.0, y = 0.0;
  std::string source;  // synthetic, train, or test
  int label = 0;
};

struct SourcedDataset {
  std::string source;
  const data::Dataset* dataset;
};

/// t-SNE of the flattened encoded series of every dataset, in order.
std::vector<EmbeddingPoint> embed(const std::vector<SourcedDataset>& parts, const TsneConfig& config,
                                  TsneResult* details = nullptr);
/// `x,y,source,label` rows with labels healed / not_healed.
std::string embedding_csv(const std::vector<EmbeddingPoint>& points);

struct HistogramBin {
  std::string feature;
  std::size_t visit = 0;  // 1-based
  std::string source;     // real or synthetic
  double lo = 0.0, hi = 0.0;
  double density = 0.0;
};

/// Densities over each continuous feature's schema range, per visit and
/// source. Throws std::invalid_argument for a categorical feature.
std::vector<HistogramBin> export_histograms(const data::Dataset& real, const data::Dataset& synth,
                                            const std::vector<std::string>& features, std::size_t bins);
/// `feature,visit,source,bin_lo,bin_hi,density` rows.
std::string histograms_csv(const std::vector<HistogramBin>& rows);

}  // namespace tabgan::eval
