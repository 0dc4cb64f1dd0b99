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

// Brute-force references shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tabgan/data_model.hpp"
#include "tabgan/rng.hpp"

namespace tabgan::testing {

/// Pairwise count of concordant positive/negative pairs, ties one half.
inline double brute_force_auc(const std::vector<int>& y, const std::vector<double>& s) {
  double hits = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1.0;
        hits += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return hits / pairs;
}

/// Mean silhouette of [N, dims] points under labels, Euclidean distance.
inline double silhouette(const std::vector<double>& points, std::size_t dims, const std::vector<int>& labels) {
  const std::size_t N = labels.size();
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0), count(static_cast<std::size_t>(k), 0.0);
    for (std::size_t j = 0; j < N; ++j) {
      if (j == i) continue;
      double d = 0.0;
      for (std::size_t c = 0; c < dims; ++c) d += (points[i * dims + c] - points[j * dims + c]) * (points[i * dims + c] - points[j * dims + c]);
      sum[static_cast<std::size_t>(labels[j])] += std::sqrt(d);
      count[static_cast<std::size_t>(labels[j])] += 1.0;
    }
    const auto own = static_cast<std::size_t>(labels[i]);
    if (count[own] == 0.0) continue;
    const double a = sum[own] / count[own];
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sum.size(); ++c)
      if (c != own && count[c] > 0.0) b = std::min(b, sum[c] / count[c]);
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(N);
}

/// Two isotropic unit Gaussians in `dims` dimensions whose means differ by
/// `separation` along every axis; points alternate between clusters.
inline std::vector<double> two_clusters(std::size_t N, std::size_t dims, double separation, std::uint64_t seed,
                                        std::vector<int>& labels) {
  Rng rng(seed);
  std::vector<double> x(N * dims);
  labels.assign(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    labels[i] = static_cast<int>(i % 2);
    for (std::size_t c = 0; c < dims; ++c) x[i * dims + c] = rng.normal() + separation * labels[i];
  }
  return x;
}

/// Every series of `like` replaced by the same matrix: continuous features at
/// their minimum, categorical features at their first level.
inline data::Dataset constant_fake(const data::Dataset& like, std::size_t count) {
  data::Dataset d{like.schema, {}, data::Provenance::synthetic};
  const std::size_t T = data::visit_count(like);
  std::vector<data::Value> row;
  for (const auto& f : like.schema.features())
    row.push_back(f.kind == data::FeatureKind::continuous ? data::Value{f.min} : data::Value{f.levels.front()});
  for (std::size_t i = 0; i < count; ++i)
    d.series.push_back({"F" + std::to_string(i), std::vector<std::vector<data::Value>>(T, row),
                        static_cast<int>(i % 2)});
  return d;
}

/// Samples from the surrogate generator itself, preprocessed like the real data.
inline data::Dataset oracle_draw(data::SurrogateConfig base, std::size_t count, std::uint64_t seed,
                                 const std::vector<std::string>& features = {}) {
  base.n_patients = count;
  base.seed = seed;
  auto d = data::impute(data::filter_eligibility(data::surrogate_generate(base)));
  return features.empty() ? d : data::select_features(d, features);
}

}  // namespace tabgan::testing
