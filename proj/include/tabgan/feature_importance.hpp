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

// Variance-impurity regression forest over first-visit encoded rows, and the
// normalized impurity-decrease importance used to pick the modeling subset.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "tabgan/tensor.hpp"

namespace tabgan::forest {

struct ForestConfig {
  std::size_t n_trees = 200;
  std::size_t max_depth = 8;
  std::size_t min_leaf = 2;
  std::size_t features_per_split = 0;  // zero means ceil(sqrt(d))
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;               // mean target of the node's samples
  double impurity_decrease = 0.0;   // weighted SSE removed by the split
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t depth() const;
  double predict(const double* row) const;
};

struct Forest {
  std::size_t n_features = 0;
  std::vector<Tree> trees;
  /// Mean of the tree predictions for each row of X [N, d].
  std::vector<double> predict(const Tensor& X) const;
};

/// X is [N, d]; y holds N targets. Trees are grown on bootstrap samples with
/// per-tree streams derived from (seed, tree index), so the forest does not
/// depend on thread scheduling.
Forest fit_forest(const Tensor& X, const std::vector<double>& y, const ForestConfig& config);

struct FeatureScore {
  std::string name;
  double raw = 0.0;
  double score = 0.0;  // raw / max raw, or zero when every raw is zero
};

struct ImportanceReport {
  std::vector<FeatureScore> features;  // score descending, then name
};

ImportanceReport importance(const Forest& forest, const std::vector<std::string>& names);

/// Names with score >= threshold in report order. Throws std::runtime_error
/// when nothing survives.
std::vector<std::string> select(const ImportanceReport& report, double threshold = 0.3);

nlohmann::json to_json(const ImportanceReport& report);
std::string to_csv(const ImportanceReport& report);

}  // namespace tabgan::forest
