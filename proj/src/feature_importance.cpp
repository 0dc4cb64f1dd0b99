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

#include "tabgan/feature_importance.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tabgan/rng.hpp"

namespace tabgan::forest {

std::size_t Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  // children always have larger indices than their parent
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

double Tree::predict(const double* row) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0)
    i = static_cast<std::size_t>(row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
  return nodes[i].value;
}

std::vector<double> Forest::predict(const Tensor& X) const {
  if (X.rank() != 2 || X.dim(1) != n_features) throw ShapeError("forest: input must be [N, " + std::to_string(n_features) + "]");
  std::vector<double> out(X.dim(0), 0.0);
  for (std::size_t r = 0; r < out.size(); ++r) {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(X.data().data() + r * n_features);
    out[r] = s / static_cast<double>(trees.size());
  }
  return out;
}

namespace {

struct Builder {
  const Tensor& X;
  const std::vector<double>& y;
  const ForestConfig& cfg;
  std::size_t d;
  std::size_t mtry;
  Rng rng;
  Tree tree;

  double at(std::size_t r, std::size_t f) const { return X[r * d + f]; }

  int grow(std::vector<std::size_t>& rows, std::size_t begin, std::size_t end, std::size_t depth) {
    const std::size_t n = end - begin;
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      sum += y[rows[i]];
      sq += y[rows[i]] * y[rows[i]];
    }
    const double mean = sum / static_cast<double>(n);
    const double sse = std::max(0.0, sq - sum * mean);
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({-1, 0.0, -1, -1, mean, 0.0});
    if (depth >= cfg.max_depth || n < 2 * cfg.min_leaf || sse <= 1e-12) return id;

    std::vector<std::size_t> candidates(d);
    std::iota(candidates.begin(), candidates.end(), 0);
    int best_f = -1;
    double best_gain = 0.0, best_thr = 0.0;
    std::vector<std::size_t> sorted(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                    rows.begin() + static_cast<std::ptrdiff_t>(end));
    for (std::size_t k = 0; k < mtry; ++k) {
      // partial Fisher-Yates draws features without replacement
      const std::size_t pick = k + rng.below(d - k);
      std::swap(candidates[k], candidates[pick]);
      const std::size_t f = candidates[k];
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        const double va = at(a, f), vb = at(b, f);
        return va < vb || (va == vb && a < b);
      });
      double ls = 0.0, lsq = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const double v = y[sorted[i]];
        ls += v;
        lsq += v * v;
        const std::size_t nl = i + 1, nr = n - nl;
        if (nl < cfg.min_leaf || nr < cfg.min_leaf) continue;
        const double lo = at(sorted[i], f), hi = at(sorted[i + 1], f);
        if (lo == hi) continue;
        const double rs = sum - ls, rsq = sq - lsq;
        const double child = (lsq - ls * ls / static_cast<double>(nl)) + (rsq - rs * rs / static_cast<double>(nr));
        const double gain = sse - child;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_f = static_cast<int>(f);
          best_thr = 0.5 * (lo + hi);
        }
      }
    }
    if (best_f < 0) return id;
    const auto mid = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                           rows.begin() + static_cast<std::ptrdiff_t>(end),
                                           [&](std::size_t r) { return at(r, static_cast<std::size_t>(best_f)) <= best_thr; });
    const auto split = static_cast<std::size_t>(mid - rows.begin());
    const int left = grow(rows, begin, split, depth + 1);
    const int right = grow(rows, split, end, depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = best_f;
    node.threshold = best_thr;
    node.left = left;
    node.right = right;
    node.impurity_decrease = best_gain;
    return id;
  }
};

}  // namespace

Forest fit_forest(const Tensor& X, const std::vector<double>& y, const ForestConfig& cfg) {
  if (X.rank() != 2) throw ShapeError("fit_forest: X must be [N, d]");
  const std::size_t N = X.dim(0), d = X.dim(1);
  if (N < 2) throw std::invalid_argument("fit_forest: need at least two rows");
  if (d == 0) throw std::invalid_argument("fit_forest: need at least one feature");
  if (y.size() != N) throw std::invalid_argument("fit_forest: X and y lengths differ");
  if (cfg.n_trees == 0 || cfg.min_leaf == 0) throw std::invalid_argument("fit_forest: n_trees and min_leaf must be positive");
  const std::size_t mtry = cfg.features_per_split == 0
                               ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))))
                               : std::min(cfg.features_per_split, d);
  Forest forest;
  forest.n_features = d;
  forest.trees.resize(cfg.n_trees);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    Builder b{X, y, cfg, d, mtry, Rng(derive_seed(cfg.seed, t)), {}};
    std::vector<std::size_t> rows(N);
    for (auto& r : rows) r = b.rng.below(N);
    b.grow(rows, 0, N, 0);
    forest.trees[t] = std::move(b.tree);
  }
  return forest;
}

ImportanceReport importance(const Forest& forest, const std::vector<std::string>& names) {
  if (names.size() != forest.n_features) throw std::invalid_argument("importance: one name per feature required");
  std::vector<double> raw(forest.n_features, 0.0);
  for (const auto& t : forest.trees)
    for (const auto& n : t.nodes)
      if (n.feature >= 0) raw[static_cast<std::size_t>(n.feature)] += n.impurity_decrease;
  const double top = *std::max_element(raw.begin(), raw.end());
  ImportanceReport r;
  for (std::size_t j = 0; j < raw.size(); ++j) r.features.push_back({names[j], raw[j], top > 0.0 ? raw[j] / top : 0.0});
  std::stable_sort(r.features.begin(), r.features.end(), [](const FeatureScore& a, const FeatureScore& b) {
    return a.score > b.score || (a.score == b.score && a.name < b.name);
  });
  return r;
}

std::vector<std::string> select(const ImportanceReport& report, double threshold) {
  std::vector<std::string> out;
  for (const auto& f : report.features)
    if (f.score >= threshold) out.push_back(f.name);
  if (out.empty()) throw std::runtime_error("no feature reaches importance threshold " + std::to_string(threshold));
  return out;
}

nlohmann::json to_json(const ImportanceReport& report) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : report.features) features.push_back({{"feature", f.name}, {"raw", f.raw}, {"score", f.score}});
  return {{"features", std::move(features)}};
}

std::string to_csv(const ImportanceReport& report) {
  std::string out = "feature,score\n";
  for (const auto& f : report.features) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, f.score);
    out += f.name + "," + std::string(buf, p) + "\n";
  }
  return out;
}

}  // namespace tabgan::forest
