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

#include "tabgan/prognosis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tabgan::prognosis {

using nn::Activation;
using nn::LayerSpec;

nn::NetworkSpec build_prog_cnn(std::size_t T, std::size_t n, double dropout) {
  if (T < 1) throw std::invalid_argument("Prog-CNN needs at least one visit");
  if (n < 3) throw std::invalid_argument("Prog-CNN needs at least three features");
  nn::NetworkSpec s;
  s.input_shape = {std::max(T, kMinRows), n, 1};
  s.layers = {LayerSpec::conv(16),     LayerSpec::act(Activation::leaky_relu),
              LayerSpec::conv(16),     LayerSpec::act(Activation::leaky_relu),
              LayerSpec::dropout(dropout), LayerSpec::flatten(),
              LayerSpec::dense(5),     LayerSpec::act(Activation::sigmoid),
              LayerSpec::dense(1),     LayerSpec::act(Activation::sigmoid)};
  return s;
}

nlohmann::json to_json(const ProgConfig& c) {
  return {{"epochs", c.epochs}, {"batch_size", c.batch_size}, {"lr", c.lr}, {"dropout", c.dropout}, {"seed", c.seed}};
}

ProgConfig prog_config_from_json(const nlohmann::json& j) {
  ProgConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.dropout = j.value("dropout", c.dropout);
  c.seed = j.value("seed", c.seed);
  return c;
}

Tensor prog_inputs(const data::Dataset& d, std::size_t T) {
  const Tensor x = data::encode_dataset(data::truncate(d, T));
  const std::size_t N = d.size(), n = d.schema.size(), rows = std::max(T, kMinRows);
  Tensor out({N, rows, n, 1}, 0.0);
  for (std::size_t i = 0; i < N; ++i)
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(i * T * n), T * n,
                out.data().begin() + static_cast<std::ptrdiff_t>(i * rows * n));
  return out;
}

ProgModel init_prog(std::size_t T, std::size_t n, const ProgConfig& config) {
  ProgModel m;
  m.spec = build_prog_cnn(T, n, config.dropout);
  m.params = nn::init_params(m.spec, derive_seed(config.seed, "prog-init"));
  m.visits = T;
  return m;
}

namespace {

Tensor rows_of(const Tensor& x, const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) {
  Shape s = x.shape();
  const std::size_t per = x.size() / s[0];
  s[0] = end - begin;
  Tensor out(s);
  for (std::size_t b = begin; b < end; ++b)
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(idx[b] * per), per,
                out.data().begin() + static_cast<std::ptrdiff_t>((b - begin) * per));
  return out;
}

}  // namespace

ProgModel train_prog(const data::Dataset& train, std::size_t T, const ProgConfig& config) {
  const auto y = data::labels(train);
  const auto healed = static_cast<std::size_t>(std::count(y.begin(), y.end(), data::kHealed));
  if (healed == 0 || healed == y.size()) throw std::invalid_argument("Prog-CNN training data must contain both labels");
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  ProgModel m = init_prog(T, train.schema.size(), config);
  const Tensor x = prog_inputs(train, T);
  const std::size_t N = train.size();
  const std::size_t logit_layer = m.spec.layers.size() - 1;  // stop before the final sigmoid
  Rng rng(derive_seed(config.seed, "prog-train"));
  AdamState opt;
  const AdamConfig adam{config.lr, 0.9, 0.999, 1e-8};
  for (std::size_t e = 0; e < config.epochs; ++e) {
    const auto order = rng.permutation(N);
    for (std::size_t b = 0; b < N; b += config.batch_size) {
      const std::size_t end = std::min(N, b + config.batch_size);
      Tensor target({end - b, 1});
      for (std::size_t i = b; i < end; ++i) target[i - b] = static_cast<double>(y[order[i]]);
      const ParamVars pv = as_variables(m.params);
      const ad::Var z = nn::forward(m.spec, pv, ad::constant(rows_of(x, order, b, end)), rng,
                                    {.mode = nn::Mode::train, .end_layer = logit_layer});
      // binary cross-entropy from logits: softplus(z) - y z
      const ad::Var loss = ad::mean(ad::sub(ad::softplus(z), ad::mul(ad::constant(target), z)));
      adam_step(m.params, gradients(loss, pv), opt, adam);
    }
  }
  return m;
}

std::vector<double> predict(const ProgModel& model, const data::Dataset& d) {
  if (d.size() == 0) return {};
  ad::NoGradGuard no_grad;
  Rng unused(0);
  const Tensor p = nn::forward(model.spec, as_constants(model.params), ad::constant(prog_inputs(d, model.visits)),
                               unused, {.mode = nn::Mode::eval})
                       .value();
  return p.values();
}

double auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size()) throw std::invalid_argument("auc: labels and scores differ in length");
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // midranks: tied scores share the mean of the ranks they span
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("auc: labels must be 0 or 1");
    if (labels[i] == 1) {
      pos += 1.0;
      rank_sum += rank[i];
    }
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) throw std::invalid_argument("auc: both classes must be present");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

Metrics score(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.empty()) throw std::invalid_argument("empty test set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += ((scores[i] >= 0.5 ? 1 : 0) == labels[i]) ? 1 : 0;
  return {100.0 * static_cast<double>(correct) / static_cast<double>(labels.size()), auc(labels, scores)};
}

Metrics evaluate(const ProgModel& model, const data::Dataset& test) {
  if (test.size() == 0) throw std::invalid_argument("empty test set");
  return score(data::labels(test), predict(model, test));
}

Sampler label_shuffling(Sampler inner) {
  return [inner = std::move(inner)](std::size_t count, std::uint64_t seed) {
    data::Dataset d = inner(count, derive_seed(seed, "inner"));
    std::vector<std::optional<int>> lab;
    for (const auto& s : d.series) lab.push_back(s.label);
    Rng rng(derive_seed(seed, "shuffle"));
    rng.shuffle(lab);
    for (std::size_t i = 0; i < d.size(); ++i) d.series[i].label = lab[i];
    return d;
  };
}

namespace {

TstrResult run_protocol(const std::function<data::Dataset(std::size_t replicate)>& training_set,
                        const data::Dataset& real_test, std::size_t T, const TstrConfig& config,
                        std::size_t synth_count) {
  if (config.replicates == 0) throw std::invalid_argument("replicates must be positive");
  const auto y = data::labels(real_test);
  TstrResult r;
  r.horizon = T;
  r.test_positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), data::kHealed));
  r.test_negatives = y.size() - r.test_positives;
  r.synth_count = synth_count;
  r.replicates = config.replicates;
  r.augment = config.augment;
  for (std::size_t k = 0; k < config.replicates; ++k) {
    ProgConfig pc = config.prog;
    pc.seed = derive_seed(config.seed, k);
    const ProgModel m = train_prog(training_set(k), T, pc);
    const Metrics mt = evaluate(m, real_test);
    r.accuracy += mt.accuracy / static_cast<double>(config.replicates);
    r.auc += mt.auc / static_cast<double>(config.replicates);
    r.replicate_auc.push_back(mt.auc);
  }
  return r;
}

}  // namespace

TstrResult tstr(const Sampler& sampler, const data::Dataset& real_train, const data::Dataset& real_test, std::size_t T,
                const TstrConfig& config) {
  const std::size_t count = config.synth_count > 0 ? config.synth_count : 10 * real_train.size();
  auto training_set = [&](std::size_t k) {
    data::Dataset synth = sampler(count, derive_seed(derive_seed(config.seed, "sampler"), k));
    if (!(synth.schema == real_test.schema)) throw std::invalid_argument("tstr: sampler schema differs from test schema");
    data::Dataset train = data::truncate(synth, T);
    if (config.augment) {
      const auto real = data::truncate(real_train, T);
      train.series.insert(train.series.end(), real.series.begin(), real.series.end());
    }
    return train;
  };
  return run_protocol(training_set, data::truncate(real_test, T), T, config, count);
}

TstrResult train_on_real(const data::Dataset& real_train, const data::Dataset& real_test, std::size_t T,
                         const TstrConfig& config) {
  const auto train = data::truncate(real_train, T);
  TstrConfig c = config;
  c.augment = false;
  return run_protocol([&](std::size_t) { return train; }, data::truncate(real_test, T), T, c, 0);
}

nlohmann::json to_json(const TstrResult& r) {
  return {{"T", r.horizon},
          {"accuracy", r.accuracy},
          {"auc", r.auc},
          {"test_positives", r.test_positives},
          {"test_negatives", r.test_negatives},
          {"synth_count", r.synth_count},
          {"replicates", r.replicates},
          {"replicate_auc", r.replicate_auc},
          {"augment", r.augment}};
}

std::string tstr_csv(const std::vector<TstrResult>& rows) {
  auto num = [](double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
  };
  std::string out = "T,accuracy,auc\n";
  for (const auto& r : rows) out += std::to_string(r.horizon) + "," + num(r.accuracy) + "," + num(r.auc) + "\n";
  return out;
}

}  // namespace tabgan::prognosis
