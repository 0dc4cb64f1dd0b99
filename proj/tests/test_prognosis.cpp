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

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fd_oracle.hpp"
#include "oracles.hpp"
#include "tabgan/prognosis.hpp"

using namespace tabgan;
using namespace tabgan::prognosis;
using data::Feature;

namespace {

// Three continuous features over three visits; healed exactly when the first
// feature exceeds the midpoint, with a margin.
data::Dataset separable(std::size_t N, std::uint64_t seed) {
  data::Dataset d{data::FeatureSchema({Feature::continuous("a", 0, 1), Feature::continuous("b", 0, 1),
                                       Feature::continuous("c", 0, 1)}),
                  {},
                  data::Provenance::real};
  Rng rng(seed);
  for (std::size_t i = 0; i < N; ++i) {
    const bool healed = i % 2 == 0;
    data::PatientSeries s{"P" + std::to_string(i), {}, healed ? data::kHealed : data::kNotHealed};
    for (int t = 0; t < 3; ++t) {
      const double a = healed ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4);
      s.visits.push_back({a, rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)});
    }
    d.series.push_back(std::move(s));
  }
  return d;
}

struct SurrogateSplit {
  data::SurrogateConfig config;
  data::Split split;
};

SurrogateSplit surrogate_split(std::size_t n, double effect, std::uint64_t seed) {
  data::SurrogateConfig c;
  c.n_patients = n;
  c.planted_effect = effect;
  c.seed = seed;
  return {c, data::split(data::impute(data::filter_eligibility(data::surrogate_generate(c))), 0.75, seed + 1)};
}

Sampler oracle_sampler(const data::SurrogateConfig& base) {
  return [base](std::size_t count, std::uint64_t seed) {
    data::SurrogateConfig c = base;
    c.n_patients = count;
    c.seed = seed;
    return data::impute(data::filter_eligibility(data::surrogate_generate(c)));
  };
}

}  // namespace

TEST_CASE("Prog-CNN architecture") {
  const auto spec = build_prog_cnn(3, 14);
  const auto shapes = nn::propagate_shapes(spec);
  CHECK(spec.input_shape == Shape{3, 14, 1});
  CHECK(shapes.at(5) == Shape{672});
  CHECK(shapes.at(6) == Shape{5});
  CHECK(nn::output_shape(spec) == Shape{1});
  const auto params = nn::init_params(spec, 1);
  CHECK(params.at("layer06.kernel").shape() == Shape{672, 5});
  CHECK(params.at("layer00.kernel").shape() == Shape{3, 3, 1, 16});

  CHECK(build_prog_cnn(1, 5).input_shape == Shape{3, 5, 1});
  CHECK(build_prog_cnn(2, 5).input_shape == Shape{3, 5, 1});
  CHECK(build_prog_cnn(4, 5).input_shape == Shape{4, 5, 1});
  CHECK_THROWS_AS(build_prog_cnn(0, 5), std::invalid_argument);
  CHECK_THROWS_AS(build_prog_cnn(3, 2), std::invalid_argument);
}

TEST_CASE("short horizons are zero-padded to three rows") {
  const auto d = separable(4, 1);
  const Tensor x = prog_inputs(d, 1);
  CHECK(x.shape() == Shape{4, 3, 3, 1});
  const Tensor enc = data::encode_dataset(data::truncate(d, 1));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(x[(i * 3 + 0) * 3 + j] == enc[i * 3 + j]);
      CHECK(x[(i * 3 + 1) * 3 + j] == 0.0);
      CHECK(x[(i * 3 + 2) * 3 + j] == 0.0);
    }
}

TEST_CASE("Prog-CNN output is a probability") {
  const auto m = init_prog(2, 3, {});
  const auto d = separable(20, 2);
  for (double p : predict(m, d)) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("Prog-CNN gradients match finite differences") {
  const auto spec = build_prog_cnn(1, 3, 0.5);
  const ParameterStore store = nn::init_params(spec, 3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng data_rng(seed);
    const Tensor x = testing::random_tensor({2, 3, 3, 1}, data_rng);
    std::vector<std::string> names;
    std::vector<Tensor> inputs{x};
    for (const auto& [name, value] : store) {
      names.push_back(name);
      inputs.push_back(value);
    }
    auto f = [&](const std::vector<ad::Var>& v) {
      ParamVars params;
      for (std::size_t i = 0; i < names.size(); ++i) params.emplace(names[i], v[i + 1]);
      Rng mask_rng(seed);
      return ad::sum(nn::forward(spec, params, v[0], mask_rng, {.mode = nn::Mode::train}));
    };
    CHECK(testing::max_gradient_error(f, inputs) < 1e-4);
  }
}

TEST_CASE("training") {
  SUBCASE("separable data is learned") {
    const auto d = separable(64, 3);
    ProgConfig c;
    c.seed = 4;
    const auto m = train_prog(d, 3, c);
    CHECK(evaluate(m, d).accuracy >= 95.0);
  }
  SUBCASE("zero epochs leaves the classifier at chance") {
    const auto s = surrogate_split(200, 0.0, 5);
    ProgConfig c;
    c.epochs = 0;
    const auto m = train_prog(s.split.train, 3, c);
    CHECK(m.params == init_prog(3, s.split.train.schema.size(), c).params);
    CHECK(std::abs(evaluate(m, s.split.test).auc - 0.5) <= 0.15);
  }
  SUBCASE("same seed gives the same model") {
    const auto d = separable(32, 6);
    ProgConfig c;
    c.epochs = 5;
    c.seed = 7;
    CHECK(train_prog(d, 2, c).params == train_prog(d, 2, c).params);
    ProgConfig other = c;
    other.seed = 8;
    CHECK_FALSE(train_prog(d, 2, c).params == train_prog(d, 2, other).params);
  }
  SUBCASE("single-label training data is rejected") {
    auto d = separable(8, 9);
    for (auto& s : d.series) s.label = data::kHealed;
    CHECK_THROWS_AS(train_prog(d, 3, {}), std::invalid_argument);
  }
}

TEST_CASE("auc examples") {
  CHECK(auc({1, 0}, {0.9, 0.1}) == 1.0);
  CHECK(auc({1, 0, 1, 0}, {0.8, 0.7, 0.6, 0.5}) == 0.75);
  CHECK(auc({1, 0, 1, 0, 0}, {0.3, 0.3, 0.3, 0.3, 0.3}) == 0.5);
  CHECK_THROWS_AS(auc({1, 1}, {0.2, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(auc({1, 0}, {0.2}), std::invalid_argument);
}

TEST_CASE("auc equals brute-force pair enumeration") {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(49);
    std::vector<int> y(n);
    std::vector<double> s(n);
    const bool coarse = trial % 2 == 0;  // few distinct scores, many ties
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform() < 0.5 ? 1 : 0;
      s[i] = coarse ? static_cast<double>(rng.below(4)) / 4.0 : rng.uniform();
    }
    y[0] = 1;
    y[1] = 0;
    CHECK(auc(y, s) == testing::brute_force_auc(y, s));
  }
}

TEST_CASE("auc is invariant under strictly monotone transforms") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> y(30);
    std::vector<double> s(30), t(30);
    for (std::size_t i = 0; i < 30; ++i) {
      y[i] = i % 3 == 0 ? 1 : 0;
      s[i] = static_cast<double>(rng.below(10));
      t[i] = std::exp(3.0 * s[i]) - 7.0;
    }
    CHECK(auc(y, s) == auc(y, t));
  }
}

TEST_CASE("scoring") {
  const std::vector<int> y{1, 0, 1, 1, 0};
  std::vector<double> oracle, anti;
  for (int v : y) {
    oracle.push_back(v);
    anti.push_back(1.0 - v);
  }
  CHECK(score(y, oracle).accuracy == 100.0);
  CHECK(score(y, oracle).auc == 1.0);
  CHECK(score(y, anti).accuracy == 0.0);
  CHECK(score(y, anti).auc == 0.0);
  CHECK_THROWS_AS(score({}, {}), std::invalid_argument);

  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> yy(20);
    std::vector<double> ss(20);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < 20; ++i) {
      yy[i] = i < 10 ? 1 : 0;
      ss[i] = rng.below(3) == 0 ? 0.5 : rng.uniform();
      correct += ((ss[i] >= 0.5) == (yy[i] == 1)) ? 1 : 0;
    }
    CHECK(score(yy, ss).accuracy == doctest::Approx(5.0 * static_cast<double>(correct)).epsilon(1e-15));
  }
}

TEST_CASE("evaluate rejects an empty test set") {
  const auto m = init_prog(3, 3, {});
  auto d = separable(4, 13);
  d.series.clear();
  CHECK_THROWS_AS(evaluate(m, d), std::invalid_argument);
}

TEST_CASE("label shuffling keeps features and label counts") {
  const Sampler base = [](std::size_t count, std::uint64_t seed) { return separable(count, seed); };
  const auto a = base(40, derive_seed(14, "inner"));
  const auto b = label_shuffling(base)(40, 14);
  std::size_t moved = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(a.series[i].visits == b.series[i].visits);
    moved += a.series[i].label != b.series[i].label ? 1 : 0;
  }
  const auto la = data::labels(a), lb = data::labels(b);
  CHECK(std::count(la.begin(), la.end(), 1) == std::count(lb.begin(), lb.end(), 1));
  CHECK(moved > 0);
}

TEST_CASE("TSTR controls on the surrogate") {
  const auto s = surrogate_split(120, 1.0, 15);
  TstrConfig c;
  c.synth_count = 240;
  c.prog.epochs = 100;
  c.seed = 16;
  SUBCASE("an oracle sampler matches training on real data") {
    for (std::size_t T : {1, 3}) {
      const auto oracle = tstr(oracle_sampler(s.config), s.split.train, s.split.test, T, c);
      const auto real = train_on_real(s.split.train, s.split.test, T, c);
      CHECK(std::abs(oracle.auc - real.auc) <= 0.1);
      CHECK(oracle.synth_count == 240);
    }
  }
  SUBCASE("shuffled labels destroy the signal") {
    c.replicates = 10;
    const auto r = tstr(label_shuffling(oracle_sampler(s.config)), s.split.train, s.split.test, 3, c);
    CHECK(r.replicate_auc.size() == 10);
    CHECK(r.auc >= 0.35);
    CHECK(r.auc <= 0.65);
  }
  SUBCASE("every horizon is scored on the same test labels") {
    c.synth_count = 60;
    c.prog.epochs = 2;
    std::vector<TstrResult> rows;
    for (std::size_t T = 1; T <= 3; ++T) rows.push_back(tstr(oracle_sampler(s.config), s.split.train, s.split.test, T, c));
    for (const auto& r : rows) {
      CHECK(r.test_positives == rows[0].test_positives);
      CHECK(r.test_negatives == rows[0].test_negatives);
      CHECK(r.test_positives + r.test_negatives == s.split.test.size());
      CHECK(r.auc >= 0.0);
      CHECK(r.auc <= 1.0);
      CHECK(r.accuracy >= 0.0);
      CHECK(r.accuracy <= 100.0);
    }
    const auto csv = tstr_csv(rows);
    CHECK(csv.rfind("T,accuracy,auc\n1,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    const auto j = to_json(rows[2]);
    CHECK(j.at("T") == 3);
    CHECK(j.at("auc").get<double>() == rows[2].auc);
  }
  SUBCASE("augmentation adds the real training set") {
    c.synth_count = 30;
    c.prog.epochs = 1;
    c.augment = true;
    std::size_t seen = 0;
    const Sampler counting = [&](std::size_t count, std::uint64_t seed) {
      seen = count;
      return oracle_sampler(s.config)(count, seed);
    };
    const auto r = tstr(counting, s.split.train, s.split.test, 2, c);
    CHECK(seen == 30);
    CHECK(r.augment);
  }
}

TEST_CASE("default synthetic count is ten times the real training set") {
  const auto s = surrogate_split(40, 1.0, 17);
  TstrConfig c;
  c.prog.epochs = 1;
  std::size_t seen = 0;
  const Sampler counting = [&](std::size_t count, std::uint64_t seed) {
    seen = count;
    return oracle_sampler(s.config)(count, seed);
  };
  tstr(counting, s.split.train, s.split.test, 1, c);
  CHECK(seen == 10 * s.split.train.size());
}

TEST_CASE("config JSON") {
  ProgConfig c;
  c.epochs = 7;
  c.lr = 3e-4;
  c.seed = 99;
  CHECK(prog_config_from_json(nlohmann::json::parse(to_json(c).dump())) == c);
}
