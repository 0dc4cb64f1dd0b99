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

#include "oracles.hpp"
#include "tabgan/evaluation.hpp"

using namespace tabgan;
using namespace tabgan::eval;

namespace {

const double kLn2 = std::log(2.0);

// Independent form: mean KL of each distribution to the midpoint, in long double.
double js_by_kl(const Distribution& p, const Distribution& q) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double m = 0.5L * (static_cast<long double>(p[i]) + q[i]);
    if (p[i] > 0.0) s += 0.5L * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) s += 0.5L * q[i] * std::log(q[i] / m);
  }
  return static_cast<double>(s);
}

Distribution random_distribution(Rng& rng, std::size_t k, bool sparse) {
  Distribution p(k);
  double s = 0.0;
  for (auto& v : p) {
    v = sparse && rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    s += v;
  }
  if (s == 0.0) {
    p[0] = 1.0;
    return p;
  }
  for (auto& v : p) v /= s;
  return p;
}

data::Dataset without_rows_order(const data::Dataset& d, std::uint64_t seed) {
  data::Dataset out = d;
  Rng rng(seed);
  rng.shuffle(out.series);
  return out;
}

Tensor as_tensor(const std::vector<double>& x, std::size_t dims) {
  Tensor t({x.size() / dims, dims});
  std::copy(x.begin(), x.end(), t.data().begin());
  return t;
}

const data::SurrogateConfig kSurrogate{};

}  // namespace

TEST_CASE("shannon entropy") {
  CHECK(shannon_entropy({0.5, 0.5}) == doctest::Approx(kLn2).epsilon(1e-15));
  CHECK(shannon_entropy({1.0, 0.0}) == 0.0);
  CHECK(std::abs(shannon_entropy({0.25, 0.75}) - 0.562335) < 1e-6);
  CHECK_THROWS_AS(shannon_entropy({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(shannon_entropy({1.5, -0.5}), std::invalid_argument);
  CHECK_THROWS_AS(shannon_entropy({}), std::invalid_argument);
}

TEST_CASE("js divergence examples") {
  CHECK(js_divergence({0.3, 0.7}, {0.3, 0.7}) == 0.0);
  CHECK(std::abs(js_divergence({1.0, 0.0}, {0.0, 1.0}) - kLn2) < 1e-6);
  const double v = js_divergence({0.5, 0.5}, {0.25, 0.75});
  CHECK(std::abs(v - js_by_kl({0.5, 0.5}, {0.25, 0.75})) < 1e-6);
  CHECK(std::abs(v - 0.0338221) < 1e-6);
  CHECK_THROWS_AS(js_divergence({0.5, 0.5}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(js_divergence({0.5, 0.5}, {0.5, 0.5}, 0.6, 0.6), std::invalid_argument);
  CHECK_THROWS_AS(js_divergence({0.5, 0.5}, {0.5, 0.5}, -0.5, 1.5), std::invalid_argument);
  CHECK(js_divergence({1.0, 0.0}, {0.0, 1.0}, 1.0, 0.0) == 0.0);
}

TEST_CASE("js divergence properties over random pairs") {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + rng.below(11);
    const auto p = random_distribution(rng, k, trial % 3 == 0);
    const auto q = random_distribution(rng, k, trial % 5 == 0);
    const double a = js_divergence(p, q), b = js_divergence(q, p);
    CHECK(a >= 0.0);
    CHECK(a <= kLn2);
    CHECK(std::abs(a - b) <= 1e-15);
    CHECK(std::abs(a - js_by_kl(p, q)) <= 1e-12);
    CHECK(js_divergence(p, p) == 0.0);
  }
}

TEST_CASE("histogram") {
  const auto p = histogram({-5.0, 0.0, 0.05, 0.95, 1.0, 7.0}, 0.0, 1.0, 10);
  CHECK(p[0] == doctest::Approx(3.0 / 6.0));
  CHECK(p[9] == doctest::Approx(3.0 / 6.0));
  const auto flat = histogram({2.0, 2.0, 3.0}, 2.0, 2.0, 4);
  CHECK(flat[0] == doctest::Approx(2.0 / 3.0));
  CHECK(flat[3] == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(histogram({}, 0.0, 1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(histogram({0.5}, 0.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("js report") {
  const auto real = testing::oracle_draw(kSurrogate, 60, 2);
  const std::size_t T = data::visit_count(real), n = real.schema.size();
  SUBCASE("identical records give zero everywhere") {
    const auto r = js_report(real, real, 10, 3);
    CHECK(r.entries.size() == T * n);
    for (const auto& e : r.entries) CHECK(e.js == 0.0);
    for (double v : r.visit_average) CHECK(v == 0.0);
    CHECK(r.visit_average.size() == T);
  }
  SUBCASE("row order of either dataset does not matter") {
    const auto synth = testing::oracle_draw(kSurrogate, 150, 4);
    const auto a = js_report(real, synth, 10, 5);
    const auto b = js_report(without_rows_order(real, 6), without_rows_order(synth, 7), 10, 5);
    CHECK(to_json(a) == to_json(b));
    CHECK(a.synth_count == real.size());
  }
  SUBCASE("oracle samples stay within sampling noise") {
    const auto big = testing::oracle_draw(kSurrogate, 500, 8);
    const auto synth = testing::oracle_draw(kSurrogate, 500, 9);
    const auto r = js_report(big, synth, 10, 10);
    for (double v : r.visit_average) CHECK(v < 0.05);
    for (const auto& e : r.entries) {
      CHECK(e.js >= 0.0);
      CHECK(e.js <= kLn2);
    }
  }
  SUBCASE("serialization") {
    const auto r = js_report(real, real, 10, 3);
    const auto csv = to_csv(r);
    CHECK(csv.rfind("feature,visit,js\nwound_length,1,0\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == T * n + 1);
    CHECK(to_json(r).at("entries").size() == T * n);
  }
  SUBCASE("errors") {
    data::Dataset empty = real;
    empty.series.clear();
    CHECK_THROWS_AS(js_report(empty, real, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(js_report(real, data::select_features(real, {"wound_area", "edema"}), 10, 1),
                    std::invalid_argument);
  }
}

TEST_CASE("discriminative accuracy calibration") {
  DiscriminativeConfig c;
  c.seed = 11;
  double gap100 = 0.0;
  for (std::size_t n : {100, 500}) {
    const auto real = testing::oracle_draw(kSurrogate, n, 12);
    const auto synth = testing::oracle_draw(kSurrogate, 2 * n, 13);
    const auto r = discriminative_accuracy(real, synth, c);
    CHECK(r.train_real == n * 3 / 4);
    CHECK(r.train_synth == r.train_real);
    CHECK(r.held_out_synth == 2 * n - r.train_real);
    const double gap = std::abs(r.accuracy - 50.0);
    CHECK(gap <= 10.0);
    if (n == 100) gap100 = gap;
    else CHECK((gap <= gap100 || gap <= 10.0));
  }
  const auto real = testing::oracle_draw(kSurrogate, 60, 14);
  const auto fake = discriminative_accuracy(real, testing::constant_fake(real, 60), c);
  CHECK(fake.accuracy >= 90.0);
  CHECK(to_json(fake).at("accuracy").get<double>() == fake.accuracy);
  CHECK_THROWS_AS(discriminative_accuracy(real, testing::constant_fake(real, 59), c), std::invalid_argument);
  const auto tiny = testing::oracle_draw(kSurrogate, 2, 15);
  data::Dataset one = tiny;
  one.series.resize(1);
  CHECK_THROWS_AS(discriminative_accuracy(one, one, c), std::invalid_argument);
}

TEST_CASE("perplexity calibration") {
  Rng rng(16);
  Tensor x({60, 5});
  for (auto& v : x.data()) v = rng.normal();
  for (double perplexity : {3.0, 10.0, 19.0}) {
    const auto a = calibrate_affinities(x, perplexity);
    for (std::size_t i = 0; i < 60; ++i) {
      CHECK(std::abs(a.entropy[i] - std::log(perplexity)) < 1e-5);
      double s = 0.0;
      for (std::size_t j = 0; j < 60; ++j) s += a.conditional[i * 60 + j];
      CHECK(std::abs(s - 1.0) < 1e-12);
      CHECK(a.conditional[i * 60 + i] == 0.0);
    }
    const Tensor P = joint_probabilities(a.conditional);
    double total = 0.0;
    for (std::size_t i = 0; i < 60; ++i)
      for (std::size_t j = 0; j < 60; ++j) {
        total += P[i * 60 + j];
        CHECK(P[i * 60 + j] == P[j * 60 + i]);
      }
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("t-SNE separates two clusters and descends") {
  std::vector<int> labels;
  const auto x = testing::two_clusters(200, 42, 1.0, 17, labels);
  TsneConfig c;
  c.seed = 18;
  const auto r = tsne(as_tensor(x, 42), c);
  CHECK(r.embedding.shape() == Shape{200, 2});
  CHECK(r.kl.size() == 1000);
  for (double h : r.row_entropy) CHECK(std::abs(h - std::log(15.0)) < 1e-5);
  CHECK(testing::silhouette(r.embedding.values(), 2, labels) > 0.5);
  for (std::size_t i = r.kl.size() - 500; i < r.kl.size(); ++i) CHECK(r.kl[i] <= r.kl[i - 1] + 1e-6);
  CHECK(r.kl.back() < r.kl[c.exaggeration_iterations]);
  CHECK(tsne(as_tensor(x, 42), c).embedding == r.embedding);
}

TEST_CASE("t-SNE input checks") {
  Rng rng(19);
  Tensor x({30, 3});
  for (auto& v : x.data()) v = rng.normal();
  TsneConfig c;
  c.iterations = 50;
  CHECK_THROWS_AS(tsne(x, c), std::invalid_argument);  // (30 - 1) / 3 < 15
  c.perplexity = 2.0;
  CHECK_THROWS_AS(tsne(x, c), std::invalid_argument);
  c.perplexity = 5.0;
  CHECK_NOTHROW(tsne(x, c));
  CHECK_THROWS_AS(tsne(Tensor({2001, 2}), c), std::invalid_argument);

  for (std::size_t k = 0; k < 3; ++k) x[3 + k] = x[k];  // rows 0 and 1 coincide
  const auto r = tsne(x, c);
  for (double v : r.embedding.values()) CHECK(std::isfinite(v));
  CHECK_FALSE((r.embedding[0] == r.embedding[2] && r.embedding[1] == r.embedding[3]));
}

TEST_CASE("embedding of labeled datasets") {
  const auto train = testing::oracle_draw(kSurrogate, 30, 20);
  const auto synth = testing::oracle_draw(kSurrogate, 30, 21);
  TsneConfig c;
  c.perplexity = 5.0;
  c.iterations = 300;
  TsneResult details;
  const auto pts = embed({{"train", &train}, {"synthetic", &synth}}, c, &details);
  CHECK(pts.size() == 60);
  CHECK(pts.front().source == "train");
  CHECK(pts.back().source == "synthetic");
  CHECK(pts[5].x == details.embedding[10]);
  CHECK(pts[0].label == *train.series[0].label);
  const auto csv = embedding_csv(pts);
  CHECK(csv.rfind("x,y,source,label\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 61);
}

TEST_CASE("density exports") {
  const auto real = testing::oracle_draw(kSurrogate, 80, 22);
  const auto synth = testing::oracle_draw(kSurrogate, 80, 23);
  const auto rows = export_histograms(real, synth, {"wound_area", "fibrin_percent"}, 10);
  CHECK(rows.size() == 2 * 3 * 2 * 10);
  for (std::size_t h = 0; h < rows.size(); h += 10) {
    double mass = 0.0;
    for (std::size_t b = h; b < h + 10; ++b) mass += rows[b].density * (rows[b].hi - rows[b].lo);
    CHECK(std::abs(mass - 1.0) < 1e-9);
  }
  CHECK(export_histograms(real, synth, {}, 10).empty());
  CHECK_THROWS_AS(export_histograms(real, synth, {"edema"}, 10), std::invalid_argument);
  CHECK(histograms_csv(rows).rfind("feature,visit,source,bin_lo,bin_hi,density\nwound_area,1,real,0,", 0) == 0);

  // Uniform values over the feature range fill every bin at 1 / range.
  data::Dataset u{data::FeatureSchema({data::Feature::continuous("u", 0.0, 4.0)}), {}, data::Provenance::real};
  Rng rng(24);
  for (int i = 0; i < 20000; ++i) u.series.push_back({"U", {{rng.uniform(0.0, 4.0)}}, 0});
  for (const auto& b : export_histograms(u, u, {"u"}, 10)) CHECK(std::abs(b.density - 0.25) < 0.025);
}
