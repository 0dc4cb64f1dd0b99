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

#include "tabgan/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "tabgan/rng.hpp"

namespace tabgan::eval {

namespace {

const double kLn2 = std::log(2.0);

std::string num(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void require_same_schema(const data::Dataset& a, const data::Dataset& b) {
  if (!(a.schema == b.schema)) throw std::invalid_argument("real and synthetic schemas differ");
}

// Cell values of feature j at visit t, as encoded level indices or reals.
std::vector<double> column(const data::Dataset& d, std::size_t t, std::size_t j,
                           const std::vector<std::size_t>* rows = nullptr) {
  const auto& f = d.schema[j];
  std::vector<double> out;
  const std::size_t n = rows ? rows->size() : d.size();
  for (std::size_t r = 0; r < n; ++r) {
    const auto& s = d.series[rows ? (*rows)[r] : r];
    if (t >= s.visits.size()) throw std::invalid_argument("series shorter than the compared visits");
    const auto& v = s.visits[t][j];
    if (data::is_missing(v)) continue;
    if (f.kind == data::FeatureKind::categorical) {
      const auto it = std::find(f.levels.begin(), f.levels.end(), std::get<std::string>(v));
      if (it == f.levels.end()) throw std::invalid_argument("unknown level for " + f.name);
      out.push_back(static_cast<double>(it - f.levels.begin()));
    } else {
      out.push_back(std::get<double>(v));
    }
  }
  return out;
}

Distribution frequencies(const std::vector<double>& levels, std::size_t k) {
  if (levels.empty()) throw std::invalid_argument("no observed values to compare");
  Distribution p(k, 0.0);
  for (double v : levels) p[static_cast<std::size_t>(v)] += 1.0;
  for (auto& x : p) x /= static_cast<double>(levels.size());
  return p;
}

}  // namespace

void validate_distribution(const Distribution& p) {
  if (p.empty()) throw std::invalid_argument("empty distribution");
  double s = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("distribution entries must be finite and >= 0");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("distribution must sum to 1");
}

double shannon_entropy(const Distribution& p) {
  validate_distribution(p);
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double js_divergence(const Distribution& p1, const Distribution& p2, double w1, double w2) {
  if (p1.size() != p2.size()) throw std::invalid_argument("distributions have different support sizes");
  if (!(w1 >= 0.0 && w2 >= 0.0) || std::abs(w1 + w2 - 1.0) > 1e-12)
    throw std::invalid_argument("weights must be non-negative and sum to 1");
  validate_distribution(p1);
  validate_distribution(p2);
  Distribution mix(p1.size());
  for (std::size_t i = 0; i < p1.size(); ++i) mix[i] = w1 * p1[i] + w2 * p2[i];
  const double js = shannon_entropy(mix) - w1 * shannon_entropy(p1) - w2 * shannon_entropy(p2);
  return std::clamp(js, 0.0, kLn2);
}

Distribution histogram(const std::vector<double>& values, double lo, double hi, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("bins must be positive");
  if (values.empty()) throw std::invalid_argument("no observed values to compare");
  Distribution p(bins, 0.0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    std::size_t b = 0;
    if (width > 0.0 && v > lo) b = std::min(bins - 1, static_cast<std::size_t>((v - lo) / width));
    else if (width <= 0.0 && v > hi) b = bins - 1;
    p[b] += 1.0;
  }
  for (auto& x : p) x /= static_cast<double>(values.size());
  return p;
}

JsReport js_report(const data::Dataset& real, const data::Dataset& synth, std::size_t bins, std::uint64_t seed) {
  require_same_schema(real, synth);
  if (real.size() == 0 || synth.size() == 0) throw std::invalid_argument("empty dataset");
  if (bins == 0) throw std::invalid_argument("bins must be positive");
  const std::size_t T = data::visit_count(real);

  std::vector<std::size_t> order(synth.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = synth.series[a];
    const auto& sb = synth.series[b];
    return std::tie(sa.visits, sa.label) < std::tie(sb.visits, sb.label);
  });
  if (synth.size() > real.size()) {
    Rng rng(derive_seed(seed, "js-subsample"));
    const auto pick = rng.permutation(order.size());
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < real.size(); ++i) chosen.push_back(order[pick[i]]);
    order = std::move(chosen);
  }

  JsReport r;
  r.bins = bins;
  r.real_count = real.size();
  r.synth_count = order.size();
  for (std::size_t t = 0; t < T; ++t) {
    double all = 0.0, cont = 0.0;
    std::size_t n_cont = 0;
    for (std::size_t j = 0; j < real.schema.size(); ++j) {
      const auto& f = real.schema[j];
      const auto rv = column(real, t, j);
      const auto sv = column(synth, t, j, &order);
      double js;
      if (f.kind == data::FeatureKind::categorical) {
        js = js_divergence(frequencies(rv, f.levels.size()), frequencies(sv, f.levels.size()));
      } else {
        const auto [lo, hi] = std::minmax_element(rv.begin(), rv.end());
        js = js_divergence(histogram(rv, *lo, *hi, bins), histogram(sv, *lo, *hi, bins));
        cont += js;
        ++n_cont;
      }
      all += js;
      r.entries.push_back({f.name, t + 1, f.kind == data::FeatureKind::continuous, js});
    }
    r.visit_average.push_back(all / static_cast<double>(real.schema.size()));
    r.visit_continuous_average.push_back(n_cont ? cont / static_cast<double>(n_cont) : 0.0);
  }
  return r;
}

nlohmann::json to_json(const JsReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"feature", e.feature}, {"visit", e.visit}, {"continuous", e.continuous}, {"js", e.js}});
  return {{"bins", r.bins},
          {"real_count", r.real_count},
          {"synth_count", r.synth_count},
          {"entries", entries},
          {"visit_average", r.visit_average},
          {"visit_continuous_average", r.visit_continuous_average}};
}

std::string to_csv(const JsReport& r) {
  std::string out = "feature,visit,js\n";
  for (const auto& e : r.entries) out += e.feature + "," + std::to_string(e.visit) + "," + num(e.js) + "\n";
  return out;
}

DiscriminativeResult discriminative_accuracy(const data::Dataset& real, const data::Dataset& synth,
                                             const DiscriminativeConfig& config) {
  require_same_schema(real, synth);
  if (real.size() == 0 || synth.size() == 0) throw std::invalid_argument("empty dataset");
  if (synth.size() < real.size()) throw std::invalid_argument("need at least as many synthetic as real records");
  if (config.replicates == 0) throw std::invalid_argument("replicates must be positive");
  const auto n_train = static_cast<std::size_t>(std::floor(config.train_fraction * static_cast<double>(real.size())));
  if (n_train < 1 || n_train >= synth.size()) throw std::invalid_argument("datasets too small for the train/held-out split");
  const std::size_t T = data::visit_count(real);

  DiscriminativeResult r;
  r.train_real = n_train;
  r.train_synth = n_train;
  r.held_out_synth = synth.size() - n_train;
  for (std::size_t k = 0; k < config.replicates; ++k) {
    const std::uint64_t rs = derive_seed(config.seed, k);
    Rng rng(derive_seed(rs, "partition"));
    const auto real_order = rng.permutation(real.size());
    const auto synth_order = rng.permutation(synth.size());
    data::Dataset train{real.schema, {}, data::Provenance::real};
    data::Dataset held{real.schema, {}, data::Provenance::synthetic};
    for (std::size_t i = 0; i < n_train; ++i) {
      train.series.push_back(real.series[real_order[i]]);
      train.series.back().label = 0;
      train.series.push_back(synth.series[synth_order[i]]);
      train.series.back().label = 1;
    }
    for (std::size_t i = n_train; i < synth.size(); ++i) {
      held.series.push_back(synth.series[synth_order[i]]);
      held.series.back().label = 1;
    }
    prognosis::ProgConfig pc = config.classifier;
    pc.seed = derive_seed(rs, "classifier");
    const auto model = prognosis::train_prog(train, T, pc);
    const auto p = prognosis::predict(model, held);
    const auto fake = static_cast<double>(std::count_if(p.begin(), p.end(), [](double v) { return v >= 0.5; }));
    const double acc = 100.0 * fake / static_cast<double>(p.size());
    r.replicate_accuracy.push_back(acc);
    r.accuracy += acc / static_cast<double>(config.replicates);
  }
  return r;
}

nlohmann::json to_json(const DiscriminativeResult& r) {
  return {{"accuracy", r.accuracy},
          {"train_real", r.train_real},
          {"train_synth", r.train_synth},
          {"held_out_synth", r.held_out_synth},
          {"replicate_accuracy", r.replicate_accuracy}};
}

// --- t-SNE -------------------------------------------------------------------

namespace {

Tensor squared_distances(const Tensor& x) {
  const std::size_t N = x.shape()[0], d = x.shape()[1];
  Tensor D({N, N}, 0.0);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i + 1; j < N; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[i * d + k] - x[j * d + k];
        s += diff * diff;
      }
      D[i * N + j] = D[j * N + i] = s;
    }
  return D;
}

}  // namespace

Affinities calibrate_affinities(const Tensor& points, double perplexity) {
  if (points.shape().size() != 2) throw std::invalid_argument("points must be [N, d]");
  const std::size_t N = points.shape()[0];
  const Tensor D = squared_distances(points);
  const double target = std::log(perplexity);
  Affinities a{Tensor({N, N}, 0.0), std::vector<double>(N), std::vector<double>(N)};
  std::vector<double> p(N);
  for (std::size_t i = 0; i < N; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < N; ++j)
      if (j != i) dmin = std::min(dmin, D[i * N + j]);
    // Entropy of the row at precision beta, on distances shifted by dmin.
    auto row = [&](double beta) {
      double z = 0.0, dp = 0.0;
      for (std::size_t j = 0; j < N; ++j) {
        const double dj = D[i * N + j] - dmin;
        p[j] = j == i ? 0.0 : std::exp(-beta * dj);
        z += p[j];
        dp += p[j] * dj;
      }
      for (auto& v : p) v /= z;
      return std::log(z) + beta * dp / z;
    };
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double h = row(beta);
    for (int it = 0; it < 500 && std::abs(h - target) > 1e-12; ++it) {
      if (h > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
      if (hi - lo <= 1e-15 * beta) break;
      h = row(beta);
    }
    h = row(beta);
    double entropy = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      a.conditional[i * N + j] = p[j];
      if (p[j] > 0.0) entropy -= p[j] * std::log(p[j]);
    }
    a.beta[i] = beta;
    a.entropy[i] = entropy;
  }
  return a;
}

Tensor joint_probabilities(const Tensor& c) {
  const std::size_t N = c.shape()[0];
  Tensor P({N, N});
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) P[i * N + j] = (c[i * N + j] + c[j * N + i]) / (2.0 * static_cast<double>(N));
  return P;
}

TsneResult tsne(const Tensor& points_in, const TsneConfig& cfg) {
  if (points_in.shape().size() != 2) throw std::invalid_argument("points must be [N, d]");
  const std::size_t N = points_in.shape()[0], d = points_in.shape()[1];
  if (N > 2000) throw std::invalid_argument("exact t-SNE supports at most 2000 points");
  if (cfg.perplexity < 3.0 || cfg.perplexity > static_cast<double>(N - 1) / 3.0)
    throw std::invalid_argument("too few points for the perplexity: need 3 <= perplexity <= (N - 1) / 3");

  Tensor points = points_in;
  Rng jitter(derive_seed(cfg.seed, "jitter"));
  for (std::size_t i = 1; i < N; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::equal(points.data().begin() + static_cast<std::ptrdiff_t>(i * d),
                     points.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * d),
                     points.data().begin() + static_cast<std::ptrdiff_t>(j * d))) {
        for (std::size_t k = 0; k < d; ++k) points[i * d + k] += jitter.uniform(-1e-10, 1e-10);
        break;
      }

  const Affinities aff = calibrate_affinities(points, cfg.perplexity);
  const Tensor P = joint_probabilities(aff.conditional);

  TsneResult r;
  r.row_entropy = aff.entropy;
  r.embedding = Tensor({N, 2});
  Rng init(derive_seed(cfg.seed, "init"));
  for (auto& v : r.embedding.data()) v = init.normal(0.0, 1e-4);
  Tensor& Y = r.embedding;
  std::vector<double> update(2 * N, 0.0), gains(2 * N, 1.0), grad(2 * N), num(N * N);
  // KL(P || Q) at Y, and the gradient of the exaggerated objective in `grad`.
  auto evaluate = [&](double exag) {
    double z = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      num[i * N + i] = 0.0;
      for (std::size_t j = i + 1; j < N; ++j) {
        const double dx = Y[2 * i] - Y[2 * j], dy = Y[2 * i + 1] - Y[2 * j + 1];
        num[i * N + j] = num[j * N + i] = 1.0 / (1.0 + dx * dx + dy * dy);
        z += 2.0 * num[i * N + j];
      }
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      double gx = 0.0, gy = 0.0;
      for (std::size_t j = 0; j < N; ++j) {
        if (j == i) continue;
        const double pij = P[i * N + j], q = num[i * N + j] / z;
        if (pij > 0.0) kl += pij * std::log(pij / std::max(q, std::numeric_limits<double>::min()));
        const double m = (exag * pij - q) * num[i * N + j];
        gx += m * (Y[2 * i] - Y[2 * j]);
        gy += m * (Y[2 * i + 1] - Y[2 * j + 1]);
      }
      grad[2 * i] = 4.0 * gx;
      grad[2 * i + 1] = 4.0 * gy;
    }
    return kl;
  };
  Tensor previous = Y;
  double previous_kl = std::numeric_limits<double>::infinity(), scale = 1.0;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const bool exaggerating = it < cfg.exaggeration_iterations;
    const double exag = exaggerating ? cfg.exaggeration : 1.0;
    const double momentum = it < cfg.momentum_switch ? cfg.initial_momentum : cfg.final_momentum;
    double kl = evaluate(exag);
    const bool guarded = cfg.monotone && !exaggerating;
    if (guarded && kl > previous_kl) {
      Y = previous;
      std::fill(update.begin(), update.end(), 0.0);
      scale *= 0.5;
      ++r.rejected_steps;
      kl = evaluate(exag);
    } else {
      scale = 1.0;
    }
    r.kl.push_back(kl);
    previous = Y;
    previous_kl = guarded ? kl : std::numeric_limits<double>::infinity();
    double cx = 0.0, cy = 0.0;
    for (std::size_t k = 0; k < 2 * N; ++k) {
      if (cfg.adaptive_gains)
        gains[k] = (grad[k] > 0.0) != (update[k] > 0.0) ? gains[k] + 0.2 : std::max(0.01, gains[k] * 0.8);
      update[k] = momentum * update[k] - scale * cfg.learning_rate * gains[k] * grad[k];
      Y[k] += update[k];
      (k % 2 == 0 ? cx : cy) += Y[k];
    }
    for (std::size_t i = 0; i < N; ++i) {
      Y[2 * i] -= cx / static_cast<double>(N);
      Y[2 * i + 1] -= cy / static_cast<double>(N);
    }
  }
  if (cfg.monotone && cfg.iterations > cfg.exaggeration_iterations && evaluate(1.0) > previous_kl) {
    Y = previous;
    ++r.rejected_steps;
  }
  for (double v : Y.values())
    if (!std::isfinite(v)) throw NumericError("t-SNE embedding became non-finite");
  return r;
}

std::vector<EmbeddingPoint> embed(const std::vector<SourcedDataset>& parts, const TsneConfig& config,
                                  TsneResult* details) {
  if (parts.empty()) throw std::invalid_argument("nothing to embed");
  std::vector<double> rows;
  std::vector<EmbeddingPoint> out;
  std::size_t width = 0;
  for (const auto& part : parts) {
    require_same_schema(*parts.front().dataset, *part.dataset);
    const Tensor x = data::encode_dataset(*part.dataset);
    const std::size_t w = x.size() / std::max<std::size_t>(1, part.dataset->size());
    if (width != 0 && w != width && part.dataset->size() > 0) throw std::invalid_argument("datasets differ in visit count");
    if (part.dataset->size() > 0) width = w;
    rows.insert(rows.end(), x.data().begin(), x.data().end());
    const auto y = data::labels(*part.dataset);
    for (int label : y) out.push_back({0.0, 0.0, part.source, label});
  }
  Tensor points({out.size(), width});
  std::copy(rows.begin(), rows.end(), points.data().begin());
  TsneResult r = tsne(points, config);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].x = r.embedding[2 * i];
    out[i].y = r.embedding[2 * i + 1];
  }
  if (details) *details = std::move(r);
  return out;
}

std::string embedding_csv(const std::vector<EmbeddingPoint>& points) {
  std::string out = "x,y,source,label\n";
  for (const auto& p : points)
    out += num(p.x) + "," + num(p.y) + "," + p.source + "," + (p.label == data::kHealed ? "healed" : "not_healed") + "\n";
  return out;
}

std::vector<HistogramBin> export_histograms(const data::Dataset& real, const data::Dataset& synth,
                                            const std::vector<std::string>& features, std::size_t bins) {
  require_same_schema(real, synth);
  if (bins == 0) throw std::invalid_argument("bins must be positive");
  std::vector<HistogramBin> out;
  if (features.empty()) return out;
  const std::size_t T = data::visit_count(real);
  for (const auto& name : features) {
    const std::size_t j = real.schema.index_of(name);
    const auto& f = real.schema[j];
    if (f.kind != data::FeatureKind::continuous) throw std::invalid_argument(name + " is not continuous");
    const double width = (f.max - f.min) / static_cast<double>(bins);
    for (std::size_t t = 0; t < T; ++t)
      for (const auto* src : {&real, &synth}) {
        const auto p = histogram(column(*src, t, j), f.min, f.max, bins);
        for (std::size_t b = 0; b < bins; ++b)
          out.push_back({name, t + 1, src == &real ? "real" : "synthetic", f.min + width * static_cast<double>(b),
                         b + 1 == bins ? f.max : f.min + width * static_cast<double>(b + 1), p[b] / width});
      }
  }
  return out;
}

std::string histograms_csv(const std::vector<HistogramBin>& rows) {
  std::string out = "feature,visit,source,bin_lo,bin_hi,density\n";
  for (const auto& r : rows)
    out += r.feature + "," + std::to_string(r.visit) + "," + r.source + "," + num(r.lo) + "," + num(r.hi) + "," +
           num(r.density) + "\n";
  return out;
}

}  // namespace tabgan::eval
