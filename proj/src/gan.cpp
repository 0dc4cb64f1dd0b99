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

#include "tabgan/gan.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace tabgan::gan {

using nn::Activation;
using nn::LayerSpec;

namespace {

std::size_t half_up(std::size_t v) { return (v + 1) / 2; }

void check_dims(std::size_t T, std::size_t n) {
  if (T < 1) throw std::invalid_argument("need at least one visit");
  if (n < 2) throw std::invalid_argument("need at least two features");
}

}  // namespace

nn::NetworkSpec build_generator(std::size_t T, std::size_t n, const Architecture& a) {
  check_dims(T, n);
  if (a.latent_dim == 0 || a.base_channels == 0 || a.generator_filters.empty())
    throw std::invalid_argument("generator widths must be positive");
  const std::size_t h = half_up(T), w = half_up(n);
  nn::NetworkSpec s;
  s.input_shape = {a.latent_dim + 1};
  s.layers = {LayerSpec::dense(h * w * a.base_channels), LayerSpec::batchnorm(),
              LayerSpec::act(Activation::leaky_relu), LayerSpec::reshape({h, w, a.base_channels})};
  for (std::size_t i = 0; i < a.generator_filters.size(); ++i) {
    s.layers.push_back(LayerSpec::deconv(a.generator_filters[i], i == 0 ? 2 : 1));
    s.layers.push_back(LayerSpec::batchnorm());
    s.layers.push_back(LayerSpec::act(Activation::leaky_relu));
    s.layers.push_back(LayerSpec::dropout(a.dropout));
  }
  s.layers.push_back(LayerSpec::deconv(1, 1));
  s.layers.push_back(LayerSpec::act(Activation::tanh));
  s.layers.push_back(LayerSpec::crop(T, n));
  return s;
}

nn::NetworkSpec build_critic(std::size_t T, std::size_t n, const Architecture& a) {
  check_dims(T, n);
  if (a.critic_filters.empty()) throw std::invalid_argument("critic needs at least one conv layer");
  nn::NetworkSpec s;
  s.input_shape = {T, n, 2};
  for (std::size_t f : a.critic_filters) {
    s.layers.push_back(LayerSpec::conv(f));
    s.layers.push_back(LayerSpec::act(Activation::leaky_relu));
    s.layers.push_back(LayerSpec::dropout(a.dropout));
  }
  s.layers.push_back(LayerSpec::flatten());
  s.layers.push_back(LayerSpec::dense(1));
  return s;
}

// ---------------------------------------------------------------------------
// Configuration

const char* label_mix_name(LabelMix m) {
  switch (m) {
    case LabelMix::match_prevalence: return "match-train-prevalence";
    case LabelMix::balanced: return "balanced";
    case LabelMix::fixed_healed: return "healed";
    case LabelMix::fixed_not_healed: return "not-healed";
  }
  return "?";
}

LabelMix parse_label_mix(const std::string& s) {
  for (LabelMix m : {LabelMix::match_prevalence, LabelMix::balanced, LabelMix::fixed_healed, LabelMix::fixed_not_healed})
    if (s == label_mix_name(m)) return m;
  throw std::invalid_argument("unknown label mix '" + s +
                              "' (expected match-train-prevalence, balanced, healed, or not-healed)");
}

nlohmann::json to_json(const Architecture& a) {
  return {{"latent_dim", a.latent_dim},           {"base_channels", a.base_channels},
          {"generator_filters", a.generator_filters}, {"critic_filters", a.critic_filters},
          {"dropout", a.dropout}};
}

Architecture architecture_from_json(const nlohmann::json& j) {
  Architecture a;
  a.latent_dim = j.value("latent_dim", a.latent_dim);
  a.base_channels = j.value("base_channels", a.base_channels);
  a.generator_filters = j.value("generator_filters", a.generator_filters);
  a.critic_filters = j.value("critic_filters", a.critic_filters);
  a.dropout = j.value("dropout", a.dropout);
  return a;
}

namespace {

nlohmann::json adam_json(const AdamConfig& c) {
  return {{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}};
}

AdamConfig adam_from_json(const nlohmann::json& j) {
  AdamConfig c;
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  return c;
}

}  // namespace

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"steps_per_epoch", c.steps_per_epoch},
          {"n_critic", c.n_critic},
          {"lambda_gp", c.lambda_gp},
          {"critic_optimizer", adam_json(c.critic_optimizer)},
          {"generator_optimizer", adam_json(c.generator_optimizer)},
          {"seed", c.seed},
          {"label_balance", label_mix_name(c.label_balance)},
          {"architecture", to_json(c.architecture)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.value("batch_size", c.batch_size);
  c.steps_per_epoch = j.value("steps_per_epoch", c.steps_per_epoch);
  c.n_critic = j.value("n_critic", c.n_critic);
  c.lambda_gp = j.value("lambda_gp", c.lambda_gp);
  if (j.contains("critic_optimizer")) c.critic_optimizer = adam_from_json(j["critic_optimizer"]);
  if (j.contains("generator_optimizer")) c.generator_optimizer = adam_from_json(j["generator_optimizer"]);
  c.seed = j.value("seed", c.seed);
  if (j.contains("label_balance")) c.label_balance = parse_label_mix(j["label_balance"].get<std::string>());
  if (j.contains("architecture")) c.architecture = architecture_from_json(j["architecture"]);
  return c;
}

// ---------------------------------------------------------------------------
// Model

GanModel init_model(const data::FeatureSchema& schema, std::size_t visits, const TrainConfig& config) {
  GanModel m;
  m.schema = schema;
  m.visits = visits;
  m.config = config;
  m.generator = build_generator(visits, schema.size(), config.architecture);
  m.critic = build_critic(visits, schema.size(), config.architecture);
  m.generator_params = nn::init_params(m.generator, derive_seed(config.seed, "generator-init"));
  m.critic_params = nn::init_params(m.critic, derive_seed(config.seed, "critic-init"));
  m.generator_bn = nn::init_batchnorm_state(m.generator);
  return m;
}

EncodedData encode_for_gan(const data::Dataset& d) {
  Tensor x = data::encode_dataset(d);
  Shape s = x.shape();
  s.push_back(1);
  EncodedData e{x.reshaped(s), {}};
  for (int l : data::labels(d)) e.labels.push_back(l == data::kHealed ? 1.0 : -1.0);
  return e;
}

PenaltyResult gradient_penalty(const std::function<ad::Var(const ad::Var&)>& critic, const Tensor& real,
                               const Tensor& fake, const std::vector<double>& eps) {
  if (real.shape() != fake.shape()) throw ShapeError("gradient_penalty: real and fake batches differ in shape");
  const std::size_t B = real.dim(0);
  if (eps.size() != B) throw std::invalid_argument("gradient_penalty: one interpolation weight per sample");
  const std::size_t per = real.size() / B;
  Tensor mix(real.shape());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) mix[i] = eps[b] * real[i] + (1.0 - eps[b]) * fake[i];
  const ad::Var x = ad::variable(mix);
  const ad::Var scores = critic(x);
  const ad::Var g = ad::grad(ad::sum(scores), {x}, {.build_graph = true, .allow_unused = true})[0];
  if (!g.value().all_finite()) throw NumericError("gradient_penalty: non-finite critic gradient");
  // the epsilon keeps sqrt differentiable at a zero gradient
  const ad::Var norms = ad::sqrt(ad::shift(ad::sum_rows(ad::square(g)), 1e-12));
  const ad::Var penalty = ad::mean(ad::square(ad::shift(norms, -1.0)));
  return {penalty, mix, norms.value().values()};
}

PenaltyResult gradient_penalty(const std::function<ad::Var(const ad::Var&)>& critic, const Tensor& real,
                               const Tensor& fake, Rng& rng) {
  std::vector<double> eps(real.dim(0));
  for (auto& e : eps) e = rng.uniform();
  return gradient_penalty(critic, real, fake, eps);
}

std::vector<double> draw_labels(std::size_t count, LabelMix mix, double prevalence, Rng& rng) {
  std::vector<double> out(count, -1.0);
  std::size_t healed = 0;
  switch (mix) {
    case LabelMix::fixed_healed: healed = count; break;
    case LabelMix::fixed_not_healed: healed = 0; break;
    case LabelMix::balanced: healed = (count + 1) / 2; break;
    case LabelMix::match_prevalence:
      healed = static_cast<std::size_t>(std::llround(prevalence * static_cast<double>(count)));
      break;
  }
  for (std::size_t i = 0; i < std::min(healed, count); ++i) out[i] = 1.0;
  rng.shuffle(out);
  return out;
}

namespace {

Tensor batch_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
  Shape s = x.shape();
  const std::size_t per = x.size() / s[0];
  s[0] = idx.size();
  Tensor out(s);
  for (std::size_t b = 0; b < idx.size(); ++b)
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(idx[b] * per), per,
                out.data().begin() + static_cast<std::ptrdiff_t>(b * per));
  return out;
}

Tensor label_plane(const Shape& data_shape, const std::vector<double>& labels) {
  Tensor out(data_shape);
  const std::size_t per = out.size() / data_shape[0];
  for (std::size_t b = 0; b < labels.size(); ++b)
    std::fill_n(out.data().begin() + static_cast<std::ptrdiff_t>(b * per), per, labels[b]);
  return out;
}

Tensor generator_input(std::size_t latent, const std::vector<double>& labels, Rng& rng) {
  Tensor z({labels.size(), latent + 1});
  for (std::size_t b = 0; b < labels.size(); ++b) {
    for (std::size_t k = 0; k < latent; ++k) z[b * (latent + 1) + k] = rng.normal();
    z[b * (latent + 1) + latent] = labels[b];
  }
  return z;
}

// [B, T, n, 1] data and labels -> [B, T, n, 2] critic input
Tensor with_label_channel(const Tensor& x, const std::vector<double>& labels) {
  Shape s = x.shape();
  s.back() = 2;
  Tensor out(s);
  const std::size_t per = x.size() / x.dim(0);
  for (std::size_t b = 0; b < labels.size(); ++b)
    for (std::size_t i = 0; i < per; ++i) {
      out[(b * per + i) * 2] = x[b * per + i];
      out[(b * per + i) * 2 + 1] = labels[b];
    }
  return out;
}

Tensor concat_batch(const Tensor& a, const Tensor& b) {
  Shape s = a.shape();
  s[0] += b.dim(0);
  std::vector<double> v(a.values());
  v.insert(v.end(), b.values().begin(), b.values().end());
  return Tensor(s, std::move(v));
}

std::vector<std::size_t> minibatch(std::size_t N, std::size_t B, Rng& rng) {
  auto perm = rng.permutation(N);
  perm.resize(B);
  return perm;
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string(what) + " is not finite");
}

}  // namespace

void train_steps(GanModel& model, const EncodedData& enc, std::size_t steps, Rng& rng, const TrainObserver& observer) {
  const TrainConfig& cfg = model.config;
  const std::size_t N = enc.x.dim(0);
  const std::size_t B = cfg.batch_size;
  if (B == 0 || B > N) throw std::invalid_argument("batch_size must be in [1, training set size]");
  if (cfg.n_critic == 0) throw std::invalid_argument("n_critic must be positive");
  const std::size_t latent = cfg.architecture.latent_dim;
  AdamState critic_opt, gen_opt;
  GanModel last_good = model;

  for (std::size_t it = 0; it < steps; ++it) {
    StepRecord rec;
    rec.step = model.history.size() + 1;
    try {
      for (std::size_t c = 0; c < cfg.n_critic; ++c) {
        const auto idx = minibatch(N, B, rng);
        const Tensor real = batch_rows(enc.x, idx);
        std::vector<double> lab(B);
        for (std::size_t b = 0; b < B; ++b) lab[b] = enc.labels[idx[b]];
        Tensor fake;
        {
          ad::NoGradGuard no_grad;
          const auto gp = as_constants(model.generator_params);
          fake = nn::forward(model.generator, gp, ad::constant(generator_input(latent, lab, rng)), rng,
                             {.mode = nn::Mode::train, .bn_state = &model.generator_bn})
                     .value();
        }
        const ParamVars cv = as_variables(model.critic_params);
        // real and fake share one forward pass; weights turn the scores into
        // mean C(fake) - mean C(real)
        const Tensor both = concat_batch(with_label_channel(real, lab), with_label_channel(fake, lab));
        const ad::Var scores = nn::forward(model.critic, cv, ad::constant(both), rng, {.mode = nn::Mode::train});
        Tensor w({2 * B, 1}, -1.0 / static_cast<double>(B));
        for (std::size_t b = B; b < 2 * B; ++b) w[b] = 1.0 / static_cast<double>(B);
        const ad::Var wloss = ad::sum(ad::mul(scores, ad::constant(w)));
        const Tensor plane = label_plane(real.shape(), lab);
        auto critic_fn = [&](const ad::Var& x) {
          return nn::forward(model.critic, cv, ad::concat_last(x, ad::constant(plane)), rng, {.mode = nn::Mode::train});
        };
        const PenaltyResult gp = gradient_penalty(critic_fn, real, fake, rng);
        const ad::Var loss = ad::add(wloss, ad::scale(gp.penalty, cfg.lambda_gp));
        check_finite(loss.item(), "critic loss");
        adam_step(model.critic_params, gradients(loss, cv), critic_opt, cfg.critic_optimizer);
        double norm = 0.0;
        for (double g : gp.grad_norms) norm += g;
        rec.critic_loss += loss.item();
        rec.gp_term += gp.penalty.item();
        rec.mean_grad_norm += norm / static_cast<double>(B);
        rec.wasserstein -= wloss.item();
        if (observer) observer(Phase::critic, model);
      }
      const double k = static_cast<double>(cfg.n_critic);
      rec.critic_loss /= k;
      rec.gp_term /= k;
      rec.mean_grad_norm /= k;
      rec.wasserstein /= k;

      const auto lab = draw_labels(B, cfg.label_balance, model.healed_prevalence, rng);
      const ParamVars gv = as_variables(model.generator_params);
      const ad::Var fake = nn::forward(model.generator, gv, ad::constant(generator_input(latent, lab, rng)), rng,
                                       {.mode = nn::Mode::train, .bn_state = &model.generator_bn, .update_stats = true});
      const Tensor plane = label_plane(fake.shape(), lab);
      const ad::Var scores = nn::forward(model.critic, as_constants(model.critic_params),
                                         ad::concat_last(fake, ad::constant(plane)), rng, {.mode = nn::Mode::train});
      const ad::Var gen_loss = ad::neg(ad::mean(scores));
      check_finite(gen_loss.item(), "generator loss");
      adam_step(model.generator_params, gradients(gen_loss, gv), gen_opt, cfg.generator_optimizer);
      rec.gen_loss = gen_loss.item();
      for (const auto& [name, p] : model.generator_params)
        if (!p.all_finite()) throw NumericError("generator parameter " + name + " is not finite");
      for (const auto& [name, p] : model.critic_params)
        if (!p.all_finite()) throw NumericError("critic parameter " + name + " is not finite");
    } catch (const NumericError& e) {
      throw TrainingDiverged("training diverged at step " + std::to_string(rec.step) + ": " + e.what(),
                             std::move(last_good));
    }
    model.history.push_back(rec);
    if (observer) observer(Phase::generator, model);
    last_good = model;
  }
}

GanModel train(const data::Dataset& dataset, const TrainConfig& config, const TrainObserver& observer) {
  const std::size_t T = data::visit_count(dataset);
  const auto y = data::labels(dataset);
  const auto healed = static_cast<std::size_t>(std::count(y.begin(), y.end(), data::kHealed));
  if (healed == 0 || healed == y.size()) throw std::invalid_argument("training data must contain both labels");
  GanModel model = init_model(dataset.schema, T, config);
  model.healed_prevalence = static_cast<double>(healed) / static_cast<double>(y.size());
  const EncodedData enc = encode_for_gan(dataset);
  const std::size_t per_epoch =
      config.steps_per_epoch > 0 ? config.steps_per_epoch : (dataset.size() + config.batch_size - 1) / config.batch_size;
  Rng rng(derive_seed(config.seed, "train"));
  train_steps(model, enc, config.epochs * per_epoch, rng, observer);
  return model;
}

EncodedData sample_encoded(const GanModel& model, std::size_t count, LabelMix mix, std::uint64_t seed) {
  Rng rng(seed);
  const auto lab = draw_labels(count, mix, model.healed_prevalence, rng);
  if (count == 0) return {};
  EncodedData out{Tensor({count, model.visits, model.schema.size(), 1}), lab};
  ad::NoGradGuard no_grad;
  const auto gp = as_constants(model.generator_params);
  nn::BatchNormState bn = model.generator_bn;
  const std::size_t per = model.visits * model.schema.size();
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < count; start += kChunk) {
    const std::size_t m = std::min(kChunk, count - start);
    const std::vector<double> chunk(lab.begin() + static_cast<std::ptrdiff_t>(start),
                                    lab.begin() + static_cast<std::ptrdiff_t>(start + m));
    const Tensor y = nn::forward(model.generator, gp, ad::constant(generator_input(model.config.architecture.latent_dim, chunk, rng)),
                                 rng, {.mode = nn::Mode::eval, .bn_state = &bn})
                         .value();
    std::copy(y.values().begin(), y.values().end(), out.x.data().begin() + static_cast<std::ptrdiff_t>(start * per));
  }
  return out;
}

data::Dataset sample(const GanModel& model, std::size_t count, LabelMix mix, std::uint64_t seed) {
  const EncodedData enc = sample_encoded(model, count, mix, seed);
  data::Dataset d{model.schema, {}, data::Provenance::synthetic};
  const std::size_t T = model.visits, n = model.schema.size();
  for (std::size_t i = 0; i < count; ++i) {
    data::EncodedMatrix m{T, n, std::vector<double>(enc.x.values().begin() + static_cast<std::ptrdiff_t>(i * T * n),
                                                    enc.x.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * T * n))};
    auto s = data::decode(m, model.schema);
    char id[32];
    std::snprintf(id, sizeof id, "G%06zu", i + 1);
    s.id = id;
    s.label = enc.labels[i] > 0.0 ? data::kHealed : data::kNotHealed;
    d.series.push_back(std::move(s));
  }
  return d;
}

std::string history_csv(const std::vector<StepRecord>& history) {
  auto num = [](double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
  };
  std::string out = "step,critic_loss,gen_loss,gp_term,mean_grad_norm\n";
  for (const auto& r : history)
    out += std::to_string(r.step) + "," + num(r.critic_loss) + "," + num(r.gen_loss) + "," + num(r.gp_term) + "," +
           num(r.mean_grad_norm) + "\n";
  return out;
}

}  // namespace tabgan::gan
