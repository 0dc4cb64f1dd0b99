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

#include "tabgan/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tabgan::checkpoint {

namespace {

constexpr char kMagic[4] = {'T', 'G', 'C', 'K'};

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw std::invalid_argument("checkpoint truncated");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(U);
  return v;
}


// Array order: generator parameters, critic parameters, batch-norm running
// statistics, then the history matrix; keys sorted within each group.
std::vector<std::pair<std::string, Tensor>> arrays_of(const gan::GanModel& m) {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& [k, v] : m.generator_params) out.emplace_back("generator/" + k, v);
  for (const auto& [k, v] : m.critic_params) out.emplace_back("critic/" + k, v);
  for (const auto& [k, v] : m.generator_bn.layers) {
    out.emplace_back("bn/" + k + ".mean", v.mean);
    out.emplace_back("bn/" + k + ".var", v.var);
  }
  Tensor h({m.history.size(), 6});
  for (std::size_t i = 0; i < m.history.size(); ++i) {
    const auto& r = m.history[i];
    const double row[6] = {static_cast<double>(r.step), r.critic_loss, r.gen_loss, r.gp_term, r.mean_grad_norm,
                           r.wasserstein};
    std::copy(row, row + 6, h.data().begin() + static_cast<std::ptrdiff_t>(6 * i));
  }
  if (!m.history.empty()) out.emplace_back("history", std::move(h));
  return out;
}

void check_matches(const ParameterStore& got, const ParameterStore& expected, const std::string& what) {
  if (got.size() != expected.size()) throw std::invalid_argument("checkpoint " + what + " parameter set differs from its spec");
  for (const auto& [k, v] : expected) {
    const auto it = got.find(k);
    if (it == got.end()) throw std::invalid_argument("checkpoint is missing " + what + " parameter " + k);
    if (it->second.shape() != v.shape()) throw std::invalid_argument("checkpoint " + what + " parameter " + k + " has the wrong shape");
  }
}

}  // namespace

std::string digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string to_bytes(const gan::GanModel& m) {
  const auto arrays = arrays_of(m);
  std::string blob;
  nlohmann::json manifest = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : arrays) {
    manifest.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    for (double v : t.data()) put_le(blob, std::bit_cast<std::uint64_t>(v));
    offset += t.size();
  }
  std::string history_bytes;
  for (const auto& [name, t] : arrays)
    if (name == "history")
      for (double v : t.data()) put_le(history_bytes, std::bit_cast<std::uint64_t>(v));
  const nlohmann::json header = {
      {"format_version", kFormatVersion},
      {"schema", data::to_json(m.schema)},
      {"visits", m.visits},
      {"generator", nn::to_json(m.generator)},
      {"critic", nn::to_json(m.critic)},
      {"batchnorm", {{"momentum", m.generator_bn.momentum}, {"eps", m.generator_bn.eps}}},
      {"config", gan::to_json(m.config)},
      {"healed_prevalence", std::bit_cast<std::uint64_t>(m.healed_prevalence)},
      {"history", {{"steps", m.history.size()}, {"digest", digest(history_bytes)}}},
      {"arrays", manifest}};
  const std::string text = header.dump();
  std::string out(kMagic, 4);
  put_le(out, kFormatVersion);
  put_le(out, static_cast<std::uint64_t>(text.size()));
  out += text;
  out += blob;
  return out;
}

gan::GanModel from_bytes(const std::string& bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 4, kMagic, 4) != 0) throw std::invalid_argument("not a tabgan checkpoint");
  std::size_t pos = 4;
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kFormatVersion) throw std::invalid_argument("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = get_le<std::uint64_t>(bytes, pos);
  if (pos + header_len > bytes.size()) throw std::invalid_argument("checkpoint truncated");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  pos += header_len;
  const std::size_t blob_start = pos;

  gan::GanModel m;
  try {
    m.schema = data::schema_from_json(h.at("schema"));
    m.visits = h.at("visits").get<std::size_t>();
    m.generator = nn::network_from_json(h.at("generator"));
    m.critic = nn::network_from_json(h.at("critic"));
    m.generator_bn.momentum = h.at("batchnorm").at("momentum").get<double>();
    m.generator_bn.eps = h.at("batchnorm").at("eps").get<double>();
    m.config = gan::train_config_from_json(h.at("config"));
    m.healed_prevalence = std::bit_cast<double>(h.at("healed_prevalence").get<std::uint64_t>());
    const std::size_t steps = h.at("history").at("steps").get<std::size_t>();
    for (const auto& a : h.at("arrays")) {
      const auto name = a.at("name").get<std::string>();
      Tensor t(a.at("shape").get<Shape>());
      std::size_t p = blob_start + 8 * a.at("offset").get<std::size_t>();
      for (auto& v : t.data()) v = std::bit_cast<double>(get_le<std::uint64_t>(bytes, p));
      auto strip = [&](const std::string& prefix) { return name.substr(prefix.size()); };
      if (name.rfind("generator/", 0) == 0) {
        m.generator_params.emplace(strip("generator/"), std::move(t));
      } else if (name.rfind("critic/", 0) == 0) {
        m.critic_params.emplace(strip("critic/"), std::move(t));
      } else if (name.rfind("bn/", 0) == 0) {
        const auto rest = strip("bn/");
        const auto dot = rest.rfind('.');
        auto& stats = m.generator_bn.layers[rest.substr(0, dot)];
        (rest.substr(dot + 1) == "mean" ? stats.mean : stats.var) = std::move(t);
      } else if (name == "history") {
        if (t.shape() != Shape{steps, 6}) throw std::invalid_argument("checkpoint history has the wrong shape");
        for (std::size_t i = 0; i < steps; ++i)
          m.history.push_back({static_cast<std::size_t>(t[6 * i]), t[6 * i + 1], t[6 * i + 2], t[6 * i + 3],
                               t[6 * i + 4], t[6 * i + 5]});
      } else {
        throw std::invalid_argument("checkpoint has unknown array " + name);
      }
    }
    if (m.history.size() != steps) throw std::invalid_argument("checkpoint history length differs from its header");
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("checkpoint header is incomplete: ") + e.what());
  }
  check_matches(m.generator_params, nn::init_params(m.generator, 0), "generator");
  check_matches(m.critic_params, nn::init_params(m.critic, 0), "critic");
  const auto bn = nn::init_batchnorm_state(m.generator);
  if (bn.layers.size() != m.generator_bn.layers.size()) throw std::invalid_argument("checkpoint batch-norm state differs from its spec");
  if (to_bytes(m).size() != bytes.size()) throw std::invalid_argument("checkpoint has trailing or missing data");
  return m;
}

void save(const gan::GanModel& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  const auto bytes = to_bytes(model);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("cannot write " + path);
}

gan::GanModel load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return from_bytes(ss.str());
}

}  // namespace tabgan::checkpoint
