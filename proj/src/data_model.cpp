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

#include "tabgan/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "tabgan/rng.hpp"

namespace tabgan::data {

// ---------------------------------------------------------------------------
// Schema

Feature Feature::categorical(std::string name, std::vector<std::string> levels, Temporality t) {
  Feature f;
  f.name = std::move(name);
  f.kind = FeatureKind::categorical;
  f.levels = std::move(levels);
  f.temporality = t;
  return f;
}

Feature Feature::continuous(std::string name, double min, double max, Temporality t) {
  Feature f;
  f.name = std::move(name);
  f.kind = FeatureKind::continuous;
  f.min = min;
  f.max = max;
  f.temporality = t;
  return f;
}

FeatureSchema::FeatureSchema(std::vector<Feature> features) : features_(std::move(features)) {
  std::set<std::string> seen;
  for (const auto& f : features_) {
    if (f.name.empty()) throw std::invalid_argument("schema: empty feature name");
    if (!seen.insert(f.name).second) throw std::invalid_argument("schema: duplicate feature '" + f.name + "'");
    if (f.kind == FeatureKind::categorical) {
      if (f.levels.size() < 2)
        throw std::invalid_argument("schema: categorical feature '" + f.name + "' needs at least two levels");
      std::set<std::string> lv(f.levels.begin(), f.levels.end());
      if (lv.size() != f.levels.size())
        throw std::invalid_argument("schema: categorical feature '" + f.name + "' repeats a level");
    } else if (!(std::isfinite(f.min) && std::isfinite(f.max) && f.min < f.max)) {
      throw std::invalid_argument("schema: continuous feature '" + f.name + "' needs finite min < max");
    }
  }
}

std::size_t FeatureSchema::index_of(const std::string& name) const {
  for (std::size_t j = 0; j < features_.size(); ++j)
    if (features_[j].name == name) return j;
  throw std::out_of_range("schema has no feature '" + name + "'");
}

bool FeatureSchema::contains(const std::string& name) const {
  return std::any_of(features_.begin(), features_.end(), [&](const Feature& f) { return f.name == name; });
}

FeatureSchema FeatureSchema::subset(const std::vector<std::string>& names) const {
  std::vector<Feature> out;
  for (const auto& n : names) out.push_back(features_[index_of(n)]);
  return FeatureSchema(std::move(out));
}

nlohmann::json to_json(const FeatureSchema& schema) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : schema.features()) {
    nlohmann::json j{{"name", f.name},
                     {"temporality", f.temporality == Temporality::per_visit ? "per_visit" : "static"}};
    if (f.kind == FeatureKind::categorical) {
      j["kind"] = "categorical";
      j["levels"] = f.levels;
    } else {
      j["kind"] = "continuous";
      j["min"] = f.min;
      j["max"] = f.max;
    }
    features.push_back(std::move(j));
  }
  return {{"features", std::move(features)}};
}

FeatureSchema schema_from_json(const nlohmann::json& j) {
  std::vector<Feature> features;
  for (const auto& fj : j.at("features")) {
    const std::string kind = fj.at("kind").get<std::string>();
    const std::string temp = fj.value("temporality", std::string("per_visit"));
    if (temp != "per_visit" && temp != "static") throw std::invalid_argument("schema: unknown temporality " + temp);
    const Temporality t = temp == "static" ? Temporality::static_ : Temporality::per_visit;
    if (kind == "categorical") {
      features.push_back(Feature::categorical(fj.at("name"), fj.at("levels").get<std::vector<std::string>>(), t));
    } else if (kind == "continuous") {
      features.push_back(Feature::continuous(fj.at("name"), fj.at("min"), fj.at("max"), t));
    } else {
      throw std::invalid_argument("schema: unknown feature kind " + kind);
    }
  }
  return FeatureSchema(std::move(features));
}

FeatureSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema file " + path);
  return schema_from_json(nlohmann::json::parse(in));
}

void save_schema(const FeatureSchema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json(schema).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// CSV

RawTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c != '\r') {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw std::invalid_argument("csv: unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  if (records.empty()) throw std::invalid_argument("csv: missing header");
  RawTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size())
      throw std::invalid_argument("csv: row " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                                  " fields, header has " + std::to_string(table.header.size()));
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

RawTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

namespace {

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

bool is_reserved(const std::string& col) {
  return col == kPatientColumn || col == kVisitColumn || col == kLabelColumn || col == kHealedAtColumn;
}

std::size_t column(const RawTable& t, const std::string& name) {
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (t.header[c] == name) return c;
  throw std::invalid_argument("missing required column '" + name + "'");
}

std::optional<std::size_t> find_column(const RawTable& t, const std::string& name) {
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (t.header[c] == name) return c;
  return std::nullopt;
}

int parse_label(const std::string& s) {
  if (s == "healed" || s == "1" || s == "true") return kHealed;
  if (s == "not_healed" || s == "not-healed" || s == "0" || s == "false") return kNotHealed;
  throw std::invalid_argument("unrecognized label '" + s + "'");
}

}  // namespace

FeatureSchema infer_schema(const RawTable& table) {
  if (table.rows.empty()) throw std::invalid_argument("no rows");
  const auto pid = find_column(table, kPatientColumn);
  std::vector<Feature> features;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const std::string& name = table.header[c];
    if (is_reserved(name)) continue;
    bool any_numeric = false, any_text = false;
    double lo = 0.0, hi = 0.0;
    std::vector<std::string> levels;
    std::map<std::string, std::string> first_by_patient;
    bool varies = false;
    for (const auto& row : table.rows) {
      const std::string& cell = row[c];
      if (cell.empty()) continue;
      if (pid) {
        auto [it, fresh] = first_by_patient.try_emplace(row[*pid], cell);
        if (!fresh && it->second != cell) varies = true;
      } else {
        varies = true;
      }
      if (auto v = parse_number(cell)) {
        lo = any_numeric ? std::min(lo, *v) : *v;
        hi = any_numeric ? std::max(hi, *v) : *v;
        any_numeric = true;
      } else {
        any_text = true;
        if (std::find(levels.begin(), levels.end(), cell) == levels.end()) levels.push_back(cell);
      }
    }
    if (any_numeric && any_text) throw std::invalid_argument("column '" + name + "' mixes numbers and text");
    if (!any_numeric && !any_text) throw std::invalid_argument("column '" + name + "' is entirely empty");
    const Temporality t = varies ? Temporality::per_visit : Temporality::static_;
    if (any_numeric) {
      if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
      }
      features.push_back(Feature::continuous(name, lo, hi, t));
    } else {
      if (levels.size() < 2) throw std::invalid_argument("column '" + name + "' has a single level");
      features.push_back(Feature::categorical(name, levels, t));
    }
  }
  return FeatureSchema(std::move(features));
}

Dataset dataset_from_table(const RawTable& table, const FeatureSchema& schema) {
  const std::size_t pid = column(table, kPatientColumn);
  const std::size_t vid = column(table, kVisitColumn);
  const auto lab = find_column(table, kLabelColumn);
  const auto healed_at = find_column(table, kHealedAtColumn);
  if (!lab && !healed_at)
    throw std::invalid_argument("missing required column '" + std::string(kLabelColumn) + "'");
  std::vector<std::size_t> cols;
  for (const auto& f : schema.features()) cols.push_back(column(table, f.name));

  struct Pending {
    std::vector<std::pair<double, std::vector<Value>>> visits;
    std::optional<int> label;
  };
  std::vector<std::string> order;
  std::map<std::string, Pending> by_id;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string& id = row[pid];
    auto [it, fresh] = by_id.try_emplace(id);
    if (fresh) order.push_back(id);
    const auto visit = parse_number(row[vid]);
    if (!visit) throw std::invalid_argument("row " + std::to_string(r + 2) + ": bad visit_index '" + row[vid] + "'");
    std::optional<int> label;
    if (lab) {
      if (row[*lab].empty()) throw std::invalid_argument("row " + std::to_string(r + 2) + ": missing label");
      label = parse_label(row[*lab]);
    } else {
      const auto week = parse_number(row[*healed_at]);
      label = (week && *week <= kHorizonWeeks) ? kHealed : kNotHealed;
    }
    if (it->second.label && *it->second.label != *label)
      throw std::invalid_argument("patient " + id + " has conflicting labels");
    it->second.label = label;
    std::vector<Value> values;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const std::string& cell = row[cols[j]];
      const Feature& f = schema[j];
      if (cell.empty()) {
        values.emplace_back();
      } else if (f.kind == FeatureKind::continuous) {
        const auto v = parse_number(cell);
        if (!v) throw std::invalid_argument("row " + std::to_string(r + 2) + ": '" + cell + "' is not a number for " + f.name);
        values.emplace_back(*v);
      } else {
        if (std::find(f.levels.begin(), f.levels.end(), cell) == f.levels.end())
          throw std::invalid_argument("row " + std::to_string(r + 2) + ": unknown level '" + cell + "' for " + f.name);
        values.emplace_back(cell);
      }
    }
    it->second.visits.emplace_back(*visit, std::move(values));
  }
  Dataset d;
  d.schema = schema;
  for (const auto& id : order) {
    auto& p = by_id.at(id);
    std::stable_sort(p.visits.begin(), p.visits.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    PatientSeries s;
    s.id = id;
    s.label = p.label;
    for (auto& [_, v] : p.visits) s.visits.push_back(std::move(v));
    d.series.push_back(std::move(s));
  }
  return d;
}

Dataset load_dataset(const std::string& csv_path, const FeatureSchema& schema) {
  return dataset_from_table(read_csv(csv_path), schema);
}

std::string to_csv(const Dataset& d) {
  std::string out = std::string(kPatientColumn) + "," + kVisitColumn + "," + kLabelColumn;
  for (const auto& f : d.schema.features()) out += "," + quote(f.name);
  out += '\n';
  for (const auto& s : d.series) {
    const std::string label = !s.label ? "" : (*s.label == kHealed ? "healed" : "not_healed");
    for (std::size_t t = 0; t < s.visits.size(); ++t) {
      out += quote(s.id) + "," + std::to_string(t + 1) + "," + label;
      for (const auto& v : s.visits[t]) {
        out += ',';
        if (const double* x = std::get_if<double>(&v)) out += format_number(*x);
        else if (const std::string* l = std::get_if<std::string>(&v)) out += quote(*l);
      }
      out += '\n';
    }
  }
  return out;
}

void save_dataset(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_csv(d);
  if (!out) throw std::runtime_error("write failed for " + path);
}

// ---------------------------------------------------------------------------
// Transformations

Dataset filter_eligibility(const Dataset& d, std::size_t min_visits) {
  Dataset out{d.schema, {}, d.provenance};
  for (const auto& s : d.series) {
    if (s.visits.size() < min_visits) continue;
    PatientSeries kept = s;
    kept.visits.resize(min_visits);
    out.series.push_back(std::move(kept));
  }
  return out;
}

Dataset truncate(const Dataset& d, std::size_t visits) {
  if (visits == 0) throw std::invalid_argument("truncate: need at least one visit");
  Dataset out{d.schema, {}, d.provenance};
  for (const auto& s : d.series) {
    if (s.visits.size() < visits)
      throw std::invalid_argument("truncate: series " + s.id + " has only " + std::to_string(s.visits.size()) +
                                  " visits");
    PatientSeries kept = s;
    kept.visits.resize(visits);
    out.series.push_back(std::move(kept));
  }
  return out;
}

Dataset select_features(const Dataset& d, const std::vector<std::string>& names) {
  Dataset out{d.schema.subset(names), {}, d.provenance};
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(d.schema.index_of(n));
  for (const auto& s : d.series) {
    PatientSeries p{s.id, {}, s.label};
    for (const auto& v : s.visits) {
      std::vector<Value> row;
      for (std::size_t j : idx) row.push_back(v[j]);
      p.visits.push_back(std::move(row));
    }
    out.series.push_back(std::move(p));
  }
  return out;
}

namespace {

std::size_t level_index(const Feature& f, const std::string& level) {
  auto it = std::find(f.levels.begin(), f.levels.end(), level);
  if (it == f.levels.end()) throw std::invalid_argument("unknown level '" + level + "' for " + f.name);
  return static_cast<std::size_t>(it - f.levels.begin());
}

}  // namespace

Dataset impute(const Dataset& d) {
  Dataset out = d;
  for (auto& s : out.series) {
    const std::size_t T = s.visits.size();
    for (std::size_t j = 0; j < d.schema.size(); ++j) {
      const Feature& f = d.schema[j];
      std::vector<std::size_t> present;
      for (std::size_t t = 0; t < T; ++t)
        if (!is_missing(s.visits[t][j])) present.push_back(t);
      if (present.size() == T) continue;
      if (present.empty())
        throw std::invalid_argument("impute: feature '" + f.name + "' entirely missing for series " + s.id);
      if (f.kind == FeatureKind::categorical) {
        std::vector<std::size_t> counts(f.levels.size(), 0);
        for (std::size_t t : present) ++counts[level_index(f, std::get<std::string>(s.visits[t][j]))];
        const std::size_t mode = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        for (std::size_t t = 0; t < T; ++t)
          if (is_missing(s.visits[t][j])) s.visits[t][j] = f.levels[mode];
        continue;
      }
      const std::size_t degree = std::min<std::size_t>(2, present.size() - 1);
      Eigen::MatrixXd A(present.size(), degree + 1);
      Eigen::VectorXd b(present.size());
      for (std::size_t r = 0; r < present.size(); ++r) {
        const double x = static_cast<double>(present[r] + 1);
        double p = 1.0;
        for (std::size_t k = 0; k <= degree; ++k, p *= x) A(r, k) = p;
        b(r) = std::get<double>(s.visits[present[r]][j]);
      }
      const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(b);
      for (std::size_t t = 0; t < T; ++t) {
        if (!is_missing(s.visits[t][j])) continue;
        const double x = static_cast<double>(t + 1);
        double v = 0.0, p = 1.0;
        for (std::size_t k = 0; k <= degree; ++k, p *= x) v += coef(k) * p;
        s.visits[t][j] = std::clamp(v, f.min, f.max);
      }
    }
  }
  return out;
}

std::size_t visit_count(const Dataset& d) {
  if (d.series.empty()) throw std::invalid_argument("empty dataset");
  const std::size_t T = d.series.front().visits.size();
  for (const auto& s : d.series)
    if (s.visits.size() != T) throw ShapeError("series " + s.id + " has a different visit count");
  return T;
}

EncodedMatrix encode(const PatientSeries& s, const FeatureSchema& schema) {
  EncodedMatrix m{s.visits.size(), schema.size(), std::vector<double>(s.visits.size() * schema.size())};
  for (std::size_t t = 0; t < m.rows; ++t) {
    if (s.visits[t].size() != schema.size()) throw ShapeError("encode: visit width differs from schema");
    for (std::size_t j = 0; j < m.cols; ++j) {
      const Feature& f = schema[j];
      // static features are taken from the first visit and repeated
      const Value& v = f.temporality == Temporality::static_ ? s.visits[0][j] : s.visits[t][j];
      if (is_missing(v)) throw std::invalid_argument("encode: missing value for " + f.name + " in " + s.id);
      if (f.kind == FeatureKind::continuous) {
        const double* x = std::get_if<double>(&v);
        if (!x) throw std::invalid_argument("encode: " + f.name + " expects a number");
        if (!std::isfinite(*x)) throw NumericError("encode: non-finite value for " + f.name);
        m.at(t, j) = std::clamp(2.0 * (*x - f.min) / (f.max - f.min) - 1.0, -1.0, 1.0);
      } else {
        const std::string* l = std::get_if<std::string>(&v);
        if (!l) throw std::invalid_argument("encode: " + f.name + " expects a level");
        const double L = static_cast<double>(f.levels.size());
        m.at(t, j) = -1.0 + 2.0 * static_cast<double>(level_index(f, *l)) / (L - 1.0);
      }
    }
  }
  return m;
}

namespace {

Value decode_cell(double e, const Feature& f) {
  e = std::clamp(e, -1.0, 1.0);
  if (f.kind == FeatureKind::continuous) {
    return std::clamp(f.min + (e + 1.0) * 0.5 * (f.max - f.min), f.min, f.max);
  }
  const double L = static_cast<double>(f.levels.size());
  // nearest grid point; an exact midpoint goes to the lower index
  const double pos = (e + 1.0) * 0.5 * (L - 1.0);
  auto idx = static_cast<std::size_t>(std::ceil(pos - 0.5));
  idx = std::min(idx, f.levels.size() - 1);
  return f.levels[idx];
}

}  // namespace

PatientSeries decode(const EncodedMatrix& m, const FeatureSchema& schema) {
  if (m.cols != schema.size()) throw ShapeError("decode: column count differs from schema");
  PatientSeries s;
  s.visits.assign(m.rows, std::vector<Value>(m.cols));
  for (std::size_t j = 0; j < m.cols; ++j) {
    const Feature& f = schema[j];
    if (f.temporality == Temporality::static_ && m.rows > 0) {
      double mean = 0.0;
      for (std::size_t t = 0; t < m.rows; ++t) mean += m.at(t, j);
      mean /= static_cast<double>(m.rows);
      // A constant column decodes from its exact value, not the rounded mean.
      bool constant = true;
      for (std::size_t t = 1; t < m.rows; ++t) constant = constant && m.at(t, j) == m.at(0, j);
      if (constant) mean = m.at(0, j);
      const Value v = decode_cell(mean, f);
      for (std::size_t t = 0; t < m.rows; ++t) s.visits[t][j] = v;
    } else {
      for (std::size_t t = 0; t < m.rows; ++t) s.visits[t][j] = decode_cell(m.at(t, j), f);
    }
  }
  return s;
}

Tensor encode_dataset(const Dataset& d) {
  const std::size_t T = visit_count(d);
  const std::size_t n = d.schema.size();
  Tensor out({d.size(), T, n});
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto m = encode(d.series[i], d.schema);
    std::copy(m.values.begin(), m.values.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * T * n));
  }
  return out;
}

Tensor first_visit_rows(const Dataset& d) {
  const std::size_t n = d.schema.size();
  Tensor out({d.size(), n});
  for (std::size_t i = 0; i < d.size(); ++i) {
    PatientSeries first{d.series[i].id, {d.series[i].visits.at(0)}, d.series[i].label};
    const auto m = encode(first, d.schema);
    std::copy(m.values.begin(), m.values.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return out;
}

std::vector<int> labels(const Dataset& d) {
  std::vector<int> y;
  y.reserve(d.size());
  for (const auto& s : d.series) {
    if (!s.label) throw std::invalid_argument("series " + s.id + " is unlabeled");
    y.push_back(*s.label);
  }
  return y;
}

Split split(const Dataset& d, double train_fraction, std::uint64_t seed) {
  if (d.size() < 2) throw std::invalid_argument("dataset too small to split");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw std::invalid_argument("train fraction must be in (0, 1)");
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(d.size())));
  if (n_train >= d.size()) throw std::invalid_argument("empty test set");
  if (n_train == 0) throw std::invalid_argument("empty training set");
  Rng rng(seed);
  auto perm = rng.permutation(d.size());
  std::vector<bool> in_train(d.size(), false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[perm[i]] = true;
  Split s{{d.schema, {}, d.provenance}, {d.schema, {}, d.provenance}};
  for (std::size_t i = 0; i < d.size(); ++i) (in_train[i] ? s.train : s.test).series.push_back(d.series[i]);
  return s;
}

// ---------------------------------------------------------------------------
// Surrogate

namespace {

constexpr double kAreaFactor = 0.7;
constexpr double kAreaNoise = 0.5;

std::vector<double> shifted(std::vector<double> w, const std::vector<double>& direction, double amount) {
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::max(0.02, w[i] + amount * direction[i]);
  return w;
}

}  // namespace

FeatureSchema surrogate_schema(std::size_t distractors) {
  std::vector<Feature> f{
      Feature::continuous("wound_length", 0.0, 25.0),
      Feature::continuous("wound_width", 0.0, 20.0),
      Feature::continuous("wound_area", 0.0, 350.0),
      Feature::continuous("fibrin_percent", 0.0, 100.0),
      Feature::categorical("doppler_evidence", {"absent", "present"}, Temporality::static_),
      Feature::categorical("edema", {"none", "mild", "severe"}),
      Feature::categorical("age_group", {"<50", "50-64", "65-79", ">=80"}, Temporality::static_),
      Feature::categorical("diabetes", {"none", "type1", "type2"}, Temporality::static_),
      Feature::categorical("separator", {"1week", "2weeks", ">=3weeks"}),
  };
  for (std::size_t k = 0; k < distractors; ++k)
    f.push_back(Feature::continuous("noise_" + std::to_string(k + 1), 0.0, 1.0));
  return FeatureSchema(std::move(f));
}

Dataset surrogate_generate(const SurrogateConfig& c) {
  if (c.n_patients < 2) throw std::invalid_argument("n_patients must be >= 2");
  if (c.visits < 1) throw std::invalid_argument("visits must be >= 1");
  if (!(c.planted_effect >= 0.0) || !std::isfinite(c.planted_effect))
    throw std::invalid_argument("planted_effect must be a non-negative number");
  if (!(c.healed_fraction > 0.0 && c.healed_fraction < 1.0))
    throw std::invalid_argument("healed_fraction must be in (0, 1)");
  if (!(c.missing_rate >= 0.0 && c.missing_rate < 1.0)) throw std::invalid_argument("missing_rate must be in [0, 1)");

  Dataset d{surrogate_schema(c.distractors), {}, Provenance::surrogate};
  const auto& schema = d.schema;
  const double e = c.planted_effect;
  for (std::size_t i = 0; i < c.n_patients; ++i) {
    Rng rng(derive_seed(c.seed, i));
    const bool healer = rng.bernoulli(c.healed_fraction);
    const double s = healer ? 1.0 : -1.0;

    const double length0 = std::exp(rng.normal(std::log(8.0) - 0.25 * e * s, 0.3));
    const double aspect = rng.uniform(0.5, 0.9);
    const double rate = (healer ? 0.3 * e : 0.0) + rng.normal(0.0, 0.03);
    const double fibrin0 = rng.normal(50.0 - 6.0 * e * s, 12.0);
    const double fibrin_rate = healer ? 4.0 * e : 0.0;

    auto pick = [&](const Feature& f, const std::vector<double>& w) { return f.levels[rng.categorical(w)]; };
    const std::string doppler =
        pick(schema[4], {0.5 - 0.15 * e * s, 0.5 + 0.15 * e * s});
    const std::string age = pick(schema[6], shifted({0.25, 0.25, 0.25, 0.25}, {0.5, 0.5, -0.5, -0.5}, 0.05 * e * s));
    const std::string diabetes = pick(schema[7], shifted({0.6, 0.15, 0.25}, {1.0, 0.0, -1.0}, 0.08 * e * s));

    PatientSeries p;
    char id[32];
    std::snprintf(id, sizeof id, "S%04zu", i + 1);
    p.id = id;
    double week = 0.0;
    for (std::size_t t = 0; t < c.visits; ++t) {
      std::size_t gap = 0;
      if (t > 0) {
        gap = rng.categorical({0.7, 0.2, 0.1});
        week += static_cast<double>(gap + 1);
      }
      const double decay = std::exp(-rate * week);
      const double length = std::clamp(length0 * decay * std::exp(rng.normal(0.0, 0.05)), 0.0, 25.0);
      const double width = std::clamp(length0 * aspect * decay * std::exp(rng.normal(0.0, 0.05)), 0.0, 20.0);
      const double area = std::clamp(length * width * kAreaFactor + rng.normal(0.0, kAreaNoise), 0.0, 350.0);
      const double fibrin = std::clamp(fibrin0 - fibrin_rate * week + rng.normal(0.0, 3.0), 0.0, 100.0);
      const std::string edema = pick(schema[5], shifted({0.4, 0.4, 0.2}, {1.0, 0.0, -1.0}, 0.1 * e * s));
      std::vector<Value> row{length, width, area, fibrin, doppler, edema, age, diabetes, schema[8].levels[gap]};
      for (std::size_t k = 0; k < c.distractors; ++k) row.emplace_back(rng.uniform());
      if (t > 0 && c.missing_rate > 0.0) {
        for (std::size_t j = 0; j < row.size(); ++j) {
          const Feature& f = schema[j];
          if (f.kind == FeatureKind::continuous && f.temporality == Temporality::per_visit &&
              rng.bernoulli(c.missing_rate))
            row[j] = std::monostate{};
        }
      }
      p.visits.push_back(std::move(row));
    }
    p.label = healer ? kHealed : kNotHealed;
    d.series.push_back(std::move(p));
  }
  return d;
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::real: return "real";
    case Provenance::surrogate: return "surrogate";
    case Provenance::synthetic: return "synthetic";
  }
  return "?";
}

}  // namespace tabgan::data
