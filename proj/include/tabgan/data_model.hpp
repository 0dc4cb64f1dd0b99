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

// Schema-driven patient records: ingestion, eligibility, imputation, the
// [-1, 1] matrix encoding shared by every network, splitting, and the seeded
// surrogate simulator.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "tabgan/tensor.hpp"

namespace tabgan::data {

enum class FeatureKind { categorical, continuous };
enum class Temporality { per_visit, static_ };

struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
  std::vector<std::string> levels;  // categorical, ordered
  double min = 0.0, max = 1.0;      // continuous
  Temporality temporality = Temporality::per_visit;

  static Feature categorical(std::string name, std::vector<std::string> levels,
                             Temporality t = Temporality::per_visit);
  static Feature continuous(std::string name, double min, double max, Temporality t = Temporality::per_visit);

  friend bool operator==(const Feature&, const Feature&) = default;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  /// Throws std::invalid_argument when names repeat, a categorical has fewer
  /// than two levels, or a continuous range is empty.
  explicit FeatureSchema(std::vector<Feature> features);

  const std::vector<Feature>& features() const { return features_; }
  std::size_t size() const { return features_.size(); }
  const Feature& operator[](std::size_t j) const { return features_[j]; }
  /// Throws std::out_of_range for an unknown name.
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const;
  /// Schema restricted to `names`, in the given order.
  FeatureSchema subset(const std::vector<std::string>& names) const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<Feature> features_;
};

nlohmann::json to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& j);
FeatureSchema load_schema(const std::string& path);
void save_schema(const FeatureSchema& schema, const std::string& path);

/// A missing value, a real, or a categorical level name.
using Value = std::variant<std::monostate, double, std::string>;
inline bool is_missing(const Value& v) { return std::holds_alternative<std::monostate>(v); }

inline constexpr int kNotHealed = 0;
inline constexpr int kHealed = 1;

struct PatientSeries {
  std::string id;
  std::vector<std::vector<Value>> visits;  // visits[t][j] follows the schema order
  std::optional<int> label;                // kHealed or kNotHealed

  friend bool operator==(const PatientSeries&, const PatientSeries&) = default;
};

enum class Provenance { real, surrogate, synthetic };

struct Dataset {
  FeatureSchema schema;
  std::vector<PatientSeries> series;
  Provenance provenance = Provenance::real;

  std::size_t size() const { return series.size(); }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct EncodedMatrix {
  std::size_t rows = 0;  // visits
  std::size_t cols = 0;  // features
  std::vector<double> values;

  double at(std::size_t t, std::size_t j) const { return values[t * cols + j]; }
  double& at(std::size_t t, std::size_t j) { return values[t * cols + j]; }
};

// --- raw tables ------------------------------------------------------------

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC 4180 CSV with a mandatory header. Throws std::runtime_error on I/O
/// failure and std::invalid_argument on ragged rows.
RawTable read_csv(const std::string& path);
RawTable parse_csv(const std::string& text);

inline constexpr const char* kPatientColumn = "patient_id";
inline constexpr const char* kVisitColumn = "visit_index";
inline constexpr const char* kLabelColumn = "label";
inline constexpr const char* kHealedAtColumn = "healed_at_week";
inline constexpr int kHorizonWeeks = 12;

/// Schema of the feature columns (identifier, visit, and label columns are
/// skipped). Numeric columns become continuous over the observed range;
/// textual columns become categorical with levels in first-appearance order.
/// A feature is static when it never varies within a patient.
FeatureSchema infer_schema(const RawTable& table);

/// Groups rows by patient (first-appearance order) and sorts visits. When the
/// label column is absent, a patient is healed exactly when
/// `healed_at_week` is present and at most the 12-week horizon; patients who
/// left follow-up earlier without healing are therefore not healed.
Dataset dataset_from_table(const RawTable& table, const FeatureSchema& schema);
Dataset load_dataset(const std::string& csv_path, const FeatureSchema& schema);
std::string to_csv(const Dataset& d);
void save_dataset(const Dataset& d, const std::string& path);

// --- transformations -------------------------------------------------------

Dataset filter_eligibility(const Dataset& d, std::size_t min_visits = 3);
/// First `visits` visits of every series. Throws when a series is shorter.
Dataset truncate(const Dataset& d, std::size_t visits);
Dataset select_features(const Dataset& d, const std::vector<std::string>& names);

/// Fills continuous gaps with a least-squares polynomial in the visit index
/// (degree min(2, present - 1)) clamped to the feature range, and categorical
/// gaps with the series' modal level (ties to the lower level index).
Dataset impute(const Dataset& d);

std::size_t visit_count(const Dataset& d);  // common T; throws if ragged

EncodedMatrix encode(const PatientSeries& s, const FeatureSchema& schema);
/// Static features decode from the mean over visits so the result is
/// constant across visits.
PatientSeries decode(const EncodedMatrix& m, const FeatureSchema& schema);

/// [N, T, n] tensor of every encoded series.
Tensor encode_dataset(const Dataset& d);
/// First-visit encoded rows as an [N, n] tensor.
Tensor first_visit_rows(const Dataset& d);
/// Labels as 0/1; throws when a series is unlabeled.
std::vector<int> labels(const Dataset& d);

struct Split {
  Dataset train;
  Dataset test;
};
/// Seeded shuffle; floor(fraction * N) series go to train. Both parts keep
/// the original series order.
Split split(const Dataset& d, double train_fraction, std::uint64_t seed);

// --- surrogate -------------------------------------------------------------

struct SurrogateConfig {
  std::size_t n_patients = 60;
  std::size_t visits = 3;
  double planted_effect = 1.0;
  std::size_t distractors = 2;
  double healed_fraction = 0.5;
  double missing_rate = 0.0;  // per continuous per-visit cell, never on visit 1
  std::uint64_t seed = 0;
};

/// Wound-care schema: wound length, width, and area, fibrin percentage,
/// Doppler evidence, edema, age group, diabetes, the visit separator, and
/// `distractors` uniform noise features.
FeatureSchema surrogate_schema(std::size_t distractors);

/// Each patient belongs to a latent healing class. Healers' wound size decays
/// geometrically per visit at a rate proportional to `planted_effect` and
/// starts smaller; others stay flat with noise, so the 12-week extrapolation
/// of the area trajectory separates the classes. Categorical features shift
/// with the class by the same effect strength. With zero effect every feature
/// is independent of the label.
Dataset surrogate_generate(const SurrogateConfig& config);

const char* provenance_name(Provenance p);

}  // namespace tabgan::data
