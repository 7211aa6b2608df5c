//
// Copyright 2026 The gsdsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

// Domain schema, columnar dataset container, CSV ingestion/serialization and
// the one-hot map used by halfspace queries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gsdsynth/errors.hpp"
#include "gsdsynth/rng.hpp"

namespace gsdsynth::data {

enum class AttributeKind { kCategorical, kNumeric };

struct NumericRange {
  double min = 0.0;
  double max = 1.0;
  bool operator==(const NumericRange&) const = default;
};

struct Attribute {
  std::string name;
  AttributeKind kind = AttributeKind::kCategorical;
  // Category labels; the category index is the position in this list.
  std::vector<std::string> categories;
  // Declared range for numeric columns. When present, normalization uses it
  // instead of the observed column extremes.
  std::optional<NumericRange> range;

  bool is_categorical() const { return kind == AttributeKind::kCategorical; }
  std::size_t cardinality() const { return categories.size(); }

  bool operator==(const Attribute&) const = default;

  static Attribute categorical(std::string name, std::vector<std::string> categories) {
    return {std::move(name), AttributeKind::kCategorical, std::move(categories), std::nullopt};
  }
  // Categorical attribute with labels "0", "1", ..., "k-1".
  static Attribute categorical(std::string name, std::size_t cardinality) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < cardinality; ++i) labels.push_back(std::to_string(i));
    return categorical(std::move(name), std::move(labels));
  }
  static Attribute numeric(std::string name, std::optional<NumericRange> range = std::nullopt) {
    return {std::move(name), AttributeKind::kNumeric, {}, range};
  }
};

class DomainSchema {
 public:
  DomainSchema() = default;

  explicit DomainSchema(std::vector<Attribute> attributes) : attributes_(std::move(attributes)) {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
      const Attribute& a = attributes_[i];
      if (a.name.empty()) throw ParameterError("DomainSchema: attribute " + std::to_string(i) + " has no name");
      for (std::size_t j = 0; j < i; ++j) {
        if (attributes_[j].name == a.name) {
          throw ParameterError("DomainSchema: duplicate attribute name '" + a.name + "'");
        }
      }
      if (a.is_categorical()) {
        if (a.cardinality() < 2) {
          throw ParameterError("DomainSchema: categorical attribute '" + a.name +
                               "' needs at least 2 categories");
        }
        categorical_.push_back(i);
      } else {
        if (a.range && !(a.range->max >= a.range->min)) {
          throw ParameterError("DomainSchema: numeric attribute '" + a.name + "' has max < min");
        }
        numeric_.push_back(i);
      }
      one_hot_offsets_.push_back(offset);
      offset += a.is_categorical() ? a.cardinality() : 1;
    }
    one_hot_dim_ = offset;
  }

  std::size_t size() const { return attributes_.size(); }
  const Attribute& operator[](std::size_t i) const { return attributes_[i]; }
  const std::vector<Attribute>& attributes() const { return attributes_; }
  const std::vector<std::size_t>& categorical_indices() const { return categorical_; }
  const std::vector<std::size_t>& numeric_indices() const { return numeric_; }

  std::size_t one_hot_dim() const { return one_hot_dim_; }
  std::size_t one_hot_offset(std::size_t attribute) const { return one_hot_offsets_[attribute]; }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
      if (attributes_[i].name == name) return i;
    }
    return std::nullopt;
  }

  // True if value is inside the domain of the attribute.
  bool contains(std::size_t attribute, double value) const {
    const Attribute& a = attributes_[attribute];
    if (a.is_categorical()) {
      return value >= 0.0 && value < static_cast<double>(a.cardinality()) &&
             value == std::floor(value);
    }
    return value >= 0.0 && value <= 1.0;
  }

  // Uniform draw from the attribute's domain.
  double sample_value(std::size_t attribute, Rng& rng) const {
    const Attribute& a = attributes_[attribute];
    if (a.is_categorical()) return static_cast<double>(rng.below(a.cardinality()));
    return rng.uniform();
  }

  bool operator==(const DomainSchema& other) const { return attributes_ == other.attributes_; }

 private:
  std::vector<Attribute> attributes_;
  std::vector<std::size_t> categorical_;
  std::vector<std::size_t> numeric_;
  std::vector<std::size_t> one_hot_offsets_;
  std::size_t one_hot_dim_ = 0;
};

using SchemaPtr = std::shared_ptr<const DomainSchema>;

inline SchemaPtr make_schema(std::vector<Attribute> attributes) {
  return std::make_shared<const DomainSchema>(std::move(attributes));
}

// Schema document:
//   {"attributes": [
//      {"name": "sex", "kind": "categorical", "categories": ["F", "M"]},
//      {"name": "income", "kind": "numeric", "min": 0, "max": 250000}]}
inline nlohmann::json schema_to_json(const DomainSchema& schema) {
  nlohmann::json attrs = nlohmann::json::array();
  for (const Attribute& a : schema.attributes()) {
    nlohmann::json j{{"name", a.name}};
    if (a.is_categorical()) {
      j["kind"] = "categorical";
      j["categories"] = a.categories;
    } else {
      j["kind"] = "numeric";
      if (a.range) {
        j["min"] = a.range->min;
        j["max"] = a.range->max;
      }
    }
    attrs.push_back(std::move(j));
  }
  return nlohmann::json{{"attributes", std::move(attrs)}};
}

inline SchemaPtr schema_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("attributes") || !doc["attributes"].is_array()) {
    throw ManifestError("schema: 'attributes' must be an array");
  }
  std::vector<Attribute> attrs;
  const auto& list = doc["attributes"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& j = list[i];
    const std::string where = "schema: attributes[" + std::to_string(i) + "]";
    if (!j.is_object()) throw ManifestError(where + ": expected an object");
    if (!j.contains("name") || !j["name"].is_string()) throw ManifestError(where + ".name: expected a string");
    if (!j.contains("kind") || !j["kind"].is_string()) throw ManifestError(where + ".kind: expected a string");
    const std::string name = j["name"].get<std::string>();
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "categorical") {
      if (!j.contains("categories") || !j["categories"].is_array()) {
        throw ManifestError(where + ".categories: expected an array");
      }
      std::vector<std::string> cats;
      for (const auto& c : j["categories"]) {
        if (c.is_string()) {
          cats.push_back(c.get<std::string>());
        } else if (c.is_number_integer()) {
          cats.push_back(std::to_string(c.get<long long>()));
        } else {
          throw ManifestError(where + ".categories: labels must be strings or integers");
        }
      }
      attrs.push_back(Attribute::categorical(name, std::move(cats)));
    } else if (kind == "numeric") {
      std::optional<NumericRange> range;
      const bool has_min = j.contains("min");
      const bool has_max = j.contains("max");
      if (has_min != has_max) throw ManifestError(where + ": 'min' and 'max' must be given together");
      if (has_min) {
        if (!j["min"].is_number() || !j["max"].is_number()) {
          throw ManifestError(where + ".min/max: expected numbers");
        }
        range = NumericRange{j["min"].get<double>(), j["max"].get<double>()};
      }
      attrs.push_back(Attribute::numeric(name, range));
    } else {
      throw ManifestError(where + ".kind: expected 'categorical' or 'numeric', got '" + kind + "'");
    }
  }
  try {
    return make_schema(std::move(attrs));
  } catch (const ParameterError& e) {
    throw ManifestError(std::string("schema: ") + e.what());
  }
}

inline SchemaPtr load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError("schema '" + path + "': " + e.what());
  }
  return schema_from_json(doc);
}

// N rows over a schema, stored column by column. Categorical cells hold the
// category index as an integral double.
class Dataset {
 public:
  Dataset() = default;

  Dataset(SchemaPtr schema, std::size_t rows)
      : schema_(std::move(schema)), rows_(rows), columns_(schema_->size(), std::vector<double>(rows, 0.0)) {}

  Dataset(SchemaPtr schema, std::vector<std::vector<double>> columns)
      : schema_(std::move(schema)), columns_(std::move(columns)) {
    if (columns_.size() != schema_->size()) {
      throw ParameterError("Dataset: column count does not match schema");
    }
    rows_ = columns_.empty() ? 0 : columns_[0].size();
    for (const auto& c : columns_) {
      if (c.size() != rows_) throw ParameterError("Dataset: ragged columns");
    }
  }

  // Builds from row-major cells; convenient in tests.
  static Dataset from_rows(SchemaPtr schema, const std::vector<std::vector<double>>& rows) {
    Dataset d(schema, rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != schema->size()) throw ParameterError("Dataset: row width does not match schema");
      for (std::size_t c = 0; c < rows[r].size(); ++c) d.columns_[c][r] = rows[r][c];
    }
    return d;
  }

  // Rows drawn uniformly from the domain.
  static Dataset random(SchemaPtr schema, std::size_t rows, Rng& rng) {
    Dataset d(schema, rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < schema->size(); ++c) d.columns_[c][r] = schema->sample_value(c, rng);
    }
    return d;
  }

  const DomainSchema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return columns_.size(); }

  double at(std::size_t row, std::size_t col) const { return columns_[col][row]; }
  void set(std::size_t row, std::size_t col, double value) { columns_[col][row] = value; }
  std::span<const double> column(std::size_t col) const { return columns_[col]; }

  std::vector<double> row(std::size_t r) const {
    std::vector<double> out(columns_.size());
    for (std::size_t c = 0; c < columns_.size(); ++c) out[c] = columns_[c][r];
    return out;
  }

  void row_into(std::size_t r, std::span<double> out) const {
    for (std::size_t c = 0; c < columns_.size(); ++c) out[c] = columns_[c][r];
  }

  // Throws ParameterError naming the first out-of-domain cell.
  void validate() const {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      for (std::size_t r = 0; r < rows_; ++r) {
        if (!schema_->contains(c, columns_[c][r])) {
          throw ParameterError("Dataset: cell (row " + std::to_string(r) + ", column '" +
                               (*schema_)[c].name + "') = " + std::to_string(columns_[c][r]) +
                               " is outside the attribute domain");
        }
      }
    }
  }

  bool operator==(const Dataset& other) const {
    return *schema_ == *other.schema_ && columns_ == other.columns_;
  }

 private:
  SchemaPtr schema_;
  std::size_t rows_ = 0;
  std::vector<std::vector<double>> columns_;
};

// One-hot encoding: a block of cardinality indicators per categorical
// attribute, the raw value for each numeric attribute.
inline std::vector<double> one_hot(std::span<const double> row, const DomainSchema& schema) {
  std::vector<double> out(schema.one_hot_dim(), 0.0);
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const std::size_t off = schema.one_hot_offset(c);
    if (schema[c].is_categorical()) {
      out[off + static_cast<std::size_t>(row[c])] = 1.0;
    } else {
      out[off] = row[c];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

// Per-column affine map applied at load; unset for categorical columns.
using NormalizationParams = std::vector<std::optional<NumericRange>>;

struct LoadedData {
  Dataset data;
  NormalizationParams params;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace detail

// Values mapped outside [0, 1] by at most this much are clamped on load.
inline constexpr double kNormalizationSlack = 1e-6;

// Reads a headered CSV. Numeric columns are normalized to [0, 1] when
// `normalize` is set: with the schema's declared range if present, otherwise
// with the observed min/max (constant columns map to 0). `fixed` overrides
// both, so a synthetic file can be read back with the original's parameters.
// Without normalization numeric cells must already lie in [0, 1].
inline LoadedData load_csv(const std::string& path, SchemaPtr schema, bool normalize,
                           const NormalizationParams* fixed = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IngestionError(path + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = detail::split_csv_line(line);
  std::vector<std::size_t> source_col(schema->size());
  for (std::size_t a = 0; a < schema->size(); ++a) {
    bool found = false;
    for (std::size_t h = 0; h < header.size(); ++h) {
      if (detail::trim(header[h]) == (*schema)[a].name) {
        source_col[a] = h;
        found = true;
        break;
      }
    }
    if (!found) throw IngestionError(path + ": missing column '" + (*schema)[a].name + "'");
  }

  std::vector<std::vector<double>> raw(schema->size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto fields = detail::split_csv_line(line);
    for (std::size_t a = 0; a < schema->size(); ++a) {
      const Attribute& attr = (*schema)[a];
      const std::string where = path + ": row " + std::to_string(row) + ", column '" + attr.name + "'";
      if (source_col[a] >= fields.size()) throw IngestionError(where + ": missing field");
      const std::string cell = detail::trim(fields[source_col[a]]);
      if (attr.is_categorical()) {
        std::size_t idx = attr.cardinality();
        for (std::size_t k = 0; k < attr.cardinality(); ++k) {
          if (attr.categories[k] == cell) {
            idx = k;
            break;
          }
        }
        if (idx == attr.cardinality()) throw IngestionError(where + ": unknown category '" + cell + "'");
        raw[a].push_back(static_cast<double>(idx));
      } else {
        double v = 0.0;
        std::size_t used = 0;
        try {
          v = std::stod(cell, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (cell.empty() || used != cell.size() || !std::isfinite(v)) {
          throw IngestionError(where + ": non-numeric value '" + cell + "'");
        }
        raw[a].push_back(v);
      }
    }
  }

  NormalizationParams params(schema->size());
  for (std::size_t a = 0; a < schema->size(); ++a) {
    const Attribute& attr = (*schema)[a];
    if (attr.is_categorical()) continue;
    auto& col = raw[a];
    if (fixed != nullptr && a < fixed->size() && (*fixed)[a]) {
      params[a] = (*fixed)[a];
    } else if (normalize) {
      if (attr.range) {
        params[a] = attr.range;
      } else if (!col.empty()) {
        NumericRange r{col[0], col[0]};
        for (double v : col) {
          r.min = std::min(r.min, v);
          r.max = std::max(r.max, v);
        }
        params[a] = r;
      }
    }
    for (std::size_t r = 0; r < col.size(); ++r) {
      double v = col[r];
      if (params[a]) {
        const double width = params[a]->max - params[a]->min;
        v = width > 0.0 ? (v - params[a]->min) / width : 0.0;
        if (v < 0.0 && v >= -kNormalizationSlack) v = 0.0;
        if (v > 1.0 && v <= 1.0 + kNormalizationSlack) v = 1.0;
      }
      if (!(v >= 0.0 && v <= 1.0)) {
        throw IngestionError(path + ": row " + std::to_string(r + 1) + ", column '" + attr.name +
                             "': value outside [0, 1] after normalization");
      }
      col[r] = v;
    }
  }
  return {Dataset(std::move(schema), std::move(raw)), std::move(params)};
}

// Writes a headered CSV; numeric cells use 9 significant digits, mapped back
// through `params` when given.
inline void save_csv(const Dataset& data, const std::string& path,
                     const NormalizationParams* params = nullptr) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const DomainSchema& schema = data.schema();
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (c) out << ',';
    out << detail::csv_escape(schema[c].name);
  }
  out << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (c) out << ',';
      const double v = data.at(r, c);
      if (schema[c].is_categorical()) {
        out << detail::csv_escape(schema[c].categories.at(static_cast<std::size_t>(v)));
      } else if (params != nullptr && c < params->size() && (*params)[c]) {
        const NumericRange& range = *(*params)[c];
        out << detail::format_number(range.min + v * (range.max - range.min));
      } else {
        out << detail::format_number(v);
      }
    }
    out << '\n';
  }
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace gsdsynth::data
