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

// Workload manifests (JSON, attributes referenced by name, category values by
// label), the query SPEC mini-grammar used on the command line, and FNV-1a
// digests for run manifests.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gsdsynth/dataset.hpp"
#include "gsdsynth/errors.hpp"
#include "gsdsynth/queries.hpp"
#include "gsdsynth/rng.hpp"

namespace gsdsynth::io {

using data::DomainSchema;
using nlohmann::json;
using query::Workload;

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex_digest(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

inline const char* class_name(query::WorkloadClass k) {
  switch (k) {
    case query::WorkloadClass::kCategoricalMarginal: return "categorical-marginal";
    case query::WorkloadClass::kBinaryTree: return "binary-tree";
    case query::WorkloadClass::kPrefix: return "prefix";
    case query::WorkloadClass::kHalfspace: return "halfspace";
    case query::WorkloadClass::kCustom: return "custom";
  }
  return "custom";
}

namespace detail {

inline json names(const DomainSchema& s, const std::vector<std::size_t>& attrs) {
  json out = json::array();
  for (std::size_t a : attrs) out.push_back(s[a].name);
  return out;
}

inline json labels(const DomainSchema& s, const std::vector<std::size_t>& attrs,
                   const std::vector<std::size_t>& values) {
  json out = json::array();
  for (std::size_t i = 0; i < attrs.size(); ++i) out.push_back(s[attrs[i]].categories[values[i]]);
  return out;
}

inline json query_to_json(const query::Query& q, const DomainSchema& s) {
  return std::visit(
      [&](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, query::CategoricalMarginal>) {
          return {{"type", "categorical-marginal"},
                  {"features", names(s, v.features)},
                  {"values", labels(s, v.features, v.values)}};
        } else if constexpr (std::is_same_v<T, query::RangeMarginal>) {
          json intervals = json::array();
          for (const auto& iv : v.intervals) intervals.push_back({{"lo", iv.lo}, {"hi", iv.hi}, {"hi_closed", iv.hi_closed}});
          return {{"type", "range-marginal"},
                  {"cat_features", names(s, v.cat_features)},
                  {"cat_values", labels(s, v.cat_features, v.cat_values)},
                  {"num_features", names(s, v.num_features)},
                  {"intervals", intervals}};
        } else if constexpr (std::is_same_v<T, query::Prefix>) {
          return {{"type", "prefix"},
                  {"cat_features", names(s, v.cat_features)},
                  {"cat_values", labels(s, v.cat_features, v.cat_values)},
                  {"num_features", names(s, v.num_features)},
                  {"thresholds", v.thresholds},
                  {"strict", v.strict}};
        } else {
          return {{"type", "halfspace"}, {"theta", v.theta}, {"tau", v.tau}};
        }
      },
      q);
}

// Reads fields from a JSON object and reports failures with their path.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const { throw ManifestError(path_ + ": " + what); }

  const json& field(const std::string& key) const {
    auto it = node_.find(key);
    if (it == node_.end()) throw ManifestError(path_ + "." + key + ": missing");
    return *it;
  }
  std::string at(const std::string& key) const { return path_ + "." + key; }

  std::string string(const std::string& key) const {
    const json& f = field(key);
    if (!f.is_string()) throw ManifestError(at(key) + ": expected a string");
    return f.get<std::string>();
  }
  double number(const std::string& key) const {
    const json& f = field(key);
    if (!f.is_number()) throw ManifestError(at(key) + ": expected a number");
    return f.get<double>();
  }
  bool boolean(const std::string& key) const {
    const json& f = field(key);
    if (!f.is_boolean()) throw ManifestError(at(key) + ": expected a boolean");
    return f.get<bool>();
  }
  const json& array(const std::string& key) const {
    const json& f = field(key);
    if (!f.is_array()) throw ManifestError(at(key) + ": expected an array");
    return f;
  }
  std::vector<double> numbers(const std::string& key) const {
    const json& f = array(key);
    std::vector<double> out;
    out.reserve(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!f[i].is_number()) throw ManifestError(at(key) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(f[i].get<double>());
    }
    return out;
  }
  std::vector<std::size_t> attributes(const std::string& key, const DomainSchema& s) const {
    const json& f = array(key);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const std::string where = at(key) + "[" + std::to_string(i) + "]";
      if (!f[i].is_string()) throw ManifestError(where + ": expected an attribute name");
      auto idx = s.find(f[i].get<std::string>());
      if (!idx) throw ManifestError(where + ": unknown attribute '" + f[i].get<std::string>() + "'");
      out.push_back(*idx);
    }
    return out;
  }
  std::vector<std::size_t> values(const std::string& key, const DomainSchema& s,
                                  const std::vector<std::size_t>& attrs) const {
    const json& f = array(key);
    if (f.size() != attrs.size()) throw ManifestError(at(key) + ": length differs from its features");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const std::string where = at(key) + "[" + std::to_string(i) + "]";
      if (!f[i].is_string()) throw ManifestError(where + ": expected a category label");
      const auto& cats = s[attrs[i]].categories;
      const auto label = f[i].get<std::string>();
      auto it = std::find(cats.begin(), cats.end(), label);
      if (it == cats.end()) throw ManifestError(where + ": unknown category '" + label + "'");
      out.push_back(static_cast<std::size_t>(it - cats.begin()));
    }
    return out;
  }

 private:
  const json& node_;
  std::string path_;
};

inline query::Query query_from_json(const json& node, const DomainSchema& s, const std::string& path) {
  const Reader r(node, path);
  const std::string type = r.string("type");
  if (type == "categorical-marginal") {
    query::CategoricalMarginal q;
    q.features = r.attributes("features", s);
    q.values = r.values("values", s, q.features);
    return q;
  }
  if (type == "range-marginal") {
    query::RangeMarginal q;
    q.cat_features = r.attributes("cat_features", s);
    q.cat_values = r.values("cat_values", s, q.cat_features);
    q.num_features = r.attributes("num_features", s);
    const json& ivs = r.array("intervals");
    for (std::size_t i = 0; i < ivs.size(); ++i) {
      const Reader ir(ivs[i], r.at("intervals") + "[" + std::to_string(i) + "]");
      q.intervals.push_back({ir.number("lo"), ir.number("hi"), ir.boolean("hi_closed")});
    }
    return q;
  }
  if (type == "prefix") {
    query::Prefix q;
    q.cat_features = r.attributes("cat_features", s);
    q.cat_values = r.values("cat_values", s, q.cat_features);
    q.num_features = r.attributes("num_features", s);
    q.thresholds = r.numbers("thresholds");
    q.strict = r.boolean("strict");
    return q;
  }
  if (type == "halfspace") {
    return query::Halfspace{r.numbers("theta"), r.number("tau")};
  }
  throw ManifestError(r.at("type") + ": unknown query type '" + type + "'");
}

inline query::WorkloadClass class_from_string(const std::string& name, const std::string& path) {
  for (auto k : {query::WorkloadClass::kCategoricalMarginal, query::WorkloadClass::kBinaryTree,
                 query::WorkloadClass::kPrefix, query::WorkloadClass::kHalfspace, query::WorkloadClass::kCustom}) {
    if (name == class_name(k)) return k;
  }
  throw ManifestError(path + ": unknown workload class '" + name + "'");
}

}  // namespace detail

inline json workloads_to_json(std::span<const Workload> workloads, const DomainSchema& schema) {
  json list = json::array();
  for (const auto& w : workloads) {
    json queries = json::array();
    for (const auto& q : w.queries) queries.push_back(detail::query_to_json(q, schema));
    list.push_back({{"name", w.name},
                    {"class", class_name(w.klass)},
                    {"l2_sensitivity", w.l2_sensitivity},
                    {"queries", std::move(queries)}});
  }
  return {{"workloads", std::move(list)}};
}

// Parses and validates against `schema`. Errors name the offending field,
// e.g. "workloads[3].queries[2].theta: expected an array".
inline std::vector<Workload> workloads_from_json(const json& doc, const DomainSchema& schema) {
  if (!doc.is_object()) throw ManifestError("manifest: expected an object");
  auto it = doc.find("workloads");
  if (it == doc.end() || !it->is_array()) throw ManifestError("workloads: missing or not an array");
  std::vector<Workload> out;
  for (std::size_t w = 0; w < it->size(); ++w) {
    const std::string path = "workloads[" + std::to_string(w) + "]";
    const detail::Reader r((*it)[w], path);
    Workload wl;
    wl.name = r.string("name");
    wl.klass = detail::class_from_string(r.string("class"), r.at("class"));
    wl.l2_sensitivity = r.number("l2_sensitivity");
    const json& qs = r.array("queries");
    for (std::size_t i = 0; i < qs.size(); ++i) {
      const std::string qpath = path + ".queries[" + std::to_string(i) + "]";
      wl.queries.push_back(detail::query_from_json(qs[i], schema, qpath));
      try {
        query::validate(wl.queries.back(), schema);
      } catch (const std::exception& e) {
        throw ManifestError(qpath + ": " + e.what());
      }
    }
    out.push_back(std::move(wl));
  }
  return out;
}

inline void save_workloads(std::span<const Workload> workloads, const DomainSchema& schema, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write workload manifest '" + path + "'");
  f << workloads_to_json(workloads, schema).dump() << '\n';
  if (!f) throw IoError("failed writing workload manifest '" + path + "'");
}

inline std::vector<Workload> load_workloads(const std::string& path, const DomainSchema& schema) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open workload manifest '" + path + "'");
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ManifestError("workload manifest '" + path + "': " + e.what());
  }
  return workloads_from_json(doc, schema);
}

inline std::string workloads_digest(std::span<const Workload> workloads, const DomainSchema& schema) {
  return hex_digest(workloads_to_json(workloads, schema).dump());
}

inline std::string schema_digest(const DomainSchema& schema) { return hex_digest(data::schema_to_json(schema).dump()); }

// A parsed query SPEC such as "binary-tree:k=2,levels=5".
struct QuerySpec {
  std::string family;
  std::map<std::string, std::size_t> params;
};

inline QuerySpec parse_query_spec(const std::string& text) {
  QuerySpec spec;
  const auto colon = text.find(':');
  spec.family = text.substr(0, colon);
  const std::map<std::string, std::vector<std::string>> allowed{{"cat-marginals", {"k"}},
                                                                {"binary-tree", {"k", "levels"}},
                                                                {"prefixes", {"m"}},
                                                                {"halfspaces", {"m"}}};
  auto fam = allowed.find(spec.family);
  if (fam == allowed.end()) throw ParameterError("query spec '" + text + "': unknown family '" + spec.family + "'");
  if (colon != std::string::npos) {
    std::string rest = text.substr(colon + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto comma = std::min(rest.find(',', pos), rest.size());
      const std::string item = rest.substr(pos, comma - pos);
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ParameterError("query spec '" + text + "': expected key=value, got '" + item + "'");
      const std::string key = item.substr(0, eq);
      const std::string value = item.substr(eq + 1);
      if (std::find(fam->second.begin(), fam->second.end(), key) == fam->second.end()) {
        throw ParameterError("query spec '" + text + "': unknown parameter '" + key + "'");
      }
      std::size_t used = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != value.size() || value.empty() || value[0] == '-') {
        throw ParameterError("query spec '" + text + "': '" + key + "' must be a non-negative integer");
      }
      spec.params[key] = static_cast<std::size_t>(v);
      pos = comma + 1;
    }
  }
  return spec;
}

// Random families draw from derive_seed(seed, {tag}), so the same seed always
// yields the same workload list.
inline std::vector<Workload> build_workloads(const QuerySpec& spec, const DomainSchema& schema, std::uint64_t seed) {
  auto need = [&](const char* key) {
    auto it = spec.params.find(key);
    if (it == spec.params.end()) throw ParameterError("query spec '" + spec.family + "': missing '" + key + "'");
    return it->second;
  };
  constexpr std::uint64_t kWorkloadStream = 0x776f726b;
  Rng rng(derive_seed(seed, {kWorkloadStream}));
  if (spec.family == "cat-marginals") return query::gen_categorical_marginal_workloads(schema, need("k"));
  if (spec.family == "binary-tree") {
    auto it = spec.params.find("levels");
    return query::gen_binary_tree_workloads(schema, need("k"), it == spec.params.end() ? 5 : it->second);
  }
  if (spec.family == "prefixes") return {query::gen_random_prefixes(schema, need("m"), rng)};
  return {query::gen_random_halfspaces(schema, need("m"), rng)};
}

inline std::vector<Workload> build_workloads(const std::string& spec, const DomainSchema& schema, std::uint64_t seed) {
  return build_workloads(parse_query_spec(spec), schema, seed);
}

}  // namespace gsdsynth::io
