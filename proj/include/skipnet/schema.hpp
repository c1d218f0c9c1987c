#pragma once

// Playback feature schema: ordered categorical fields (one-hot) followed by
// ordered numeric fields.

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "skipnet/util.hpp"

namespace skipnet {

using Json = nlohmann::ordered_json;

// Categorical values are compared by text so that "true", true and "1"/1
// spellings in a schema and a session file line up the same way.
inline std::string category_text(const Json& value) {
  if (value.is_string()) return value.get<std::string>();
  return value.dump();
}

class FeatureSchema {
 public:
  struct Categorical {
    std::string field;
    std::vector<std::string> vocab;
  };

  FeatureSchema() = default;
  FeatureSchema(std::vector<Categorical> categorical, std::vector<std::string> numeric)
      : categorical_(std::move(categorical)), numeric_(std::move(numeric)) {
    for (const auto& c : categorical_) {
      if (c.vocab.empty()) throw ValidationError("categorical field '" + c.field + "' has no values");
      std::map<std::string, std::size_t> seen;
      for (std::size_t k = 0; k < c.vocab.size(); ++k) {
        if (!seen.emplace(c.vocab[k], k).second) {
          throw ValidationError("field '" + c.field + "' lists '" + c.vocab[k] + "' twice");
        }
      }
      lookup_.push_back(std::move(seen));
    }
  }

  const std::vector<Categorical>& categorical() const { return categorical_; }
  const std::vector<std::string>& numeric() const { return numeric_; }

  std::size_t width() const {
    std::size_t w = numeric_.size();
    for (const auto& c : categorical_) w += c.vocab.size();
    return w;
  }

  static FeatureSchema from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("schema must be a JSON object");
    std::vector<Categorical> cats;
    if (j.contains("categorical")) {
      const Json& c = j.at("categorical");
      if (!c.is_object()) throw ValidationError("schema 'categorical' must be an object");
      for (const auto& [field, vocab] : c.items()) {
        if (!vocab.is_array()) throw ValidationError("vocabulary of '" + field + "' must be an array");
        Categorical cat{field, {}};
        for (const Json& v : vocab) cat.vocab.push_back(category_text(v));
        cats.push_back(std::move(cat));
      }
    }
    std::vector<std::string> nums;
    if (j.contains("numeric")) {
      const Json& n = j.at("numeric");
      if (!n.is_array()) throw ValidationError("schema 'numeric' must be an array");
      for (const Json& f : n) {
        if (!f.is_string()) throw ValidationError("numeric field names must be strings");
        nums.push_back(f.get<std::string>());
      }
    }
    return FeatureSchema(std::move(cats), std::move(nums));
  }

  Json to_json() const {
    Json cats = Json::object();
    for (const auto& c : categorical_) cats[c.field] = c.vocab;
    return Json{{"categorical", cats}, {"numeric", numeric_}};
  }

  std::uint64_t fingerprint() const { return fnv1a(to_json().dump()); }

  // One-hot blocks in schema order, then the numeric fields in schema order.
  std::vector<double> encode(const Json& playback) const {
    std::vector<double> out(width(), 0.0);
    std::size_t offset = 0;
    for (std::size_t f = 0; f < categorical_.size(); ++f) {
      const auto& cat = categorical_[f];
      const Json* value = field(playback, cat.field);
      const std::string text = category_text(*value);
      auto it = lookup_[f].find(text);
      if (it == lookup_[f].end()) {
        throw ValidationError("field '" + cat.field + "' has value '" + text +
                              "' outside its vocabulary");
      }
      out[offset + it->second] = 1.0;
      offset += cat.vocab.size();
    }
    for (const auto& name : numeric_) {
      const Json* value = field(playback, name);
      double v;
      if (value->is_boolean()) {
        v = value->get<bool>() ? 1.0 : 0.0;
      } else if (value->is_number()) {
        v = value->get<double>();
      } else {
        throw ValidationError("numeric field '" + name + "' holds " + value->dump());
      }
      if (!std::isfinite(v)) throw ValidationError("numeric field '" + name + "' is not finite");
      out[offset++] = v;
    }
    return out;
  }

  // Inverse of encode: categoricals come back as text, numerics as numbers.
  Json decode(std::span<const double> encoded) const {
    if (encoded.size() != width()) {
      throw DimensionError("decode: " + std::to_string(encoded.size()) + " values for width " +
                           std::to_string(width()));
    }
    Json out = Json::object();
    std::size_t offset = 0;
    for (const auto& cat : categorical_) {
      std::size_t hot = cat.vocab.size();
      for (std::size_t k = 0; k < cat.vocab.size(); ++k) {
        if (encoded[offset + k] == 1.0) {
          if (hot != cat.vocab.size()) throw ValidationError("'" + cat.field + "' has two hot slots");
          hot = k;
        }
      }
      if (hot == cat.vocab.size()) throw ValidationError("'" + cat.field + "' has no hot slot");
      out[cat.field] = cat.vocab[hot];
      offset += cat.vocab.size();
    }
    for (const auto& name : numeric_) out[name] = encoded[offset++];
    return out;
  }

 private:
  static const Json* field(const Json& playback, const std::string& name) {
    if (!playback.is_object() || !playback.contains(name)) {
      throw ValidationError("playback is missing field '" + name + "'");
    }
    return &playback.at(name);
  }

  std::vector<Categorical> categorical_;
  std::vector<std::string> numeric_;
  std::vector<std::map<std::string, std::size_t>> lookup_;
};

inline std::vector<double> encode_playback(const Json& playback, const FeatureSchema& schema) {
  return schema.encode(playback);
}

inline FeatureSchema load_schema(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, 1, e.what());
  }
  return FeatureSchema::from_json(j);
}

inline void save_schema(const std::string& path, const FeatureSchema& schema) {
  auto out = open_output(path);
  out << schema.to_json().dump(2) << '\n';
}

}  // namespace skipnet
