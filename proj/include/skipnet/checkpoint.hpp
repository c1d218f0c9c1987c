#pragma once

// Binary checkpoint:
//   "SKPM" | u32 version | u64 header length | JSON header | f64 payload
// All integers and floats little-endian. The header's tensor directory gives
// name, dtype, shape and byte offset (from the payload start) of every array.

#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "skipnet/adam.hpp"
#include "skipnet/catalog.hpp"
#include "skipnet/model.hpp"

namespace skipnet {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr char kCheckpointMagic[4] = {'S', 'K', 'P', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  Standardization stats;
  std::uint64_t schema_fingerprint = 0;
  std::uint64_t catalog_fingerprint = 0;
  ParamStore params;
  std::optional<AdamState> optimizer;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
};

inline Json model_config_to_json(const ModelConfig& c) {
  return Json{{"learned_embedding", c.learned_embedding},
              {"track_embedding", c.track_embedding},
              {"session_lstm", c.session_lstm},
              {"stacked_lstm", c.stacked_lstm},
              {"head_hidden", c.head_hidden},
              {"paper_padding", c.paper_padding},
              {"num_tracks", c.num_tracks},
              {"track_features", c.track_features},
              {"playback_width", c.playback_width}};
}

inline ModelConfig model_config_from_json(const Json& j) {
  ModelConfig c;
  c.learned_embedding = j.at("learned_embedding").get<std::size_t>();
  c.track_embedding = j.at("track_embedding").get<std::size_t>();
  c.session_lstm = j.at("session_lstm").get<std::size_t>();
  c.stacked_lstm = j.at("stacked_lstm").get<std::size_t>();
  c.head_hidden = j.at("head_hidden").get<std::size_t>();
  c.paper_padding = j.at("paper_padding").get<bool>();
  c.num_tracks = j.at("num_tracks").get<std::size_t>();
  c.track_features = j.at("track_features").get<std::size_t>();
  c.playback_width = j.at("playback_width").get<std::size_t>();
  return c;
}

namespace detail {

struct DirectoryEntry {
  std::string name;
  Shape shape;
  std::span<const double> values;
};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t offset) {
  T v;
  std::memcpy(&v, in.data() + offset, sizeof(T));
  return v;
}

}  // namespace detail

inline std::string checkpoint_bytes(const Checkpoint& ck) {
  std::vector<detail::DirectoryEntry> entries;
  for (const auto& [name, t] : ck.params) entries.push_back({"param/" + name, t.shape(), t.data()});
  entries.push_back({"stats/mean", {ck.stats.mean.size()}, ck.stats.mean});
  entries.push_back({"stats/stddev", {ck.stats.stddev.size()}, ck.stats.stddev});
  Json optimizer = nullptr;
  if (ck.optimizer) {
    const AdamState& a = *ck.optimizer;
    optimizer = Json{{"beta1", a.beta1}, {"beta2", a.beta2}, {"epsilon", a.epsilon}, {"step", a.step}};
    for (const auto& [name, m] : a.moments) {
      entries.push_back({"adam.first/" + name, {m.first.size()}, m.first});
      entries.push_back({"adam.second/" + name, {m.second.size()}, m.second});
    }
  }

  Json directory = Json::array();
  std::size_t offset = 0;
  for (const auto& e : entries) {
    directory.push_back({{"name", e.name}, {"dtype", "f64"}, {"shape", e.shape}, {"offset", offset}});
    offset += e.values.size() * sizeof(double);
  }
  const Json header{{"config", model_config_to_json(ck.config)},
                    {"schema_fingerprint", hex64(ck.schema_fingerprint)},
                    {"catalog_fingerprint", hex64(ck.catalog_fingerprint)},
                    {"seed", ck.seed},
                    {"step", ck.step},
                    {"optimizer", optimizer},
                    {"tensors", directory}};
  const std::string text = header.dump();

  std::string out(kCheckpointMagic, 4);
  detail::put<std::uint32_t>(out, kCheckpointVersion);
  detail::put<std::uint64_t>(out, text.size());
  out += text;
  out.reserve(out.size() + offset);
  for (const auto& e : entries) {
    out.append(reinterpret_cast<const char*>(e.values.data()), e.values.size() * sizeof(double));
  }
  return out;
}

inline void checkpoint_write(const std::string& path, const Checkpoint& ck) {
  const std::string bytes = checkpoint_bytes(ck);
  auto out = open_output(path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint '" + path + "'");
}

// Parses a whole checkpoint image; nothing is returned unless every check passes.
inline Checkpoint checkpoint_parse(const std::string& bytes) {
  auto corrupt = [](const std::string& why) { return CorruptCheckpoint("corrupt checkpoint: " + why); };
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) throw corrupt("bad magic");
  const auto version = detail::get<std::uint32_t>(bytes, 4);
  if (version != kCheckpointVersion) throw corrupt("unsupported version " + std::to_string(version));
  const auto header_len = detail::get<std::uint64_t>(bytes, 8);
  if (header_len > bytes.size() - 16) throw corrupt("truncated header");
  const std::size_t payload = 16 + header_len;

  Checkpoint ck;
  try {
    const Json header = Json::parse(bytes.substr(16, header_len));
    ck.config = model_config_from_json(header.at("config"));
    ck.schema_fingerprint = std::stoull(header.at("schema_fingerprint").get<std::string>(), nullptr, 16);
    ck.catalog_fingerprint = std::stoull(header.at("catalog_fingerprint").get<std::string>(), nullptr, 16);
    ck.seed = header.at("seed").get<std::uint64_t>();
    ck.step = header.at("step").get<std::uint64_t>();
    const Json& opt = header.at("optimizer");
    if (!opt.is_null()) {
      AdamState a;
      a.beta1 = opt.at("beta1").get<double>();
      a.beta2 = opt.at("beta2").get<double>();
      a.epsilon = opt.at("epsilon").get<double>();
      a.step = opt.at("step").get<std::uint64_t>();
      ck.optimizer = std::move(a);
    }
    std::size_t expected_end = payload;
    for (const Json& e : header.at("tensors")) {
      const auto name = e.at("name").get<std::string>();
      if (e.at("dtype").get<std::string>() != "f64") throw corrupt("tensor '" + name + "' is not f64");
      const Shape shape = e.at("shape").get<Shape>();
      const std::size_t n = shape_numel(shape);
      const std::size_t start = payload + e.at("offset").get<std::size_t>();
      if (start > bytes.size() || n * sizeof(double) > bytes.size() - start) {
        throw corrupt("tensor '" + name + "' runs past the end of the file");
      }
      std::vector<double> values(n);
      std::memcpy(values.data(), bytes.data() + start, n * sizeof(double));
      expected_end = std::max(expected_end, start + n * sizeof(double));

      if (name.starts_with("param/")) {
        ck.params.add(name.substr(6), Tensor(shape, std::move(values), true));
      } else if (name == "stats/mean") {
        ck.stats.mean = std::move(values);
      } else if (name == "stats/stddev") {
        ck.stats.stddev = std::move(values);
      } else if (name.starts_with("adam.first/") && ck.optimizer) {
        ck.optimizer->moments[name.substr(11)].first = std::move(values);
      } else if (name.starts_with("adam.second/") && ck.optimizer) {
        ck.optimizer->moments[name.substr(12)].second = std::move(values);
      } else {
        throw corrupt("unexpected tensor '" + name + "'");
      }
    }
    if (expected_end != bytes.size()) throw corrupt("payload size does not match the directory");
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(std::string("bad header: ") + e.what());
  } catch (const std::logic_error& e) {
    throw corrupt(std::string("bad header field: ") + e.what());
  }
  return ck;
}

inline Checkpoint checkpoint_read(const std::string& path) { return checkpoint_parse(read_file(path)); }

inline Checkpoint make_checkpoint(const SkipModel& model, const TrackCatalog& catalog, const FeatureSchema& schema,
                                  std::uint64_t seed, std::uint64_t step,
                                  std::optional<AdamState> optimizer = std::nullopt) {
  Checkpoint ck;
  ck.config = model.config();
  ck.stats = catalog.stats();
  ck.schema_fingerprint = schema.fingerprint();
  ck.catalog_fingerprint = catalog.fingerprint();
  ck.params = model.params().clone();
  ck.optimizer = std::move(optimizer);
  ck.seed = seed;
  ck.step = step;
  return ck;
}

// Rebuilds the model after checking it was trained on this catalog and schema.
inline SkipModel restore_model(const Checkpoint& ck, const TrackCatalog& catalog, const FeatureSchema& schema) {
  if (ck.catalog_fingerprint != catalog.fingerprint()) {
    throw ValidationError("checkpoint was trained on a different track catalog");
  }
  if (ck.schema_fingerprint != schema.fingerprint()) {
    throw ValidationError("checkpoint was trained with a different feature schema");
  }
  return SkipModel(ck.config, ck.params.clone());
}

}  // namespace skipnet
