#pragma once

// key = value run configuration. Keys are the field names of TrainRunConfig
// and ModelConfig; '#' starts a comment.

#include <istream>
#include <map>
#include <string>

#include "skipnet/model.hpp"
#include "skipnet/trainer.hpp"

namespace skipnet {

using ConfigValues = std::map<std::string, std::string>;

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline ConfigValues parse_config(std::istream& in, const std::string& source) {
  ConfigValues values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected key = value");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (key.empty()) throw ParseError(source, lineno, "empty key");
    values[key] = value;
  }
  return values;
}

inline ConfigValues load_config(const std::string& path) {
  auto in = open_input(path);
  return parse_config(in, path);
}

namespace detail {

inline std::size_t config_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty() || v.front() == '-') {
    throw ConfigError("config key '" + key + "' needs a nonnegative integer, got '" + v + "'");
  }
  return static_cast<std::size_t>(n);
}

inline double config_real(const std::string& key, const std::string& v) {
  double d;
  if (!parse_double(v, d)) throw ConfigError("config key '" + key + "' needs a number, got '" + v + "'");
  return d;
}

inline bool config_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "' needs true/false, got '" + v + "'");
}

}  // namespace detail

inline void apply_config(const ConfigValues& values, TrainRunConfig& run, ModelConfig& model) {
  for (const auto& [key, v] : values) {
    if (key == "batch_size") run.batch_size = detail::config_size(key, v);
    else if (key == "learning_rate") run.learning_rate = detail::config_real(key, v);
    else if (key == "epochs") run.epochs = detail::config_size(key, v);
    else if (key == "max_steps") run.max_steps = detail::config_size(key, v);
    else if (key == "seed") run.seed = detail::config_size(key, v);
    else if (key == "validation_fraction") run.validation_fraction = detail::config_real(key, v);
    else if (key == "checkpoint_every") run.checkpoint_every = detail::config_size(key, v);
    else if (key == "time_limit_seconds") run.time_limit_seconds = detail::config_real(key, v);
    else if (key == "learned_embedding") model.learned_embedding = detail::config_size(key, v);
    else if (key == "track_embedding") model.track_embedding = detail::config_size(key, v);
    else if (key == "session_lstm") model.session_lstm = detail::config_size(key, v);
    else if (key == "stacked_lstm") model.stacked_lstm = detail::config_size(key, v);
    else if (key == "head_hidden") model.head_hidden = detail::config_size(key, v);
    else if (key == "paper_padding") model.paper_padding = detail::config_bool(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

}  // namespace skipnet
