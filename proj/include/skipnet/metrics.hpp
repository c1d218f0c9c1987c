#pragma once

// Mean average accuracy, first-prediction accuracy, the rule-based
// baselines, majority voting and the prediction file format.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "skipnet/session.hpp"

namespace skipnet {

// Average over positions i of (running accuracy at i) * [position i correct].
inline double session_average_accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw ContractError("average accuracy: " + std::to_string(predictions.size()) + " predictions for " +
                        std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw ContractError("average accuracy of an empty sequence");
  double correct = 0.0, total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] == labels[i]) {
      correct += 1.0;
      total += correct / static_cast<double>(i + 1);
    }
  }
  return total / static_cast<double>(labels.size());
}

struct SessionPrediction {
  std::string session_id;
  std::vector<int> predictions;
  std::vector<double> probabilities;  // may be empty (rule-based predictors)
};

struct EvalReport {
  double mean_average_accuracy = 0.0;
  double first_prediction_accuracy = 0.0;
  std::size_t sessions = 0;
  std::vector<double> per_session;

  Json to_json(bool with_sessions = false) const {
    Json j{{"mean_average_accuracy", mean_average_accuracy},
           {"first_prediction_accuracy", first_prediction_accuracy},
           {"sessions", sessions}};
    if (with_sessions) j["per_session"] = per_session;
    return j;
  }
};

// Plain-text table, one row per named report.
inline std::string format_reports(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::size_t width = 5;
  for (const auto& [name, r] : rows) width = std::max(width, name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "model" << "  " << std::right
      << std::setw(8) << "MAA" << "  " << std::setw(10) << "first acc" << "  " << std::setw(8)
      << "sessions" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& [name, r] : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << name << "  " << std::right << std::setw(8)
        << r.mean_average_accuracy << "  " << std::setw(10) << r.first_prediction_accuracy << "  "
        << std::setw(8) << r.sessions << '\n';
  }
  return out.str();
}

inline std::vector<int> upcoming_labels(const SessionRecord& s) {
  std::vector<int> labels;
  for (std::size_t i = observed_length(s.length()); i < s.length(); ++i) {
    if (!s.tracks[i].skip) {
      throw ValidationError("session '" + s.session_id + "' has no label at position " + std::to_string(i + 1));
    }
    labels.push_back(*s.tracks[i].skip);
  }
  return labels;
}

// Scores predictions against the upcoming half of each session. Every
// session needs a prediction; extra predictions are ignored.
inline EvalReport evaluate(std::span<const SessionPrediction> predictions,
                           std::span<const SessionRecord> sessions) {
  if (sessions.empty()) throw ContractError("evaluate: no sessions");
  std::unordered_map<std::string, const SessionPrediction*> by_id;
  for (const auto& p : predictions) by_id.emplace(p.session_id, &p);

  EvalReport report;
  double first_correct = 0.0;
  for (const auto& s : sessions) {
    auto it = by_id.find(s.session_id);
    if (it == by_id.end()) throw ValidationError("no prediction for session '" + s.session_id + "'");
    const auto labels = upcoming_labels(s);
    const auto& pred = it->second->predictions;
    if (pred.size() != labels.size()) {
      throw ValidationError("session '" + s.session_id + "' has " + std::to_string(labels.size()) +
                            " upcoming tracks but " + std::to_string(pred.size()) + " predictions");
    }
    report.per_session.push_back(session_average_accuracy(pred, labels));
    if (pred.front() == labels.front()) first_correct += 1.0;
  }
  double total = 0.0;
  for (double aa : report.per_session) total += aa;
  report.sessions = sessions.size();
  report.mean_average_accuracy = total / static_cast<double>(sessions.size());
  report.first_prediction_accuracy = first_correct / static_cast<double>(sessions.size());
  return report;
}

enum class BaselineMode { all_skip, skip_rate, last_action };

inline BaselineMode parse_baseline_mode(const std::string& name) {
  if (name == "all_skip") return BaselineMode::all_skip;
  if (name == "skip_rate") return BaselineMode::skip_rate;
  if (name == "last_action") return BaselineMode::last_action;
  throw ConfigError("unknown baseline mode '" + name + "'");
}

// Tracks never seen in training are predicted skipped, like the all-skip rule.
inline std::vector<int> baseline_predict(BaselineMode mode, const SessionRecord& s,
                                         const std::map<std::string, double>* skip_rates = nullptr) {
  const SessionSplit split = split_session(s);
  std::vector<int> out(split.upcoming.size(), 1);
  switch (mode) {
    case BaselineMode::all_skip:
      break;
    case BaselineMode::skip_rate:
      if (!skip_rates) throw ConfigError("skip_rate baseline needs training skip rates");
      for (std::size_t j = 0; j < out.size(); ++j) {
        auto it = skip_rates->find(split.upcoming[j].track_id);
        out[j] = it == skip_rates->end() || it->second > 0.5 ? 1 : 0;
      }
      break;
    case BaselineMode::last_action: {
      const auto& last = split.observed.back();
      if (!last.skip) {
        throw ValidationError("last_action baseline: session '" + s.session_id +
                              "' lacks the last observed skip flag");
      }
      std::fill(out.begin(), out.end(), *last.skip);
      break;
    }
  }
  return out;
}

inline std::vector<SessionPrediction> baseline_predict_all(BaselineMode mode,
                                                           std::span<const SessionRecord> sessions,
                                                           const std::map<std::string, double>* rates = nullptr) {
  std::vector<SessionPrediction> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) out.push_back({s.session_id, baseline_predict(mode, s, rates), {}});
  return out;
}

// Per position: 1 iff more than half of the k (odd) voters say 1.
inline std::vector<int> majority_vote(std::span<const std::vector<int>> votes) {
  if (votes.empty() || votes.size() % 2 == 0) {
    throw ConfigError("majority vote needs an odd number of models, got " + std::to_string(votes.size()));
  }
  const std::size_t n = votes.front().size();
  std::vector<int> out(n, 0);
  for (const auto& v : votes) {
    if (v.size() != n) throw DimensionError("majority vote: prediction lengths differ");
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t ones = 0;
    for (const auto& v : votes) ones += v[i] != 0;
    out[i] = 2 * ones > votes.size() ? 1 : 0;
  }
  return out;
}

// Votes per session across k prediction sets, aligned on the first set's ids.
// Probabilities of the result are the mean of the members' when all carry them.
inline std::vector<SessionPrediction> ensemble(std::span<const std::vector<SessionPrediction>> members) {
  if (members.empty() || members.size() % 2 == 0) {
    throw ConfigError("ensemble needs an odd number of prediction sets, got " + std::to_string(members.size()));
  }
  std::vector<std::unordered_map<std::string, const SessionPrediction*>> index(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    for (const auto& p : members[k]) index[k].emplace(p.session_id, &p);
  }
  std::vector<SessionPrediction> out;
  for (const auto& first : members.front()) {
    std::vector<std::vector<int>> votes;
    std::vector<const SessionPrediction*> rows;
    for (std::size_t k = 0; k < members.size(); ++k) {
      auto it = index[k].find(first.session_id);
      if (it == index[k].end()) {
        throw ValidationError("prediction set " + std::to_string(k + 1) + " lacks session '" +
                              first.session_id + "'");
      }
      rows.push_back(it->second);
      votes.push_back(it->second->predictions);
    }
    SessionPrediction merged{first.session_id, majority_vote(votes), {}};
    const bool all_probs = std::all_of(rows.begin(), rows.end(), [&](const SessionPrediction* r) {
      return r->probabilities.size() == merged.predictions.size();
    });
    if (all_probs) {
      merged.probabilities.assign(merged.predictions.size(), 0.0);
      for (const auto* r : rows) {
        for (std::size_t i = 0; i < r->probabilities.size(); ++i) merged.probabilities[i] += r->probabilities[i];
      }
      for (double& p : merged.probabilities) p /= static_cast<double>(rows.size());
    }
    out.push_back(std::move(merged));
  }
  return out;
}

// Pearson correlation of two prediction sets over every aligned position.
inline double prediction_correlation(std::span<const SessionPrediction> a, std::span<const SessionPrediction> b) {
  std::unordered_map<std::string, const SessionPrediction*> index;
  for (const auto& p : b) index.emplace(p.session_id, &p);
  double n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (const auto& p : a) {
    auto it = index.find(p.session_id);
    if (it == index.end()) continue;
    const auto& q = it->second->predictions;
    for (std::size_t i = 0; i < std::min(p.predictions.size(), q.size()); ++i) {
      const double x = p.predictions[i], y = q[i];
      n += 1;
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
    }
  }
  const double cov = sxy - sx * sy / n;
  const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
  if (n == 0 || vx <= 0 || vy <= 0) return NAN;
  return cov / std::sqrt(vx * vy);
}

inline Json prediction_to_json(const SessionPrediction& p) {
  Json j{{"session_id", p.session_id}, {"predictions", p.predictions}};
  j["probabilities"] = p.probabilities;
  return j;
}

inline void write_predictions(std::ostream& out, std::span<const SessionPrediction> preds) {
  for (const auto& p : preds) out << prediction_to_json(p).dump() << '\n';
}

inline void save_predictions(const std::string& path, std::span<const SessionPrediction> preds) {
  auto out = open_output(path);
  write_predictions(out, preds);
}

inline std::vector<SessionPrediction> parse_predictions(std::istream& in, const std::string& source) {
  std::vector<SessionPrediction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      SessionPrediction p;
      p.session_id = j.at("session_id").get<std::string>();
      for (const Json& v : j.at("predictions")) {
        const int x = v.is_boolean() ? static_cast<int>(v.get<bool>()) : v.get<int>();
        if (x != 0 && x != 1) throw ParseError(source, lineno, "predictions must be 0 or 1");
        p.predictions.push_back(x);
      }
      if (p.predictions.empty()) throw ParseError(source, lineno, "empty prediction list");
      if (j.contains("probabilities") && !j.at("probabilities").is_null()) {
        p.probabilities = j.at("probabilities").get<std::vector<double>>();
      }
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return out;
}

inline std::vector<SessionPrediction> load_predictions(const std::string& path) {
  auto in = open_input(path);
  return parse_predictions(in, path);
}

}  // namespace skipnet
