#pragma once

// Seeded synthetic listening corpus in the same schema as real data.
//
// Tracks carry a hidden taste vector; their observable features are a noisy
// linear image of it. Each session draws a listener taste (a perturbed copy
// of one of a few taste prototypes), a skip propensity and a position drift.
// Track t is skipped with probability sigmoid of
//   -alpha * (<taste, z_t> / sqrt(dim) + propensity)
//   + beta * drift * (t / (m - 1) - 1/2)
//   + gamma * (previous skipped ? 1 : -1)
// and the "reason_start" playback field echoes the previous outcome.

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "skipnet/catalog.hpp"
#include "skipnet/random.hpp"
#include "skipnet/session.hpp"

namespace skipnet {

struct SynthParams {
  std::size_t sessions = 1000;
  std::size_t tracks = 200;
  std::uint64_t seed = 1;
  double alpha = 2.5;  // taste match
  double beta = 0.5;   // position drift
  double gamma = 1.0;  // previous outcome
  std::size_t latent_dim = 8;
  std::size_t feature_count = 12;
  double feature_noise = 0.3;
  std::size_t taste_prototypes = 6;
  double taste_spread = 0.35;
  double propensity_scale = 0.6;

  void validate() const {
    if (sessions < 1) throw ConfigError("synth needs at least one session");
    if (tracks < 2) throw ConfigError("synth needs at least two tracks");
    if (latent_dim < 1 || feature_count < 1 || taste_prototypes < 1) {
      throw ConfigError("synth dimensions must be positive");
    }
    for (double v : {alpha, beta, gamma, feature_noise, taste_spread, propensity_scale}) {
      if (!std::isfinite(v)) throw ConfigError("synth parameters must be finite");
    }
    if (feature_noise < 0 || taste_spread < 0 || propensity_scale < 0) {
      throw ConfigError("synth noise scales must be nonnegative");
    }
  }
};

struct SynthCorpus {
  std::vector<std::string> track_ids;
  std::size_t feature_count = 0;
  std::vector<double> raw_features;  // [tracks x feature_count]
  std::vector<SessionRecord> sessions;
  FeatureSchema schema;

  TrackCatalog catalog() const { return TrackCatalog(track_ids, feature_count, raw_features); }
};

inline FeatureSchema synth_schema() {
  return FeatureSchema({{"reason_start", {"trackdone", "fwdbtn", "clickrow", "backbtn"}},
                        {"shuffle", {"false", "true"}},
                        {"context_type", {"editorial_playlist", "user_collection", "radio", "catalog"}}},
                       {"hour_of_day"});
}

namespace detail {

inline std::string padded_id(const char* prefix, std::size_t i, int width) {
  std::string digits = std::to_string(i);
  if (digits.size() < static_cast<std::size_t>(width)) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

inline std::string pick(Rng& rng, const std::vector<std::pair<const char*, double>>& choices) {
  double u = uniform01(rng);
  for (const auto& [name, p] : choices) {
    if (u < p) return name;
    u -= p;
  }
  return choices.back().first;
}

}  // namespace detail

inline SynthCorpus synth_generate(const SynthParams& params) {
  params.validate();
  Rng rng(params.seed);
  const std::size_t K = params.latent_dim, F = params.feature_count;

  SynthCorpus corpus;
  corpus.feature_count = F;
  corpus.schema = synth_schema();

  std::vector<double> mixing(F * K);
  for (double& v : mixing) v = normal(rng) / std::sqrt(static_cast<double>(K));

  std::vector<double> latent(params.tracks * K);
  for (std::size_t i = 0; i < params.tracks; ++i) {
    corpus.track_ids.push_back(detail::padded_id("t_", i, 5));
    for (std::size_t k = 0; k < K; ++k) latent[i * K + k] = normal(rng);
    for (std::size_t f = 0; f < F; ++f) {
      double v = 0.0;
      for (std::size_t k = 0; k < K; ++k) v += mixing[f * K + k] * latent[i * K + k];
      corpus.raw_features.push_back(v + params.feature_noise * normal(rng));
    }
  }

  std::vector<double> prototypes(params.taste_prototypes * K);
  for (double& v : prototypes) v = normal(rng);

  const double norm = 1.0 / std::sqrt(static_cast<double>(K));
  static const std::vector<std::pair<const char*, double>> after_skip = {
      {"fwdbtn", 0.75}, {"clickrow", 0.15}, {"backbtn", 0.10}};
  static const std::vector<std::pair<const char*, double>> after_play = {
      {"trackdone", 0.80}, {"clickrow", 0.10}, {"backbtn", 0.10}};
  static const std::vector<std::pair<const char*, double>> contexts = {
      {"editorial_playlist", 0.3}, {"user_collection", 0.3}, {"radio", 0.2}, {"catalog", 0.2}};

  for (std::size_t n = 0; n < params.sessions; ++n) {
    SessionRecord s;
    s.session_id = detail::padded_id("s_", n, 6);
    s.premium = bernoulli(rng, 0.7);
    s.day_of_week = static_cast<int>(uniform_index(rng, 7));
    const std::size_t m = kMinSessionLength + uniform_index(rng, kMaxSessionLength - kMinSessionLength + 1);

    const std::size_t proto = uniform_index(rng, params.taste_prototypes);
    std::vector<double> taste(K);
    for (std::size_t k = 0; k < K; ++k) {
      taste[k] = prototypes[proto * K + k] + params.taste_spread * normal(rng);
    }
    const double propensity = params.propensity_scale * normal(rng);
    const double drift = uniform(rng, 0.0, 2.0);
    const std::string shuffle = bernoulli(rng, 0.3) ? "true" : "false";
    const std::string context = detail::pick(rng, contexts);
    const double hour = static_cast<double>(uniform_index(rng, 24)) / 23.0;

    int previous = -1;
    for (std::size_t t = 0; t < m; ++t) {
      const std::size_t track = uniform_index(rng, params.tracks);
      double match = 0.0;
      for (std::size_t k = 0; k < K; ++k) match += taste[k] * latent[track * K + k];
      double logit = -params.alpha * (match * norm + propensity) +
                     params.beta * drift * (static_cast<double>(t) / static_cast<double>(m - 1) - 0.5);
      if (previous >= 0) logit += params.gamma * (previous ? 1.0 : -1.0);
      const int skipped = bernoulli(rng, detail::sigmoid_value(logit)) ? 1 : 0;

      PlaybackTrack pt;
      pt.track_id = corpus.track_ids[track];
      pt.skip = skipped;
      const std::string reason =
          previous < 0 ? "clickrow" : detail::pick(rng, previous ? after_skip : after_play);
      pt.playback = Json{{"reason_start", reason},
                         {"shuffle", shuffle},
                         {"context_type", context},
                         {"hour_of_day", hour}};
      s.tracks.push_back(std::move(pt));
      previous = skipped;
    }
    corpus.sessions.push_back(std::move(s));
  }
  return corpus;
}

struct SynthFiles {
  std::string catalog;
  std::string sessions;
  std::string schema;
};

inline SynthFiles synth_write(const SynthCorpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  SynthFiles files{(root / "tracks.csv").string(), (root / "sessions.jsonl").string(),
                   (root / "schema.json").string()};
  {
    auto out = open_output(files.catalog);
    write_track_catalog(out, corpus.track_ids, corpus.feature_count, corpus.raw_features);
  }
  save_sessions(files.sessions, corpus.sessions);
  save_schema(files.schema, corpus.schema);
  return files;
}

}  // namespace skipnet
