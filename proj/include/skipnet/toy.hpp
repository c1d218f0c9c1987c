#pragma once

// A five-track problem small enough for exhaustive finite-difference checks.

#include "skipnet/gradcheck.hpp"
#include "skipnet/model.hpp"

namespace skipnet {

struct ToyProblem {
  TrackCatalog catalog;
  FeatureSchema schema;
  std::vector<SessionRecord> sessions;
  ModelConfig config;
};

inline SessionRecord toy_session(const std::string& id, std::size_t length, const TrackCatalog& catalog, Rng& rng) {
  SessionRecord s;
  s.session_id = id;
  s.premium = bernoulli(rng, 0.5);
  s.day_of_week = static_cast<int>(uniform_index(rng, 7));
  for (std::size_t t = 0; t < length; ++t) {
    PlaybackTrack pt;
    pt.track_id = catalog.ids()[uniform_index(rng, catalog.size())];
    pt.skip = bernoulli(rng, 0.5) ? 1 : 0;
    pt.playback = Json{{"reason", bernoulli(rng, 0.5) ? "fwdbtn" : "trackdone"}, {"volume", uniform(rng, 0, 1)}};
    s.tracks.push_back(std::move(pt));
  }
  return s;
}

// V=5 tracks, 3 features, all layer sizes <= 8, sessions of the given lengths.
inline ToyProblem toy_problem(std::uint64_t seed, std::vector<std::size_t> lengths = {10, 14}) {
  Rng rng(seed);
  std::vector<std::string> ids;
  std::vector<double> raw;
  for (std::size_t i = 0; i < 5; ++i) {
    ids.push_back("toy" + std::to_string(i));
    for (int f = 0; f < 3; ++f) raw.push_back(normal(rng));
  }
  ToyProblem toy{TrackCatalog(ids, 3, raw), FeatureSchema({{"reason", {"trackdone", "fwdbtn"}}}, {"volume"}), {}, {}};
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    toy.sessions.push_back(toy_session("toy_s" + std::to_string(i), lengths[i], toy.catalog, rng));
  }
  toy.config.learned_embedding = 3;
  toy.config.track_embedding = 4;
  toy.config.session_lstm = 3;
  toy.config.stacked_lstm = 4;
  toy.config.head_hidden = 4;
  toy.config.fit_data(toy.catalog, toy.schema);
  return toy;
}

// Finite-difference check of every model parameter on a toy batch.
inline GradCheckReport model_grad_check(std::uint64_t seed, double tolerance = 1e-4, bool paper_padding = false) {
  ToyProblem toy = toy_problem(seed);
  toy.config.paper_padding = paper_padding;
  const SkipModel model = SkipModel::create(toy.config, seed);
  const Batch batch = build_batch(toy.sessions, toy.catalog, toy.schema);
  return grad_check([&] { return model.forward_loss(batch, toy.catalog).loss; }, model.params().entries(), 1e-5,
                    tolerance);
}

}  // namespace skipnet
