#pragma once

// Fixed-length padded batches. The observed half is right-aligned in the
// encoder window (pre-padding), the upcoming half is left-aligned in the
// predictor window (post-padding), and the whole session is left-aligned in
// the session window. Masks mark the real slots.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "skipnet/catalog.hpp"
#include "skipnet/session.hpp"

namespace skipnet {

inline constexpr std::size_t kPositionWidth = kMaxSessionLength;

struct BatchShape {
  std::size_t session_steps = kMaxSessionLength;
  std::size_t encoder_steps = 10;
  std::size_t predictor_steps = 10;

  // Smallest windows that hold every session in `sessions`.
  static BatchShape fitting(std::span<const SessionRecord> sessions) {
    BatchShape s{1, 1, 1};
    for (const auto& r : sessions) {
      s.session_steps = std::max(s.session_steps, r.length());
      s.encoder_steps = std::max(s.encoder_steps, observed_length(r.length()));
      s.predictor_steps = std::max(s.predictor_steps, r.length() - observed_length(r.length()));
    }
    return s;
  }
};

// Per observed track: the schema encoding followed by the observed skip flag.
inline std::size_t playback_width(const FeatureSchema& schema) { return schema.width() + 1; }

struct Batch {
  std::size_t size = 0;
  BatchShape shape;
  std::vector<std::string> session_ids;

  Tensor meta;  // [b x 20]

  std::vector<std::size_t> session_tracks;  // [b x S] catalog rows, 0 in padding
  Tensor session_mask;                      // [b x S]

  std::vector<std::size_t> encoder_tracks;  // [b x E]
  std::vector<Tensor> playback;             // E steps of [b x P]
  Tensor encoder_mask;                      // [b x E]

  std::vector<std::size_t> predictor_tracks;  // [b x D]
  std::vector<Tensor> positions;              // D steps of [b x 20] one-hots
  Tensor predictor_mask;                      // [b x D]

  Tensor labels;  // [b x D], 0 where unknown or padded
  bool has_labels = true;

  std::vector<std::size_t> observed_count;
  std::vector<std::size_t> upcoming_count;
};

inline Batch build_batch(std::span<const SessionRecord> sessions, const TrackCatalog& catalog,
                         const FeatureSchema& schema, BatchShape shape = {}) {
  if (sessions.empty()) throw ContractError("build_batch: no sessions");
  const std::size_t b = sessions.size();
  const std::size_t S = shape.session_steps, E = shape.encoder_steps, D = shape.predictor_steps;
  const std::size_t P = playback_width(schema);

  Batch batch;
  batch.size = b;
  batch.shape = shape;
  std::vector<double> meta(b * kMetaWidth, 0.0);
  batch.session_tracks.assign(b * S, 0);
  std::vector<double> session_mask(b * S, 0.0);
  batch.encoder_tracks.assign(b * E, 0);
  std::vector<std::vector<double>> playback(E, std::vector<double>(b * P, 0.0));
  std::vector<double> encoder_mask(b * E, 0.0);
  batch.predictor_tracks.assign(b * D, 0);
  std::vector<std::vector<double>> positions(D, std::vector<double>(b * kPositionWidth, 0.0));
  std::vector<double> predictor_mask(b * D, 0.0);
  std::vector<double> labels(b * D, 0.0);

  for (std::size_t i = 0; i < b; ++i) {
    const SessionRecord& s = sessions[i];
    const SessionSplit split = split_session(s);
    const std::size_t first = split.observed.size(), second = split.upcoming.size();
    if (s.length() > S || first > E || second > D) {
      throw DimensionError("session '" + s.session_id + "' of length " + std::to_string(s.length()) +
                           " does not fit windows " + std::to_string(S) + "/" + std::to_string(E) +
                           "/" + std::to_string(D));
    }
    batch.session_ids.push_back(s.session_id);
    batch.observed_count.push_back(first);
    batch.upcoming_count.push_back(second);

    const auto m = encode_meta(s);
    std::copy(m.begin(), m.end(), meta.begin() + static_cast<std::ptrdiff_t>(i * kMetaWidth));

    for (std::size_t t = 0; t < s.length(); ++t) {
      batch.session_tracks[i * S + t] = catalog.index_of(s.tracks[t].track_id);
      session_mask[i * S + t] = 1.0;
    }

    const std::size_t pad = E - first;
    for (std::size_t j = 0; j < first; ++j) {
      const PlaybackTrack& track = split.observed[j];
      const std::size_t slot = pad + j;
      batch.encoder_tracks[i * E + slot] = catalog.index_of(track.track_id);
      encoder_mask[i * E + slot] = 1.0;
      if (!track.skip) {
        throw ValidationError("session '" + s.session_id + "' lacks the skip flag of observed track " +
                              std::to_string(j + 1));
      }
      const auto encoded = schema.encode(track.playback);
      double* dst = playback[slot].data() + i * P;
      std::copy(encoded.begin(), encoded.end(), dst);
      dst[P - 1] = static_cast<double>(*track.skip);
    }

    for (std::size_t j = 0; j < second; ++j) {
      const UpcomingTrack& track = split.upcoming[j];
      batch.predictor_tracks[i * D + j] = catalog.index_of(track.track_id);
      predictor_mask[i * D + j] = 1.0;
      positions[j][i * kPositionWidth + (track.position - 1)] = 1.0;
      if (track.skip) {
        labels[i * D + j] = static_cast<double>(*track.skip);
      } else {
        batch.has_labels = false;
      }
    }
  }

  batch.meta = Tensor::matrix(b, kMetaWidth, std::move(meta));
  batch.session_mask = Tensor::matrix(b, S, std::move(session_mask));
  batch.encoder_mask = Tensor::matrix(b, E, std::move(encoder_mask));
  batch.predictor_mask = Tensor::matrix(b, D, std::move(predictor_mask));
  batch.labels = Tensor::matrix(b, D, std::move(labels));
  for (auto& p : playback) batch.playback.push_back(Tensor::matrix(b, P, std::move(p)));
  for (auto& p : positions) batch.positions.push_back(Tensor::matrix(b, kPositionWidth, std::move(p)));
  return batch;
}

// Fraction of labelled plays of each track that were skipped.
inline std::map<std::string, double> compute_track_skip_rates(std::span<const SessionRecord> sessions) {
  std::map<std::string, std::pair<double, double>> tally;  // skips, plays
  for (const auto& s : sessions) {
    for (const auto& t : s.tracks) {
      if (!t.skip) continue;
      auto& [skips, plays] = tally[t.track_id];
      skips += *t.skip;
      plays += 1.0;
    }
  }
  std::map<std::string, double> rates;
  for (const auto& [id, counts] : tally) rates.emplace(id, counts.first / counts.second);
  return rates;
}

}  // namespace skipnet
