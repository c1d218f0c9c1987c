#pragma once

// Listening sessions, their JSON-lines file format, and the pieces of the
// model input derived from a single session: meta one-hots and the
// observed/predicted half split.

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "skipnet/schema.hpp"

namespace skipnet {

inline constexpr std::size_t kMinSessionLength = 10;
inline constexpr std::size_t kMaxSessionLength = 20;
inline constexpr std::size_t kMetaWidth = 2 + (kMaxSessionLength - kMinSessionLength + 1) + 7;

struct PlaybackTrack {
  std::string track_id;
  std::optional<int> skip;
  Json playback = Json::object();
};

struct SessionRecord {
  std::string session_id;
  bool premium = false;
  int day_of_week = 0;
  std::vector<PlaybackTrack> tracks;

  std::size_t length() const { return tracks.size(); }
};

inline void validate(const SessionRecord& s) {
  const std::size_t m = s.length();
  if (m < kMinSessionLength || m > kMaxSessionLength) {
    throw ValidationError("session '" + s.session_id + "' has length " + std::to_string(m) +
                          ", expected 10-20");
  }
  if (s.day_of_week < 0 || s.day_of_week > 6) {
    throw ValidationError("session '" + s.session_id + "' has day_of_week " +
                          std::to_string(s.day_of_week));
  }
  for (const auto& t : s.tracks) {
    if (t.skip && *t.skip != 0 && *t.skip != 1) {
      throw ValidationError("session '" + s.session_id + "' has a skip label other than 0/1");
    }
  }
}

// premium (2) ++ length-10 (11) ++ day of week (7), each one-hot.
inline std::vector<double> encode_meta(const SessionRecord& s) {
  validate(s);
  std::vector<double> meta(kMetaWidth, 0.0);
  meta[s.premium ? 1 : 0] = 1.0;
  meta[2 + (s.length() - kMinSessionLength)] = 1.0;
  meta[2 + (kMaxSessionLength - kMinSessionLength + 1) + static_cast<std::size_t>(s.day_of_week)] = 1.0;
  return meta;
}

struct UpcomingTrack {
  std::string track_id;
  std::size_t position;  // 1-based position in the whole session
  std::optional<int> skip;
};

struct SessionSplit {
  std::vector<PlaybackTrack> observed;  // first ceil(m/2) tracks
  std::vector<UpcomingTrack> upcoming;  // remaining floor(m/2) tracks, id and position only
};

inline std::size_t observed_length(std::size_t m) { return (m + 1) / 2; }

inline SessionSplit split_session(const SessionRecord& s) {
  validate(s);
  const std::size_t first = observed_length(s.length());
  SessionSplit out;
  out.observed.assign(s.tracks.begin(), s.tracks.begin() + static_cast<std::ptrdiff_t>(first));
  for (std::size_t i = first; i < s.length(); ++i) {
    out.upcoming.push_back({s.tracks[i].track_id, i + 1, s.tracks[i].skip});
  }
  return out;
}

inline Json session_to_json(const SessionRecord& s) {
  Json tracks = Json::array();
  for (const auto& t : s.tracks) {
    Json jt = {{"track_id", t.track_id}};
    jt["skip"] = t.skip ? Json(*t.skip) : Json(nullptr);
    jt["playback"] = t.playback;
    tracks.push_back(std::move(jt));
  }
  return Json{{"session_id", s.session_id},
              {"premium", s.premium},
              {"day_of_week", s.day_of_week},
              {"tracks", std::move(tracks)}};
}

inline SessionRecord session_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("session must be a JSON object");
  SessionRecord s;
  try {
    s.session_id = j.at("session_id").get<std::string>();
    s.premium = j.at("premium").get<bool>();
    s.day_of_week = j.at("day_of_week").get<int>();
    for (const Json& jt : j.at("tracks")) {
      PlaybackTrack t;
      t.track_id = jt.at("track_id").get<std::string>();
      if (jt.contains("skip") && !jt.at("skip").is_null()) {
        const Json& k = jt.at("skip");
        t.skip = k.is_boolean() ? static_cast<int>(k.get<bool>()) : k.get<int>();
      }
      if (jt.contains("playback")) t.playback = jt.at("playback");
      s.tracks.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed session: ") + e.what());
  }
  validate(s);
  return s;
}

inline std::vector<SessionRecord> parse_sessions(std::istream& in, const std::string& source) {
  std::vector<SessionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(session_from_json(Json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, lineno, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return out;
}

inline std::vector<SessionRecord> load_sessions(const std::string& path) {
  std::ifstream in = open_input(path);
  return parse_sessions(in, path);
}

inline void write_sessions(std::ostream& out, std::span<const SessionRecord> sessions) {
  for (const auto& s : sessions) out << session_to_json(s).dump() << '\n';
}

inline void save_sessions(const std::string& path, std::span<const SessionRecord> sessions) {
  auto out = open_output(path);
  write_sessions(out, sessions);
}

}  // namespace skipnet
