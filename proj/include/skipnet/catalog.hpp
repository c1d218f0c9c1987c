#pragma once

// Track catalog: per-track fixed feature vectors, standardized per column.

#include <cmath>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "skipnet/tensor.hpp"
#include "skipnet/util.hpp"

namespace skipnet {

struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;  // population; 0 marks a constant column

  // Column statistics of a row-major [rows x cols] matrix.
  static Standardization fit(std::span<const double> values, std::size_t rows, std::size_t cols) {
    Standardization s{std::vector<double>(cols, 0.0), std::vector<double>(cols, 0.0)};
    if (rows == 0) return s;
    for (std::size_t j = 0; j < cols; ++j) {
      double total = 0.0;
      for (std::size_t i = 0; i < rows; ++i) total += values[i * cols + j];
      const double mu = total / static_cast<double>(rows);
      double sq = 0.0;
      for (std::size_t i = 0; i < rows; ++i) {
        const double d = values[i * cols + j] - mu;
        sq += d * d;
      }
      s.mean[j] = mu;
      s.stddev[j] = std::sqrt(sq / static_cast<double>(rows));
    }
    return s;
  }

  double apply(std::size_t column, double value) const {
    const double sd = stddev[column];
    return sd > 0.0 ? (value - mean[column]) / sd : 0.0;
  }
};

class TrackCatalog {
 public:
  TrackCatalog() = default;

  // `raw` is row-major [ids.size() x feature_count]. Without `stats` the
  // standardization is fitted on this catalog.
  TrackCatalog(std::vector<std::string> ids, std::size_t feature_count, std::vector<double> raw,
               std::optional<Standardization> stats = std::nullopt)
      : ids_(std::move(ids)), features_(feature_count), raw_(std::move(raw)) {
    if (raw_.size() != ids_.size() * features_) {
      throw DimensionError("catalog holds " + std::to_string(raw_.size()) + " values for " +
                           std::to_string(ids_.size()) + " tracks x " + std::to_string(features_) +
                           " features");
    }
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!index_.emplace(ids_[i], i).second) {
        throw ValidationError("duplicate track id '" + ids_[i] + "'");
      }
    }
    stats_ = stats ? std::move(*stats) : Standardization::fit(raw_, ids_.size(), features_);
    if (stats_.mean.size() != features_ || stats_.stddev.size() != features_) {
      throw DimensionError("standardization covers " + std::to_string(stats_.mean.size()) +
                           " features, catalog has " + std::to_string(features_));
    }
    std::vector<double> z(raw_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      for (std::size_t j = 0; j < features_; ++j) {
        z[i * features_ + j] = stats_.apply(j, raw_[i * features_ + j]);
      }
    }
    fixed_ = Tensor({ids_.size(), features_}, std::move(z));
  }

  std::size_t size() const { return ids_.size(); }
  std::size_t feature_count() const { return features_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const Standardization& stats() const { return stats_; }
  std::span<const double> raw() const { return raw_; }

  // Standardized features, the fixed half of every track embedding.
  const Tensor& fixed_features() const { return fixed_; }
  std::span<const double> row(std::size_t index) const {
    return fixed_.data().subspan(index * features_, features_);
  }

  std::optional<std::size_t> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(std::string_view id) const {
    if (auto i = find(id)) return *i;
    throw UnknownIdError(std::string(id));
  }

  // Identifies the id order that rows of learned embeddings refer to.
  std::uint64_t fingerprint() const {
    std::uint64_t h = fnv1a("catalog");
    for (const auto& id : ids_) h = fnv1a(std::string_view(id.data(), id.size() + 1), h);
    return h;
  }

 private:
  std::vector<std::string> ids_;
  std::size_t features_ = 0;
  std::vector<double> raw_;
  Standardization stats_;
  Tensor fixed_;
  std::unordered_map<std::string, std::size_t> index_;
};

// CSV with header `track_id,f_0,...,f_{F-1}`.
inline TrackCatalog parse_track_catalog(std::istream& in, const std::string& source,
                                        std::optional<Standardization> stats = std::nullopt) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(source, 1, "empty catalog");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');
  if (header.front() != "track_id") throw ParseError(source, lineno, "header must start with track_id");
  const std::size_t features = header.size() - 1;
  if (features == 0) throw ParseError(source, lineno, "catalog declares no feature columns");

  std::vector<std::string> ids;
  std::vector<double> raw;
  std::unordered_map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw ParseError(source, lineno,
                       "expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()));
    }
    std::string id(cells[0]);
    if (id.empty()) throw ParseError(source, lineno, "empty track id");
    if (!seen.emplace(id, lineno).second) {
      throw ParseError(source, lineno, "duplicate track id '" + id + "'");
    }
    for (std::size_t j = 1; j < cells.size(); ++j) {
      double v;
      if (!parse_double(cells[j], v) || !std::isfinite(v)) {
        throw ParseError(source, lineno,
                         "non-numeric value '" + std::string(cells[j]) + "' in column " +
                             std::string(header[j]));
      }
      raw.push_back(v);
    }
    ids.push_back(std::move(id));
  }
  if (ids.empty()) throw ParseError(source, lineno, "catalog has no tracks");
  return TrackCatalog(std::move(ids), features, std::move(raw), std::move(stats));
}

inline TrackCatalog load_track_catalog(const std::string& path,
                                       std::optional<Standardization> stats = std::nullopt) {
  std::ifstream in = open_input(path);
  return parse_track_catalog(in, path, std::move(stats));
}

inline void write_track_catalog(std::ostream& out, std::span<const std::string> ids,
                                std::size_t feature_count, std::span<const double> raw) {
  out << "track_id";
  for (std::size_t j = 0; j < feature_count; ++j) out << ",f_" << j;
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (std::size_t j = 0; j < feature_count; ++j) out << ',' << format_double(raw[i * feature_count + j]);
    out << '\n';
  }
}

}  // namespace skipnet
