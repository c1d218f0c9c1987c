#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "skipnet/error.hpp"
#include "skipnet/random.hpp"
#include "skipnet/tensor.hpp"

namespace skipnet {

// Learnable tensors addressed by stable names, iterated in insertion order.
class ParamStore {
 public:
  const Tensor& add(std::string name, Tensor t) {
    if (index_.contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(t));
    return entries_.back().second;
  }

  bool contains(std::string_view name) const { return index_.find(name) != index_.end(); }

  const Tensor& operator[](std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("no parameter named '" + std::string(name) + "'");
    return entries_[it->second].second;
  }

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::size_t value_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) n += t.numel();
    return n;
  }

  void zero_grad() {
    for (auto& [name, t] : entries_) t.zero_grad();
  }

  // Deep copy: the clone shares no storage with this store.
  ParamStore clone() const {
    ParamStore out;
    for (const auto& [name, t] : entries_) out.add(name, t.clone());
    return out;
  }

  // Overwrites values in place; names and shapes must agree.
  void assign(const ParamStore& other) {
    for (auto& [name, t] : entries_) {
      const Tensor& src = other[name];
      if (src.shape() != t.shape()) {
        throw DimensionError("parameter '" + name + "' has shape " + shape_str(t.shape()) +
                             ", source has " + shape_str(src.shape()));
      }
      std::copy(src.data().begin(), src.data().end(), t.mutable_data().begin());
    }
  }

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

inline Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  std::vector<double> values(shape_numel(shape));
  for (double& v : values) v = uniform(rng, -bound, bound);
  return Tensor(std::move(shape), std::move(values), true);
}

inline double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

inline Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  return uniform_tensor({fan_in, fan_out}, glorot_bound(fan_in, fan_out), rng);
}

}  // namespace skipnet
