#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "skipnet/params.hpp"

namespace skipnet {

struct AdamState {
  struct Moments {
    std::vector<double> first;
    std::vector<double> second;
  };

  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::map<std::string, Moments> moments;
};

// One bias-corrected Adam update from the gradients currently held by `params`.
inline void adam_step(ParamStore& params, AdamState& state, double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  for (const auto& [name, t] : params) {
    for (double g : t.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + name + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(state.beta1, t);
  const double correct2 = 1.0 - std::pow(state.beta2, t);
  for (const auto& [name, tensor] : params) {
    Tensor param = tensor;
    auto& mom = state.moments[name];
    if (mom.first.size() != param.numel()) {
      if (!mom.first.empty()) {
        throw DimensionError("Adam moments for '" + name + "' do not match its shape");
      }
      mom.first.assign(param.numel(), 0.0);
      mom.second.assign(param.numel(), 0.0);
    }
    const auto g = param.grad();
    auto w = param.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      mom.first[i] = state.beta1 * mom.first[i] + (1.0 - state.beta1) * g[i];
      mom.second[i] = state.beta2 * mom.second[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = mom.first[i] / correct1;
      const double v_hat = mom.second[i] / correct2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace skipnet
