#pragma once

// Central-difference check of analytic gradients.

#include <cmath>
#include <cstring>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "skipnet/tensor.hpp"

namespace skipnet {

struct ParamCheck {
  std::string name;
  double max_error = 0.0;
  std::size_t worst_index = 0;
  bool pass = true;
};

struct GradCheckReport {
  double tolerance = 0.0;
  std::vector<ParamCheck> params;

  bool pass() const {
    for (const auto& p : params) {
      if (!p.pass) return false;
    }
    return true;
  }

  std::vector<std::string> failing() const {
    std::vector<std::string> out;
    for (const auto& p : params) {
      if (!p.pass) out.push_back(p.name);
    }
    return out;
  }
};

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// `loss_fn` rebuilds the graph from the current values of `params` on every
// call. Error per entry is |analytic - numeric| / max(1, |numeric|).
inline GradCheckReport grad_check(const std::function<Tensor()>& loss_fn, const NamedTensors& params,
                                  double step = 1e-5, double tolerance = 1e-4) {
  if (!(step >= 1e-7 && step <= 1e-3)) {
    throw ContractError("grad_check: step " + std::to_string(step) + " outside [1e-7, 1e-3]");
  }
  auto eval = [&] { return loss_fn().item(); };

  const double base = eval();
  const double again = eval();
  if (std::memcmp(&base, &again, sizeof(double)) != 0) {
    throw OracleError("grad_check: loss function is not deterministic");
  }

  for (const auto& [name, t] : params) {
    Tensor handle = t;
    handle.mutable_grad();
    handle.zero_grad();
  }
  backward(loss_fn());

  GradCheckReport report;
  report.tolerance = tolerance;
  for (const auto& [name, t] : params) {
    Tensor handle = t;
    const std::vector<double> analytic(handle.grad().begin(), handle.grad().end());
    ParamCheck check{name};
    auto values = handle.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + step;
      const double up = eval();
      values[i] = original - step;
      const double down = eval();
      values[i] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
      if (err > check.max_error || std::isnan(err)) {
        check.max_error = std::isnan(err) ? INFINITY : err;
        check.worst_index = i;
      }
    }
    check.pass = check.max_error <= tolerance;
    report.params.push_back(std::move(check));
  }
  return report;
}

}  // namespace skipnet
