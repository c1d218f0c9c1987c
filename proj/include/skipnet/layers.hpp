#pragma once

// Differentiable building blocks: lookup, dense, masked LSTM (single and
// stacked), attention pooling and the masked binary cross entropy.

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skipnet/params.hpp"
#include "skipnet/tensor.hpp"

namespace skipnet {

enum class Activation { none, relu, sigmoid };

inline Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids) {
  return gather_rows(table, ids);
}

inline Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias,
                    Activation activation = Activation::none) {
  Tensor z = add_bias(matmul(x, weight), bias);
  switch (activation) {
    case Activation::relu:
      return relu(z);
    case Activation::sigmoid:
      return sigmoid(z);
    case Activation::none:
      break;
  }
  return z;
}

// One LSTM layer. Gate blocks are laid out (input, forget, cell, output)
// along the 4h axis of every array.
struct LstmLayer {
  Tensor input_weights;   // [in x 4h]
  Tensor hidden_weights;  // [h x 4h]
  Tensor bias;            // [4h]

  std::size_t input_size() const { return input_weights.rows(); }
  std::size_t hidden_size() const { return hidden_weights.rows(); }

  static LstmLayer create(std::size_t input_size, std::size_t hidden_size, Rng& rng) {
    if (input_size == 0 || hidden_size == 0) throw ConfigError("LSTM sizes must be positive");
    LstmLayer layer;
    layer.input_weights = glorot_uniform(input_size, 4 * hidden_size, rng);
    layer.hidden_weights = glorot_uniform(hidden_size, 4 * hidden_size, rng);
    std::vector<double> b(4 * hidden_size, 0.0);
    std::fill(b.begin() + static_cast<std::ptrdiff_t>(hidden_size),
              b.begin() + static_cast<std::ptrdiff_t>(2 * hidden_size), 1.0);
    layer.bias = Tensor({4 * hidden_size}, std::move(b), true);
    return layer;
  }

  void register_in(ParamStore& store, const std::string& prefix) const {
    store.add(prefix + ".input_weights", input_weights);
    store.add(prefix + ".hidden_weights", hidden_weights);
    store.add(prefix + ".bias", bias);
  }

  static LstmLayer from(const ParamStore& store, const std::string& prefix) {
    LstmLayer layer{store[prefix + ".input_weights"], store[prefix + ".hidden_weights"],
                    store[prefix + ".bias"]};
    const std::size_t h = layer.hidden_size();
    if (layer.hidden_weights.cols() != 4 * h || layer.input_weights.cols() != 4 * h ||
        layer.bias.numel() != 4 * h) {
      throw DimensionError("LSTM '" + prefix + "' arrays disagree on the hidden size");
    }
    return layer;
  }
};

// h is the emitted hidden/output state, c the memory cell.
struct LstmLayerState {
  Tensor h;
  Tensor c;

  static LstmLayerState zeros(std::size_t batch, std::size_t hidden) {
    return {Tensor::zeros({batch, hidden}), Tensor::zeros({batch, hidden})};
  }
};

using LstmState = std::vector<LstmLayerState>;

// A sequence is one [batch x features] tensor per time step.
using Sequence = std::vector<Tensor>;

// masked: padded steps pass the state through and emit zeros.
// paper: every step runs the recurrence, as a fixed-length kernel would.
enum class PaddingMode { masked, paper };

struct LstmResult {
  Sequence outputs;
  LstmLayerState final;
};

struct StackedLstmResult {
  Sequence outputs;
  LstmState final;
};

inline LstmLayerState lstm_cell(const Tensor& x, const LstmLayerState& prev, const LstmLayer& p) {
  const std::size_t h = p.hidden_size();
  Tensor gates = add_bias(add(matmul(x, p.input_weights), matmul(prev.h, p.hidden_weights)), p.bias);
  Tensor in_gate = sigmoid(slice_cols(gates, 0, h));
  Tensor forget_gate = sigmoid(slice_cols(gates, h, h));
  Tensor candidate = tanh(slice_cols(gates, 2 * h, h));
  Tensor out_gate = sigmoid(slice_cols(gates, 3 * h, h));
  Tensor c = add(mul(forget_gate, prev.c), mul(in_gate, candidate));
  return {mul(out_gate, tanh(c)), c};
}

namespace detail {

inline std::vector<double> mask_column(const Tensor& mask, std::size_t t) {
  std::vector<double> col(mask.rows());
  for (std::size_t i = 0; i < col.size(); ++i) col[i] = mask.at(i, t);
  return col;
}

inline void check_sequence(const Sequence& inputs, const Tensor& mask, std::size_t input_size) {
  if (inputs.empty()) throw ContractError("LSTM needs at least one time step");
  if (mask.ndim() != 2 || mask.cols() != inputs.size()) {
    throw DimensionError("LSTM mask " + shape_str(mask.shape()) + " does not cover " +
                         std::to_string(inputs.size()) + " steps");
  }
  for (const Tensor& x : inputs) {
    if (x.ndim() != 2 || x.rows() != mask.rows() || x.cols() != input_size) {
      throw DimensionError("LSTM step input " + shape_str(x.shape()) + " expected [" +
                           std::to_string(mask.rows()) + "x" + std::to_string(input_size) + "]");
    }
  }
  for (double m : mask.data()) {
    if (m != 0.0 && m != 1.0) throw ContractError("LSTM mask entries must be 0 or 1");
  }
}

}  // namespace detail

inline LstmResult lstm_sequence(const Sequence& inputs, const Tensor& mask, const LstmLayer& params,
                                const LstmLayerState& init, PaddingMode mode = PaddingMode::masked) {
  detail::check_sequence(inputs, mask, params.input_size());
  const std::size_t b = mask.rows(), h = params.hidden_size();
  if (init.h.shape() != Shape{b, h} || init.c.shape() != Shape{b, h}) {
    throw DimensionError("LSTM initial state " + shape_str(init.h.shape()) + " expected [" +
                         std::to_string(b) + "x" + std::to_string(h) + "]");
  }
  LstmResult result;
  LstmLayerState state = init;
  const Tensor zero = Tensor::zeros({b, h});
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    LstmLayerState next = lstm_cell(inputs[t], state, params);
    if (mode == PaddingMode::paper) {
      state = next;
      result.outputs.push_back(next.h);
      continue;
    }
    const std::vector<double> keep = detail::mask_column(mask, t);
    state = {where_rows(keep, next.h, state.h), where_rows(keep, next.c, state.c)};
    result.outputs.push_back(where_rows(keep, next.h, zero));
  }
  result.final = std::move(state);
  return result;
}

inline StackedLstmResult stacked_lstm(const Sequence& inputs, const Tensor& mask,
                                      const std::vector<LstmLayer>& layers, const LstmState& init,
                                      PaddingMode mode = PaddingMode::masked) {
  if (layers.empty() || init.size() != layers.size()) {
    throw DimensionError("stacked LSTM: " + std::to_string(layers.size()) + " layers but " +
                         std::to_string(init.size()) + " initial states");
  }
  StackedLstmResult result;
  Sequence current = inputs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (l > 0 && layers[l].input_size() != layers[l - 1].hidden_size()) {
      throw DimensionError("stacked LSTM: layer " + std::to_string(l + 1) + " expects input " +
                           std::to_string(layers[l].input_size()) + ", layer below emits " +
                           std::to_string(layers[l - 1].hidden_size()));
    }
    LstmResult r = lstm_sequence(current, mask, layers[l], init[l], mode);
    current = std::move(r.outputs);
    result.final.push_back(std::move(r.final));
  }
  result.outputs = std::move(current);
  return result;
}

// Attention weights over the unmasked steps: softmax of (o_t . w + b).
inline Tensor attention_weights(const Sequence& outputs, const Tensor& mask, const Tensor& weight,
                                const Tensor& bias) {
  if (outputs.empty() || mask.ndim() != 2 || mask.cols() != outputs.size()) {
    throw DimensionError("attention: mask does not match the output sequence");
  }
  std::vector<Tensor> scores;
  scores.reserve(outputs.size());
  for (const Tensor& o : outputs) scores.push_back(add_bias(matmul(o, weight), bias));
  return masked_softmax_rows(concat(scores), mask);
}

inline Tensor attention_pool(const Sequence& outputs, const Tensor& mask, const Tensor& weight,
                             const Tensor& bias) {
  const Tensor weights = attention_weights(outputs, mask, weight, bias);
  Tensor pooled = scale_rows(outputs[0], slice_cols(weights, 0, 1));
  for (std::size_t t = 1; t < outputs.size(); ++t) {
    pooled = add(pooled, scale_rows(outputs[t], slice_cols(weights, t, 1)));
  }
  return pooled;
}

inline constexpr double kBceClamp = 1e-12;

// Mean binary cross entropy over positions where mask is 1.
inline Tensor bce_masked(const Tensor& probs, const Tensor& labels, const Tensor& mask) {
  detail::require_same_shape(probs, labels, "bce_masked");
  detail::require_same_shape(probs, mask, "bce_masked");
  const auto p = probs.data();
  const auto y = labels.data();
  const auto m = mask.data();
  double count = 0.0;
  for (double v : m) count += v;
  if (count == 0.0) throw ContractError("bce_masked: mask selects no positions");

  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (m[i] == 0.0) continue;
    if (std::isnan(p[i])) throw NumericError("bce_masked: NaN probability");
    const double pc = std::clamp(p[i], kBceClamp, 1.0 - kBceClamp);
    total -= y[i] * std::log(pc) + (1.0 - y[i]) * std::log(1.0 - pc);
  }
  return detail::make_op({}, {total / count}, {probs}, [count, y = std::vector<double>(y.begin(), y.end()),
                                                      m = std::vector<double>(m.begin(), m.end())](
                                                         detail::Node& self) {
    double* gp = detail::parent_grad(self, 0);
    const auto& p = self.parents[0]->data;
    const double g = self.grad[0] / count;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (m[i] == 0.0 || p[i] <= kBceClamp || p[i] >= 1.0 - kBceClamp) continue;
      gp[i] += g * ((1.0 - y[i]) / (1.0 - p[i]) - y[i] / p[i]);
    }
  });
}

}  // namespace skipnet
