#pragma once

// The encoder/predictor skip model.
//
//   track     = relu(W_t [fixed features ++ learned row] + b_t)
//   session   = attention pool over an LSTM run across every track of the session
//   init      = four linear maps of [meta ++ session] give (c, h) of both encoder layers
//   encoder   = 2-layer LSTM over [track ++ playback] of the observed half
//   predictor = 2-layer LSTM over [track ++ position one-hot] of the upcoming half,
//               started from the encoder's final state
//   p(skip)   = sigmoid(dense(relu(dense(predictor output))))

#include <span>
#include <string>
#include <vector>

#include "skipnet/batch.hpp"
#include "skipnet/layers.hpp"
#include "skipnet/params.hpp"

namespace skipnet {

struct ModelConfig {
  std::size_t learned_embedding = 50;
  std::size_t track_embedding = 350;
  std::size_t session_lstm = 100;
  std::size_t stacked_lstm = 500;  // both layers of encoder and predictor
  std::size_t head_hidden = 500;
  bool paper_padding = false;

  // Filled from the data.
  std::size_t num_tracks = 0;
  std::size_t track_features = 0;
  std::size_t playback_width = 0;

  static ModelConfig paper() { return {}; }

  // Layer sizes divided by ten.
  static ModelConfig desk() {
    ModelConfig c;
    c.learned_embedding = 5;
    c.track_embedding = 35;
    c.session_lstm = 10;
    c.stacked_lstm = 50;
    c.head_hidden = 50;
    return c;
  }

  ModelConfig& fit_data(const TrackCatalog& catalog, const FeatureSchema& schema) {
    num_tracks = catalog.size();
    track_features = catalog.feature_count();
    playback_width = skipnet::playback_width(schema);
    return *this;
  }

  PaddingMode padding() const { return paper_padding ? PaddingMode::paper : PaddingMode::masked; }

  void validate() const {
    for (std::size_t v : {learned_embedding, track_embedding, session_lstm, stacked_lstm, head_hidden,
                          num_tracks, track_features, playback_width}) {
      if (v == 0) throw ConfigError("model sizes must be positive (is the data attached?)");
    }
  }
};

inline constexpr int kLstmDepth = 2;

inline std::string layer_name(const char* prefix, int layer) {
  return std::string(prefix) + "." + std::to_string(layer);
}

inline ParamStore init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ParamStore p;
  const std::size_t H = config.stacked_lstm;

  p.add("track.learned", uniform_tensor({config.num_tracks, config.learned_embedding}, 0.05, rng));
  p.add("track.weight",
        glorot_uniform(config.track_features + config.learned_embedding, config.track_embedding, rng));
  p.add("track.bias", Tensor::zeros({config.track_embedding}, true));

  LstmLayer::create(config.track_embedding, config.session_lstm, rng).register_in(p, "session.lstm");
  p.add("session.attention.weight", glorot_uniform(config.session_lstm, 1, rng));
  p.add("session.attention.bias", Tensor::zeros({1}, true));

  const std::size_t init_in = kMetaWidth + config.session_lstm;
  for (int l = 1; l <= kLstmDepth; ++l) {
    for (const char* part : {"init.hidden", "init.output"}) {
      p.add(layer_name(part, l) + ".weight", glorot_uniform(init_in, H, rng));
      p.add(layer_name(part, l) + ".bias", Tensor::zeros({H}, true));
    }
  }

  LstmLayer::create(config.track_embedding + config.playback_width, H, rng).register_in(p, "encoder.1");
  LstmLayer::create(H, H, rng).register_in(p, "encoder.2");
  LstmLayer::create(config.track_embedding + kPositionWidth, H, rng).register_in(p, "predictor.1");
  LstmLayer::create(H, H, rng).register_in(p, "predictor.2");

  p.add("head.hidden.weight", glorot_uniform(H, config.head_hidden, rng));
  p.add("head.hidden.bias", Tensor::zeros({config.head_hidden}, true));
  p.add("head.output.weight", glorot_uniform(config.head_hidden, 1, rng));
  p.add("head.output.bias", Tensor::zeros({1}, true));
  return p;
}

// Group of a parameter name: everything before the first dot.
inline std::string param_group(const std::string& name) { return name.substr(0, name.find('.')); }

struct ForwardResult {
  Tensor probabilities;  // [b x predictor steps]
  Tensor loss;           // scalar; undefined when only predicting
};

class SkipModel {
 public:
  SkipModel(ModelConfig config, ParamStore params) : config_(config), params_(std::move(params)) {
    config_.validate();
    const Tensor& learned = params_["track.learned"];
    if (learned.shape() != Shape{config_.num_tracks, config_.learned_embedding}) {
      throw DimensionError("track.learned is " + shape_str(learned.shape()) +
                           ", config expects " + std::to_string(config_.num_tracks) + " tracks");
    }
    encoder_ = {LstmLayer::from(params_, "encoder.1"), LstmLayer::from(params_, "encoder.2")};
    predictor_ = {LstmLayer::from(params_, "predictor.1"), LstmLayer::from(params_, "predictor.2")};
    session_ = LstmLayer::from(params_, "session.lstm");
  }

  static SkipModel create(const ModelConfig& config, std::uint64_t seed) {
    return SkipModel(config, init_params(config, seed));
  }

  const ModelConfig& config() const { return config_; }
  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  Tensor track_embed(std::span<const std::size_t> ids, const TrackCatalog& catalog) const {
    check_catalog(catalog);
    Tensor joined = concat({embedding_lookup(catalog.fixed_features(), ids),
                            embedding_lookup(params_["track.learned"], ids)});
    return dense(joined, params_["track.weight"], params_["track.bias"], Activation::relu);
  }

  // `ids` is row-major [b x T] with `mask` [b x T]; returns the session vector [b x session_lstm].
  Tensor session_encode(std::span<const std::size_t> ids, const Tensor& mask,
                        const TrackCatalog& catalog) const {
    const Sequence steps = embed_steps(ids, mask, catalog);
    const std::size_t b = mask.rows();
    const LstmResult run = lstm_sequence(steps, mask, session_,
                                         LstmLayerState::zeros(b, config_.session_lstm),
                                         config_.padding());
    return attention_pool(run.outputs, mask, params_["session.attention.weight"],
                          params_["session.attention.bias"]);
  }

  // Initial (c, h) of each encoder layer from [meta ++ session].
  LstmState initial_state(const Tensor& meta, const Tensor& session) const {
    const Tensor context = concat({meta, session});
    LstmState init;
    for (int l = 1; l <= kLstmDepth; ++l) {
      const std::string hidden = layer_name("init.hidden", l), output = layer_name("init.output", l);
      Tensor c = dense(context, params_[hidden + ".weight"], params_[hidden + ".bias"]);
      Tensor h = dense(context, params_[output + ".weight"], params_[output + ".bias"]);
      init.push_back({std::move(h), std::move(c)});
    }
    return init;
  }

  LstmState playback_encode(const Batch& batch, const Tensor& session, const TrackCatalog& catalog) const {
    check_batch(batch);
    const Sequence tracks = embed_steps(batch.encoder_tracks, batch.encoder_mask, catalog);
    Sequence inputs;
    for (std::size_t t = 0; t < tracks.size(); ++t) inputs.push_back(concat({tracks[t], batch.playback[t]}));
    return stacked_lstm(inputs, batch.encoder_mask, encoder_, initial_state(batch.meta, session),
                        config_.padding())
        .final;
  }

  Tensor predict_second_half(const Batch& batch, const LstmState& encoded, const TrackCatalog& catalog) const {
    check_batch(batch);
    const Sequence tracks = embed_steps(batch.predictor_tracks, batch.predictor_mask, catalog);
    Sequence inputs;
    for (std::size_t t = 0; t < tracks.size(); ++t) inputs.push_back(concat({tracks[t], batch.positions[t]}));
    const StackedLstmResult run =
        stacked_lstm(inputs, batch.predictor_mask, predictor_, encoded, config_.padding());
    std::vector<Tensor> per_step;
    for (const Tensor& out : run.outputs) {
      Tensor hidden = dense(out, params_["head.hidden.weight"], params_["head.hidden.bias"], Activation::relu);
      per_step.push_back(
          dense(hidden, params_["head.output.weight"], params_["head.output.bias"], Activation::sigmoid));
    }
    return concat(per_step);
  }

  Tensor forward(const Batch& batch, const TrackCatalog& catalog) const {
    check_batch(batch);
    const Tensor session = session_encode(batch.session_tracks, batch.session_mask, catalog);
    const LstmState encoded = playback_encode(batch, session, catalog);
    return predict_second_half(batch, encoded, catalog);
  }

  ForwardResult forward_loss(const Batch& batch, const TrackCatalog& catalog) const {
    if (!batch.has_labels) throw ContractError("forward_loss: batch has unlabelled upcoming tracks");
    ForwardResult r;
    r.probabilities = forward(batch, catalog);
    r.loss = bce_masked(r.probabilities, batch.labels, batch.predictor_mask);
    return r;
  }

 private:
  void check_catalog(const TrackCatalog& catalog) const {
    if (catalog.size() != config_.num_tracks || catalog.feature_count() != config_.track_features) {
      throw DimensionError("catalog with " + std::to_string(catalog.size()) + " tracks x " +
                           std::to_string(catalog.feature_count()) + " features does not match the model (" +
                           std::to_string(config_.num_tracks) + " x " +
                           std::to_string(config_.track_features) + ")");
    }
  }

  void check_batch(const Batch& batch) const {
    if (!batch.playback.empty() && batch.playback.front().cols() != config_.playback_width) {
      throw DimensionError("batch playback width " + std::to_string(batch.playback.front().cols()) +
                           " does not match the model's " + std::to_string(config_.playback_width));
    }
  }

  // Embeds a row-major [b x T] id grid once and cuts it into T steps of [b x d].
  Sequence embed_steps(std::span<const std::size_t> ids, const Tensor& mask, const TrackCatalog& catalog) const {
    const std::size_t b = mask.rows(), T = mask.cols();
    if (ids.size() != b * T) {
      throw DimensionError("id grid of " + std::to_string(ids.size()) + " entries for mask " +
                           shape_str(mask.shape()));
    }
    std::vector<std::size_t> time_major(b * T);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t t = 0; t < T; ++t) time_major[t * b + i] = ids[i * T + t];
    }
    const Tensor all = track_embed(time_major, catalog);
    Sequence steps;
    const Tensor zero = Tensor::zeros({b, config_.track_embedding});
    for (std::size_t t = 0; t < T; ++t) {
      Tensor step = slice_rows(all, t * b, b);
      // A fixed-length kernel sees zero vectors in padded slots.
      if (config_.paper_padding) step = where_rows(detail::mask_column(mask, t), step, zero);
      steps.push_back(std::move(step));
    }
    return steps;
  }

  ModelConfig config_;
  ParamStore params_;
  LstmLayer session_;
  std::vector<LstmLayer> encoder_;
  std::vector<LstmLayer> predictor_;
};

inline constexpr double kDecisionThreshold = 0.5;

inline int decide(double probability) { return probability >= kDecisionThreshold ? 1 : 0; }

}  // namespace skipnet
