#include "ddosnet/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace ddosnet::model {

void RnnLayer::check_shapes() const {
  if (w_zz.rows() != hidden_size() || w_zz.cols() != hidden_size() || b_h.size() != hidden_size()) {
    throw DataError("RnnLayer: inconsistent parameter shapes");
  }
}

void OutputProjection::check_shapes() const {
  if (b_f.size() != output_size()) throw DataError("OutputProjection: inconsistent shapes");
}

Matrix rnn_forward(const RnnLayer& layer, const Matrix& inputs, std::span<const double> z0) {
  const std::size_t h = layer.hidden_size();
  if (inputs.cols() != layer.input_size()) throw DataError("rnn_forward: input width mismatch");
  if (z0.size() != h) throw DataError("rnn_forward: initial state width mismatch");
  Matrix states(inputs.rows(), h);
  Vector pre(h);
  for (std::size_t t = 0; t < inputs.rows(); ++t) {
    std::copy(layer.b_h.begin(), layer.b_h.end(), pre.begin());
    const auto x = inputs.row(t);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto w = layer.w_xz.row(i);
      for (std::size_t j = 0; j < h; ++j) pre[j] += x[i] * w[j];
    }
    const auto prev = t == 0 ? z0 : std::span<const double>(states.row(t - 1));
    for (std::size_t i = 0; i < h; ++i) {
      const auto w = layer.w_zz.row(i);
      for (std::size_t j = 0; j < h; ++j) pre[j] += prev[i] * w[j];
    }
    auto out = states.row(t);
    for (std::size_t j = 0; j < h; ++j) out[j] = nn::activate(layer.activation, pre[j]);
  }
  return states;
}

Vector project_output(const OutputProjection& proj, std::span<const double> state) {
  if (state.size() != proj.input_size()) throw DataError("project_output: state width mismatch");
  Vector out(proj.b_f);
  for (std::size_t o = 0; o < out.size(); ++o) {
    const auto w = proj.w_zf.row(o);
    for (std::size_t i = 0; i < state.size(); ++i) out[o] += w[i] * state[i];
  }
  return out;
}

namespace {

RnnLayer make_layer(std::size_t in, std::size_t hidden, nn::Activation act, Rng& rng,
                    nn::InitScheme scheme) {
  RnnLayer layer;
  layer.w_xz = nn::init_weights(in, hidden, rng, scheme);
  layer.w_zz = nn::init_weights(hidden, hidden, rng, scheme);
  layer.b_h.assign(hidden, 0.0);
  layer.activation = act;
  return layer;
}

OutputProjection make_projection(std::size_t in, std::size_t out, Rng& rng,
                                 nn::InitScheme scheme) {
  return OutputProjection{nn::init_weights(out, in, rng, scheme), Vector(out, 0.0)};
}

}  // namespace

AutoencoderModel AutoencoderModel::create(const ModelShape& shape, std::uint64_t seed,
                                          nn::InitScheme scheme) {
  if (shape.encoder_widths.empty()) throw ConfigError("model needs at least one encoder layer");
  if (shape.seq_len == 0 || shape.step_dim == 0) throw ConfigError("model needs seq_len, step_dim >= 1");
  for (std::size_t k = 0; k < shape.encoder_widths.size(); ++k) {
    if (shape.encoder_widths[k] == 0 ||
        (k > 0 && shape.encoder_widths[k] >= shape.encoder_widths[k - 1])) {
      throw ConfigError("encoder widths must be positive and strictly decreasing");
    }
  }
  Rng rng(seed);
  AutoencoderModel model;
  model.seq_len = shape.seq_len;
  model.step_dim = shape.step_dim;
  std::size_t in = shape.step_dim;
  for (std::size_t w : shape.encoder_widths) {
    model.encoder.push_back(make_layer(in, w, shape.activation, rng, scheme));
    in = w;
  }
  for (auto it = shape.encoder_widths.rbegin(); it != shape.encoder_widths.rend(); ++it) {
    model.decoder.push_back(make_layer(in, *it, shape.activation, rng, scheme));
    in = *it;
  }
  model.recon = make_projection(in, shape.step_dim, rng, scheme);
  model.head = make_projection(in, 2, rng, scheme);
  return model;
}

std::vector<std::size_t> AutoencoderModel::layer_widths() const {
  std::vector<std::size_t> widths;
  for (const auto& l : encoder) widths.push_back(l.hidden_size());
  for (const auto& l : decoder) widths.push_back(l.hidden_size());
  return widths;
}

namespace {

template <typename Model, typename View>
std::vector<View> collect_blocks(Model& m) {
  std::vector<View> out;
  auto add_layer = [&](const std::string& prefix, auto& layer) {
    out.push_back({prefix + ".W_xz", layer.w_xz.values(), layer.w_xz.rows(), layer.w_xz.cols()});
    out.push_back({prefix + ".W_zz", layer.w_zz.values(), layer.w_zz.rows(), layer.w_zz.cols()});
    out.push_back({prefix + ".b_h", layer.b_h, 1, layer.b_h.size()});
  };
  auto add_projection = [&](const std::string& prefix, auto& proj) {
    out.push_back({prefix + ".W_zf", proj.w_zf.values(), proj.w_zf.rows(), proj.w_zf.cols()});
    out.push_back({prefix + ".b_f", proj.b_f, 1, proj.b_f.size()});
  };
  for (std::size_t k = 0; k < m.encoder.size(); ++k) {
    add_layer("encoder[" + std::to_string(k) + "]", m.encoder[k]);
  }
  for (std::size_t k = 0; k < m.decoder.size(); ++k) {
    add_layer("decoder[" + std::to_string(k) + "]", m.decoder[k]);
  }
  add_projection("recon", m.recon);
  add_projection("head", m.head);
  return out;
}

}  // namespace

std::vector<ParamView> AutoencoderModel::blocks() {
  return collect_blocks<AutoencoderModel, ParamView>(*this);
}

std::vector<ConstParamView> AutoencoderModel::blocks() const {
  return collect_blocks<const AutoencoderModel, ConstParamView>(*this);
}

AutoencoderModel AutoencoderModel::zeros_like() const {
  AutoencoderModel z = *this;
  for (auto& block : z.blocks()) std::fill(block.values.begin(), block.values.end(), 0.0);
  return z;
}

std::size_t AutoencoderModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& block : blocks()) n += block.values.size();
  return n;
}

void AutoencoderModel::validate() const {
  if (encoder.empty() || decoder.size() != encoder.size()) {
    throw DataError("model: decoder must mirror encoder");
  }
  std::size_t in = step_dim;
  for (const auto* layers : {&encoder, &decoder}) {
    for (const auto& layer : *layers) {
      layer.check_shapes();
      if (layer.input_size() != in) throw DataError("model: layer input width mismatch");
      in = layer.hidden_size();
    }
  }
  for (std::size_t k = 0; k < encoder.size(); ++k) {
    if (decoder[k].hidden_size() != encoder[encoder.size() - 1 - k].hidden_size()) {
      throw DataError("model: decoder widths must mirror encoder widths");
    }
  }
  recon.check_shapes();
  head.check_shapes();
  if (recon.input_size() != in || recon.output_size() != step_dim) {
    throw DataError("model: reconstruction projection shape mismatch");
  }
  if (head.input_size() != in || head.output_size() != 2) {
    throw DataError("model: head shape mismatch");
  }
}

namespace {

void check_batch(const AutoencoderModel& model, const SequenceBatch& batch) {
  if (batch.seq_len() != model.seq_len || batch.step_dim() != model.step_dim) {
    throw DataError("batch framing (" + std::to_string(batch.seq_len()) + "x" +
                    std::to_string(batch.step_dim()) + ") does not match model (" +
                    std::to_string(model.seq_len) + "x" + std::to_string(model.step_dim) + ")");
  }
}

// Forward pass of one record with everything the backward pass needs.
struct RecordTrace {
  std::vector<const RnnLayer*> layers;
  std::vector<Matrix> inputs;  // per layer: T x in
  std::vector<Matrix> pre;     // per layer: T x hidden
  std::vector<Matrix> states;  // per layer: T x hidden

  void run(const AutoencoderModel& model, std::span<const double> record) {
    const std::size_t T = model.seq_len;
    if (layers.empty()) {
      for (const auto& l : model.encoder) layers.push_back(&l);
      for (const auto& l : model.decoder) layers.push_back(&l);
      inputs.resize(layers.size());
      pre.resize(layers.size());
      states.resize(layers.size());
      for (std::size_t k = 0; k < layers.size(); ++k) {
        inputs[k] = Matrix(T, layers[k]->input_size());
        pre[k] = Matrix(T, layers[k]->hidden_size());
        states[k] = Matrix(T, layers[k]->hidden_size());
      }
    }
    std::copy(record.begin(), record.end(), inputs[0].values().begin());
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const RnnLayer& layer = *layers[k];
      const std::size_t in = layer.input_size();
      const std::size_t h = layer.hidden_size();
      if (k > 0) {
        const auto src = states[k - 1].values();
        std::copy(src.begin(), src.end(), inputs[k].values().begin());
      }
      for (std::size_t t = 0; t < T; ++t) {
        double* a = pre[k].row(t).data();
        std::copy(layer.b_h.begin(), layer.b_h.end(), a);
        const double* x = inputs[k].row(t).data();
        const double* w = layer.w_xz.values().data();
        for (std::size_t i = 0; i < in; ++i) {
          const double xi = x[i];
          const double* wr = w + i * h;
          for (std::size_t j = 0; j < h; ++j) a[j] += xi * wr[j];
        }
        if (t > 0) {
          const double* z = states[k].row(t - 1).data();
          const double* u = layer.w_zz.values().data();
          for (std::size_t i = 0; i < h; ++i) {
            const double zi = z[i];
            const double* ur = u + i * h;
            for (std::size_t j = 0; j < h; ++j) a[j] += zi * ur[j];
          }
        }
        double* z = states[k].row(t).data();
        for (std::size_t j = 0; j < h; ++j) z[j] = nn::activate(layer.activation, a[j]);
      }
    }
  }

  const Matrix& last_states() const { return states.back(); }
};

// Adds dL/d(params) of every recurrent layer to `grads`, given the upstream
// gradient w.r.t. the last layer's states (overwritten as scratch).
void backprop_layers(const RecordTrace& trace, Matrix& d_states, AutoencoderModel& grads) {
  std::vector<RnnLayer*> glayers;
  for (auto& l : grads.encoder) glayers.push_back(&l);
  for (auto& l : grads.decoder) glayers.push_back(&l);

  Matrix upstream = std::move(d_states);
  Vector carry;
  Vector da;
  for (std::size_t k = trace.layers.size(); k-- > 0;) {
    const RnnLayer& layer = *trace.layers[k];
    RnnLayer& g = *glayers[k];
    const std::size_t T = upstream.rows();
    const std::size_t in = layer.input_size();
    const std::size_t h = layer.hidden_size();
    Matrix d_inputs(T, in);
    carry.assign(h, 0.0);
    da.assign(h, 0.0);
    for (std::size_t t = T; t-- > 0;) {
      const double* a = trace.pre[k].row(t).data();
      const double* z = trace.states[k].row(t).data();
      const double* up = upstream.row(t).data();
      for (std::size_t j = 0; j < h; ++j) {
        da[j] = (up[j] + carry[j]) * nn::activate_grad(layer.activation, a[j], z[j]);
      }
      const double* x = trace.inputs[k].row(t).data();
      double* gw = g.w_xz.values().data();
      const double* w = layer.w_xz.values().data();
      double* dx = d_inputs.row(t).data();
      for (std::size_t i = 0; i < in; ++i) {
        double* gr = gw + i * h;
        const double* wr = w + i * h;
        const double xi = x[i];
        double acc = 0.0;
        for (std::size_t j = 0; j < h; ++j) {
          gr[j] += xi * da[j];
          acc += wr[j] * da[j];
        }
        dx[i] = acc;
      }
      for (std::size_t j = 0; j < h; ++j) g.b_h[j] += da[j];
      double* gu = g.w_zz.values().data();
      const double* u = layer.w_zz.values().data();
      const double* z_prev = t > 0 ? trace.states[k].row(t - 1).data() : nullptr;
      for (std::size_t i = 0; i < h; ++i) {
        double* gr = gu + i * h;
        const double* ur = u + i * h;
        double acc = 0.0;
        for (std::size_t j = 0; j < h; ++j) {
          if (z_prev != nullptr) gr[j] += z_prev[i] * da[j];
          acc += ur[j] * da[j];
        }
        carry[i] = acc;
      }
    }
    upstream = std::move(d_inputs);
  }
}

// Loss of one record; accumulates `scale` * gradient into `grads` when given.
double record_objective(const AutoencoderModel& model, RecordTrace& trace,
                        std::span<const double> record, LabelClass label, Objective objective,
                        AutoencoderModel* grads, double scale, bool head_only) {
  trace.run(model, record);
  const Matrix& top = trace.last_states();
  const std::size_t T = model.seq_len;
  const std::size_t D = model.step_dim;
  const std::size_t h = top.cols();

  if (objective == Objective::ReconstructionMse) {
    const double norm = 1.0 / static_cast<double>(T * D);
    double loss = 0.0;
    Matrix d_top(T, h);
    for (std::size_t t = 0; t < T; ++t) {
      const auto z = top.row(t);
      const Vector x_hat = project_output(model.recon, z);
      const auto x = record.subspan(t * D, D);
      for (std::size_t o = 0; o < D; ++o) {
        const double diff = x_hat[o] - x[o];
        loss += diff * diff;
        if (grads != nullptr) {
          const double g = scale * 2.0 * diff * norm;
          grads->recon.b_f[o] += g;
          auto gw = grads->recon.w_zf.row(o);
          const auto w = model.recon.w_zf.row(o);
          auto dz = d_top.row(t);
          for (std::size_t i = 0; i < h; ++i) {
            gw[i] += g * z[i];
            dz[i] += g * w[i];
          }
        }
      }
    }
    if (grads != nullptr && !head_only) backprop_layers(trace, d_top, *grads);
    return loss * norm;
  }

  const auto z_last = top.row(T - 1);
  const Vector probs = nn::softmax(project_output(model.head, z_last));
  const Vector onehot = label == LabelClass::Attack ? Vector{0.0, 1.0} : Vector{1.0, 0.0};
  const double loss = nn::categorical_crossentropy(probs, onehot);
  if (grads != nullptr) {
    Matrix d_top(T, h);
    auto dz = d_top.row(T - 1);
    for (std::size_t o = 0; o < 2; ++o) {
      // Softmax + cross-entropy: d loss / d logit = p - y.
      const double g = scale * (probs[o] - onehot[o]);
      grads->head.b_f[o] += g;
      auto gw = grads->head.w_zf.row(o);
      const auto w = model.head.w_zf.row(o);
      for (std::size_t i = 0; i < h; ++i) {
        gw[i] += g * z_last[i];
        dz[i] += g * w[i];
      }
    }
    if (!head_only) backprop_layers(trace, d_top, *grads);
  }
  return loss;
}

GradientResult batch_gradient(const AutoencoderModel& model, const SequenceBatch& batch,
                              std::span<const std::size_t> indices, Objective objective,
                              bool head_only) {
  GradientResult result{model.zeros_like(), 0.0};
  RecordTrace trace;
  const double scale = 1.0 / static_cast<double>(indices.size());
  for (std::size_t i : indices) {
    result.loss += record_objective(model, trace, batch.record(i), batch.labels()[i], objective,
                                    &result.grads, scale, head_only);
  }
  result.loss *= scale;
  if (!std::isfinite(result.loss)) throw NumericError("non-finite loss");
  return result;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

ForwardOutput forward(const AutoencoderModel& model, const SequenceBatch& batch) {
  check_batch(model, batch);
  ForwardOutput out;
  out.bottleneck = Matrix(batch.size(), model.bottleneck_size());
  out.class_probs = Matrix(batch.size(), 2);
  out.reconstruction.reserve(batch.size());
  RecordTrace trace;
  const std::size_t bottleneck_layer = model.encoder.size() - 1;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    trace.run(model, batch.record(r));
    const auto code = trace.states[bottleneck_layer].row(model.seq_len - 1);
    std::copy(code.begin(), code.end(), out.bottleneck.row(r).begin());
    const Matrix& top = trace.last_states();
    Matrix recon(model.seq_len, model.step_dim);
    for (std::size_t t = 0; t < model.seq_len; ++t) {
      const Vector x_hat = project_output(model.recon, top.row(t));
      std::copy(x_hat.begin(), x_hat.end(), recon.row(t).begin());
    }
    out.reconstruction.push_back(std::move(recon));
    const Vector probs = nn::softmax(project_output(model.head, top.row(model.seq_len - 1)));
    std::copy(probs.begin(), probs.end(), out.class_probs.row(r).begin());
  }
  return out;
}

GradientResult bptt_grads(const AutoencoderModel& model, const SequenceBatch& batch,
                          Objective objective) {
  check_batch(model, batch);
  if (batch.empty()) throw DataError("bptt_grads: empty batch");
  const auto idx = all_indices(batch.size());
  return batch_gradient(model, batch, idx, objective, false);
}

double objective_loss(const AutoencoderModel& model, const SequenceBatch& batch,
                      Objective objective) {
  check_batch(model, batch);
  if (batch.empty()) throw DataError("objective_loss: empty batch");
  RecordTrace trace;
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    loss += record_objective(model, trace, batch.record(i), batch.labels()[i], objective, nullptr,
                             0.0, false);
  }
  return loss / static_cast<double>(batch.size());
}

Prediction predict(const AutoencoderModel& model, const SequenceBatch& batch) {
  const auto out = forward(model, batch);
  Prediction p;
  p.attack_score.reserve(batch.size());
  p.labels.reserve(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const double score = out.class_probs(r, 1);
    p.attack_score.push_back(score);
    p.labels.push_back(score >= kDecisionThreshold ? LabelClass::Attack : LabelClass::Benign);
  }
  return p;
}

std::string phase_name(Phase phase) { return phase == Phase::Pretrain ? "pretrain" : "finetune"; }

FineTuneScope parse_fine_tune_scope(const std::string& name) {
  if (name == "whole_network") return FineTuneScope::WholeNetwork;
  if (name == "head_only") return FineTuneScope::HeadOnly;
  throw ConfigError("unknown fine-tune scope '" + name + "'");
}

std::string fine_tune_scope_name(FineTuneScope scope) {
  return scope == FineTuneScope::HeadOnly ? "head_only" : "whole_network";
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  nn::parse_activation(activation);
}

namespace {

bool block_trainable(const std::string& name, Phase phase, FineTuneScope scope) {
  const bool is_head = name.starts_with("head.");
  if (phase == Phase::Pretrain) return !is_head;
  return scope == FineTuneScope::WholeNetwork || is_head;
}

TrainHistory train_phase(AutoencoderModel& model, const SequenceBatch& train,
                         const SequenceBatch& val, const TrainConfig& cfg, Phase phase,
                         const EpochCallback& on_epoch) {
  cfg.validate();
  check_batch(model, train);
  check_batch(model, val);
  if (train.empty() || val.empty()) throw DataError("training needs non-empty train and val sets");

  const Objective objective =
      phase == Phase::Pretrain ? Objective::ReconstructionMse : Objective::CrossEntropy;
  const bool head_only = phase == Phase::Finetune && cfg.fine_tune_scope == FineTuneScope::HeadOnly;

  std::vector<std::size_t> trainable;
  std::vector<nn::AdamState> adam;
  {
    const auto blocks = model.blocks();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (block_trainable(blocks[b].name, phase, cfg.fine_tune_scope)) {
        trainable.push_back(b);
        adam.emplace_back(blocks[b].values.size());
      }
    }
  }

  TrainHistory history;
  history.phase = phase;
  Rng shuffle_rng(Rng::derive(cfg.seed, phase == Phase::Pretrain ? 1 : 2));
  auto order = all_indices(train.size());
  AutoencoderModel best = model;
  double best_val = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      GradientResult g;
      try {
        g = batch_gradient(model, train, idx, objective, head_only);
      } catch (const NumericError& e) {
        throw TrainingDiverged(phase_name(phase) + " epoch " + std::to_string(epoch) + ": " +
                                   e.what(),
                               history);
      }
      loss_sum += g.loss * static_cast<double>(idx.size());

      auto params = model.blocks();
      auto grads = g.grads.blocks();
      double norm_sq = 0.0;
      for (std::size_t b : trainable) {
        for (double v : grads[b].values) norm_sq += v * v;
      }
      const double norm = std::sqrt(norm_sq);
      if (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) {
        const double factor = cfg.clip_norm / norm;
        for (std::size_t b : trainable) {
          for (double& v : grads[b].values) v *= factor;
        }
      }
      for (std::size_t k = 0; k < trainable.size(); ++k) {
        const std::size_t b = trainable[k];
        nn::adam_step(params[b].values, grads[b].values, adam[k], cfg.learning_rate);
      }
    }
    const double train_loss = loss_sum / static_cast<double>(train.size());
    const double val_loss = objective_loss(model, val, objective);
    if (!std::isfinite(val_loss) || !std::isfinite(train_loss)) {
      throw TrainingDiverged(phase_name(phase) + " epoch " + std::to_string(epoch) +
                                 ": non-finite loss",
                             history);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    history.epochs.push_back({epoch, train_loss, val_loss, seconds});
    if (on_epoch) on_epoch(phase, history.epochs.back());
    if (val_loss < best_val) {
      best_val = val_loss;
      history.best_epoch = epoch;
      if (phase == Phase::Finetune) best = model;
    }
  }
  if (phase == Phase::Finetune) model = std::move(best);
  return history;
}

}  // namespace

TrainHistory pretrain(AutoencoderModel& model, const SequenceBatch& train,
                      const SequenceBatch& val, const TrainConfig& cfg,
                      const EpochCallback& on_epoch) {
  return train_phase(model, train, val, cfg, Phase::Pretrain, on_epoch);
}

TrainHistory finetune(AutoencoderModel& model, const SequenceBatch& train,
                      const SequenceBatch& val, const TrainConfig& cfg,
                      const EpochCallback& on_epoch) {
  return train_phase(model, train, val, cfg, Phase::Finetune, on_epoch);
}

}  // namespace ddosnet::model
