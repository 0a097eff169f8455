#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ddosnet/errors.hpp"
#include "ddosnet/matrix.hpp"
#include "ddosnet/nn.hpp"
#include "ddosnet/preprocess.hpp"

namespace ddosnet::model {

/// Simple recurrent layer: z_t = act(x_t W_xz + z_{t-1} W_zz + b_h).
struct RnnLayer {
  Matrix w_xz;  // input x hidden
  Matrix w_zz;  // hidden x hidden
  Vector b_h;   // hidden
  nn::Activation activation = nn::Activation::ReLU;

  std::size_t input_size() const { return w_xz.rows(); }
  std::size_t hidden_size() const { return w_xz.cols(); }
  void check_shapes() const;

  friend bool operator==(const RnnLayer&, const RnnLayer&) = default;
};

/// Affine read-out f = W_zf h + b_f, no activation.
struct OutputProjection {
  Matrix w_zf;  // output x hidden
  Vector b_f;   // output

  std::size_t input_size() const { return w_zf.cols(); }
  std::size_t output_size() const { return w_zf.rows(); }
  void check_shapes() const;

  friend bool operator==(const OutputProjection&, const OutputProjection&) = default;
};

/// Runs one layer over a sequence (rows of `inputs` are timesteps) and
/// returns the hidden state at every step.
Matrix rnn_forward(const RnnLayer& layer, const Matrix& inputs, std::span<const double> z0);

Vector project_output(const OutputProjection& proj, std::span<const double> state);

struct ModelShape {
  std::size_t seq_len = 7;
  std::size_t step_dim = 11;
  std::vector<std::size_t> encoder_widths{64, 32, 16, 8};
  nn::Activation activation = nn::Activation::ReLU;
};

struct ParamView {
  std::string name;
  std::span<double> values;
  std::size_t rows;
  std::size_t cols;
};

struct ConstParamView {
  std::string name;
  std::span<const double> values;
  std::size_t rows;
  std::size_t cols;
};

/// Recurrent autoencoder: encoder widths strictly decreasing, decoder the
/// mirror image, a per-step reconstruction projection and a two-way
/// classification head on the last decoder state.
class AutoencoderModel {
 public:
  AutoencoderModel() = default;

  /// Glorot-initialised (or zero) parameters drawn from `seed`.
  static AutoencoderModel create(const ModelShape& shape, std::uint64_t seed,
                                 nn::InitScheme scheme = nn::InitScheme::GlorotUniform);

  std::vector<RnnLayer> encoder;
  std::vector<RnnLayer> decoder;
  OutputProjection recon;
  OutputProjection head;
  std::size_t seq_len = 0;
  std::size_t step_dim = 0;

  std::size_t bottleneck_size() const { return encoder.back().hidden_size(); }
  std::vector<std::size_t> layer_widths() const;

  /// Parameter blocks in a fixed order: encoder layers, decoder layers,
  /// recon, head; each layer as W_xz, W_zz, b_h and each projection as
  /// W_zf, b_f.
  std::vector<ParamView> blocks();
  std::vector<ConstParamView> blocks() const;

  /// Same shapes, every parameter zero.
  AutoencoderModel zeros_like() const;
  std::size_t parameter_count() const;

  /// Throws DataError if any block shape is inconsistent.
  void validate() const;

  friend bool operator==(const AutoencoderModel&, const AutoencoderModel&) = default;
};

struct ForwardOutput {
  std::vector<Matrix> reconstruction;  // per record: seq_len x step_dim
  Matrix bottleneck;                   // n x bottleneck width
  Matrix class_probs;                  // n x 2 (Benign, Attack)
};

ForwardOutput forward(const AutoencoderModel& model, const SequenceBatch& batch);

enum class Objective { ReconstructionMse, CrossEntropy };

struct GradientResult {
  AutoencoderModel grads;
  double loss = 0.0;
};

/// Exact gradient of the batch-mean objective by backpropagation through
/// time. Throws NumericError on a non-finite loss.
GradientResult bptt_grads(const AutoencoderModel& model, const SequenceBatch& batch,
                          Objective objective);

/// Batch-mean objective without gradients.
double objective_loss(const AutoencoderModel& model, const SequenceBatch& batch,
                      Objective objective);

struct Prediction {
  Vector attack_score;
  std::vector<LabelClass> labels;
};

inline constexpr double kDecisionThreshold = 0.5;

/// Attack iff P(Attack) >= 0.5.
Prediction predict(const AutoencoderModel& model, const SequenceBatch& batch);

enum class FineTuneScope { HeadOnly, WholeNetwork };
enum class Phase { Pretrain, Finetune };

std::string phase_name(Phase phase);
FineTuneScope parse_fine_tune_scope(const std::string& name);
std::string fine_tune_scope_name(FineTuneScope scope);

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-4;
  std::uint64_t seed = 42;
  std::string activation = "relu";
  FineTuneScope fine_tune_scope = FineTuneScope::WholeNetwork;
  double clip_norm = 5.0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch;
  double train_loss;
  double val_loss;
  double seconds;
};

struct TrainHistory {
  Phase phase = Phase::Pretrain;
  std::vector<EpochRecord> epochs;
  /// Finetune only: epoch whose parameters were kept (minimum val loss).
  std::size_t best_epoch = 0;
};

class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, TrainHistory partial)
      : NumericError(what), partial_(std::move(partial)) {}
  const TrainHistory& partial() const { return partial_; }

 private:
  TrainHistory partial_;
};

using EpochCallback = std::function<void(Phase, const EpochRecord&)>;

/// Minibatch Adam on reconstruction MSE; labels are ignored.
TrainHistory pretrain(AutoencoderModel& model, const SequenceBatch& train,
                      const SequenceBatch& val, const TrainConfig& cfg,
                      const EpochCallback& on_epoch = {});

/// Minibatch Adam on cross-entropy. Leaves the model at the parameters of
/// the epoch with the lowest validation loss.
TrainHistory finetune(AutoencoderModel& model, const SequenceBatch& train,
                      const SequenceBatch& val, const TrainConfig& cfg,
                      const EpochCallback& on_epoch = {});

}  // namespace ddosnet::model
