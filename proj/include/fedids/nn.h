#ifndef FEDIDS_NN_H_
#define FEDIDS_NN_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fedids/matrix.h"
#include "fedids/rng.h"

namespace fedids::nn {

enum class Activation { kRelu, kSoftmax };

struct LayerSpec {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  Activation activation = Activation::kRelu;
  // Fraction of this layer's outputs zeroed during training.
  double dropout_after = 0.0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

using Architecture = std::vector<LayerSpec>;

// The 6 -> 6 -> 4 -> 2 intrusion classifier: two ReLU layers each followed
// by 40% dropout, then a two-way softmax head.
Architecture DefaultArchitecture(std::size_t input_dim = 6);

// Throws ShapeError unless the layer dimensions chain, every dimension is
// positive, softmax appears only last, and dropout rates lie in [0, 1).
void ValidateArchitecture(const Architecture& arch);

// Weights are output_dim x input_dim, biases have output_dim entries.
struct LayerTensors {
  Matrix weights;
  std::vector<double> biases;

  friend bool operator==(const LayerTensors&, const LayerTensors&) = default;
};

struct ModelParams {
  Architecture arch;
  std::vector<LayerTensors> layers;

  std::size_t ParameterCount() const;
  bool AllFinite() const;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Same shapes as ModelParams::layers.
struct Gradients {
  std::vector<LayerTensors> layers;
};

// Zero tensors shaped like `arch`.
std::vector<LayerTensors> ZeroTensors(const Architecture& arch);

// Throws ShapeError if `tensors` do not match `arch`.
void CheckShapes(const Architecture& arch,
                 const std::vector<LayerTensors>& tensors);

// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
ModelParams InitParams(const Architecture& arch, RngStream& rng);

enum class Mode { kTrain, kInfer };

// Everything backpropagation needs from a forward pass.
struct ActivationCache {
  // inputs[l] is what layer l consumed (post-dropout output of layer l-1).
  std::vector<Matrix> inputs;
  // Pre-activations of every layer.
  std::vector<Matrix> pre_activations;
  // Per-layer dropout scale factors (0 or 1/keep); empty when no dropout ran.
  std::vector<Matrix> dropout_masks;
  Matrix probs;
  std::uint64_t params_fingerprint = 0;
};

struct ForwardResult {
  Matrix probs;
  ActivationCache cache;
};

// Train mode draws inverted-dropout masks from `rng` (required); infer mode
// applies no dropout and ignores `rng`.
ForwardResult Forward(const ModelParams& params, const Matrix& batch,
                      Mode mode, RngStream* rng = nullptr);

// Softmax probabilities only, inference mode.
Matrix Predict(const ModelParams& params, const Matrix& batch);

// Probabilities are clamped to [kProbFloor, 1 - kProbFloor] before logs.
inline constexpr double kProbFloor = 1e-7;

// Mean over rows of the per-row mean of elementwise binary cross-entropy.
// The complement 1 - p_k is taken as the sum of the other entries of the row,
// which equals 1 - p_k on the probability simplex without the cancellation
// error of the subtraction.
double ComputeLoss(const Matrix& probs, const Matrix& onehot);

// d(ComputeLoss)/d(theta) for the batch recorded in `cache`.
Gradients ComputeGradients(const ModelParams& params,
                           const ActivationCache& cache, const Matrix& onehot);

struct AdamHyper {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

struct AdamState {
  AdamHyper hyper;
  std::vector<LayerTensors> first_moment;
  std::vector<LayerTensors> second_moment;
  std::uint64_t step_count = 0;

  static AdamState Fresh(const ModelParams& params, const AdamHyper& hyper);
};

// One bias-corrected Adam update; mutates `params` and `state`.
void AdamStep(ModelParams& params, const Gradients& grads, AdamState& state);

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  AdamHyper adam;
};

struct TrainResult {
  ModelParams params;
  // Sample-weighted mean of the batch losses in the last epoch.
  double final_epoch_loss = 0.0;
  std::uint64_t adam_steps = 0;
};

// Mini-batch training with a fresh optimizer. Each epoch reshuffles row order
// with `rng`; the last batch of an epoch may be short.
TrainResult TrainLocal(const ModelParams& params, const Matrix& features,
                       const Matrix& onehot, const TrainConfig& config,
                       RngStream& rng);

// Row-wise argmax; ties resolve to the lower index.
std::vector<int> ArgmaxRows(const Matrix& probs);

std::vector<int> PredictClasses(const ModelParams& params, const Matrix& batch);

}  // namespace fedids::nn

#endif  // FEDIDS_NN_H_
