#include "fedids/nn.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "fedids/error.h"

namespace fedids::nn {

namespace {

std::uint64_t Fingerprint(const ModelParams& params) {
  // FNV-1a over the raw bits of every parameter.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& layer : params.layers) {
    for (double w : layer.weights.values()) mix(w);
    for (double b : layer.biases) mix(b);
  }
  return h;
}

void CheckFinite(const Matrix& m, const char* what) {
  for (double v : m.values()) {
    if (!std::isfinite(v)) {
      throw InputError(std::string(what) + " contains a non-finite value");
    }
  }
}

// z = input * W^T + b
Matrix Affine(const Matrix& input, const LayerTensors& layer) {
  const std::size_t out_dim = layer.weights.rows();
  const std::size_t in_dim = layer.weights.cols();
  Matrix z(input.rows(), out_dim);
  for (std::size_t r = 0; r < input.rows(); ++r) {
    auto x = input.row(r);
    for (std::size_t o = 0; o < out_dim; ++o) {
      auto w = layer.weights.row(o);
      double acc = layer.biases[o];
      for (std::size_t i = 0; i < in_dim; ++i) acc += w[i] * x[i];
      z(r, o) = acc;
    }
  }
  return z;
}

void SoftmaxRowsInPlace(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double peak = *std::ranges::max_element(row);
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - peak);
      total += v;
    }
    for (double& v : row) v /= total;
  }
}

double Clamp(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

bool Unclamped(double p) { return p > kProbFloor && p < 1.0 - kProbFloor; }

void CheckLossShapes(const Matrix& probs, const Matrix& onehot) {
  if (!probs.SameShape(onehot)) {
    throw ShapeError("probabilities are " + std::to_string(probs.rows()) +
                     "x" + std::to_string(probs.cols()) + " but targets are " +
                     std::to_string(onehot.rows()) + "x" +
                     std::to_string(onehot.cols()));
  }
  if (probs.rows() == 0 || probs.cols() < 2) {
    throw ShapeError("loss needs a non-empty batch with at least 2 classes");
  }
}

// Sum of row entries other than k.
double Complement(std::span<const double> row, std::size_t k) {
  double s = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j != k) s += row[j];
  }
  return s;
}

}  // namespace

Architecture DefaultArchitecture(std::size_t input_dim) {
  return {
      {input_dim, 6, Activation::kRelu, 0.4},
      {6, 4, Activation::kRelu, 0.4},
      {4, 2, Activation::kSoftmax, 0.0},
  };
}

void ValidateArchitecture(const Architecture& arch) {
  if (arch.empty()) throw ShapeError("architecture has no layers");
  for (std::size_t l = 0; l < arch.size(); ++l) {
    const LayerSpec& spec = arch[l];
    const std::string where = "layer " + std::to_string(l);
    if (spec.input_dim == 0 || spec.output_dim == 0) {
      throw ShapeError(where + " has a zero dimension");
    }
    if (l > 0 && arch[l - 1].output_dim != spec.input_dim) {
      throw ShapeError(where + " expects " + std::to_string(spec.input_dim) +
                       " inputs but the previous layer emits " +
                       std::to_string(arch[l - 1].output_dim));
    }
    if (spec.activation == Activation::kSoftmax && l + 1 != arch.size()) {
      throw ShapeError(where + ": softmax is only allowed on the last layer");
    }
    if (!(spec.dropout_after >= 0.0 && spec.dropout_after < 1.0)) {
      throw ShapeError(where + ": dropout rate must lie in [0, 1)");
    }
    if (spec.activation == Activation::kSoftmax && spec.dropout_after != 0.0) {
      throw ShapeError(where + ": dropout after softmax is not supported");
    }
  }
}

std::size_t ModelParams::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    n += layer.weights.size() + layer.biases.size();
  }
  return n;
}

bool ModelParams::AllFinite() const {
  for (const auto& layer : layers) {
    for (double w : layer.weights.values()) {
      if (!std::isfinite(w)) return false;
    }
    for (double b : layer.biases) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

std::vector<LayerTensors> ZeroTensors(const Architecture& arch) {
  std::vector<LayerTensors> out;
  out.reserve(arch.size());
  for (const auto& spec : arch) {
    out.push_back({Matrix(spec.output_dim, spec.input_dim),
                   std::vector<double>(spec.output_dim, 0.0)});
  }
  return out;
}

void CheckShapes(const Architecture& arch,
                 const std::vector<LayerTensors>& tensors) {
  if (tensors.size() != arch.size()) {
    throw ShapeError("expected " + std::to_string(arch.size()) +
                     " layers, got " + std::to_string(tensors.size()));
  }
  for (std::size_t l = 0; l < arch.size(); ++l) {
    const auto& t = tensors[l];
    if (t.weights.rows() != arch[l].output_dim ||
        t.weights.cols() != arch[l].input_dim ||
        t.biases.size() != arch[l].output_dim) {
      throw ShapeError("layer " + std::to_string(l) +
                       " tensors do not match its spec");
    }
  }
}

ModelParams InitParams(const Architecture& arch, RngStream& rng) {
  ValidateArchitecture(arch);
  ModelParams params{arch, ZeroTensors(arch)};
  for (std::size_t l = 0; l < arch.size(); ++l) {
    const double limit = std::sqrt(
        6.0 / static_cast<double>(arch[l].input_dim + arch[l].output_dim));
    for (double& w : params.layers[l].weights.values()) {
      w = rng.Uniform(-limit, limit);
    }
  }
  return params;
}

ForwardResult Forward(const ModelParams& params, const Matrix& batch,
                      Mode mode, RngStream* rng) {
  CheckShapes(params.arch, params.layers);
  if (batch.cols() != params.arch.front().input_dim) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) +
                     " columns, model expects " +
                     std::to_string(params.arch.front().input_dim));
  }
  CheckFinite(batch, "input batch");
  if (mode == Mode::kTrain && rng == nullptr) {
    throw StateError("training-mode forward pass needs a random stream");
  }

  const std::size_t n_layers = params.arch.size();
  ActivationCache cache;
  cache.inputs.reserve(n_layers);
  cache.pre_activations.reserve(n_layers);
  cache.dropout_masks.resize(n_layers);
  cache.params_fingerprint = Fingerprint(params);

  Matrix current = batch;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const LayerSpec& spec = params.arch[l];
    Matrix z = Affine(current, params.layers[l]);
    Matrix h = z;
    if (spec.activation == Activation::kRelu) {
      for (double& v : h.values()) v = std::max(v, 0.0);
    } else {
      SoftmaxRowsInPlace(h);
    }
    if (mode == Mode::kTrain && spec.dropout_after > 0.0) {
      const double keep = 1.0 - spec.dropout_after;
      Matrix mask(h.rows(), h.cols());
      for (double& m : mask.values()) m = rng->Uniform() < keep ? 1.0 / keep : 0.0;
      for (std::size_t i = 0; i < h.size(); ++i) {
        h.values()[i] *= mask.values()[i];
      }
      cache.dropout_masks[l] = std::move(mask);
    }
    cache.inputs.push_back(std::move(current));
    cache.pre_activations.push_back(std::move(z));
    current = std::move(h);
  }
  cache.probs = current;
  return {std::move(current), std::move(cache)};
}

Matrix Predict(const ModelParams& params, const Matrix& batch) {
  return Forward(params, batch, Mode::kInfer).probs;
}

double ComputeLoss(const Matrix& probs, const Matrix& onehot) {
  CheckLossShapes(probs, onehot);
  const double k = static_cast<double>(probs.cols());
  double total = 0.0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto p = probs.row(r);
    auto y = onehot.row(r);
    double row_loss = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      if (y[c] != 0.0) row_loss -= y[c] * std::log(Clamp(p[c]));
      if (y[c] != 1.0) {
        row_loss -= (1.0 - y[c]) * std::log(Clamp(Complement(p, c)));
      }
    }
    total += row_loss / k;
  }
  return total / static_cast<double>(probs.rows());
}

Gradients ComputeGradients(const ModelParams& params,
                           const ActivationCache& cache,
                           const Matrix& onehot) {
  const std::size_t n_layers = params.arch.size();
  if (cache.inputs.size() != n_layers ||
      cache.pre_activations.size() != n_layers ||
      cache.dropout_masks.size() != n_layers ||
      cache.params_fingerprint != Fingerprint(params)) {
    throw StateError("activation cache was not produced by these parameters");
  }
  CheckLossShapes(cache.probs, onehot);

  const Matrix& probs = cache.probs;
  const std::size_t batch = probs.rows();
  const std::size_t classes = probs.cols();
  const double scale =
      1.0 / (static_cast<double>(batch) * static_cast<double>(classes));

  // Gradient of the loss with respect to the softmax pre-activations.
  Matrix delta(batch, classes);
  std::vector<double> dprob(classes);
  for (std::size_t r = 0; r < batch; ++r) {
    auto p = probs.row(r);
    auto y = onehot.row(r);
    std::ranges::fill(dprob, 0.0);
    for (std::size_t c = 0; c < classes; ++c) {
      if (y[c] != 0.0 && Unclamped(p[c])) dprob[c] -= y[c] / p[c];
      if (y[c] != 1.0) {
        const double q = Complement(p, c);
        if (Unclamped(q)) {
          for (std::size_t j = 0; j < classes; ++j) {
            if (j != c) dprob[j] -= (1.0 - y[c]) / q;
          }
        }
      }
    }
    double dot = 0.0;
    for (std::size_t c = 0; c < classes; ++c) dot += p[c] * dprob[c];
    for (std::size_t c = 0; c < classes; ++c) {
      delta(r, c) = scale * p[c] * (dprob[c] - dot);
    }
  }

  Gradients grads{ZeroTensors(params.arch)};
  for (std::size_t l = n_layers; l-- > 0;) {
    const Matrix& input = cache.inputs[l];
    LayerTensors& g = grads.layers[l];
    const std::size_t out_dim = g.weights.rows();
    const std::size_t in_dim = g.weights.cols();
    for (std::size_t r = 0; r < batch; ++r) {
      auto d = delta.row(r);
      auto x = input.row(r);
      for (std::size_t o = 0; o < out_dim; ++o) {
        if (d[o] == 0.0) continue;
        auto gw = g.weights.row(o);
        for (std::size_t i = 0; i < in_dim; ++i) gw[i] += d[o] * x[i];
        g.biases[o] += d[o];
      }
    }
    if (l == 0) break;

    // Propagate into layer l-1: through W, its dropout mask, then its ReLU.
    const Matrix& weights = params.layers[l].weights;
    const Matrix& mask = cache.dropout_masks[l - 1];
    const Matrix& z_prev = cache.pre_activations[l - 1];
    Matrix prev(batch, in_dim);
    for (std::size_t r = 0; r < batch; ++r) {
      auto d = delta.row(r);
      auto out = prev.row(r);
      for (std::size_t o = 0; o < out_dim; ++o) {
        auto w = weights.row(o);
        for (std::size_t i = 0; i < in_dim; ++i) out[i] += d[o] * w[i];
      }
      for (std::size_t i = 0; i < in_dim; ++i) {
        if (!mask.empty()) out[i] *= mask(r, i);
        if (z_prev(r, i) <= 0.0) out[i] = 0.0;
      }
    }
    delta = std::move(prev);
  }
  return grads;
}

AdamState AdamState::Fresh(const ModelParams& params, const AdamHyper& hyper) {
  if (!(hyper.learning_rate > 0.0) || !(hyper.beta1 > 0.0 && hyper.beta1 < 1.0) ||
      !(hyper.beta2 > 0.0 && hyper.beta2 < 1.0) || !(hyper.epsilon > 0.0)) {
    throw InputError("invalid Adam hyperparameters");
  }
  return {hyper, ZeroTensors(params.arch), ZeroTensors(params.arch), 0};
}

void AdamStep(ModelParams& params, const Gradients& grads, AdamState& state) {
  CheckShapes(params.arch, grads.layers);
  CheckShapes(params.arch, state.first_moment);
  CheckShapes(params.arch, state.second_moment);
  for (const auto& layer : grads.layers) {
    for (double g : layer.weights.values()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient");
    }
    for (double g : layer.biases) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient");
    }
  }

  const AdamHyper& h = state.hyper;
  const double t = static_cast<double>(state.step_count + 1);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  auto update = [&](std::span<double> theta, std::span<const double> g,
                    std::span<double> m, std::span<double> v) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weights.values(), grads.layers[l].weights.values(),
           state.first_moment[l].weights.values(),
           state.second_moment[l].weights.values());
    update(params.layers[l].biases, grads.layers[l].biases,
           state.first_moment[l].biases, state.second_moment[l].biases);
  }
  ++state.step_count;
  if (!params.AllFinite()) {
    throw NumericError("Adam update produced a non-finite parameter");
  }
}

TrainResult TrainLocal(const ModelParams& params, const Matrix& features,
                       const Matrix& onehot, const TrainConfig& config,
                       RngStream& rng) {
  if (features.rows() == 0) throw InputError("cannot train on empty data");
  if (features.rows() != onehot.rows()) {
    throw ShapeError("feature and label row counts differ");
  }
  if (config.epochs == 0) throw InputError("epochs must be at least 1");
  if (config.batch_size == 0) throw InputError("batch_size must be at least 1");

  TrainResult result{params, 0.0, 0};
  AdamState state = AdamState::Fresh(params, config.adam);
  const std::size_t n = features.rows();
  std::vector<std::size_t> order(n);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.Shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      const std::size_t end = std::min(n, begin + config.batch_size);
      std::span<const std::size_t> idx(order.data() + begin, end - begin);
      Matrix x = features.SelectRows(idx);
      Matrix y = onehot.SelectRows(idx);
      ForwardResult fwd = Forward(result.params, x, Mode::kTrain, &rng);
      epoch_loss += ComputeLoss(fwd.probs, y) * static_cast<double>(idx.size());
      Gradients grads = ComputeGradients(result.params, fwd.cache, y);
      AdamStep(result.params, grads, state);
    }
    result.final_epoch_loss = epoch_loss / static_cast<double>(n);
  }
  result.adam_steps = state.step_count;
  return result;
}

std::vector<int> ArgmaxRows(const Matrix& probs) {
  std::vector<int> labels(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto row = probs.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    labels[r] = static_cast<int>(best);
  }
  return labels;
}

std::vector<int> PredictClasses(const ModelParams& params,
                                const Matrix& batch) {
  return ArgmaxRows(Predict(params, batch));
}

}  // namespace fedids::nn
