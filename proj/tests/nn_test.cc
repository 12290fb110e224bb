#include "fedids/nn.h"

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "fedids/error.h"
#include "fedids/rng.h"
#include "test_util.h"

namespace fedids::nn {
namespace {

using fedids::testing::NoDropout;
using fedids::testing::ReferenceLoss;

ModelParams ZeroModel(const Architecture& arch = DefaultArchitecture()) {
  return {arch, ZeroTensors(arch)};
}

Matrix RandomMatrix(std::size_t rows, std::size_t cols, RngStream& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.Uniform(-1.0, 1.0);
  return m;
}

Matrix AlternatingOneHot(std::size_t rows) {
  Matrix y(rows, 2, 0.0);
  for (std::size_t r = 0; r < rows; ++r) y(r, r % 2) = 1.0;
  return y;
}

// Random parameters including non-zero biases.
ModelParams RandomParams(const Architecture& arch, RngStream& rng) {
  ModelParams p = InitParams(arch, rng);
  for (auto& layer : p.layers) {
    for (double& b : layer.biases) b = rng.Uniform(-0.5, 0.5);
  }
  return p;
}

TEST(InitParams, ShapesAndZeroBiases) {
  RngStream rng(1, StreamId::kServer);
  const ModelParams p = InitParams(DefaultArchitecture(), rng);
  ASSERT_EQ(p.layers.size(), 3u);
  const std::size_t shapes[3][2] = {{6, 6}, {4, 6}, {2, 4}};
  for (std::size_t l = 0; l < 3; ++l) {
    EXPECT_EQ(p.layers[l].weights.rows(), shapes[l][0]);
    EXPECT_EQ(p.layers[l].weights.cols(), shapes[l][1]);
    EXPECT_EQ(p.layers[l].biases, std::vector<double>(shapes[l][0], 0.0));
  }
  EXPECT_EQ(p.ParameterCount(), 42u + 28u + 10u);
}

TEST(InitParams, GlorotBoundForOneByOne) {
  const Architecture arch = {{1, 1, Activation::kSoftmax, 0.0}};
  RngStream rng(2, StreamId::kServer);
  for (int i = 0; i < 2000; ++i) {
    const double w = InitParams(arch, rng).layers[0].weights(0, 0);
    ASSERT_LE(std::abs(w), std::sqrt(3.0));
  }
}

TEST(InitParams, DeterministicPerStream) {
  RngStream a(77, StreamId::kServer);
  RngStream b(77, StreamId::kServer);
  EXPECT_EQ(InitParams(DefaultArchitecture(), a),
            InitParams(DefaultArchitecture(), b));
}

TEST(InitParams, RejectsBrokenChain) {
  const Architecture arch = {{6, 5, Activation::kRelu, 0.0},
                             {4, 2, Activation::kSoftmax, 0.0}};
  RngStream rng(1, 1);
  EXPECT_THROW(InitParams(arch, rng), ShapeError);
  EXPECT_THROW(ValidateArchitecture({{6, 2, Activation::kSoftmax, 0.0},
                                     {2, 2, Activation::kSoftmax, 0.0}}),
               ShapeError);
}

TEST(Forward, ZeroModelGivesHalves) {
  RngStream rng(3, 1);
  const Matrix x = RandomMatrix(5, 6, rng);
  const Matrix probs = Predict(ZeroModel(), x);
  for (double v : probs.values()) EXPECT_EQ(v, 0.5);
}

TEST(Forward, InferIsRepeatable) {
  RngStream rng(4, 1);
  const ModelParams p = InitParams(DefaultArchitecture(), rng);
  const Matrix x = RandomMatrix(10, 6, rng);
  EXPECT_EQ(Predict(p, x), Predict(p, x));
}

TEST(Forward, FinalBiasLnThree) {
  ModelParams p = ZeroModel();
  p.layers.back().biases = {std::log(3.0), 0.0};
  const Matrix probs = Predict(p, Matrix(3, 6, 1.0));
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_NEAR(probs(r, 0), 0.75, 1e-15);
    EXPECT_NEAR(probs(r, 1), 0.25, 1e-15);
  }
}

TEST(Forward, RowsSumToOne) {
  RngStream rng(5, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const ModelParams p = RandomParams(DefaultArchitecture(), rng);
    Matrix x = RandomMatrix(8, 6, rng);
    for (double& v : x.values()) v *= 50.0;
    const Matrix probs = Forward(p, x, Mode::kTrain, &rng).probs;
    for (std::size_t r = 0; r < probs.rows(); ++r) {
      EXPECT_GE(probs(r, 0), 0.0);
      EXPECT_GE(probs(r, 1), 0.0);
      EXPECT_NEAR(probs(r, 0) + probs(r, 1), 1.0, 1e-12);
    }
  }
}

TEST(Forward, RejectsBadInput) {
  Matrix x(2, 6, 0.0);
  x(1, 3) = std::nan("");
  EXPECT_THROW(Predict(ZeroModel(), x), InputError);
  EXPECT_THROW(Predict(ZeroModel(), Matrix(2, 5, 0.0)), ShapeError);
  EXPECT_THROW(Forward(ZeroModel(), Matrix(2, 6, 0.0), Mode::kTrain), StateError);
}

TEST(Forward, InvertedDropoutPreservesExpectation) {
  // A constant unit activation: bias 1 and zero weights in the first layer.
  ModelParams p = ZeroModel();
  p.layers[0].biases.assign(6, 1.0);
  RngStream rng(6, 1);
  const Matrix x(1000, 6, 0.0);
  double sum = 0.0;
  std::size_t count = 0;
  for (int pass = 0; pass < 20; ++pass) {
    const ForwardResult fr = Forward(p, x, Mode::kTrain, &rng);
    // inputs[1] is the post-dropout output of layer 0.
    for (double v : fr.cache.inputs[1].values()) {
      sum += v;
      ++count;
    }
  }
  ASSERT_GE(count, 100000u);
  EXPECT_NEAR(sum / static_cast<double>(count), 1.0, 0.01);
}

TEST(ComputeLoss, Examples) {
  EXPECT_NEAR(ComputeLoss(Matrix(1, 2, {0.5, 0.5}), Matrix(1, 2, {1, 0})),
              std::log(2.0), 1e-15);
  EXPECT_NEAR(ComputeLoss(Matrix(1, 2, {1 - 1e-7, 1e-7}), Matrix(1, 2, {1, 0})),
              1e-7, 1e-12);
  EXPECT_NEAR(ComputeLoss(Matrix(1, 2, {0.9, 0.1}), Matrix(1, 2, {1, 0})),
              0.105361, 1e-6);
}

TEST(ComputeLoss, EqualsNegLogCorrect) {
  RngStream rng(7, 1);
  for (int i = 0; i < 1000; ++i) {
    const double p = rng.Uniform(1e-6, 1.0 - 1e-6);
    const int label = static_cast<int>(rng.Below(2));
    const Matrix probs(1, 2, {p, 1.0 - p});
    Matrix y(1, 2, 0.0);
    y(0, label) = 1.0;
    EXPECT_NEAR(ComputeLoss(probs, y), -std::log(probs(0, label)), 1e-12);
  }
}

TEST(ComputeLoss, ShapeMismatch) {
  EXPECT_THROW(ComputeLoss(Matrix(2, 2, 0.5), Matrix(3, 2, 0.0)), ShapeError);
}

TEST(ComputeGradients, SymmetricBatchCancelsFinalBias) {
  const ModelParams p = ZeroModel();
  RngStream rng(8, 1);
  const Matrix x = RandomMatrix(6, 6, rng);
  const ForwardResult fr = Forward(p, x, Mode::kInfer);
  const Gradients g = ComputeGradients(p, fr.cache, AlternatingOneHot(6));
  EXPECT_NEAR(g.layers.back().biases[0], 0.0, 1e-15);
  EXPECT_NEAR(g.layers.back().biases[1], 0.0, 1e-15);
}

TEST(ComputeGradients, MatchesFiniteDifferencesSingleSample) {
  const Architecture arch = NoDropout(DefaultArchitecture());
  RngStream rng(9, 1);
  for (int trial = 0; trial < 10; ++trial) {
    ModelParams p = RandomParams(arch, rng);
    const Matrix x = RandomMatrix(1, 6, rng);
    Matrix y(1, 2, 0.0);
    y(0, rng.Below(2)) = 1.0;
    const Gradients g =
        ComputeGradients(p, Forward(p, x, Mode::kInfer).cache, y);
    const double h = 1e-5;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      auto check = [&](double& theta, double analytic) {
        const double saved = theta;
        theta = saved + h;
        const double up = ReferenceLoss(p, x, y);
        theta = saved - h;
        const double down = ReferenceLoss(p, x, y);
        theta = saved;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        EXPECT_LT(std::abs(numeric - analytic) / scale, 1e-4)
            << "layer " << l << " analytic " << analytic << " numeric " << numeric;
      };
      auto weights = p.layers[l].weights.values();
      auto gw = g.layers[l].weights.values();
      for (std::size_t i = 0; i < weights.size(); ++i) check(weights[i], gw[i]);
      for (std::size_t i = 0; i < p.layers[l].biases.size(); ++i) {
        check(p.layers[l].biases[i], g.layers[l].biases[i]);
      }
    }
  }
}

TEST(ComputeGradients, DuplicatedRowsLeaveGradientUnchanged) {
  RngStream rng(10, 1);
  const ModelParams p = RandomParams(DefaultArchitecture(), rng);
  const Matrix x = RandomMatrix(4, 6, rng);
  const Matrix y = AlternatingOneHot(4);
  std::vector<std::size_t> twice = {0, 0, 1, 1, 2, 2, 3, 3};
  const Gradients g1 = ComputeGradients(p, Forward(p, x, Mode::kInfer).cache, y);
  const Gradients g2 = ComputeGradients(
      p, Forward(p, x.SelectRows(twice), Mode::kInfer).cache, y.SelectRows(twice));
  for (std::size_t l = 0; l < g1.layers.size(); ++l) {
    const auto a = g1.layers[l].weights.values();
    const auto b = g2.layers[l].weights.values();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
  }
}

TEST(ComputeGradients, MaskedUnitsGetNoGradient) {
  RngStream rng(11, 1);
  const ModelParams p = RandomParams(DefaultArchitecture(), rng);
  const Matrix x = RandomMatrix(1, 6, rng);
  const ForwardResult fr = Forward(p, x, Mode::kTrain, &rng);
  const Gradients g = ComputeGradients(p, fr.cache, AlternatingOneHot(1));
  const Matrix& mask = fr.cache.dropout_masks[0];
  // A dropped unit of layer 0 feeds nothing downstream.
  for (std::size_t u = 0; u < 6; ++u) {
    if (mask(0, u) == 0.0) {
      EXPECT_EQ(g.layers[0].biases[u], 0.0);
      for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(g.layers[0].weights(u, i), 0.0);
    }
  }
}

TEST(ComputeGradients, RejectsForeignCache) {
  RngStream rng(12, 1);
  const ModelParams p = RandomParams(DefaultArchitecture(), rng);
  const ModelParams q = RandomParams(DefaultArchitecture(), rng);
  const Matrix x = RandomMatrix(2, 6, rng);
  EXPECT_THROW(ComputeGradients(q, Forward(p, x, Mode::kInfer).cache,
                                AlternatingOneHot(2)),
               StateError);
}

Gradients Filled(const ModelParams& p, double value) {
  Gradients g{ZeroTensors(p.arch)};
  for (auto& layer : g.layers) {
    for (double& v : layer.weights.values()) v = value;
    for (double& v : layer.biases) v = value;
  }
  return g;
}

TEST(AdamStep, ZeroGradientIsNoOp) {
  RngStream rng(13, 1);
  ModelParams p = InitParams(DefaultArchitecture(), rng);
  const ModelParams before = p;
  AdamState state = AdamState::Fresh(p, {});
  for (int i = 0; i < 5; ++i) AdamStep(p, Filled(p, 0.0), state);
  EXPECT_EQ(p, before);
  EXPECT_EQ(state.step_count, 5u);
}

TEST(AdamStep, FirstAndSecondStepArithmetic) {
  ModelParams p = ZeroModel();
  AdamState state = AdamState::Fresh(p, {});
  AdamStep(p, Filled(p, 1.0), state);
  EXPECT_EQ(state.step_count, 1u);
  for (const auto& layer : p.layers) {
    for (double v : layer.weights.values()) {
      EXPECT_NEAR(v, -0.001 / (1.0 + 1e-7), 1e-18);
    }
  }
  AdamStep(p, Filled(p, 1.0), state);
  for (const auto& layer : p.layers) {
    for (double v : layer.biases) {
      EXPECT_NEAR(v, -0.002, 1e-9);
      EXPECT_GT(v, -0.002);
    }
  }
}

TEST(AdamStep, NonFiniteGradientThrows) {
  ModelParams p = ZeroModel();
  AdamState state = AdamState::Fresh(p, {});
  Gradients g = Filled(p, 0.0);
  g.layers[1].biases[2] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(AdamStep(p, g, state), NumericError);
}

TEST(TrainLocal, OneBatchPerEpochWhenBatchCoversData) {
  RngStream rng(14, 1);
  const ModelParams p = InitParams(DefaultArchitecture(), rng);
  const Matrix x = RandomMatrix(10, 6, rng);
  TrainConfig config{3, 10, {}};
  EXPECT_EQ(TrainLocal(p, x, AlternatingOneHot(10), config, rng).adam_steps, 3u);
  config.batch_size = 64;
  EXPECT_EQ(TrainLocal(p, x, AlternatingOneHot(10), config, rng).adam_steps, 3u);
  config.batch_size = 4;  // 4 + 4 + 2
  EXPECT_EQ(TrainLocal(p, x, AlternatingOneHot(10), config, rng).adam_steps, 9u);
}

TEST(TrainLocal, RejectsBadArguments) {
  RngStream rng(15, 1);
  const ModelParams p = InitParams(DefaultArchitecture(), rng);
  const Matrix x = RandomMatrix(4, 6, rng);
  EXPECT_THROW(TrainLocal(p, x, AlternatingOneHot(4), {0, 4, {}}, rng), InputError);
  EXPECT_THROW(TrainLocal(p, x, AlternatingOneHot(4), {1, 0, {}}, rng), InputError);
  EXPECT_THROW(TrainLocal(p, Matrix(0, 6), Matrix(0, 2), {1, 4, {}}, rng),
               InputError);
}

TEST(TrainLocal, Deterministic) {
  RngStream init(16, 1);
  const ModelParams p = InitParams(DefaultArchitecture(), init);
  const Matrix x = RandomMatrix(50, 6, init);
  const TrainConfig config{5, 8, {}};
  RngStream a(99, StreamId::kClient);
  RngStream b(99, StreamId::kClient);
  const TrainResult ra = TrainLocal(p, x, AlternatingOneHot(50), config, a);
  const TrainResult rb = TrainLocal(p, x, AlternatingOneHot(50), config, b);
  EXPECT_EQ(ra.params, rb.params);
  EXPECT_EQ(ra.final_epoch_loss, rb.final_epoch_loss);
  EXPECT_NE(ra.params, p);
  EXPECT_TRUE(ra.params.AllFinite());
}

TEST(TrainLocal, ReducesLossOnSeparableData) {
  RngStream rng(17, 1);
  Matrix x(200, 6);
  Matrix y(200, 2, 0.0);
  for (std::size_t r = 0; r < 200; ++r) {
    const int label = static_cast<int>(r % 2);
    for (std::size_t c = 0; c < 6; ++c) x(r, c) = rng.Uniform() * 0.4 + 0.5 * label;
    y(r, label) = 1.0;
  }
  const ModelParams p = InitParams(DefaultArchitecture(), rng);
  const double before = ComputeLoss(Predict(p, x), y);
  const TrainResult trained = TrainLocal(p, x, y, {100, 16, {0.01}}, rng);
  EXPECT_LT(ComputeLoss(Predict(trained.params, x), y), before);
}

TEST(PredictClasses, ArgmaxAndTies) {
  EXPECT_EQ(ArgmaxRows(Matrix(1, 2, {0.9, 0.1})), std::vector<int>{0});
  EXPECT_EQ(ArgmaxRows(Matrix(1, 2, {0.5, 0.5})), std::vector<int>{0});
  EXPECT_EQ(ArgmaxRows(Matrix(1, 2, {0.2, 0.8})), std::vector<int>{1});
  RngStream rng(18, 1);
  EXPECT_EQ(PredictClasses(ZeroModel(), RandomMatrix(7, 6, rng)),
            std::vector<int>(7, 0));
}

}  // namespace
}  // namespace fedids::nn
