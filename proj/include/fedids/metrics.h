#ifndef FEDIDS_METRICS_H_
#define FEDIDS_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedids/attack.h"
#include "fedids/dataset.h"
#include "fedids/nn.h"
#include "fedids/preprocess.h"

namespace fedids {

// Binary confusion counts; the malware label 1 is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionMatrix&,
                         const ConfusionMatrix&) = default;
};

// Throws InputError on a length mismatch or a label outside {0, 1}.
ConfusionMatrix Confusion(std::span<const int> predicted,
                          std::span<const int> truth);

struct Scores {
  double accuracy = 0.0;
  // Per-class scores averaged with class support as weights.
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Names of per-class scores that had a zero denominator and were set to 0,
  // e.g. "precision[1]".
  std::vector<std::string> undefined;
};

// Throws InputError for an empty confusion matrix.
Scores ComputeScores(const ConfusionMatrix& cm);

struct TestResult {
  double accuracy = 0.0;
  double loss = 0.0;
};

// Inference on already-scaled features.
TestResult EvaluateScaled(const nn::ModelParams& params,
                          const Matrix& scaled_features,
                          std::span<const int> labels);

// Scales `test` with `scaler`, then EvaluateScaled.
TestResult Evaluate(const nn::ModelParams& params, const ScalerParams& scaler,
                    const Dataset& test);

struct IterationMetrics {
  std::size_t experiment_id = 0;
  std::size_t iteration = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<double> client_losses;
  std::vector<std::string> undefined;
};

struct MetricsReport {
  std::size_t experiment_id = 0;
  std::uint64_t seed = 0;
  std::vector<IterationMetrics> iterations;
  double test_accuracy = 0.0;
  double test_loss = 0.0;
  std::optional<FlipOutcome> attack;
  std::string config_hash;
};

}  // namespace fedids

#endif  // FEDIDS_METRICS_H_
