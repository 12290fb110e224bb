#include "fedids/metrics.h"

#include <string>

#include "fedids/error.h"

namespace fedids {

namespace {

double Ratio(std::size_t num, std::size_t den, const char* name, int cls,
             std::vector<std::string>& undefined) {
  if (den == 0) {
    undefined.push_back(std::string(name) + "[" + std::to_string(cls) + "]");
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix Confusion(std::span<const int> predicted,
                          std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw InputError("prediction and truth lengths differ (" +
                     std::to_string(predicted.size()) + " vs " +
                     std::to_string(truth.size()) + ")");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int p = predicted[i];
    const int t = truth[i];
    if ((p != 0 && p != 1) || (t != 0 && t != 1)) {
      throw InputError("labels must be 0 or 1 (row " + std::to_string(i) +
                       ")");
    }
    if (t == 1) {
      p == 1 ? ++cm.tp : ++cm.fn;
    } else {
      p == 1 ? ++cm.fp : ++cm.tn;
    }
  }
  return cm;
}

Scores ComputeScores(const ConfusionMatrix& cm) {
  const std::size_t n = cm.total();
  if (n == 0) throw InputError("cannot score an empty evaluation set");
  const double total = static_cast<double>(n);

  Scores s;
  s.accuracy = static_cast<double>(cm.tp + cm.tn) / total;

  // Per class c: precision = TP_c / predicted_c, recall = TP_c / support_c.
  struct PerClass {
    std::size_t hits, predicted, support;
  };
  const PerClass classes[2] = {{cm.tn, cm.tn + cm.fn, cm.tn + cm.fp},
                               {cm.tp, cm.tp + cm.fp, cm.tp + cm.fn}};
  double precision = 0.0;
  double f1 = 0.0;
  std::size_t recall_hits = 0;
  for (int c = 0; c < 2; ++c) {
    const auto& k = classes[c];
    if (k.support == 0) continue;
    const double p = Ratio(k.hits, k.predicted, "precision", c, s.undefined);
    const double r = static_cast<double>(k.hits) /
                     static_cast<double>(k.support);
    double f = 0.0;
    if (p + r > 0.0) {
      f = 2.0 * p * r / (p + r);
    } else {
      s.undefined.push_back("f1[" + std::to_string(c) + "]");
    }
    const double weight = static_cast<double>(k.support);
    precision += weight * p;
    f1 += weight * f;
    // support_c * (TP_c / support_c), kept in integer form.
    recall_hits += k.hits;
  }
  s.precision = precision / total;
  s.f1 = f1 / total;
  s.recall = static_cast<double>(recall_hits) / total;
  return s;
}

TestResult EvaluateScaled(const nn::ModelParams& params,
                          const Matrix& scaled_features,
                          std::span<const int> labels) {
  if (labels.empty()) throw InputError("cannot evaluate on an empty test set");
  if (scaled_features.rows() != labels.size()) {
    throw ShapeError("test features and labels differ in length");
  }
  const Matrix probs = nn::Predict(params, scaled_features);
  const std::vector<int> predicted = nn::ArgmaxRows(probs);
  return {ComputeScores(Confusion(predicted, labels)).accuracy,
          nn::ComputeLoss(probs, OneHot(labels, probs.cols()))};
}

TestResult Evaluate(const nn::ModelParams& params, const ScalerParams& scaler,
                    const Dataset& test) {
  return EvaluateScaled(params, Transform(scaler, test.features), test.labels);
}

}  // namespace fedids
