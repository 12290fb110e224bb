#include "fedids/preprocess.h"

#include <cmath>
#include <numeric>
#include <string>

#include "fedids/error.h"
#include "fedids/rng.h"

namespace fedids {

ScalerParams FitScaler(const Matrix& features) {
  if (features.rows() == 0) throw InputError("cannot fit scaler on no rows");
  ScalerParams s{std::vector<double>(features.row(0).begin(),
                                     features.row(0).end()),
                 std::vector<double>(features.row(0).begin(),
                                     features.row(0).end())};
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto row = features.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!std::isfinite(row[c])) {
        throw InputError("non-finite feature value in row " +
                         std::to_string(r));
      }
      s.min[c] = std::min(s.min[c], row[c]);
      s.max[c] = std::max(s.max[c], row[c]);
    }
  }
  return s;
}

double TransformValue(const ScalerParams& scaler, std::size_t column,
                      double value) {
  const double range = scaler.max[column] - scaler.min[column];
  if (range == 0.0) return 0.0;
  return (value - scaler.min[column]) / range;
}

Matrix Transform(const ScalerParams& scaler, const Matrix& features) {
  if (!scaler.fitted()) throw StateError("scaler has not been fitted");
  if (features.cols() != scaler.min.size()) {
    throw ShapeError("scaler fitted on " + std::to_string(scaler.min.size()) +
                     " columns, got " + std::to_string(features.cols()));
  }
  Matrix out(features.rows(), features.cols());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < features.cols(); ++c) {
      out(r, c) = TransformValue(scaler, c, features(r, c));
    }
  }
  return out;
}

std::size_t TestCount(std::size_t n, double test_fraction) {
  return static_cast<std::size_t>(
      std::ceil(test_fraction * static_cast<double>(n) - 1e-9));
}

SplitResult Split(const Dataset& data, double test_fraction,
                  std::uint64_t seed) {
  const std::size_t n = data.size();
  if (n < 2) throw InputError("need at least 2 rows to split");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InputError("test fraction must lie in (0, 1)");
  }
  const std::size_t n_test = TestCount(n, test_fraction);
  if (n_test == 0 || n_test >= n) {
    throw InputError("test fraction leaves an empty train or test set");
  }

  SplitResult result;
  result.permutation.resize(n);
  std::iota(result.permutation.begin(), result.permutation.end(),
            std::size_t{0});
  RngStream rng(seed, StreamId::kSplit);
  rng.Shuffle(std::span<std::size_t>(result.permutation));

  const std::span<const std::size_t> perm(result.permutation);
  result.train = data.Select(perm.first(n - n_test));
  result.test = data.Select(perm.subspan(n - n_test));
  return result;
}

Matrix OneHot(std::span<const int> labels, std::size_t classes) {
  Matrix out(labels.size(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw InputError("label " + std::to_string(labels[i]) + " at row " +
                       std::to_string(i) + " is out of range");
    }
    out(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return out;
}

}  // namespace fedids
