#ifndef FEDIDS_PREPROCESS_H_
#define FEDIDS_PREPROCESS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedids/dataset.h"
#include "fedids/matrix.h"

namespace fedids {

// Per-column range seen at fit time.
struct ScalerParams {
  std::vector<double> min;
  std::vector<double> max;

  bool fitted() const { return !min.empty(); }
  friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

// Throws InputError on non-finite input or an empty matrix.
ScalerParams FitScaler(const Matrix& features);

// x' = (x - min) / (max - min); a constant column maps to 0.
Matrix Transform(const ScalerParams& scaler, const Matrix& features);
double TransformValue(const ScalerParams& scaler, std::size_t column,
                      double value);

struct SplitResult {
  Dataset train;
  Dataset test;
  // Row order after shuffling: train rows first, then test rows.
  std::vector<std::size_t> permutation;
};

// ceil(test_fraction * n), ignoring floating-point noise below 1e-9.
std::size_t TestCount(std::size_t n, double test_fraction);

// Seeded shuffle, then the last TestCount rows become the test set.
// Throws InputError if n < 2, the fraction is outside (0, 1), or either side
// would be empty.
SplitResult Split(const Dataset& data, double test_fraction,
                  std::uint64_t seed);

// Label k becomes the unit row e_k. Throws InputError for labels outside
// [0, classes).
Matrix OneHot(std::span<const int> labels, std::size_t classes = 2);

}  // namespace fedids

#endif  // FEDIDS_PREPROCESS_H_
