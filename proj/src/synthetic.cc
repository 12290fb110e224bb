#include "fedids/synthetic.h"

#include <cmath>
#include <string>

namespace fedids {

Dataset MakeBlobs(std::size_t rows_per_class, double separation,
                  RngStream& rng) {
  const std::size_t dims = kPredictorColumns.size();
  const double offset = separation / std::sqrt(static_cast<double>(dims));
  Dataset data;
  for (auto name : kPredictorColumns) data.feature_names.emplace_back(name);
  const std::size_t n = 2 * rows_per_class;
  data.features = Matrix(n, dims, 0.0);
  data.labels.resize(n);
  data.aux.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const int label = static_cast<int>(r % 2);
    data.labels[r] = label;
    for (std::size_t c = 0; c < dims; ++c) {
      data.features(r, c) = rng.Normal() + (label == 1 ? offset : 0.0);
    }
    data.aux[r] = {label == 1 ? "blob" : "", label == 1 ? "spread" : "",
                   "synthetic"};
  }
  return data;
}

}  // namespace fedids
