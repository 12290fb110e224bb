#ifndef FEDIDS_SYNTHETIC_H_
#define FEDIDS_SYNTHETIC_H_

#include <cstddef>

#include "fedids/dataset.h"
#include "fedids/rng.h"

namespace fedids {

// Two isotropic Gaussian blobs with unit variance in the six predictor
// columns. Class 0 is centred at the origin and class 1 at distance
// `separation` along the all-ones diagonal. Rows alternate 0, 1, 0, 1, ...
// so any prefix is balanced. Aux labels are filled with placeholders.
Dataset MakeBlobs(std::size_t rows_per_class, double separation,
                  RngStream& rng);

}  // namespace fedids

#endif  // FEDIDS_SYNTHETIC_H_
