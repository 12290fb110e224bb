#ifndef FEDIDS_MODEL_IO_H_
#define FEDIDS_MODEL_IO_H_

#include <filesystem>
#include <string>

#include "json.hpp"

#include "fedids/nn.h"
#include "fedids/preprocess.h"

namespace fedids {

// Model documents are JSON:
//   {"format": "fedids-model", "version": 1,
//    "layers": [{"input_dim", "output_dim", "activation", "dropout",
//                "weights": [row-major output_dim*input_dim values],
//                "biases": [...]}, ...]}
inline constexpr int kModelFormatVersion = 1;

nlohmann::json ModelToJson(const nn::ModelParams& params);
nn::ModelParams ModelFromJson(const nlohmann::json& doc);

nlohmann::json ScalerToJson(const ScalerParams& scaler);
ScalerParams ScalerFromJson(const nlohmann::json& doc);

// A per-iteration checkpoint: model, the scaler it expects, and the hash of
// the configuration that produced it.
struct Checkpoint {
  nn::ModelParams model;
  ScalerParams scaler;
  std::string config_hash;
  std::size_t iteration = 0;
};

nlohmann::json CheckpointToJson(const Checkpoint& checkpoint);
Checkpoint CheckpointFromJson(const nlohmann::json& doc);

void WriteJsonFile(const std::filesystem::path& path,
                   const nlohmann::json& doc);
nlohmann::json ReadJsonFile(const std::filesystem::path& path);

}  // namespace fedids

#endif  // FEDIDS_MODEL_IO_H_
