#include "fedids/model_io.h"

#include <fstream>
#include <utility>

#include "fedids/error.h"

namespace fedids {

using nlohmann::json;

namespace {

const char* ActivationName(nn::Activation a) {
  return a == nn::Activation::kRelu ? "relu" : "softmax";
}

nn::Activation ParseActivation(const std::string& name) {
  if (name == "relu") return nn::Activation::kRelu;
  if (name == "softmax") return nn::Activation::kSoftmax;
  throw FormatError("unknown activation '" + name + "'");
}

}  // namespace

json ModelToJson(const nn::ModelParams& params) {
  json layers = json::array();
  for (std::size_t l = 0; l < params.arch.size(); ++l) {
    const auto& spec = params.arch[l];
    const auto& t = params.layers[l];
    layers.push_back({
        {"input_dim", spec.input_dim},
        {"output_dim", spec.output_dim},
        {"activation", ActivationName(spec.activation)},
        {"dropout", spec.dropout_after},
        {"weights", std::vector<double>(t.weights.values().begin(),
                                        t.weights.values().end())},
        {"biases", t.biases},
    });
  }
  return {{"format", "fedids-model"},
          {"version", kModelFormatVersion},
          {"layers", std::move(layers)}};
}

nn::ModelParams ModelFromJson(const json& doc) {
  try {
    if (doc.at("format") != "fedids-model") {
      throw FormatError("not a model document");
    }
    if (doc.at("version").get<int>() != kModelFormatVersion) {
      throw FormatError("unsupported model format version " +
                        doc.at("version").dump());
    }
    nn::ModelParams params;
    for (const auto& layer : doc.at("layers")) {
      nn::LayerSpec spec{layer.at("input_dim").get<std::size_t>(),
                         layer.at("output_dim").get<std::size_t>(),
                         ParseActivation(layer.at("activation")),
                         layer.at("dropout").get<double>()};
      params.arch.push_back(spec);
      params.layers.push_back(
          {Matrix(spec.output_dim, spec.input_dim,
                  layer.at("weights").get<std::vector<double>>()),
           layer.at("biases").get<std::vector<double>>()});
    }
    nn::ValidateArchitecture(params.arch);
    nn::CheckShapes(params.arch, params.layers);
    return params;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model document: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("malformed model document: ") + e.what());
  } catch (const InputError& e) {
    throw FormatError(std::string("malformed model document: ") + e.what());
  }
}

json ScalerToJson(const ScalerParams& scaler) {
  return {{"min", scaler.min}, {"max", scaler.max}};
}

ScalerParams ScalerFromJson(const json& doc) {
  try {
    ScalerParams s{doc.at("min").get<std::vector<double>>(),
                   doc.at("max").get<std::vector<double>>()};
    if (s.min.size() != s.max.size()) {
      throw FormatError("scaler min/max lengths differ");
    }
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed scaler document: ") + e.what());
  }
}

json CheckpointToJson(const Checkpoint& checkpoint) {
  return {{"iteration", checkpoint.iteration},
          {"config_hash", checkpoint.config_hash},
          {"scaler", ScalerToJson(checkpoint.scaler)},
          {"model", ModelToJson(checkpoint.model)}};
}

Checkpoint CheckpointFromJson(const json& doc) {
  try {
    return {ModelFromJson(doc.at("model")), ScalerFromJson(doc.at("scaler")),
            doc.at("config_hash").get<std::string>(),
            doc.at("iteration").get<std::size_t>()};
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

void WriteJsonFile(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace fedids
