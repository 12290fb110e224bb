#ifndef FEDIDS_CONFIG_H_
#define FEDIDS_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fedids/attack.h"
#include "fedids/federated.h"

namespace fedids {

// Everything that determines the outcome of a `train` run. Defaults are the
// reference configuration: 4 clients, batch 64, 200 local epochs, 50 rounds,
// learning rate 0.001, 10% test split with seed 123, 10 repetitions.
struct ExperimentConfig {
  // Assembled dataset CSV, a directory of extracted CSVs, or a directory of
  // captures.
  std::string input;
  std::size_t rows_per_group = 2000;
  double test_fraction = 0.10;
  std::uint64_t seed = 123;
  std::size_t n_clients = 4;
  std::size_t batch_size = 64;
  std::size_t epochs = 200;
  std::size_t iterations = 50;
  double learning_rate = 0.001;
  std::size_t repetitions = 10;
  // Unset means the default partition reserve, 1 / (n_clients + 1).
  std::optional<double> server_pretrain_fraction;
  bool overlap = false;
  bool fit_scaler_on_train = false;

  bool attack_enabled = false;
  std::size_t attack_client = 0;
  std::int64_t attack_port = 23;
  MatchMode attack_mode = MatchMode::kRawPort;
  std::optional<double> attack_value;
  int attack_decimals = 6;

  // Run-environment settings; they never change results and are left out of
  // the echo and the hash.
  std::string output_dir = "results";
  bool checkpoint = false;
};

// Keys accepted in config files and as --key flags, in echo order.
const std::vector<std::string_view>& ConfigKeys();

// Sets one field from its textual form. Returns an error message, or an
// empty string on success.
std::string SetConfigValue(ExperimentConfig& config, std::string_view key,
                           std::string_view value);

// Parses `key = value` lines; '#' starts a comment, values may be quoted.
// Collects every problem and throws a single UsageError listing them.
void ApplyConfigText(ExperimentConfig& config, std::string_view text,
                     std::string_view origin);
void ApplyConfigFile(ExperimentConfig& config,
                     const std::filesystem::path& path);

// Applies overrides in order, collecting all problems as above.
void ApplyOverrides(ExperimentConfig& config,
                    const std::vector<std::pair<std::string, std::string>>&
                        overrides);

// Throws UsageError listing every invalid field.
void ValidateConfig(const ExperimentConfig& config);

// The result-determining fields as a config file that reproduces the run.
std::string ConfigToText(const ExperimentConfig& config);
nlohmann::json ConfigToJson(const ExperimentConfig& config);

// FNV-1a of ConfigToText, as 16 hex digits.
std::string ConfigHash(const ExperimentConfig& config);

// Seed for repetition `index`, derived from the base seed.
std::uint64_t RepetitionSeed(std::uint64_t base_seed, std::size_t index);

fed::FederationConfig ToFederationConfig(const ExperimentConfig& config,
                                         std::uint64_t seed);
std::optional<AttackSpec> ToAttackSpec(const ExperimentConfig& config);

}  // namespace fedids

#endif  // FEDIDS_CONFIG_H_
