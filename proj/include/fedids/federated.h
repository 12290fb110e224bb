#ifndef FEDIDS_FEDERATED_H_
#define FEDIDS_FEDERATED_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedids/attack.h"
#include "fedids/dataset.h"
#include "fedids/metrics.h"
#include "fedids/nn.h"
#include "fedids/preprocess.h"

namespace fedids::fed {

// Client i trains on training rows [begin, end).
struct ClientPartition {
  std::size_t client_id = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const ClientPartition&,
                         const ClientPartition&) = default;
};

struct PartitionPlan {
  std::vector<ClientPartition> clients;
  // Rows used to pretrain the server model.
  std::size_t reserve_begin = 0;
  std::size_t reserve_end = 0;

  std::size_t reserve_size() const { return reserve_end - reserve_begin; }
};

// Contiguous shards of s = floor(train_size / (n_clients + 1)) rows each;
// the tail [n_clients * s, train_size) is the server reserve.
// Throws InputError if n_clients == 0 or train_size < n_clients + 1.
PartitionPlan Partition(std::size_t train_size, std::size_t n_clients);

// General form. With `server_fraction` set, the reserve holds
// round(fraction * train_size) rows and the clients split the rest evenly
// (floor). With `overlap` the reserve is instead the first
// round(fraction * train_size) rows (defaulting to one shard), shared with
// the first client(s).
PartitionPlan Partition(std::size_t train_size, std::size_t n_clients,
                        std::optional<double> server_fraction, bool overlap);

struct FederationConfig {
  std::size_t n_clients = 4;
  std::size_t iterations = 50;
  nn::TrainConfig local;
  nn::Architecture arch = nn::DefaultArchitecture();
  // Unset: reserve is whatever the default partition leaves, 1/(n+1).
  std::optional<double> server_pretrain_fraction;
  bool overlap_server_reserve = false;
  // Seeds model initialization, shuffling and dropout.
  std::uint64_t seed = 123;
  // Upper bound on clients trained concurrently within a round.
  std::size_t threads = 1;
  // When non-empty, a checkpoint is written here after every round.
  std::filesystem::path checkpoint_dir;
  std::string config_hash;
};

// Throws UsageError listing every invalid field.
void ValidateConfig(const FederationConfig& config);

// Scaled training data as the clients see it.
struct TrainingSet {
  Matrix features;
  std::vector<int> labels;
};

// Random stream owned by one client in one round; depends only on the key.
RngStream ClientStream(std::uint64_t seed, std::size_t client_id,
                       std::size_t iteration);
RngStream ServerStream(std::uint64_t seed);

// Fresh model trained once over the reserve rows.
nn::ModelParams PretrainServer(const TrainingSet& reserve,
                               const nn::Architecture& arch,
                               const nn::TrainConfig& local, RngStream& rng);

// Coordinate-wise mean of client models. Throws ShapeError when the models
// disagree in shape, InputError when there are none.
nn::ModelParams Aggregate(std::span<const nn::ModelParams> client_models);

struct RoundTrace {
  std::size_t iteration = 0;
  std::vector<double> client_losses;
  // Path of the checkpoint written for this round, if any.
  std::string checkpoint;
  IterationMetrics metrics;
};

struct RoundResult {
  nn::ModelParams global;
  RoundTrace trace;
};

// One federated round: every client trains a copy of `global` on its shard
// with a fresh optimizer, then the server averages the results. Training
// metrics of the averaged model are computed on all of `train`.
RoundResult RunRound(const nn::ModelParams& global,
                     std::span<const ClientPartition> partitions,
                     const TrainingSet& train, const FederationConfig& config,
                     std::size_t iteration);

// Raw split, fitted scaler, and the scaled matrices derived from them.
struct PreparedData {
  Dataset train;
  Dataset test;
  ScalerParams scaler;
  Matrix train_scaled;
  Matrix test_scaled;
};

// Splits `data` with `split_seed` and min-max scales it. The scaler is fitted
// on all rows unless `fit_on_train_only` is set.
PreparedData Prepare(const Dataset& data, double test_fraction,
                     std::uint64_t split_seed, bool fit_on_train_only);

// Flips labels inside the target client's shard of `labels`, reading ports
// from the raw or scaled training features as the attack mode requires.
FlipOutcome PoisonClient(std::span<int> labels, const PreparedData& data,
                         std::span<const ClientPartition> partitions,
                         const AttackSpec& spec);

using RoundObserver = std::function<void(const RoundTrace&)>;

// Full run: optional poisoning, server pretraining, `iterations` rounds and a
// final test evaluation.
MetricsReport RunExperiment(const PreparedData& data,
                            const FederationConfig& config,
                            const std::optional<AttackSpec>& attack,
                            std::size_t experiment_id = 0,
                            const RoundObserver& observer = {});

}  // namespace fedids::fed

#endif  // FEDIDS_FEDERATED_H_
