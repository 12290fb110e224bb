#include "fedids/federated.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "fedids/error.h"
#include "fedids/model_io.h"
#include "fedids/parallel.h"

namespace fedids::fed {

PartitionPlan Partition(std::size_t train_size, std::size_t n_clients) {
  return Partition(train_size, n_clients, std::nullopt, false);
}

PartitionPlan Partition(std::size_t train_size, std::size_t n_clients,
                        std::optional<double> server_fraction, bool overlap) {
  if (n_clients == 0) throw InputError("need at least one client");
  if (server_fraction && !(*server_fraction >= 0.0 && *server_fraction < 1.0)) {
    throw InputError("server pretrain fraction must lie in [0, 1)");
  }
  const auto reserve_rows = [&](double f) {
    return static_cast<std::size_t>(
        std::llround(f * static_cast<double>(train_size)));
  };

  std::size_t shard = 0;
  PartitionPlan plan;
  if (!server_fraction || overlap) {
    if (train_size < n_clients + 1) {
      throw InputError("training set of " + std::to_string(train_size) +
                       " rows is too small for " + std::to_string(n_clients) +
                       " clients plus a server reserve");
    }
    shard = train_size / (n_clients + 1);
    if (overlap) {
      plan.reserve_begin = 0;
      plan.reserve_end =
          server_fraction ? reserve_rows(*server_fraction) : shard;
    } else {
      plan.reserve_begin = n_clients * shard;
      plan.reserve_end = train_size;
    }
  } else {
    const std::size_t reserve = reserve_rows(*server_fraction);
    shard = (train_size - std::min(reserve, train_size)) / n_clients;
    if (shard == 0) {
      throw InputError("training set of " + std::to_string(train_size) +
                       " rows leaves empty client shards");
    }
    plan.reserve_begin = n_clients * shard;
    plan.reserve_end = train_size;
  }
  for (std::size_t i = 0; i < n_clients; ++i) {
    plan.clients.push_back({i, i * shard, (i + 1) * shard});
  }
  return plan;
}

void ValidateConfig(const FederationConfig& config) {
  std::vector<std::string> problems;
  if (config.n_clients < 1) problems.push_back("n_clients must be >= 1");
  if (config.iterations < 1) problems.push_back("iterations must be >= 1");
  if (config.local.epochs < 1) problems.push_back("epochs must be >= 1");
  if (config.local.batch_size < 1) {
    problems.push_back("batch_size must be >= 1");
  }
  if (!(config.local.adam.learning_rate > 0.0)) {
    problems.push_back("learning_rate must be > 0");
  }
  if (config.server_pretrain_fraction &&
      !(*config.server_pretrain_fraction >= 0.0 &&
        *config.server_pretrain_fraction < 1.0)) {
    problems.push_back("server_pretrain_fraction must lie in [0, 1)");
  }
  try {
    nn::ValidateArchitecture(config.arch);
  } catch (const ShapeError& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) {
    std::string msg = "invalid federation config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw UsageError(msg);
  }
}

RngStream ClientStream(std::uint64_t seed, std::size_t client_id,
                       std::size_t iteration) {
  return RngStream::Derive(
      seed, {static_cast<std::uint64_t>(StreamId::kClient), client_id,
             iteration});
}

RngStream ServerStream(std::uint64_t seed) {
  return RngStream(seed, StreamId::kServer);
}

nn::ModelParams PretrainServer(const TrainingSet& reserve,
                               const nn::Architecture& arch,
                               const nn::TrainConfig& local, RngStream& rng) {
  if (reserve.features.rows() == 0) {
    throw InputError("server reserve is empty");
  }
  nn::ModelParams fresh = nn::InitParams(arch, rng);
  return nn::TrainLocal(fresh, reserve.features, OneHot(reserve.labels),
                        local, rng)
      .params;
}

nn::ModelParams Aggregate(std::span<const nn::ModelParams> client_models) {
  if (client_models.empty()) throw InputError("no client models to average");
  const nn::ModelParams& first = client_models.front();
  for (const auto& m : client_models) {
    if (m.arch != first.arch) {
      throw ShapeError("aggregation: client architectures differ");
    }
    nn::CheckShapes(m.arch, m.layers);
  }

  nn::ModelParams mean = first;
  const double n = static_cast<double>(client_models.size());
  std::vector<double> column(client_models.size());
  // Sorted summation: the mean does not depend on client order.
  auto average = [&](std::span<double> out, auto&& values_of) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (std::size_t c = 0; c < client_models.size(); ++c) {
        column[c] = values_of(client_models[c])[i];
      }
      std::ranges::sort(column);
      double sum = 0.0;
      for (double v : column) sum += v;
      out[i] = sum / n;
    }
  };
  for (std::size_t l = 0; l < mean.layers.size(); ++l) {
    average(mean.layers[l].weights.values(),
            [l](const nn::ModelParams& m) { return m.layers[l].weights.values(); });
    average(std::span<double>(mean.layers[l].biases),
            [l](const nn::ModelParams& m) {
              return std::span<const double>(m.layers[l].biases);
            });
  }
  return mean;
}

RoundResult RunRound(const nn::ModelParams& global,
                     std::span<const ClientPartition> partitions,
                     const TrainingSet& train, const FederationConfig& config,
                     std::size_t iteration) {
  if (partitions.empty()) throw InputError("round has no clients");
  for (const auto& p : partitions) {
    if (p.begin >= p.end || p.end > train.features.rows()) {
      throw InputError("client " + std::to_string(p.client_id) +
                       " shard is empty or out of range");
    }
  }

  std::vector<nn::ModelParams> models(partitions.size());
  std::vector<double> losses(partitions.size());
  ParallelFor(partitions.size(), config.threads, [&](std::size_t k) {
    const ClientPartition& p = partitions[k];
    RngStream rng = ClientStream(config.seed, p.client_id, iteration);
    const Matrix x = train.features.RowRange(p.begin, p.end);
    const Matrix y = OneHot(std::span<const int>(train.labels)
                                .subspan(p.begin, p.end - p.begin));
    nn::TrainResult result = nn::TrainLocal(global, x, y, config.local, rng);
    models[k] = std::move(result.params);
    losses[k] = result.final_epoch_loss;
  });

  RoundResult out{Aggregate(models), {}};
  out.trace.iteration = iteration;
  out.trace.client_losses = losses;

  const std::vector<int> predicted =
      nn::PredictClasses(out.global, train.features);
  Scores scores = ComputeScores(Confusion(predicted, train.labels));
  IterationMetrics& m = out.trace.metrics;
  m.iteration = iteration;
  m.accuracy = scores.accuracy;
  m.precision = scores.precision;
  m.recall = scores.recall;
  m.f1 = scores.f1;
  m.client_losses = losses;
  m.undefined = std::move(scores.undefined);
  return out;
}

PreparedData Prepare(const Dataset& data, double test_fraction,
                     std::uint64_t split_seed, bool fit_on_train_only) {
  SplitResult split = Split(data, test_fraction, split_seed);
  PreparedData out;
  out.scaler = FitScaler(fit_on_train_only ? split.train.features
                                           : data.features);
  out.train_scaled = Transform(out.scaler, split.train.features);
  out.test_scaled = Transform(out.scaler, split.test.features);
  out.train = std::move(split.train);
  out.test = std::move(split.test);
  return out;
}

FlipOutcome PoisonClient(std::span<int> labels, const PreparedData& data,
                         std::span<const ClientPartition> partitions,
                         const AttackSpec& spec) {
  if (spec.target_client >= partitions.size()) {
    throw InputError("attack targets client " +
                     std::to_string(spec.target_client) + " but only " +
                     std::to_string(partitions.size()) + " exist");
  }
  const ClientPartition& shard = partitions[spec.target_client];
  const std::size_t column = data.train.FeatureIndex(spec.feature);
  const Matrix& source = spec.mode == MatchMode::kRawPort
                             ? data.train.features
                             : data.train_scaled;
  std::vector<double> ports;
  ports.reserve(shard.size());
  for (std::size_t r = shard.begin; r < shard.end; ++r) {
    ports.push_back(source(r, column));
  }
  return ApplyLabelFlip(labels.subspan(shard.begin, shard.size()), ports, spec,
                        &data.scaler, column);
}

MetricsReport RunExperiment(const PreparedData& data,
                            const FederationConfig& config,
                            const std::optional<AttackSpec>& attack,
                            std::size_t experiment_id,
                            const RoundObserver& observer) {
  ValidateConfig(config);
  if (data.train_scaled.cols() != config.arch.front().input_dim) {
    throw ShapeError("data has " + std::to_string(data.train_scaled.cols()) +
                     " features, model expects " +
                     std::to_string(config.arch.front().input_dim));
  }
  const PartitionPlan plan =
      Partition(data.train.size(), config.n_clients,
                config.server_pretrain_fraction, config.overlap_server_reserve);

  MetricsReport report;
  report.experiment_id = experiment_id;
  report.seed = config.seed;
  report.config_hash = config.config_hash;

  TrainingSet train{data.train_scaled, data.train.labels};
  if (attack) {
    report.attack = PoisonClient(train.labels, data, plan.clients, *attack);
  }

  RngStream server_rng = ServerStream(config.seed);
  nn::ModelParams global;
  if (plan.reserve_size() == 0) {
    global = nn::InitParams(config.arch, server_rng);
  } else {
    TrainingSet reserve{
        train.features.RowRange(plan.reserve_begin, plan.reserve_end),
        std::vector<int>(
            train.labels.begin() + static_cast<long>(plan.reserve_begin),
            train.labels.begin() + static_cast<long>(plan.reserve_end))};
    global = PretrainServer(reserve, config.arch, config.local, server_rng);
  }

  if (!config.checkpoint_dir.empty()) {
    std::filesystem::create_directories(config.checkpoint_dir);
  }
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    RoundResult round = RunRound(global, plan.clients, train, config, it);
    global = std::move(round.global);
    round.trace.metrics.experiment_id = experiment_id;
    if (!config.checkpoint_dir.empty()) {
      const auto path =
          config.checkpoint_dir / ("experiment_" + std::to_string(experiment_id) +
                                   "_iter_" + std::to_string(it) + ".json");
      WriteJsonFile(path, CheckpointToJson({global, data.scaler,
                                            config.config_hash, it}));
      round.trace.checkpoint = path.string();
    }
    if (observer) observer(round.trace);
    report.iterations.push_back(std::move(round.trace.metrics));
  }

  const TestResult test =
      EvaluateScaled(global, data.test_scaled, data.test.labels);
  report.test_accuracy = test.accuracy;
  report.test_loss = test.loss;
  return report;
}

}  // namespace fedids::fed
