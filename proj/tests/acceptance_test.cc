// Acceptance suite: one PASS / FAIL / SKIP line per criterion. Exits non-zero
// if any criterion fails. Criterion 9 needs the MedBIoT fine-grained CSVs in
// the directory named by FEDIDS_MEDBIOT_DIR and is skipped otherwise.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fedids/commands.h"
#include "fedids/error.h"
#include "fedids/extract.h"
#include "fedids/federated.h"
#include "fedids/model_io.h"
#include "fedids/synthetic.h"
#include "test_util.h"

namespace {

namespace fs = std::filesystem;
using namespace fedids;

const fs::path kData = FEDIDS_TEST_DATA;

enum class Verdict { kPass, kFail, kSkip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome Check(bool ok, std::string detail) {
  return {ok ? Verdict::kPass : Verdict::kFail, std::move(detail)};
}

std::string Fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

// 1. Analytic gradients against central differences of an independent loss.
Outcome GradientCheck() {
  const auto start = std::chrono::steady_clock::now();
  const nn::Architecture arch = testing::NoDropout(nn::DefaultArchitecture());
  RngStream rng(2024, StreamId::kSynthetic);
  double worst = 0.0;
  for (int instance = 0; instance < 50; ++instance) {
    nn::ModelParams p = nn::InitParams(arch, rng);
    for (auto& layer : p.layers) {
      for (double& b : layer.biases) b = rng.Uniform(-0.5, 0.5);
    }
    const std::size_t rows = 1 + rng.Below(16);
    Matrix x(rows, 6);
    for (double& v : x.values()) v = rng.Uniform(-2.0, 2.0);
    Matrix y(rows, 2, 0.0);
    for (std::size_t r = 0; r < rows; ++r) y(r, rng.Below(2)) = 1.0;

    const nn::Gradients g = nn::ComputeGradients(
        p, nn::Forward(p, x, nn::Mode::kInfer).cache, y);
    const double h = 1e-5;
    auto probe = [&](double& theta, double analytic) {
      const double saved = theta;
      theta = saved + h;
      const double up = testing::ReferenceLoss(p, x, y);
      theta = saved - h;
      const double down = testing::ReferenceLoss(p, x, y);
      theta = saved;
      const double numeric = (up - down) / (2 * h);
      const double scale =
          std::max({std::abs(numeric), std::abs(analytic), 1e-8});
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
    };
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      auto w = p.layers[l].weights.values();
      auto gw = g.layers[l].weights.values();
      for (std::size_t i = 0; i < w.size(); ++i) probe(w[i], gw[i]);
      for (std::size_t i = 0; i < p.layers[l].biases.size(); ++i) {
        probe(p.layers[l].biases[i], g.layers[l].biases[i]);
      }
    }
  }
  const double elapsed = Seconds(start);
  return Check(worst < 1e-4 && elapsed < 10.0,
               Fmt("max relative error %.3g over 50 instances, %.2f s", worst,
                   elapsed));
}

// 2. Elementwise BCE mean equals -ln(p_correct) on softmax rows.
Outcome LossIdentity() {
  RngStream rng(7, StreamId::kSynthetic);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double z0 = rng.Uniform(-6.0, 6.0);
    const double z1 = rng.Uniform(-6.0, 6.0);
    const double m = std::max(z0, z1);
    const double e0 = std::exp(z0 - m);
    const double e1 = std::exp(z1 - m);
    const Matrix probs(1, 2, {e0 / (e0 + e1), e1 / (e0 + e1)});
    const std::size_t label = rng.Below(2);
    Matrix y(1, 2, 0.0);
    y(0, label) = 1.0;
    worst = std::max(worst, std::abs(nn::ComputeLoss(probs, y) +
                                     std::log(probs(0, label))));
  }
  return Check(worst <= 1e-12, Fmt("max deviation %.3g over 10^4 rows", worst));
}

// 3. Weighted recall equals accuracy; every score in [0, 1].
Outcome MetricIdentity() {
  RngStream rng(8, StreamId::kSynthetic);
  std::size_t mismatches = 0;
  std::size_t out_of_range = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.Below(200);
    std::vector<int> pred(n);
    std::vector<int> truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = static_cast<int>(rng.Below(2));
      truth[i] = static_cast<int>(rng.Below(2));
    }
    const Scores s = ComputeScores(Confusion(pred, truth));
    if (s.recall != s.accuracy) ++mismatches;
    for (double v : {s.accuracy, s.precision, s.recall, s.f1}) {
      if (!(v >= 0.0 && v <= 1.0)) ++out_of_range;
    }
  }
  return Check(mismatches == 0 && out_of_range == 0,
               Fmt("%g recall/accuracy mismatches, %g scores out of range",
                   static_cast<double>(mismatches),
                   static_cast<double>(out_of_range)));
}

fed::TrainingSet ScaledBlobs(std::size_t rows_per_class, std::uint64_t seed) {
  RngStream rng(seed, StreamId::kSynthetic);
  const Dataset d = MakeBlobs(rows_per_class, 4.0, rng);
  return {Transform(FitScaler(d.features), d.features), d.labels};
}

// 4. FedAvg degenerates to a single client.
Outcome FedAvgDegeneracy() {
  const fed::TrainingSet data = ScaledBlobs(100, 9);
  fed::FederationConfig config;
  config.local = {5, 64, {}};
  RngStream init_rng(10, StreamId::kServer);
  const nn::ModelParams global = nn::InitParams(config.arch, init_rng);

  // (a) Four clients with the same shard and the same stream key.
  const std::vector<fed::ClientPartition> four(4, {0, 0, 200});
  const std::vector<fed::ClientPartition> one = {{0, 0, 200}};
  const nn::ModelParams avg = fed::RunRound(global, four, data, config, 1).global;
  const nn::ModelParams single =
      fed::RunRound(global, one, data, config, 1).global;
  double worst = 0.0;
  for (std::size_t l = 0; l < avg.layers.size(); ++l) {
    const auto a = avg.layers[l].weights.values();
    const auto b = single.layers[l].weights.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
      worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    for (std::size_t i = 0; i < avg.layers[l].biases.size(); ++i) {
      worst = std::max(worst, std::abs(avg.layers[l].biases[i] -
                                       single.layers[l].biases[i]));
    }
  }

  // (b) A one-client federation with no server reserve, one round, against
  // centralized training with the same streams.
  RngStream blob_rng(11, StreamId::kSynthetic);
  const fed::PreparedData prepared =
      fed::Prepare(MakeBlobs(150, 4.0, blob_rng), 0.1, 123, false);
  const fs::path dir = testing::TempDir("acceptance_c4");
  fed::FederationConfig central_config;
  central_config.n_clients = 1;
  central_config.iterations = 1;
  central_config.local = {5, 64, {}};
  central_config.server_pretrain_fraction = 0.0;
  central_config.seed = 31;
  central_config.checkpoint_dir = dir;
  fed::RunExperiment(prepared, central_config, std::nullopt, 1);
  const nn::ModelParams federated =
      CheckpointFromJson(ReadJsonFile(dir / "experiment_1_iter_1.json")).model;
  RngStream server = fed::ServerStream(31);
  const nn::ModelParams start = nn::InitParams(central_config.arch, server);
  RngStream client = fed::ClientStream(31, 0, 1);
  const nn::ModelParams central =
      nn::TrainLocal(start, prepared.train_scaled,
                     OneHot(prepared.train.labels), central_config.local, client)
          .params;
  const bool bit_exact = federated == central;
  return Check(worst <= 1e-12 && bit_exact,
               Fmt("(a) max |4-client mean - single| = %.3g; (b) one-client "
                   "federation bit-identical to central: ",
                   worst) +
                   (bit_exact ? "yes" : "no"));
}

// 5. Desk-scale learning on 6-D Gaussian blobs 4 sigma apart.
Outcome DeskScaleLearning() {
  const auto start = std::chrono::steady_clock::now();
  RngStream rng(12, StreamId::kSynthetic);
  const Dataset blobs = MakeBlobs(1100, 4.0, rng);
  const fed::PreparedData data =
      fed::Prepare(blobs, 200.0 / 2200.0, 123, false);
  if (data.train.size() != 2000 || data.test.size() != 200) {
    return Check(false, "unexpected split sizes");
  }
  fed::FederationConfig config;
  config.n_clients = 4;
  config.iterations = 20;
  config.local = {20, 64, {0.001}};
  config.threads = 1;
  const MetricsReport report = fed::RunExperiment(data, config, std::nullopt);
  const double train_acc = report.iterations.back().accuracy;
  const double elapsed = Seconds(start);
  return Check(train_acc >= 0.95 && report.test_accuracy >= 0.95 &&
                   elapsed < 60.0,
               Fmt("train accuracy %.4f, test accuracy %.4f, %.1f s", train_acc,
                   report.test_accuracy, elapsed));
}

// 6. Label flipping on client 0 of the blob dataset.
Outcome PoisoningPipeline() {
  RngStream rng(13, StreamId::kSynthetic);
  fed::PreparedData data =
      fed::Prepare(MakeBlobs(1100, 4.0, rng), 200.0 / 2200.0, 123, false);
  const std::size_t port = data.train.FeatureIndex("tcp_srcport");
  const fed::PartitionPlan plan = fed::Partition(data.train.size(), 4);
  const fed::ClientPartition& shard = plan.clients[0];

  // Port-like column: 30% of client 0's positive rows get port 23, plus
  // port-23 canaries among its negatives and in every other shard.
  const std::vector<double> common = {80, 443, 1883, 8080, 49152};
  std::vector<std::size_t> positives;
  for (std::size_t r = 0; r < data.train.size(); ++r) {
    data.train.features(r, port) = common[rng.Below(common.size())];
    const bool inside = r >= shard.begin && r < shard.end;
    if (inside && data.train.labels[r] == 1) positives.push_back(r);
    if (!inside && rng.Below(5) == 0) data.train.features(r, port) = 23;
    if (inside && data.train.labels[r] == 0 && rng.Below(5) == 0) {
      data.train.features(r, port) = 23;
    }
  }
  rng.Shuffle(std::span<std::size_t>(positives));
  const std::size_t target = static_cast<std::size_t>(
      std::llround(0.3 * static_cast<double>(positives.size())));
  for (std::size_t i = 0; i < target; ++i) {
    data.train.features(positives[i], port) = 23;
  }
  data.scaler = FitScaler(data.train.features);
  data.train_scaled = Transform(data.scaler, data.train.features);

  std::size_t brute = 0;
  for (std::size_t r = shard.begin; r < shard.end; ++r) {
    if (data.train.features(r, port) == 23 && data.train.labels[r] == 1) ++brute;
  }

  std::vector<int> labels = data.train.labels;
  const FlipOutcome first = fed::PoisonClient(labels, data, plan.clients, {});
  const FlipOutcome again = fed::PoisonClient(labels, data, plan.clients, {});
  std::size_t outside_changed = 0;
  for (std::size_t r = shard.end; r < labels.size(); ++r) {
    if (labels[r] != data.train.labels[r]) ++outside_changed;
  }
  AttackSpec scaled;
  scaled.mode = MatchMode::kScaledValue;
  std::vector<int> scaled_labels = data.train.labels;
  const FlipOutcome via_scaled =
      fed::PoisonClient(scaled_labels, data, plan.clients, scaled);

  fed::FederationConfig config;
  config.iterations = 1;
  config.local = {1, 64, {}};
  const MetricsReport report = fed::RunExperiment(data, config, AttackSpec{});

  const bool ok = target > 0 && first.changed == brute && brute == target &&
                  again.changed == 0 && outside_changed == 0 &&
                  via_scaled == first && report.attack == first;
  return Check(ok, Fmt("changed %g (brute force %g), reapplied %g", 
                       static_cast<double>(first.changed),
                       static_cast<double>(brute),
                       static_cast<double>(again.changed)) +
                       Fmt(", rows changed outside client 0: %g",
                           static_cast<double>(outside_changed)));
}

std::string ReportWithoutTimestamp(const fs::path& file) {
  nlohmann::json j = nlohmann::json::parse(testing::ReadFile(file));
  j.erase("generated_at");
  return j.dump(2);
}

// 7. Two train runs, one and four workers, give identical reports.
Outcome Determinism() {
  const fs::path dir = testing::TempDir("acceptance_c7");
  RngStream rng(14, StreamId::kSynthetic);
  WriteDatasetCsv(dir / "blobs.csv", MakeBlobs(300, 4.0, rng));
  ExperimentConfig config;
  config.input = (dir / "blobs.csv").string();
  config.repetitions = 4;
  config.iterations = 3;
  config.epochs = 4;
  config.attack_enabled = true;
  std::ostringstream log;
  std::vector<fs::path> outputs;
  for (std::size_t threads : {1u, 4u, 1u}) {
    config.output_dir = (dir / ("run_" + std::to_string(outputs.size()))).string();
    RunTrain(config, threads, log);
    outputs.emplace_back(config.output_dir);
  }
  std::size_t differing = 0;
  for (std::size_t k = 1; k <= config.repetitions; ++k) {
    const std::string name = "report_" + std::to_string(k) + ".json";
    const std::string base = ReportWithoutTimestamp(outputs[0] / name);
    for (std::size_t i = 1; i < outputs.size(); ++i) {
      if (ReportWithoutTimestamp(outputs[i] / name) != base) ++differing;
    }
  }
  return Check(differing == 0,
               Fmt("%g of 8 report comparisons differ (workers 1, 4, 1)",
                   static_cast<double>(differing)));
}

// 8. Golden extraction and the truncation error.
Outcome ExtractorFidelity() {
  const fs::path dir = testing::TempDir("acceptance_c8");
  const std::string golden = testing::ReadFile(kData / "golden.csv");
  std::string mismatched;
  for (const char* name :
       {"golden_le.pcap", "golden_be.pcap", "golden_nsec_be.pcap"}) {
    pcap::ConvertCapture(kData / name, dir / "out.csv");
    if (testing::ReadFile(dir / "out.csv") != golden) {
      mismatched += std::string(" ") + name;
    }
  }
  const std::string bytes = testing::ReadFile(kData / "golden_le.pcap");
  const std::vector<std::uint8_t> raw(bytes.begin(), bytes.end());
  const std::vector<pcap::RawPacket> packets = pcap::ReadAll(raw);
  std::string truncation;
  try {
    pcap::Extract(packets.at(3));
  } catch (const TruncationError& e) {
    truncation = e.what();
  }
  const bool named = truncation.find("packet index 3") != std::string::npos;
  return Check(!golden.empty() && mismatched.empty() && named,
               "golden match: " +
                   (mismatched.empty() ? std::string("all 3 captures")
                                       : "differs for" + mismatched) +
                   "; truncation error: " +
                   (truncation.empty() ? std::string("none") : truncation));
}

// 9. Dataset assembly and reference runs on MedBIoT.
Outcome MedBiot() {
  const char* dir = std::getenv("FEDIDS_MEDBIOT_DIR");
  if (dir == nullptr || !fs::is_directory(dir)) {
    return {Verdict::kSkip, "FEDIDS_MEDBIOT_DIR not set"};
  }
  const std::vector<RecordGroup> groups = LoadGroups(dir);
  RngStream rng(123, StreamId::kAssemble);
  const std::vector<PacketRecord> sampled = Assemble(groups, 2000, rng);
  const Dataset data = DropNulls(sampled);
  const SplitResult split = Split(data, 0.10, 123);
  std::ostringstream detail;
  detail << groups.size() << " groups, " << sampled.size() << " sampled, "
         << data.size() << " after drop (" << data.CountLabel(1) << " / "
         << data.CountLabel(0) << "), split " << split.train.size() << " / "
         << split.test.size();
  bool ok = sampled.size() == 24000 && data.size() == 23793 &&
            data.CountLabel(1) == 11942 && data.CountLabel(0) == 11851 &&
            split.train.size() == 21413 && split.test.size() == 2380;

  const fed::PreparedData prepared = fed::Prepare(data, 0.10, 123, false);
  fed::FederationConfig config;
  config.threads = EffectiveThreads(0);
  const MetricsReport clean = fed::RunExperiment(prepared, config, std::nullopt);
  const MetricsReport attacked =
      fed::RunExperiment(prepared, config, AttackSpec{});
  bool in_range = clean.iterations.size() == 50;
  for (const auto& m : clean.iterations) {
    for (double v : {m.accuracy, m.precision, m.recall, m.f1}) {
      in_range = in_range && v >= 0.0 && v <= 1.0;
    }
  }
  const std::size_t changed = attacked.attack ? attacked.attack->changed : 0;
  detail << "; clean test accuracy " << clean.test_accuracy << ", attack changed "
         << changed;
  ok = ok && in_range && changed > 0 && changed < 1441;
  return Check(ok, detail.str());
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient check", GradientCheck},
      {"loss identity", LossIdentity},
      {"metric identity", MetricIdentity},
      {"fedavg degeneracy", FedAvgDegeneracy},
      {"desk-scale learning", DeskScaleLearning},
      {"poisoning pipeline", PoisoningPipeline},
      {"determinism", Determinism},
      {"extractor fidelity", ExtractorFidelity},
      {"medbiot reproduction", MedBiot},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {Verdict::kFail, std::string("exception: ") + e.what()};
    }
    const char* label = outcome.verdict == Verdict::kPass   ? "PASS"
                        : outcome.verdict == Verdict::kSkip ? "SKIP"
                                                            : "FAIL";
    if (outcome.verdict == Verdict::kFail) ++failures;
    std::printf("criterion %zu (%s): %s - %s\n", i + 1, criteria[i].first,
                label, outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
