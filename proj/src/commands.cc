#include "fedids/commands.h"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <string_view>
#include <thread>

#include "fedids/error.h"
#include "fedids/extract.h"
#include "fedids/federated.h"
#include "fedids/model_io.h"
#include "fedids/parallel.h"
#include "fedids/pcap.h"
#include "fedids/report.h"

namespace fedids {

namespace fs = std::filesystem;

namespace {

bool IsCaptureName(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".pcap" || ext == ".cap";
}

std::vector<fs::path> SortedFiles(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::ranges::sort(files);
  return files;
}

bool HasExtension(const fs::path& dir, std::string_view ext) {
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) return true;
  }
  return false;
}

Dataset AssembleFromDir(const fs::path& csv_dir, std::size_t rows_per_group,
                        std::uint64_t seed, std::ostream& log) {
  const std::vector<RecordGroup> groups = LoadGroups(csv_dir);
  if (groups.empty()) {
    throw InputError(csv_dir.string() + " contains no CSV files");
  }
  RngStream rng(seed, StreamId::kAssemble);
  const std::vector<PacketRecord> sampled =
      Assemble(groups, rows_per_group, rng);
  Dataset data = DropNulls(sampled);
  log << "assembled " << groups.size() << " groups: " << sampled.size()
      << " rows sampled, " << data.size() << " after null drop ("
      << data.CountLabel(1) << " malicious, " << data.CountLabel(0)
      << " benign)\n";
  return data;
}

}  // namespace

int RunGuarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

std::size_t EffectiveThreads(std::size_t requested) {
  std::size_t threads = requested;
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  if (const char* cap = std::getenv("FEDIDS_THREADS")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(cap, &end, 10);
    if (end != cap && *end == '\0' && v > 0) {
      threads = std::min<std::size_t>(threads, v);
    }
  }
  return threads;
}

int RunExtract(const ExtractOptions& options, std::ostream& out,
               std::ostream& err) {
  if (options.inputs.empty()) throw UsageError("extract: no input paths");
  std::vector<fs::path> captures;
  std::size_t ignored = 0;
  for (const auto& input : options.inputs) {
    if (fs::is_directory(input)) {
      for (const auto& file : SortedFiles(input)) {
        if (IsCaptureName(file)) {
          captures.push_back(file);
        } else {
          ++ignored;
          err << "warning: " << file.string()
              << ": not a capture file, skipped\n";
        }
      }
    } else if (fs::is_regular_file(input)) {
      captures.push_back(input);
    } else {
      throw IoError(input.string() + ": no such file or directory");
    }
  }
  if (captures.empty()) {
    err << "warning: 0 files to extract\n";
    if (ignored > 0) err << "warning: " << ignored << " file(s) skipped\n";
    return kExitOk;
  }
  fs::create_directories(options.output_dir);

  std::vector<std::string> failures;
  std::size_t converted = 0;
  std::size_t total_rows = 0;
  for (const auto& capture : captures) {
    const fs::path csv =
        options.output_dir / capture.filename().replace_extension(".csv");
    try {
      // An unrecognised magic means the file is not a classic capture.
      pcap::OpenCapture(capture, options.chunk_size);
    } catch (const FormatError& e) {
      ++ignored;
      err << "warning: " << e.what() << ", skipped\n";
      continue;
    } catch (const DataError& e) {
      failures.push_back(e.what());
      continue;
    }
    try {
      const pcap::ConversionSummary s =
          pcap::ConvertCapture(capture, csv, options.chunk_size);
      for (const auto& w : s.warnings) err << "warning: " << w << '\n';
      if (s.skipped_link_type) continue;
      ++converted;
      total_rows += s.rows;
      out << capture.string() << " -> " << csv.string() << ": " << s.rows
          << " rows from " << s.packets << " packets\n";
    } catch (const DataError& e) {
      std::error_code ec;
      fs::remove(csv, ec);
      failures.push_back(e.what());
    }
  }
  out << converted << " file(s) converted, " << total_rows << " rows";
  if (ignored > 0) out << ", " << ignored << " file(s) skipped";
  out << '\n';
  if (!failures.empty()) {
    err << failures.size() << " file(s) failed:\n";
    for (const auto& f : failures) err << "  " << f << '\n';
    return kExitData;
  }
  return kExitOk;
}

int RunAssemble(const AssembleOptions& options, std::ostream& out) {
  if (options.output.empty()) throw UsageError("assemble: no output path");
  if (options.rows_per_group == 0) {
    throw UsageError("assemble: rows_per_group must be >= 1");
  }
  std::vector<RecordGroup> groups = LoadGroups(options.csv_dir);
  if (!options.required_groups.empty()) {
    std::set<std::string> present;
    for (const auto& g : groups) present.insert(g.name);
    std::vector<std::string> missing;
    for (const auto& name : options.required_groups) {
      if (!present.contains(name)) missing.push_back(name);
    }
    if (!missing.empty()) {
      std::string msg = "missing group(s):";
      for (const auto& m : missing) msg += " " + m;
      throw InputError(msg);
    }
    const std::set<std::string> wanted(options.required_groups.begin(),
                                       options.required_groups.end());
    std::erase_if(groups,
                  [&](const RecordGroup& g) { return !wanted.contains(g.name); });
  }
  if (groups.empty()) {
    throw InputError(options.csv_dir.string() + " contains no CSV files");
  }
  RngStream rng(options.seed, StreamId::kAssemble);
  const std::vector<PacketRecord> sampled =
      Assemble(groups, options.rows_per_group, rng);
  const Dataset data = DropNulls(sampled);
  if (options.output.has_parent_path()) {
    fs::create_directories(options.output.parent_path());
  }
  WriteDatasetCsv(options.output, data);
  out << groups.size() << " groups, " << sampled.size() << " rows sampled, "
      << data.size() << " after null drop\n"
      << "malicious " << data.CountLabel(1) << ", benign "
      << data.CountLabel(0) << '\n'
      << "wrote " << options.output.string() << '\n';
  return kExitOk;
}

Dataset LoadExperimentData(const ExperimentConfig& config, std::ostream& log) {
  const fs::path input = config.input;
  if (fs::is_regular_file(input)) return ReadDatasetCsv(input);
  if (!fs::is_directory(input)) {
    throw IoError(input.string() + ": no such file or directory");
  }
  if (HasExtension(input, ".csv")) {
    return AssembleFromDir(input, config.rows_per_group, config.seed, log);
  }
  const fs::path extracted = fs::path(config.output_dir) / "extracted";
  ExtractOptions options;
  options.inputs = {input};
  options.output_dir = extracted;
  if (RunExtract(options, log, log) != kExitOk) {
    throw InputError("extraction of " + input.string() + " failed");
  }
  return AssembleFromDir(extracted, config.rows_per_group, config.seed, log);
}

std::vector<MetricsReport> RunRepetitions(const ExperimentConfig& config,
                                          const Dataset& data,
                                          std::size_t threads) {
  ValidateConfig(config);
  const fed::PreparedData prepared = fed::Prepare(
      data, config.test_fraction, config.seed, config.fit_scaler_on_train);
  const std::optional<AttackSpec> attack = ToAttackSpec(config);

  const std::size_t reps = config.repetitions;
  const std::size_t outer = std::clamp<std::size_t>(threads, 1, reps);
  const std::size_t inner = std::max<std::size_t>(1, threads / outer);

  std::vector<MetricsReport> reports(reps);
  ParallelFor(reps, outer, [&](std::size_t k) {
    const std::size_t experiment = k + 1;
    fed::FederationConfig fc =
        ToFederationConfig(config, RepetitionSeed(config.seed, experiment));
    fc.threads = inner;
    if (config.checkpoint) {
      fc.checkpoint_dir = fs::path(config.output_dir) / "checkpoints";
    }
    reports[k] = fed::RunExperiment(prepared, fc, attack, experiment);
  });
  return reports;
}

int RunTrain(const ExperimentConfig& config, std::size_t threads,
             std::ostream& out) {
  ValidateConfig(config);
  const Dataset data = LoadExperimentData(config, out);
  out << "dataset: " << data.size() << " rows (" << data.CountLabel(1)
      << " malicious, " << data.CountLabel(0) << " benign)\n";

  const std::vector<MetricsReport> reports =
      RunRepetitions(config, data, threads);

  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  const nlohmann::json echo = ConfigToJson(config);
  const std::string stamp = UtcTimestamp();
  for (const auto& r : reports) {
    WriteJsonFile(dir / ("report_" + std::to_string(r.experiment_id) + ".json"),
                  ReportToJson(r, echo, stamp));
  }
  WriteTextFile(dir / "iterations.csv", IterationsCsv(reports));
  WriteTextFile(dir / "summary.csv", SummaryCsv(reports));
  WriteTextFile(dir / "effective_config.conf", ConfigToText(config));
  out << SummaryTable(reports) << "wrote " << reports.size()
      << " report(s) to " << dir.string() << '\n';
  return kExitOk;
}

int RunReport(const std::vector<fs::path>& inputs, std::ostream& out) {
  if (inputs.empty()) throw UsageError("report: no input paths");
  std::vector<fs::path> files;
  for (const auto& input : inputs) {
    if (fs::is_directory(input)) {
      for (const auto& f : SortedFiles(input)) {
        const std::string name = f.filename().string();
        if (name.starts_with("report_") && f.extension() == ".json") {
          files.push_back(f);
        }
      }
    } else {
      files.push_back(input);
    }
  }
  if (files.empty()) throw InputError("no report files found");
  std::vector<MetricsReport> reports;
  for (const auto& f : files) reports.push_back(ReportFromJson(ReadJsonFile(f)));
  std::ranges::sort(reports, {}, &MetricsReport::experiment_id);
  out << SummaryTable(reports);
  return kExitOk;
}

}  // namespace fedids
