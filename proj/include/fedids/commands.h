#ifndef FEDIDS_COMMANDS_H_
#define FEDIDS_COMMANDS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "fedids/config.h"
#include "fedids/dataset.h"
#include "fedids/metrics.h"

namespace fedids {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

// Runs `body`, mapping fedids errors to exit codes and printing them to
// `err`. Any other exception is reported as a data error.
int RunGuarded(const std::function<int()>& body, std::ostream& err);

struct ExtractOptions {
  // Capture files, or directories scanned for *.pcap / *.cap files.
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path output_dir = ".";
  std::size_t chunk_size = 1 << 16;
};

// One CSV per capture, named after the capture. Files that are not classic
// captures are skipped with a warning; a capture that fails mid-way makes the
// command exit with kExitData after every file has been tried.
int RunExtract(const ExtractOptions& options, std::ostream& out,
               std::ostream& err);

struct AssembleOptions {
  std::filesystem::path csv_dir;
  std::size_t rows_per_group = 2000;
  std::uint64_t seed = 123;
  std::filesystem::path output;
  // Groups that must be present, e.g. "mal_lock"; empty means any.
  std::vector<std::string> required_groups;
};

int RunAssemble(const AssembleOptions& options, std::ostream& out);

// Loads the dataset named by `config.input`: an assembled dataset CSV, a
// directory of extracted CSVs, or a directory of captures (extracted into
// `<output_dir>/extracted` first). Directories are assembled with
// rows_per_group and seed, then null-dropped.
Dataset LoadExperimentData(const ExperimentConfig& config, std::ostream& log);

// Runs every repetition of `config` on `data`. Repetition k (1-based) uses
// RepetitionSeed(seed, k) for its model streams; the split always uses the
// base seed. `threads` bounds the total worker count; results do not depend
// on it.
std::vector<MetricsReport> RunRepetitions(const ExperimentConfig& config,
                                          const Dataset& data,
                                          std::size_t threads);

// Full train command: validates, runs and writes report_<k>.json,
// iterations.csv, summary.csv and effective_config.conf into output_dir.
int RunTrain(const ExperimentConfig& config, std::size_t threads,
             std::ostream& out);

// Prints the summary table for report files or directories of them.
int RunReport(const std::vector<std::filesystem::path>& inputs,
              std::ostream& out);

// Worker count: `requested` (0 means hardware concurrency), capped by the
// FEDIDS_THREADS environment variable when set.
std::size_t EffectiveThreads(std::size_t requested);

}  // namespace fedids

#endif  // FEDIDS_COMMANDS_H_
