// fedids: packet extraction, dataset assembly and federated IDS training.
//
// Configuration precedence for `train`: built-in defaults, then the file
// given with --config, then individual --key flags.

#include <cstddef>
#include <cstdint>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fedids/commands.h"
#include "fedids/config.h"

namespace {

const std::set<std::string_view> kBoolKeys = {
    "overlap", "fit_scaler_on_train", "attack.enabled", "checkpoint"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated intrusion detection from packet captures"};
  app.require_subcommand(1);

  fedids::ExtractOptions extract;
  std::vector<std::string> extract_inputs;
  std::string extract_out = ".";
  auto* extract_cmd =
      app.add_subcommand("extract", "Convert captures to per-packet CSV");
  extract_cmd->add_option("inputs", extract_inputs, "Capture files or dirs")
      ->required();
  extract_cmd->add_option("-o,--output-dir", extract_out, "CSV directory");
  extract_cmd->add_option("--chunk-size", extract.chunk_size,
                          "Read buffer size in bytes")
      ->check(CLI::PositiveNumber);

  fedids::AssembleOptions assemble;
  std::string assemble_dir;
  std::string assemble_out;
  auto* assemble_cmd = app.add_subcommand(
      "assemble", "Sample extracted CSVs into a labelled dataset");
  assemble_cmd->add_option("csv_dir", assemble_dir, "Extracted CSV directory")
      ->required();
  assemble_cmd->add_option("--rows-per-group", assemble.rows_per_group,
                           "Rows drawn from each traffic/device group");
  assemble_cmd->add_option("--seed", assemble.seed, "Sampling seed");
  assemble_cmd->add_option("-o,--output", assemble_out, "Dataset CSV")
      ->required();
  assemble_cmd->add_option("--groups", assemble.required_groups,
                           "Groups to keep, e.g. mal_lock leg_fan");

  std::string config_file;
  std::size_t threads = 0;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option*> train_opts;
  auto* train_cmd =
      app.add_subcommand("train", "Run federated training experiments");
  train_cmd->add_option("-c,--config", config_file, "key = value config file");
  train_cmd->add_option("--threads", threads,
                        "Worker threads (0: all cores; FEDIDS_THREADS caps)");
  for (std::string_view key : fedids::ConfigKeys()) {
    const std::string name(key);
    if (kBoolKeys.contains(key)) {
      train_opts[name] = train_cmd->add_flag("--" + name, flags[name]);
    } else {
      train_opts[name] = train_cmd->add_option("--" + name, values[name]);
    }
  }

  std::vector<std::string> report_inputs;
  auto* report_cmd =
      app.add_subcommand("report", "Summarise report JSON files");
  report_cmd->add_option("inputs", report_inputs, "Report files or dirs")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? fedids::kExitOk : fedids::kExitUsage;
  }

  return fedids::RunGuarded(
      [&]() -> int {
        if (*extract_cmd) {
          extract.inputs.assign(extract_inputs.begin(), extract_inputs.end());
          extract.output_dir = extract_out;
          return fedids::RunExtract(extract, std::cout, std::cerr);
        }
        if (*assemble_cmd) {
          assemble.csv_dir = assemble_dir;
          assemble.output = assemble_out;
          return fedids::RunAssemble(assemble, std::cout);
        }
        if (*train_cmd) {
          fedids::ExperimentConfig config;
          if (!config_file.empty()) {
            fedids::ApplyConfigFile(config, config_file);
          }
          std::vector<std::pair<std::string, std::string>> overrides;
          for (std::string_view key : fedids::ConfigKeys()) {
            const std::string name(key);
            if (train_opts[name]->count() == 0) continue;
            overrides.emplace_back(
                name, kBoolKeys.contains(key)
                          ? (flags[name] ? "true" : "false")
                          : values[name]);
          }
          fedids::ApplyOverrides(config, overrides);
          return fedids::RunTrain(config, fedids::EffectiveThreads(threads),
                                  std::cout);
        }
        std::vector<std::filesystem::path> paths(report_inputs.begin(),
                                                 report_inputs.end());
        return fedids::RunReport(paths, std::cout);
      },
      std::cerr);
}
