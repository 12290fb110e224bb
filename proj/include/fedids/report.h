#ifndef FEDIDS_REPORT_H_
#define FEDIDS_REPORT_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "json.hpp"

#include "fedids/metrics.h"

namespace fedids {

// Report JSON. `config` is the effective configuration echo; `generated_at`
// is omitted when empty so that two runs can be compared byte for byte.
nlohmann::json ReportToJson(const MetricsReport& report,
                            const nlohmann::json& config,
                            std::string_view generated_at);

// Throws FormatError on a malformed report.
MetricsReport ReportFromJson(const nlohmann::json& j);

// Scores of one experiment after its last round.
struct ExperimentSummary {
  std::size_t experiment_id = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double test_accuracy = 0.0;
  double test_loss = 0.0;
  std::optional<FlipOutcome> attack;
};

// Throws InputError for a report without iterations.
ExperimentSummary Summarize(const MetricsReport& report);

// Field-wise mean; attack counts are summed.
ExperimentSummary Average(std::span<const ExperimentSummary> rows);

// One row per experiment and round:
// experiment,iteration,accuracy,precision,recall,f1.
std::string IterationsCsv(std::span<const MetricsReport> reports);

// One row per experiment plus a final "average" row.
std::string SummaryCsv(std::span<const MetricsReport> reports);

// Human-readable table of SummaryCsv.
std::string SummaryTable(std::span<const MetricsReport> reports);

// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string UtcTimestamp();

void WriteTextFile(const std::filesystem::path& path, std::string_view text);

}  // namespace fedids

#endif  // FEDIDS_REPORT_H_
