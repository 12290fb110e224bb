#include "fedids/report.h"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "fedids/error.h"

namespace fedids {

namespace {

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<ExperimentSummary> SummarizeAll(
    std::span<const MetricsReport> reports) {
  std::vector<ExperimentSummary> rows;
  rows.reserve(reports.size());
  for (const auto& r : reports) rows.push_back(Summarize(r));
  return rows;
}

}  // namespace

nlohmann::json ReportToJson(const MetricsReport& report,
                            const nlohmann::json& config,
                            std::string_view generated_at) {
  nlohmann::json iterations = nlohmann::json::array();
  for (const auto& m : report.iterations) {
    iterations.push_back({{"iteration", m.iteration},
                          {"accuracy", m.accuracy},
                          {"precision", m.precision},
                          {"recall", m.recall},
                          {"f1", m.f1},
                          {"client_losses", m.client_losses},
                          {"undefined", m.undefined}});
  }
  nlohmann::json j = {
      {"format", "fedids-report"},
      {"version", 1},
      {"experiment_id", report.experiment_id},
      {"seed", report.seed},
      {"config_hash", report.config_hash},
      {"config", config},
      {"iterations", std::move(iterations)},
      {"test", {{"accuracy", report.test_accuracy}, {"loss", report.test_loss}}},
      {"attack", nullptr},
  };
  if (report.attack) {
    j["attack"] = {{"matched", report.attack->matched},
                   {"changed", report.attack->changed}};
  }
  if (!generated_at.empty()) j["generated_at"] = std::string(generated_at);
  return j;
}

MetricsReport ReportFromJson(const nlohmann::json& j) {
  try {
    if (j.at("format") != "fedids-report") {
      throw FormatError("not a fedids report");
    }
    MetricsReport r;
    r.experiment_id = j.at("experiment_id").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& it : j.at("iterations")) {
      IterationMetrics m;
      m.experiment_id = r.experiment_id;
      m.iteration = it.at("iteration").get<std::size_t>();
      m.accuracy = it.at("accuracy").get<double>();
      m.precision = it.at("precision").get<double>();
      m.recall = it.at("recall").get<double>();
      m.f1 = it.at("f1").get<double>();
      m.client_losses = it.at("client_losses").get<std::vector<double>>();
      m.undefined = it.at("undefined").get<std::vector<std::string>>();
      r.iterations.push_back(std::move(m));
    }
    r.test_accuracy = j.at("test").at("accuracy").get<double>();
    r.test_loss = j.at("test").at("loss").get<double>();
    if (!j.at("attack").is_null()) {
      r.attack = FlipOutcome{j["attack"].at("matched").get<std::size_t>(),
                             j["attack"].at("changed").get<std::size_t>()};
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

ExperimentSummary Summarize(const MetricsReport& report) {
  if (report.iterations.empty()) {
    throw InputError("experiment " + std::to_string(report.experiment_id) +
                     " has no iterations");
  }
  const IterationMetrics& last = report.iterations.back();
  return {report.experiment_id, last.accuracy,        last.precision,
          last.recall,          last.f1,              report.test_accuracy,
          report.test_loss,     report.attack};
}

ExperimentSummary Average(std::span<const ExperimentSummary> rows) {
  ExperimentSummary mean;
  if (rows.empty()) return mean;
  for (const auto& r : rows) {
    mean.accuracy += r.accuracy;
    mean.precision += r.precision;
    mean.recall += r.recall;
    mean.f1 += r.f1;
    mean.test_accuracy += r.test_accuracy;
    mean.test_loss += r.test_loss;
    if (r.attack) {
      if (!mean.attack) mean.attack = FlipOutcome{};
      mean.attack->matched += r.attack->matched;
      mean.attack->changed += r.attack->changed;
    }
  }
  const double n = static_cast<double>(rows.size());
  mean.accuracy /= n;
  mean.precision /= n;
  mean.recall /= n;
  mean.f1 /= n;
  mean.test_accuracy /= n;
  mean.test_loss /= n;
  return mean;
}

std::string IterationsCsv(std::span<const MetricsReport> reports) {
  std::string out = "experiment,iteration,accuracy,precision,recall,f1\n";
  for (const auto& r : reports) {
    for (const auto& m : r.iterations) {
      out += std::to_string(r.experiment_id) + ',' +
             std::to_string(m.iteration) + ',' + Num(m.accuracy) + ',' +
             Num(m.precision) + ',' + Num(m.recall) + ',' + Num(m.f1) + '\n';
    }
  }
  return out;
}

std::string SummaryCsv(std::span<const MetricsReport> reports) {
  const auto rows = SummarizeAll(reports);
  std::string out =
      "experiment,accuracy,precision,recall,f1,test_accuracy,test_loss\n";
  auto line = [&](const std::string& id, const ExperimentSummary& s) {
    out += id + ',' + Num(s.accuracy) + ',' + Num(s.precision) + ',' +
           Num(s.recall) + ',' + Num(s.f1) + ',' + Num(s.test_accuracy) + ',' +
           Num(s.test_loss) + '\n';
  };
  for (const auto& s : rows) line(std::to_string(s.experiment_id), s);
  line("average", Average(rows));
  return out;
}

std::string SummaryTable(std::span<const MetricsReport> reports) {
  const auto rows = SummarizeAll(reports);
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %9s %9s %9s %9s %9s %9s\n",
                "experiment", "accuracy", "precision", "recall", "f1",
                "test_acc", "test_loss");
  out += buf;
  auto line = [&](const std::string& id, const ExperimentSummary& s) {
    std::snprintf(buf, sizeof buf,
                  "%-10s %9.4f %9.4f %9.4f %9.4f %9.4f %9.4f\n", id.c_str(),
                  s.accuracy, s.precision, s.recall, s.f1, s.test_accuracy,
                  s.test_loss);
    out += buf;
  };
  for (const auto& s : rows) line(std::to_string(s.experiment_id), s);
  const ExperimentSummary mean = Average(rows);
  line("average", mean);
  if (mean.attack) {
    std::snprintf(buf, sizeof buf,
                  "label flip: %zu rows matched, %zu labels changed\n",
                  mean.attack->matched, mean.attack->changed);
    out += buf;
  }
  return out;
}

std::string UtcTimestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void WriteTextFile(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace fedids
