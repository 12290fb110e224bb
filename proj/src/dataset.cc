#include "fedids/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>

#include "fedids/csv.h"
#include "fedids/error.h"

namespace fedids {

namespace {

std::vector<std::string> SplitTokens(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string NormalizeColumn(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == ' ' || c == '\t' || c == '\r') continue;
    out += c == '.' ? '_' : c;
  }
  return out;
}

std::string RowError(const std::filesystem::path& path, std::size_t line,
                     const std::string& what) {
  return path.string() + ": line " + std::to_string(line) + ": " + what;
}

std::optional<std::int64_t> ParseInt(const std::string& text,
                                     std::string_view column,
                                     const std::filesystem::path& path,
                                     std::size_t line) {
  if (text.empty()) return std::nullopt;
  std::int64_t value = 0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  int base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    begin += 2;
    base = 16;
  }
  auto [ptr, ec] = std::from_chars(begin, end, value, base);
  if (ec != std::errc() || ptr != end) {
    throw InputError(RowError(path, line,
                              "malformed " + std::string(column) + " value '" +
                                  text + "'"));
  }
  return value;
}

std::optional<double> ParseReal(const std::string& text,
                                std::string_view column,
                                const std::filesystem::path& path,
                                std::size_t line) {
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() ||
      !std::isfinite(value)) {
    throw InputError(RowError(path, line,
                              "malformed " + std::string(column) + " value '" +
                                  text + "'"));
  }
  return value;
}

std::optional<std::string> ParseText(const std::string& text) {
  if (text.empty()) return std::nullopt;
  return text;
}

std::string FormatNumber(double v) {
  if (std::trunc(v) == v && std::fabs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::optional<double> AsReal(const std::optional<std::int64_t>& v) {
  if (!v) return std::nullopt;
  return static_cast<double>(*v);
}

}  // namespace

FileLabels DeriveLabels(std::string_view file_name) {
  std::string_view name = file_name;
  if (const auto slash = name.find_last_of("/\\");
      slash != std::string_view::npos) {
    name.remove_prefix(slash + 1);
  }
  if (const auto dot = name.rfind('.'); dot != std::string_view::npos) {
    name = name.substr(0, dot);
  }
  std::vector<std::string> tokens = SplitTokens(name, '_');
  if (tokens.size() > 3 && tokens.back() == "mod") tokens.pop_back();
  if (tokens.size() < 3) {
    throw NamingError("file name '" + std::string(file_name) +
                      "' does not follow SOURCE_TRAFFIC[_PHASE]_DEVICE");
  }
  for (const auto& t : tokens) {
    if (t.empty()) {
      throw NamingError("file name '" + std::string(file_name) +
                        "' has an empty token");
    }
  }

  FileLabels labels;
  labels.malware_type = tokens[0];
  labels.device = tokens.back();
  if (tokens[1] == "mal") {
    labels.is_malware = 1;
    if (tokens[0] == "torii" || tokens[2] == "spread") {
      labels.phase = "spread";
    } else if (tokens[2] == "CC" || tokens[2] == "cc") {
      labels.phase = "cc";
    } else {
      throw NamingError("file name '" + std::string(file_name) +
                        "' has unknown phase '" + tokens[2] + "'");
    }
  } else if (tokens[1] == "leg") {
    labels.is_malware = 0;
    labels.phase = "leg";
  } else {
    throw NamingError("file name '" + std::string(file_name) +
                      "' has unknown traffic type '" + tokens[1] + "'");
  }
  return labels;
}

std::vector<PacketRecord> LoadCsv(const std::filesystem::path& path,
                                  const FileLabels& labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  CsvReader reader(in);
  std::vector<std::string> cells;
  if (!reader.Next(cells)) {
    throw SchemaError(path.string() + ": missing header row");
  }

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string name = NormalizeColumn(cells[i]);
    const bool known = std::ranges::any_of(pcap::kCsvColumns, [&](auto c) {
      return NormalizeColumn(c) == name;
    });
    if (!known) {
      throw SchemaError(path.string() + ": unexpected column '" + cells[i] +
                        "'");
    }
    position[name] = i;
  }
  std::array<std::size_t, 20> col{};
  for (std::size_t k = 0; k < pcap::kCsvColumns.size(); ++k) {
    auto it = position.find(NormalizeColumn(pcap::kCsvColumns[k]));
    if (it == position.end()) {
      throw SchemaError(path.string() + ": missing column '" +
                        NormalizeColumn(pcap::kCsvColumns[k]) + "'");
    }
    col[k] = it->second;
  }
  const std::size_t width = cells.size();

  std::vector<PacketRecord> records;
  while (reader.Next(cells)) {
    const std::size_t line = reader.line();
    if (cells.size() == 1 && cells[0].empty()) continue;  // blank line
    if (cells.size() != width) {
      throw InputError(RowError(path, line,
                                "expected " + std::to_string(width) +
                                    " fields, got " +
                                    std::to_string(cells.size())));
    }
    auto cell = [&](std::size_t k) -> const std::string& {
      return cells[col[k]];
    };
    auto integer = [&](std::size_t k) {
      return ParseInt(cell(k), pcap::kCsvColumns[k], path, line);
    };
    auto real = [&](std::size_t k) {
      return ParseReal(cell(k), pcap::kCsvColumns[k], path, line);
    };

    PacketRecord rec;
    pcap::ExtractedFields& f = rec.fields;
    f.frame_len = integer(0);
    f.frame_protocols = cell(1);
    f.ip_len = integer(2);
    f.ip_flags = integer(3);
    f.ip_ttl = integer(4);
    f.ip_proto = integer(5);
    f.ip_src = ParseText(cell(6));
    f.ip_dst = ParseText(cell(7));
    f.tcp_srcport = integer(8);
    f.tcp_dstport = integer(9);
    f.tcp_len = integer(10);
    f.tcp_hdr_len = integer(11);
    f.tcp_flags = integer(12);
    f.tcp_window_size_value = integer(13);
    f.tcp_window_size = integer(14);
    f.tcp_window_size_scalefactor = integer(15);
    f.tcp_time_relative = real(16);
    f.tcp_time_delta = real(17);
    f.tcp_analysis_bytes_in_flight = integer(18);
    f.tcp_analysis_push_bytes_sent = integer(19);
    for (auto port : {f.tcp_srcport, f.tcp_dstport}) {
      if (port && (*port < 0 || *port > 65535)) {
        throw InputError(RowError(path, line, "port out of range"));
      }
    }
    const auto colon = f.frame_protocols.rfind(':');
    rec.frame_protocol_last = colon == std::string::npos
                                  ? f.frame_protocols
                                  : f.frame_protocols.substr(colon + 1);
    rec.labels = labels;
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<PacketRecord> LoadLabeledCsv(const std::filesystem::path& path) {
  return LoadCsv(path, DeriveLabels(path.filename().string()));
}

std::vector<RecordGroup> LoadGroups(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError(dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::ranges::sort(files);

  std::map<std::string, RecordGroup> groups;
  for (const auto& file : files) {
    const FileLabels labels = DeriveLabels(file.filename().string());
    const std::string key =
        std::string(labels.is_malware ? "mal_" : "leg_") + labels.device;
    RecordGroup& group = groups[key];
    group.name = key;
    auto rows = LoadCsv(file, labels);
    group.records.insert(group.records.end(),
                         std::make_move_iterator(rows.begin()),
                         std::make_move_iterator(rows.end()));
  }
  std::vector<RecordGroup> out;
  for (auto& [name, group] : groups) out.push_back(std::move(group));
  return out;
}

std::vector<PacketRecord> Assemble(std::span<const RecordGroup> groups,
                                   std::size_t rows_per_group,
                                   RngStream& rng) {
  for (const auto& g : groups) {
    if (g.records.size() < rows_per_group) {
      throw InputError("group '" + g.name + "' has " +
                       std::to_string(g.records.size()) + " rows, " +
                       std::to_string(rows_per_group) + " requested");
    }
  }
  std::vector<PacketRecord> out;
  out.reserve(groups.size() * rows_per_group);
  for (const auto& g : groups) {
    // Floyd's sampling: k distinct indices from [0, n) in O(k log k).
    const std::size_t n = g.records.size();
    std::set<std::size_t> picked;
    for (std::size_t j = n - rows_per_group; j < n; ++j) {
      const std::size_t t = static_cast<std::size_t>(rng.Below(j + 1));
      if (!picked.insert(t).second) picked.insert(j);
    }
    for (std::size_t idx : picked) out.push_back(g.records[idx]);
  }
  return out;
}

std::size_t Dataset::CountLabel(int label) const {
  return static_cast<std::size_t>(std::ranges::count(labels, label));
}

std::size_t Dataset::FeatureIndex(std::string_view name) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i) {
    if (feature_names[i] == name) return i;
  }
  throw InputError("dataset has no feature column '" + std::string(name) +
                   "'");
}

Dataset Dataset::Select(std::span<const std::size_t> indices) const {
  Dataset out;
  out.feature_names = feature_names;
  out.features = features.SelectRows(indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels.at(i));
  if (!aux.empty()) {
    out.aux.reserve(indices.size());
    for (std::size_t i : indices) out.aux.push_back(aux.at(i));
  }
  return out;
}

Dataset Dataset::Slice(std::size_t begin, std::size_t end) const {
  Dataset out;
  out.feature_names = feature_names;
  out.features = features.RowRange(begin, end);
  out.labels.assign(labels.begin() + static_cast<long>(begin),
                    labels.begin() + static_cast<long>(end));
  if (!aux.empty()) {
    out.aux.assign(aux.begin() + static_cast<long>(begin),
                   aux.begin() + static_cast<long>(end));
  }
  return out;
}

Dataset DropNulls(std::span<const PacketRecord> records) {
  Dataset data;
  data.feature_names.assign(kPredictorColumns.begin(), kPredictorColumns.end());
  std::vector<double> values;
  for (const auto& rec : records) {
    const auto& f = rec.fields;
    const bool complete = f.frame_len && !f.frame_protocols.empty() &&
                          f.ip_len && f.ip_flags && f.ip_ttl && f.ip_proto &&
                          f.ip_src && f.ip_dst && f.tcp_srcport &&
                          f.tcp_dstport;
    if (!complete) continue;
    for (const auto& v : {AsReal(f.frame_len), AsReal(f.ip_len),
                          AsReal(f.ip_ttl), AsReal(f.ip_proto),
                          AsReal(f.tcp_srcport), AsReal(f.tcp_dstport)}) {
      values.push_back(*v);
    }
    data.labels.push_back(rec.labels.is_malware);
    data.aux.push_back(
        {rec.labels.malware_type, rec.labels.phase, rec.labels.device});
  }
  data.features = Matrix(data.labels.size(), kPredictorColumns.size(),
                         std::move(values));
  return data;
}

void WriteDatasetCsv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& name : data.feature_names) out << name << ',';
  out << "is_malware,malware_type,phase,device\n";
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (double v : data.features.row(r)) out << FormatNumber(v) << ',';
    out << data.labels[r];
    if (data.aux.empty()) {
      out << ",,,\n";
    } else {
      const auto& a = data.aux[r];
      out << ',' << a.malware_type << ',' << a.phase << ',' << a.device
          << '\n';
    }
  }
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

Dataset ReadDatasetCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  CsvReader reader(in);
  std::vector<std::string> cells;
  if (!reader.Next(cells)) {
    throw SchemaError(path.string() + ": missing header row");
  }
  std::optional<std::size_t> label_col;
  std::optional<std::size_t> type_col, phase_col, device_col;
  std::vector<std::size_t> feature_cols;
  Dataset data;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string name = NormalizeColumn(cells[i]);
    if (name == "is_malware") {
      label_col = i;
    } else if (name == "malware_type") {
      type_col = i;
    } else if (name == "phase") {
      phase_col = i;
    } else if (name == "device") {
      device_col = i;
    } else {
      feature_cols.push_back(i);
      data.feature_names.push_back(name);
    }
  }
  if (!label_col) {
    throw SchemaError(path.string() + ": missing column 'is_malware'");
  }
  if (feature_cols.empty()) {
    throw SchemaError(path.string() + ": no feature columns");
  }
  const bool has_aux = type_col && phase_col && device_col;
  const std::size_t width = cells.size();

  std::vector<double> values;
  while (reader.Next(cells)) {
    const std::size_t line = reader.line();
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (cells.size() != width) {
      throw InputError(RowError(path, line,
                                "expected " + std::to_string(width) +
                                    " fields, got " +
                                    std::to_string(cells.size())));
    }
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      auto v = ParseReal(cells[feature_cols[k]], data.feature_names[k], path,
                         line);
      if (!v) {
        throw InputError(RowError(path, line,
                                  "absent value in " + data.feature_names[k]));
      }
      values.push_back(*v);
    }
    const std::string& label = cells[*label_col];
    if (label != "0" && label != "1") {
      throw InputError(RowError(path, line, "is_malware must be 0 or 1"));
    }
    data.labels.push_back(label == "1" ? 1 : 0);
    if (has_aux) {
      data.aux.push_back(
          {cells[*type_col], cells[*phase_col], cells[*device_col]});
    }
  }
  data.features = Matrix(data.labels.size(), feature_cols.size(),
                         std::move(values));
  return data;
}

}  // namespace fedids
