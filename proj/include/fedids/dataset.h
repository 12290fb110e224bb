#ifndef FEDIDS_DATASET_H_
#define FEDIDS_DATASET_H_

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedids/extract.h"
#include "fedids/matrix.h"
#include "fedids/rng.h"

namespace fedids {

// Labels carried by every row of a capture, derived from its file name
// (SOURCE_TRAFFIC[_PHASE]_DEVICE.csv, e.g. mirai_mal_CC_lock.csv).
struct FileLabels {
  int is_malware = 0;
  std::string malware_type;
  std::string phase;
  std::string device;

  friend bool operator==(const FileLabels&, const FileLabels&) = default;
};

// Throws NamingError for names with fewer than three underscore tokens, an
// unknown traffic token, or an unknown malicious phase.
FileLabels DeriveLabels(std::string_view file_name);

struct PacketRecord {
  pcap::ExtractedFields fields;
  // Last ":"-separated token of frame.protocols, e.g. "tcp".
  std::string frame_protocol_last;
  FileLabels labels;
};

// Reads a CSV in the extractor layout. Header names may be dotted
// ("tcp.srcport") or underscored ("tcp_srcport") and quoted or not; all 20
// columns are required. Throws SchemaError on a header mismatch and
// InputError naming the line of a malformed row.
std::vector<PacketRecord> LoadCsv(const std::filesystem::path& path,
                                  const FileLabels& labels);

// LoadCsv with labels derived from the file name.
std::vector<PacketRecord> LoadLabeledCsv(const std::filesystem::path& path);

struct RecordGroup {
  std::string name;
  std::vector<PacketRecord> records;
};

// Loads every *.csv under `dir` and groups rows by traffic type and device,
// e.g. "mal_lock" or "leg_fan". Groups and the files inside them are ordered
// by name.
std::vector<RecordGroup> LoadGroups(const std::filesystem::path& dir);

// Draws `rows_per_group` rows uniformly without replacement from each group
// and concatenates them. Rows drawn from one group keep their original order.
// Throws InputError naming any group that is too small.
std::vector<PacketRecord> Assemble(std::span<const RecordGroup> groups,
                                   std::size_t rows_per_group,
                                   RngStream& rng);

// The six numeric predictors.
inline constexpr std::array<std::string_view, 6> kPredictorColumns = {
    "frame_len", "ip_len", "ip_ttl", "ip_proto", "tcp_srcport", "tcp_dstport",
};

// Columns discarded for being mostly null before the row-wise null drop.
inline constexpr std::array<std::string_view, 10> kNullColumns = {
    "tcp_len",
    "tcp_hdr_len",
    "tcp_flags",
    "tcp_window_size_value",
    "tcp_window_size",
    "tcp_window_size_scalefactor",
    "tcp_time_relative",
    "tcp_time_delta",
    "tcp_analysis_bytes_in_flight",
    "tcp_analysis_push_bytes_sent",
};

struct AuxLabels {
  std::string malware_type;
  std::string phase;
  std::string device;

  friend bool operator==(const AuxLabels&, const AuxLabels&) = default;
};

// Feature matrix plus binary labels; no absent values.
struct Dataset {
  std::vector<std::string> feature_names;
  Matrix features;
  std::vector<int> labels;
  std::vector<AuxLabels> aux;

  std::size_t size() const { return labels.size(); }
  std::size_t CountLabel(int label) const;
  // Throws InputError if the column does not exist.
  std::size_t FeatureIndex(std::string_view name) const;
  Dataset Select(std::span<const std::size_t> indices) const;
  Dataset Slice(std::size_t begin, std::size_t end) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Drops the null-heavy tcp_* columns, then every row that still has an absent
// value among the remaining fields, and keeps the six predictors + labels.
Dataset DropNulls(std::span<const PacketRecord> records);

// Dataset CSV: feature columns, then is_malware, malware_type, phase, device.
void WriteDatasetCsv(const std::filesystem::path& path, const Dataset& data);

// Reads a dataset CSV. Every column other than the label columns is a
// numeric feature; the auxiliary label columns are optional.
Dataset ReadDatasetCsv(const std::filesystem::path& path);

}  // namespace fedids

#endif  // FEDIDS_DATASET_H_
