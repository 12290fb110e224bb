#ifndef FEDIDS_EXTRACT_H_
#define FEDIDS_EXTRACT_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fedids/pcap.h"

namespace fedids::pcap {

// Column order of the exported CSV, identical to the field list handed to
// `tshark -T fields`.
inline constexpr std::array<std::string_view, 20> kCsvColumns = {
    "frame.len",
    "frame.protocols",
    "ip.len",
    "ip.flags",
    "ip.ttl",
    "ip.proto",
    "ip.src",
    "ip.dst",
    "tcp.srcport",
    "tcp.dstport",
    "tcp.len",
    "tcp.hdr_len",
    "tcp.flags",
    "tcp.window_size_value",
    "tcp.window_size",
    "tcp.window_size_scalefactor",
    "tcp.time_relative",
    "tcp.time_delta",
    "tcp.analysis.bytes_in_flight",
    "tcp.analysis.push_bytes_sent",
};

// Per-packet fields. Absent values are std::nullopt.
struct ExtractedFields {
  std::optional<std::int64_t> frame_len;
  std::string frame_protocols;
  std::optional<std::int64_t> ip_len;
  std::optional<std::int64_t> ip_flags;
  std::optional<std::int64_t> ip_ttl;
  std::optional<std::int64_t> ip_proto;
  std::optional<std::string> ip_src;
  std::optional<std::string> ip_dst;
  std::optional<std::int64_t> tcp_srcport;
  std::optional<std::int64_t> tcp_dstport;
  std::optional<std::int64_t> tcp_len;
  std::optional<std::int64_t> tcp_hdr_len;
  std::optional<std::int64_t> tcp_flags;
  std::optional<std::int64_t> tcp_window_size_value;
  std::optional<std::int64_t> tcp_window_size;
  std::optional<std::int64_t> tcp_window_size_scalefactor;
  // Stream-tracking analytics; never produced by Extract.
  std::optional<double> tcp_time_relative;
  std::optional<double> tcp_time_delta;
  std::optional<std::int64_t> tcp_analysis_bytes_in_flight;
  std::optional<std::int64_t> tcp_analysis_push_bytes_sent;

  friend bool operator==(const ExtractedFields&,
                         const ExtractedFields&) = default;
};

enum class SkipReason { kIpv6, kVlan };

struct Skipped {
  SkipReason reason;
};

using ExtractOutcome = std::variant<ExtractedFields, Skipped>;

// Decodes Ethernet / IPv4 / TCP headers of one packet. IPv6 and VLAN-tagged
// frames are skipped; other non-IPv4 frames carry only frame-level fields.
// Throws TruncationError when a header is cut short and FormatError when
// header lengths are inconsistent.
ExtractOutcome Extract(const RawPacket& packet);

// The 20 CSV cells for one record, unquoted; absent values are empty.
std::array<std::string, 20> FormatFields(const ExtractedFields& fields);

void WriteCsvHeader(std::ostream& out);
void WriteCsvRow(std::ostream& out, const ExtractedFields& fields);

// Header row followed by one double-quoted row per record.
void EmitCsv(std::span<const ExtractedFields> records,
             const std::filesystem::path& path);

struct ConversionSummary {
  std::size_t packets = 0;
  std::size_t rows = 0;
  std::size_t skipped_ipv6 = 0;
  std::size_t skipped_vlan = 0;
  // Packets rejected with TruncationError or FormatError by Extract.
  std::size_t malformed = 0;
  // Set when the capture is not Ethernet; no CSV is written then.
  bool skipped_link_type = false;
  std::vector<std::string> warnings;
};

// Streams a capture into a CSV file. Per-packet skips and malformed packets
// are counted, not fatal. Errors in the capture container itself propagate.
ConversionSummary ConvertCapture(const std::filesystem::path& capture,
                                 const std::filesystem::path& csv,
                                 std::size_t chunk_size = 1 << 16);

}  // namespace fedids::pcap

#endif  // FEDIDS_EXTRACT_H_
