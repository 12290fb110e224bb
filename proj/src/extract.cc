#include "fedids/extract.h"

#include <cstdio>
#include <fstream>

#include "fedids/error.h"

namespace fedids::pcap {

namespace {

constexpr std::size_t kEthernetHeader = 14;
constexpr std::size_t kMinIpv4Header = 20;
constexpr std::size_t kMinTcpHeader = 20;

constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
constexpr std::uint16_t kEtherTypeArp = 0x0806;
constexpr std::uint16_t kEtherTypeRarp = 0x8035;
constexpr std::uint16_t kEtherTypeIpv6 = 0x86dd;
constexpr std::uint16_t kEtherTypeLldp = 0x88cc;

constexpr std::uint8_t kProtoTcp = 6;
constexpr std::uint8_t kProtoUdp = 17;

std::uint16_t Be16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] << 8 | p[1]);
}

bool IsVlanTag(std::uint16_t ethertype) {
  return ethertype == 0x8100 || ethertype == 0x88a8 || ethertype == 0x9100;
}

std::string Dotted(const std::uint8_t* p) {
  return std::to_string(p[0]) + "." + std::to_string(p[1]) + "." +
         std::to_string(p[2]) + "." + std::to_string(p[3]);
}

std::string Hex(std::int64_t v, int width) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%0*llx", width,
                static_cast<unsigned long long>(v));
  return buf;
}

std::string Truncated(const RawPacket& packet, const char* what,
                      std::size_t need, std::size_t have) {
  return "packet index " + std::to_string(packet.index) + ": " + what +
         " truncated (" + std::to_string(have) + " of " +
         std::to_string(need) + " bytes)";
}

template <typename T>
std::string OptionalText(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_same_v<T, std::string>) {
    return *v;
  } else {
    return std::to_string(*v);
  }
}

std::string Quote(std::string_view cell) {
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

ExtractOutcome Extract(const RawPacket& packet) {
  const auto& bytes = packet.payload;
  ExtractedFields f;
  f.frame_len = packet.original_len;

  if (bytes.size() < kEthernetHeader) {
    throw TruncationError(
        Truncated(packet, "Ethernet header", kEthernetHeader, bytes.size()));
  }
  const std::uint16_t ethertype = Be16(bytes.data() + 12);
  if (ethertype == kEtherTypeIpv6) return Skipped{SkipReason::kIpv6};
  if (IsVlanTag(ethertype)) return Skipped{SkipReason::kVlan};

  if (ethertype != kEtherTypeIpv4) {
    if (ethertype < 0x0600) {
      // 802.3 length field rather than an ethertype.
      f.frame_protocols = "eth:llc";
    } else if (ethertype == kEtherTypeArp) {
      f.frame_protocols = "eth:ethertype:arp";
    } else if (ethertype == kEtherTypeRarp) {
      f.frame_protocols = "eth:ethertype:rarp";
    } else if (ethertype == kEtherTypeLldp) {
      f.frame_protocols = "eth:ethertype:lldp";
    } else {
      f.frame_protocols = "eth:ethertype:data";
    }
    return f;
  }

  const std::uint8_t* ip = bytes.data() + kEthernetHeader;
  const std::size_t ip_avail = bytes.size() - kEthernetHeader;
  if (ip_avail < kMinIpv4Header) {
    throw TruncationError(
        Truncated(packet, "IPv4 header", kMinIpv4Header, ip_avail));
  }
  if ((ip[0] >> 4) != 4) {
    throw FormatError("packet index " + std::to_string(packet.index) +
                      ": IPv4 ethertype with IP version " +
                      std::to_string(ip[0] >> 4));
  }
  const std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0f) * 4;
  if (ihl < kMinIpv4Header) {
    throw FormatError("packet index " + std::to_string(packet.index) +
                      ": IPv4 header length " + std::to_string(ihl) +
                      " below minimum");
  }
  if (ip_avail < ihl) {
    throw TruncationError(Truncated(packet, "IPv4 header", ihl, ip_avail));
  }
  f.ip_len = Be16(ip + 2);
  f.ip_flags = ip[6];
  f.ip_ttl = ip[8];
  f.ip_proto = ip[9];
  f.ip_src = Dotted(ip + 12);
  f.ip_dst = Dotted(ip + 16);

  const bool first_fragment = (Be16(ip + 6) & 0x1fff) == 0;
  if (!first_fragment ||
      (f.ip_proto != kProtoTcp && f.ip_proto != kProtoUdp)) {
    f.frame_protocols = "eth:ethertype:ip";
    return f;
  }
  if (f.ip_proto == kProtoUdp) {
    f.frame_protocols = "eth:ethertype:ip:udp";
    return f;
  }

  f.frame_protocols = "eth:ethertype:ip:tcp";
  const std::uint8_t* tcp = ip + ihl;
  const std::size_t tcp_avail = ip_avail - ihl;
  if (tcp_avail < kMinTcpHeader) {
    throw TruncationError(
        Truncated(packet, "TCP header", kMinTcpHeader, tcp_avail));
  }
  const std::size_t hdr_len = static_cast<std::size_t>(tcp[12] >> 4) * 4;
  if (hdr_len < kMinTcpHeader) {
    throw FormatError("packet index " + std::to_string(packet.index) +
                      ": TCP data offset " + std::to_string(hdr_len) +
                      " below minimum");
  }
  if (tcp_avail < hdr_len) {
    throw TruncationError(Truncated(packet, "TCP header", hdr_len, tcp_avail));
  }
  const std::int64_t segment = *f.ip_len - static_cast<std::int64_t>(ihl) -
                               static_cast<std::int64_t>(hdr_len);
  if (segment < 0) {
    throw FormatError("packet index " + std::to_string(packet.index) +
                      ": IP total length " + std::to_string(*f.ip_len) +
                      " smaller than its headers");
  }
  f.tcp_srcport = Be16(tcp);
  f.tcp_dstport = Be16(tcp + 2);
  f.tcp_len = segment;
  f.tcp_hdr_len = static_cast<std::int64_t>(hdr_len);
  f.tcp_flags = Be16(tcp + 12) & 0x0fff;
  f.tcp_window_size_value = Be16(tcp + 14);
  // The scale factor is only known from the stream's SYN exchange, which is
  // not tracked: the window is reported unscaled with factor -1 (unknown).
  f.tcp_window_size = f.tcp_window_size_value;
  f.tcp_window_size_scalefactor = -1;
  return f;
}

std::array<std::string, 20> FormatFields(const ExtractedFields& f) {
  return {
      OptionalText(f.frame_len),
      f.frame_protocols,
      OptionalText(f.ip_len),
      f.ip_flags ? Hex(*f.ip_flags, 2) : std::string(),
      OptionalText(f.ip_ttl),
      OptionalText(f.ip_proto),
      OptionalText(f.ip_src),
      OptionalText(f.ip_dst),
      OptionalText(f.tcp_srcport),
      OptionalText(f.tcp_dstport),
      OptionalText(f.tcp_len),
      OptionalText(f.tcp_hdr_len),
      f.tcp_flags ? Hex(*f.tcp_flags, 4) : std::string(),
      OptionalText(f.tcp_window_size_value),
      OptionalText(f.tcp_window_size),
      OptionalText(f.tcp_window_size_scalefactor),
      f.tcp_time_relative ? std::to_string(*f.tcp_time_relative)
                          : std::string(),
      f.tcp_time_delta ? std::to_string(*f.tcp_time_delta) : std::string(),
      OptionalText(f.tcp_analysis_bytes_in_flight),
      OptionalText(f.tcp_analysis_push_bytes_sent),
  };
}

void WriteCsvHeader(std::ostream& out) {
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    if (i) out << ',';
    out << kCsvColumns[i];
  }
  out << '\n';
}

void WriteCsvRow(std::ostream& out, const ExtractedFields& fields) {
  const auto cells = FormatFields(fields);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << Quote(cells[i]);
  }
  out << '\n';
}

void EmitCsv(std::span<const ExtractedFields> records,
             const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  WriteCsvHeader(out);
  for (const auto& r : records) WriteCsvRow(out, r);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

ConversionSummary ConvertCapture(const std::filesystem::path& capture,
                                 const std::filesystem::path& csv,
                                 std::size_t chunk_size) {
  ConversionSummary summary;
  CaptureReader reader = OpenCapture(capture, chunk_size);
  if (reader.header().link_type != kLinkTypeEthernet) {
    summary.skipped_link_type = true;
    summary.warnings.push_back(capture.string() + ": link type " +
                               std::to_string(reader.header().link_type) +
                               " is not Ethernet, skipped");
    return summary;
  }

  std::ofstream out(csv, std::ios::binary);
  if (!out) throw IoError("cannot open " + csv.string() + " for writing");
  WriteCsvHeader(out);
  while (auto packet = reader.Next()) {
    ++summary.packets;
    try {
      ExtractOutcome outcome = Extract(*packet);
      if (auto* fields = std::get_if<ExtractedFields>(&outcome)) {
        WriteCsvRow(out, *fields);
        ++summary.rows;
      } else if (std::get<Skipped>(outcome).reason == SkipReason::kIpv6) {
        ++summary.skipped_ipv6;
      } else {
        ++summary.skipped_vlan;
      }
    } catch (const TruncationError& e) {
      ++summary.malformed;
      summary.warnings.push_back(capture.string() + ": " + e.what());
    } catch (const FormatError& e) {
      ++summary.malformed;
      summary.warnings.push_back(capture.string() + ": " + e.what());
    }
  }
  if (summary.skipped_ipv6 > 0) {
    summary.warnings.push_back(capture.string() + ": skipped " +
                               std::to_string(summary.skipped_ipv6) +
                               " IPv6 packet(s)");
  }
  if (summary.skipped_vlan > 0) {
    summary.warnings.push_back(capture.string() + ": skipped " +
                               std::to_string(summary.skipped_vlan) +
                               " VLAN-tagged packet(s)");
  }
  out.flush();
  if (!out) throw IoError("failed writing " + csv.string());
  return summary;
}

}  // namespace fedids::pcap
