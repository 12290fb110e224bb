#ifndef FEDIDS_PCAP_H_
#define FEDIDS_PCAP_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <vector>

namespace fedids::pcap {

enum class ByteOrder { kBig, kLittle };
enum class TimestampUnit { kMicro, kNano };

inline constexpr std::uint32_t kLinkTypeEthernet = 1;
inline constexpr std::size_t kGlobalHeaderSize = 24;
inline constexpr std::size_t kRecordHeaderSize = 16;

struct CaptureHeader {
  // Magic as written in the file, read little-endian.
  std::uint32_t magic = 0;
  ByteOrder byte_order = ByteOrder::kLittle;
  TimestampUnit timestamp_unit = TimestampUnit::kMicro;
  std::uint16_t version_major = 0;
  std::uint16_t version_minor = 0;
  std::uint32_t snaplen = 0;
  std::uint32_t link_type = 0;
};

struct RawPacket {
  // Zero-based position of the record in the file.
  std::uint64_t index = 0;
  std::uint32_t ts_sec = 0;
  std::uint32_t ts_frac = 0;
  std::uint32_t captured_len = 0;
  std::uint32_t original_len = 0;
  std::vector<std::uint8_t> payload;
};

// Parses the classic libpcap format from bytes delivered in arbitrary chunks.
// The sequence of packets produced does not depend on how the input is split.
class StreamParser {
 public:
  void Feed(std::span<const std::uint8_t> bytes);

  // Parses the global header once 24 bytes are buffered. Returns whether the
  // header is available. Throws FormatError on an unknown magic.
  bool TryParseHeader();

  // Next complete packet, if one is buffered. Throws FormatError on a bad
  // global header or implausible record lengths.
  std::optional<RawPacket> Next();

  // Call once the input is exhausted; throws TruncationError if a partial
  // header or record is left over.
  void Finish() const;

  const std::optional<CaptureHeader>& header() const { return header_; }

 private:
  std::uint32_t ReadU32(std::size_t offset) const;
  std::uint16_t ReadU16(std::size_t offset) const;
  void Compact();

  std::vector<std::uint8_t> buffer_;
  std::size_t pos_ = 0;
  std::optional<CaptureHeader> header_;
  std::uint64_t next_index_ = 0;
};

// Decodes a 24-byte global header. Throws FormatError on an unknown magic.
CaptureHeader ParseGlobalHeader(std::span<const std::uint8_t> bytes);

// File-backed reader that feeds a StreamParser in fixed-size chunks.
class CaptureReader {
 public:
  explicit CaptureReader(const std::filesystem::path& path,
                         std::size_t chunk_size = 1 << 16);

  const CaptureHeader& header() const { return *parser_.header(); }
  std::optional<RawPacket> Next();

 private:
  bool Refill();

  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t chunk_size_;
  StreamParser parser_;
  bool eof_ = false;
};

// Opens `path` and parses its global header. Throws TruncationError for files
// shorter than 24 bytes and FormatError for an unknown magic.
CaptureReader OpenCapture(const std::filesystem::path& path,
                          std::size_t chunk_size = 1 << 16);

// Reads every packet of a capture held in memory.
std::vector<RawPacket> ReadAll(std::span<const std::uint8_t> bytes,
                               CaptureHeader* header = nullptr);

}  // namespace fedids::pcap

#endif  // FEDIDS_PCAP_H_
