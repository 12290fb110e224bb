#include "fedids/pcap.h"

#include <cstdio>
#include <string>

#include "fedids/error.h"

namespace fedids::pcap {

namespace {

// Upper bound on a single record; anything larger means a corrupt length.
constexpr std::uint32_t kMaxRecordLen = 256u << 20;

std::string Hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

std::uint32_t LoadU32(const std::uint8_t* p, ByteOrder order) {
  if (order == ByteOrder::kLittle) {
    return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 |
           std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
  }
  return std::uint32_t{p[3]} | std::uint32_t{p[2]} << 8 |
         std::uint32_t{p[1]} << 16 | std::uint32_t{p[0]} << 24;
}

std::uint16_t LoadU16(const std::uint8_t* p, ByteOrder order) {
  if (order == ByteOrder::kLittle) {
    return static_cast<std::uint16_t>(p[0] | p[1] << 8);
  }
  return static_cast<std::uint16_t>(p[1] | p[0] << 8);
}

}  // namespace

CaptureHeader ParseGlobalHeader(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kGlobalHeaderSize) {
    throw TruncationError("capture header truncated: " +
                          std::to_string(bytes.size()) + " of 24 bytes");
  }
  CaptureHeader h;
  h.magic = LoadU32(bytes.data(), ByteOrder::kLittle);
  switch (h.magic) {
    case 0xa1b2c3d4:
      h.byte_order = ByteOrder::kLittle;
      h.timestamp_unit = TimestampUnit::kMicro;
      break;
    case 0xd4c3b2a1:
      h.byte_order = ByteOrder::kBig;
      h.timestamp_unit = TimestampUnit::kMicro;
      break;
    case 0xa1b23c4d:
      h.byte_order = ByteOrder::kLittle;
      h.timestamp_unit = TimestampUnit::kNano;
      break;
    case 0x4d3cb2a1:
      h.byte_order = ByteOrder::kBig;
      h.timestamp_unit = TimestampUnit::kNano;
      break;
    default:
      throw FormatError("unknown capture magic " + Hex32(h.magic));
  }
  h.version_major = LoadU16(bytes.data() + 4, h.byte_order);
  h.version_minor = LoadU16(bytes.data() + 6, h.byte_order);
  h.snaplen = LoadU32(bytes.data() + 16, h.byte_order);
  h.link_type = LoadU32(bytes.data() + 20, h.byte_order);
  return h;
}

void StreamParser::Feed(std::span<const std::uint8_t> bytes) {
  Compact();
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::uint32_t StreamParser::ReadU32(std::size_t offset) const {
  return LoadU32(buffer_.data() + pos_ + offset, header_->byte_order);
}

std::uint16_t StreamParser::ReadU16(std::size_t offset) const {
  return LoadU16(buffer_.data() + pos_ + offset, header_->byte_order);
}

void StreamParser::Compact() {
  if (pos_ > 0) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<long>(pos_));
    pos_ = 0;
  }
}

bool StreamParser::TryParseHeader() {
  if (header_) return true;
  if (buffer_.size() - pos_ < kGlobalHeaderSize) return false;
  header_ = ParseGlobalHeader({buffer_.data() + pos_, kGlobalHeaderSize});
  pos_ += kGlobalHeaderSize;
  return true;
}

std::optional<RawPacket> StreamParser::Next() {
  if (!TryParseHeader()) return std::nullopt;
  const std::size_t available = buffer_.size() - pos_;
  if (available < kRecordHeaderSize) return std::nullopt;

  RawPacket pkt;
  pkt.index = next_index_;
  pkt.ts_sec = ReadU32(0);
  pkt.ts_frac = ReadU32(4);
  pkt.captured_len = ReadU32(8);
  pkt.original_len = ReadU32(12);
  if (pkt.captured_len > kMaxRecordLen) {
    throw FormatError("packet index " + std::to_string(pkt.index) +
                      ": implausible captured length " +
                      std::to_string(pkt.captured_len));
  }
  if (pkt.captured_len > pkt.original_len) {
    throw FormatError("packet index " + std::to_string(pkt.index) +
                      ": captured length exceeds original length");
  }
  if (available < kRecordHeaderSize + pkt.captured_len) return std::nullopt;

  const auto* data = buffer_.data() + pos_ + kRecordHeaderSize;
  pkt.payload.assign(data, data + pkt.captured_len);
  pos_ += kRecordHeaderSize + pkt.captured_len;
  ++next_index_;
  return pkt;
}

void StreamParser::Finish() const {
  const std::size_t left = buffer_.size() - pos_;
  if (!header_) {
    throw TruncationError("capture header truncated: " + std::to_string(left) +
                          " of 24 bytes");
  }
  if (left == 0) return;
  if (left < kRecordHeaderSize) {
    throw TruncationError("packet index " + std::to_string(next_index_) +
                          ": record header truncated (" + std::to_string(left) +
                          " of 16 bytes)");
  }
  const std::uint32_t caplen = ReadU32(8);
  throw TruncationError("packet index " + std::to_string(next_index_) +
                        ": record data truncated (" +
                        std::to_string(left - kRecordHeaderSize) + " of " +
                        std::to_string(caplen) + " bytes)");
}

CaptureReader::CaptureReader(const std::filesystem::path& path,
                             std::size_t chunk_size)
    : path_(path),
      in_(path, std::ios::binary),
      chunk_size_(chunk_size == 0 ? 1 : chunk_size) {
  if (!in_) throw IoError("cannot open capture " + path.string());
  try {
    while (!parser_.TryParseHeader()) {
      if (!Refill()) parser_.Finish();
    }
  } catch (const TruncationError& e) {
    throw TruncationError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

bool CaptureReader::Refill() {
  if (eof_) return false;
  std::vector<std::uint8_t> chunk(chunk_size_);
  in_.read(reinterpret_cast<char*>(chunk.data()),
           static_cast<std::streamsize>(chunk.size()));
  const auto got = static_cast<std::size_t>(in_.gcount());
  if (got < chunk.size()) eof_ = true;
  if (in_.bad()) throw IoError("read error on " + path_.string());
  chunk.resize(got);
  parser_.Feed(chunk);
  return got > 0 || !eof_;
}

std::optional<RawPacket> CaptureReader::Next() {
  for (;;) {
    std::optional<RawPacket> pkt;
    try {
      pkt = parser_.Next();
    } catch (const FormatError& e) {
      throw FormatError(path_.string() + ": " + e.what());
    }
    if (pkt) return pkt;
    if (!Refill()) {
      try {
        parser_.Finish();
      } catch (const TruncationError& e) {
        throw TruncationError(path_.string() + ": " + e.what());
      }
      return std::nullopt;
    }
  }
}

CaptureReader OpenCapture(const std::filesystem::path& path,
                          std::size_t chunk_size) {
  return CaptureReader(path, chunk_size);
}

std::vector<RawPacket> ReadAll(std::span<const std::uint8_t> bytes,
                               CaptureHeader* header) {
  StreamParser parser;
  parser.Feed(bytes);
  std::vector<RawPacket> packets;
  while (auto pkt = parser.Next()) packets.push_back(std::move(*pkt));
  parser.Finish();
  if (header) *header = *parser.header();
  return packets;
}

}  // namespace fedids::pcap
