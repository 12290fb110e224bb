#include "fedids/pcap.h"

#include <cstdint>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fedids/error.h"
#include "test_util.h"

namespace fedids::pcap {
namespace {

namespace fs = std::filesystem;
using Bytes = std::vector<std::uint8_t>;

void Put32(Bytes& b, std::uint32_t v, bool big) {
  for (int i = 0; i < 4; ++i) {
    const int shift = big ? 8 * (3 - i) : 8 * i;
    b.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void Put16(Bytes& b, std::uint16_t v, bool big) {
  b.push_back(static_cast<std::uint8_t>(big ? v >> 8 : v));
  b.push_back(static_cast<std::uint8_t>(big ? v : v >> 8));
}

Bytes GlobalHeader(std::uint32_t magic, bool big, std::uint32_t link = 1) {
  Bytes b;
  Put32(b, magic, big);
  Put16(b, 2, big);
  Put16(b, 4, big);
  Put32(b, 0, big);
  Put32(b, 0, big);
  Put32(b, 65535, big);
  Put32(b, link, big);
  return b;
}

void AddRecord(Bytes& b, const Bytes& data, bool big,
               std::uint32_t orig_len = 0) {
  Put32(b, 1, big);
  Put32(b, 2, big);
  Put32(b, static_cast<std::uint32_t>(data.size()), big);
  Put32(b, orig_len ? orig_len : static_cast<std::uint32_t>(data.size()), big);
  b.insert(b.end(), data.begin(), data.end());
}

Bytes SampleCapture(bool big, std::uint32_t magic = 0xa1b2c3d4) {
  Bytes b = GlobalHeader(magic, big);
  for (std::uint8_t n = 1; n <= 5; ++n) AddRecord(b, Bytes(n * 7u, n), big);
  return b;
}

std::vector<RawPacket> ParseChunked(const Bytes& bytes, std::size_t chunk) {
  StreamParser parser;
  std::vector<RawPacket> out;
  for (std::size_t i = 0; i < bytes.size(); i += chunk) {
    const std::size_t n = std::min(chunk, bytes.size() - i);
    parser.Feed(std::span<const std::uint8_t>(bytes).subspan(i, n));
    while (auto p = parser.Next()) out.push_back(std::move(*p));
  }
  parser.Finish();
  return out;
}

void ExpectSamePackets(const std::vector<RawPacket>& a,
                       const std::vector<RawPacket>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].index, b[i].index);
    EXPECT_EQ(a[i].ts_sec, b[i].ts_sec);
    EXPECT_EQ(a[i].ts_frac, b[i].ts_frac);
    EXPECT_EQ(a[i].captured_len, b[i].captured_len);
    EXPECT_EQ(a[i].original_len, b[i].original_len);
    EXPECT_EQ(a[i].payload, b[i].payload);
  }
}

TEST(ParseGlobalHeader, EmptyLittleEndianCapture) {
  const Bytes b = GlobalHeader(0xa1b2c3d4, false);
  CaptureHeader header;
  EXPECT_TRUE(ReadAll(b, &header).empty());
  EXPECT_EQ(header.byte_order, ByteOrder::kLittle);
  EXPECT_EQ(header.timestamp_unit, TimestampUnit::kMicro);
  EXPECT_EQ(header.link_type, kLinkTypeEthernet);
  EXPECT_EQ(header.snaplen, 65535u);
}

TEST(ParseGlobalHeader, SwappedMagicParsesIdentically) {
  const CaptureHeader le = ParseGlobalHeader(GlobalHeader(0xa1b2c3d4, false));
  const CaptureHeader be = ParseGlobalHeader(GlobalHeader(0xa1b2c3d4, true));
  EXPECT_EQ(be.byte_order, ByteOrder::kBig);
  EXPECT_EQ(le.link_type, be.link_type);
  EXPECT_EQ(le.snaplen, be.snaplen);
  EXPECT_EQ(le.version_major, be.version_major);
  ExpectSamePackets(ReadAll(SampleCapture(false)), ReadAll(SampleCapture(true)));
}

TEST(ParseGlobalHeader, NanosecondVariants) {
  for (bool big : {false, true}) {
    const CaptureHeader h = ParseGlobalHeader(GlobalHeader(0xa1b23c4d, big));
    EXPECT_EQ(h.timestamp_unit, TimestampUnit::kNano);
    EXPECT_EQ(h.byte_order, big ? ByteOrder::kBig : ByteOrder::kLittle);
  }
}

TEST(ParseGlobalHeader, RejectsUnknownMagic) {
  EXPECT_THROW(ParseGlobalHeader(GlobalHeader(0xdeadbeef, false)), FormatError);
  EXPECT_THROW(ReadAll(GlobalHeader(0x0a0d0d0a, false)), FormatError);
}

TEST(ParseGlobalHeader, ShortFileIsTruncation) {
  const Bytes b(10, 0xd4);
  EXPECT_THROW(ParseGlobalHeader(b), TruncationError);
  EXPECT_THROW(ReadAll(b), TruncationError);
}

TEST(StreamParser, ChunkingDoesNotMatter) {
  const Bytes bytes = SampleCapture(false);
  const auto whole = ParseChunked(bytes, bytes.size());
  ASSERT_EQ(whole.size(), 5u);
  for (std::size_t chunk : {1u, 2u, 3u, 7u, 16u, 23u, 24u, 25u, 100u}) {
    ExpectSamePackets(whole, ParseChunked(bytes, chunk));
  }
}

TEST(StreamParser, TruncatedRecordNamesPacketIndex) {
  Bytes bytes = SampleCapture(false);
  bytes.resize(bytes.size() - 3);
  try {
    ReadAll(bytes);
    FAIL() << "expected TruncationError";
  } catch (const TruncationError& e) {
    EXPECT_NE(std::string(e.what()).find("packet index 4"), std::string::npos)
        << e.what();
  }
  // Cut inside the record header of packet 2.
  Bytes header_cut = GlobalHeader(0xa1b2c3d4, false);
  AddRecord(header_cut, Bytes(10, 1), false);
  AddRecord(header_cut, Bytes(10, 2), false);
  header_cut.resize(24 + 26 + 8);
  try {
    ReadAll(header_cut);
    FAIL() << "expected TruncationError";
  } catch (const TruncationError& e) {
    EXPECT_NE(std::string(e.what()).find("packet index 1"), std::string::npos)
        << e.what();
  }
}

TEST(StreamParser, RejectsCaplenAboveOrigLen) {
  Bytes b = GlobalHeader(0xa1b2c3d4, false);
  AddRecord(b, Bytes(20, 0), false, 10);
  EXPECT_THROW(ReadAll(b), FormatError);
}

TEST(CaptureReader, MatchesInMemoryParse) {
  const fs::path dir = fedids::testing::TempDir("pcap_reader");
  const Bytes bytes = SampleCapture(true, 0xa1b23c4d);
  const fs::path file = dir / "x.pcap";
  fedids::testing::WriteFile(file, std::string(bytes.begin(), bytes.end()));
  for (std::size_t chunk : {1u, 5u, 64u, 65536u}) {
    CaptureReader reader = OpenCapture(file, chunk);
    EXPECT_EQ(reader.header().timestamp_unit, TimestampUnit::kNano);
    std::vector<RawPacket> packets;
    while (auto p = reader.Next()) packets.push_back(std::move(*p));
    ExpectSamePackets(ReadAll(bytes), packets);
  }
}

TEST(CaptureReader, MissingFileIsIoError) {
  EXPECT_THROW(OpenCapture("/nonexistent/file.pcap"), IoError);
}

}  // namespace
}  // namespace fedids::pcap
