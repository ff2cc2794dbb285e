#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hqnet {

inline constexpr std::uint8_t kHeraldChannel = 0;     // gated herald
inline constexpr std::uint8_t kSignalChannel = 1;     // signal, or arm A when split
inline constexpr std::uint8_t kSignalBChannel = 2;    // arm B when split
inline constexpr std::uint8_t kRawHeraldChannel = 3;  // herald before electronic gating
inline constexpr std::uint16_t kChannelCount = 4;

struct TimeTag {
  std::uint64_t timestamp_ps = 0;
  std::uint8_t channel = 0;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

struct StreamMetadata {
  std::string scenario_hash;
  std::uint64_t seed = 0;
  double duration_s = 0.0;   // wall span of the stream
  double live_time_s = 0.0;  // span during which the storage window was open
  std::string tool_version;

  friend bool operator==(const StreamMetadata&, const StreamMetadata&) = default;
};

struct TimeTagStream {
  std::vector<TimeTag> events;
  std::uint16_t channel_count = kChannelCount;
  StreamMetadata metadata;

  bool is_sorted() const;
  std::size_t count(std::uint8_t channel) const;
  // Timestamps of one channel, in stream order.
  std::vector<std::uint64_t> channel_times(std::uint8_t channel) const;
};

// Binary layout: "HQTT", u16 version, u16 channel count, u64 event count, then
// 9-byte records of u64 timestamp and u8 channel, all little-endian.
std::vector<std::uint8_t> encode_hqtt(const TimeTagStream& stream);
TimeTagStream decode_hqtt(std::span<const std::uint8_t> bytes);

// Writes through a temporary file and renames; throws io_error on failure.
void write_hqtt(const std::filesystem::path& path, const TimeTagStream& stream);
TimeTagStream read_hqtt(const std::filesystem::path& path);

std::filesystem::path metadata_path(const std::filesystem::path& stream_path);
void write_metadata(const std::filesystem::path& path, const StreamMetadata& meta);
StreamMetadata read_metadata(const std::filesystem::path& path);

// Atomic text write used by every output writer.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace hqnet
