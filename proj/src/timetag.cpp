#include "hqnet/timetag.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "hqnet/error.h"

namespace hqnet {

namespace {

constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 16;
constexpr std::size_t kRecordBytes = 9;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
  return value;
}

void write_bytes_atomic(const std::filesystem::path& path, const char* data, std::size_t size) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot open " + tmp.string() + " for writing");
    out.write(data, static_cast<std::streamsize>(size));
    if (!out) throw Error(ErrorCode::io_error, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace

bool TimeTagStream::is_sorted() const {
  return std::is_sorted(events.begin(), events.end(),
                        [](const TimeTag& a, const TimeTag& b) { return a.timestamp_ps < b.timestamp_ps; });
}

std::size_t TimeTagStream::count(std::uint8_t channel) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [channel](const TimeTag& e) { return e.channel == channel; }));
}

std::vector<std::uint64_t> TimeTagStream::channel_times(std::uint8_t channel) const {
  std::vector<std::uint64_t> out;
  for (const auto& e : events)
    if (e.channel == channel) out.push_back(e.timestamp_ps);
  return out;
}

std::vector<std::uint8_t> encode_hqtt(const TimeTagStream& s) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + kRecordBytes * s.events.size());
  for (char c : {'H', 'Q', 'T', 'T'}) out.push_back(static_cast<std::uint8_t>(c));
  put_le<std::uint16_t>(out, kVersion);
  put_le<std::uint16_t>(out, s.channel_count);
  put_le<std::uint64_t>(out, s.events.size());
  for (const auto& e : s.events) {
    put_le<std::uint64_t>(out, e.timestamp_ps);
    out.push_back(e.channel);
  }
  return out;
}

TimeTagStream decode_hqtt(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), "HQTT", 4) != 0)
    throw Error(ErrorCode::io_error, "not an HQTT stream");
  const auto version = get_le<std::uint16_t>(bytes.data() + 4);
  if (version != kVersion) throw Error(ErrorCode::io_error, "unsupported HQTT version " + std::to_string(version));
  TimeTagStream s;
  s.channel_count = get_le<std::uint16_t>(bytes.data() + 6);
  const auto n = get_le<std::uint64_t>(bytes.data() + 8);
  if (n > (bytes.size() - kHeaderBytes) / kRecordBytes || bytes.size() != kHeaderBytes + n * kRecordBytes)
    throw Error(ErrorCode::io_error, "HQTT event count does not match the payload size");
  s.events.resize(n);
  const std::uint8_t* p = bytes.data() + kHeaderBytes;
  for (auto& e : s.events) {
    e.timestamp_ps = get_le<std::uint64_t>(p);
    e.channel = p[8];
    if (e.channel >= s.channel_count) throw Error(ErrorCode::io_error, "HQTT record has an undeclared channel");
    p += kRecordBytes;
  }
  return s;
}

void write_hqtt(const std::filesystem::path& path, const TimeTagStream& s) {
  const auto bytes = encode_hqtt(s);
  write_bytes_atomic(path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

TimeTagStream read_hqtt(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_hqtt(bytes);
}

std::filesystem::path metadata_path(const std::filesystem::path& stream_path) {
  auto p = stream_path;
  p += ".meta.json";
  return p;
}

void write_metadata(const std::filesystem::path& path, const StreamMetadata& m) {
  nlohmann::json j;
  j["format"] = "HQTT";
  j["scenario_hash"] = m.scenario_hash;
  j["seed"] = m.seed;
  j["duration_s"] = m.duration_s;
  j["live_time_s"] = m.live_time_s;
  j["tool_version"] = m.tool_version;
  j["channels"] = {{"0", "herald (gated)"}, {"1", "signal / arm A"}, {"2", "signal arm B"}, {"3", "herald (raw)"}};
  write_text_atomic(path, j.dump(2) + "\n");
}

StreamMetadata read_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open metadata " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    StreamMetadata m;
    m.scenario_hash = j.at("scenario_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.duration_s = j.at("duration_s").get<double>();
    m.live_time_s = j.at("live_time_s").get<double>();
    m.tool_version = j.value("tool_version", "");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::io_error, "malformed metadata " + path.string() + ": " + e.what());
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_bytes_atomic(path, text.data(), text.size());
}

}  // namespace hqnet
