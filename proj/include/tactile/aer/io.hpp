#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tactile/aer/event_stream.hpp"
#include "tactile/aer/spike_tensor.hpp"
#include "tactile/errors.hpp"

namespace tactile::aer {

// Event file layout (little-endian):
//   "AERT" | width u16 | height u16 | duration_us u32 | count u32
//   count x { t u32 | x u16 | y u16 | polarity u8 }
inline constexpr std::array<char, 4> kEventMagic{'A', 'E', 'R', 'T'};
inline constexpr std::size_t kEventHeaderBytes = 16;
inline constexpr std::size_t kEventRecordBytes = 9;

// Spike tensor layout: "SPKT" | t_steps u32 | h u16 | w u16 | dt_us u32 | counts u16[t][y][x]
inline constexpr std::array<char, 4> kTensorMagic{'S', 'P', 'K', 'T'};
inline constexpr std::size_t kTensorHeaderBytes = 16;

namespace detail {

class ByteWriter {
public:
  void raw(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) u8(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 0; s < 64; s += 8) u8(static_cast<std::uint8_t>(v >> s));
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u32(bits);
  }
  const std::vector<char>& bytes() const noexcept { return buf_; }

private:
  std::vector<char> buf_;
};

class ByteReader {
public:
  ByteReader(const std::vector<char>& buf, std::string context) : buf_(buf), context_(std::move(context)) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return buf_.size() - pos_; }

  void need(std::size_t n, std::string_view what) const {
    if (remaining() < n) throw TruncationError(context_ + ": short " + std::string(what), pos_);
  }
  void raw(char* out, std::size_t n, std::string_view what) {
    need(n, what);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8(std::string_view what) {
    need(1, what);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint16_t u16(std::string_view what) {
    need(2, what);
    std::uint16_t v = byte(0) | static_cast<std::uint16_t>(byte(1) << 8);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(std::string_view what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte(i)) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(std::string_view what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte(i)) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32(std::string_view what) {
    const std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  const std::string& context() const noexcept { return context_; }

private:
  std::uint8_t byte(std::size_t i) const { return static_cast<std::uint8_t>(buf_[pos_ + i]); }

  const std::vector<char>& buf_;
  std::string context_;
  std::size_t pos_ = 0;
};

inline std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void dump(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

inline std::vector<char> encode_events(const EventStream& stream) {
  detail::ByteWriter w;
  w.raw(kEventMagic.data(), kEventMagic.size());
  w.u16(stream.width());
  w.u16(stream.height());
  w.u32(stream.duration_us());
  w.u32(static_cast<std::uint32_t>(stream.size()));
  for (const auto& e : stream.events()) {
    w.u32(e.t);
    w.u16(e.x);
    w.u16(e.y);
    w.u8(static_cast<std::uint8_t>(e.polarity));
  }
  return w.bytes();
}

inline EventStream decode_events(const std::vector<char>& bytes, const std::string& context = "event buffer") {
  detail::ByteReader r(bytes, context);
  std::array<char, 4> magic{};
  r.raw(magic.data(), magic.size(), "magic");
  if (magic != kEventMagic) throw FormatError(context + ": bad magic, expected AERT");
  const auto width = r.u16("header width");
  const auto height = r.u16("header height");
  const auto duration = r.u32("header duration");
  const auto count = r.u32("header event count");
  std::vector<Event> events;
  events.reserve(std::min<std::size_t>(count, r.remaining() / kEventRecordBytes));
  for (std::uint32_t i = 0; i < count; ++i) {
    r.need(kEventRecordBytes, "event record " + std::to_string(i));
    Event e;
    e.t = r.u32("t");
    e.x = r.u16("x");
    e.y = r.u16("y");
    const auto p = r.u8("polarity");
    if (p > 1) throw FormatError(context + ": polarity byte " + std::to_string(p) + " in record " + std::to_string(i));
    e.polarity = static_cast<Polarity>(p);
    if (e.x >= width || e.y >= height || e.t >= duration)
      throw FormatError(context + ": record " + std::to_string(i) + " out of bounds");
    events.push_back(e);
  }
  if (r.remaining() != 0)
    throw FormatError(context + ": " + std::to_string(r.remaining()) + " trailing bytes after " +
                      std::to_string(count) + " records");
  return {width, height, duration, std::move(events)};
}

inline void write_events(const EventStream& stream, const std::filesystem::path& path) {
  detail::dump(path, encode_events(stream));
}

// The returned stream reports resorted() if the file was not time-ordered.
inline EventStream read_events(const std::filesystem::path& path) {
  return decode_events(detail::slurp(path), path.string());
}

// Debug CSV: header `t_us,x,y,p` with p in {0,1}. Geometry is not stored.
inline void write_events_csv(const EventStream& stream, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "t_us,x,y,p\n";
  for (const auto& e : stream.events())
    out << e.t << ',' << e.x << ',' << e.y << ',' << static_cast<int>(e.polarity) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

inline EventStream read_events_csv(const std::filesystem::path& path, std::uint16_t width,
                                   std::uint16_t height, std::uint32_t duration_us) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string line;
  if (!std::getline(in, line) || line != "t_us,x,y,p")
    throw FormatError(path.string() + ": expected header t_us,x,y,p");
  std::vector<Event> events;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    unsigned long t, x, y, p;
    char c1, c2, c3;
    if (!(ss >> t >> c1 >> x >> c2 >> y >> c3 >> p) || c1 != ',' || c2 != ',' || c3 != ',' || p > 1 ||
        x >= width || y >= height || t >= duration_us)
      throw FormatError(path.string() + ": malformed line " + std::to_string(lineno));
    events.push_back({static_cast<std::uint32_t>(t), static_cast<std::uint16_t>(x),
                      static_cast<std::uint16_t>(y), static_cast<Polarity>(p)});
  }
  return {width, height, duration_us, std::move(events)};
}

inline std::vector<char> encode_tensor(const SpikeTensor& tensor) {
  detail::ByteWriter w;
  w.raw(kTensorMagic.data(), kTensorMagic.size());
  w.u32(tensor.t_steps());
  w.u16(tensor.height());
  w.u16(tensor.width());
  w.u32(tensor.dt_us());
  for (auto c : tensor.counts()) w.u16(c);
  return w.bytes();
}

inline SpikeTensor decode_tensor(const std::vector<char>& bytes, const std::string& context = "tensor buffer") {
  detail::ByteReader r(bytes, context);
  std::array<char, 4> magic{};
  r.raw(magic.data(), magic.size(), "magic");
  if (magic != kTensorMagic) throw FormatError(context + ": bad magic, expected SPKT");
  const auto steps = r.u32("t_steps");
  const auto h = r.u16("height");
  const auto w = r.u16("width");
  const auto dt = r.u32("dt_us");
  if (dt == 0) throw FormatError(context + ": zero bin width");
  const std::size_t n = static_cast<std::size_t>(steps) * h * w;
  r.need(2 * n, "count payload");
  std::vector<std::uint16_t> counts(n);
  for (auto& c : counts) c = r.u16("count");
  if (r.remaining() != 0) throw FormatError(context + ": trailing bytes after tensor payload");
  return {steps, h, w, dt, std::move(counts)};
}

inline void write_tensor(const SpikeTensor& tensor, const std::filesystem::path& path) {
  detail::dump(path, encode_tensor(tensor));
}

inline SpikeTensor read_tensor(const std::filesystem::path& path) {
  return decode_tensor(detail::slurp(path), path.string());
}

}  // namespace tactile::aer
