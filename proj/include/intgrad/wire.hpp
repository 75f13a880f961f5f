#ifndef INTGRAD_WIRE_HPP
#define INTGRAD_WIRE_HPP

// Frame layout (little-endian, 32-byte header):
//
//   offset  size  field
//        0     4  magic "IGRD"
//        4     1  version (currently 1)
//        5     1  width: 8 or 32 (packed signed integers, two's complement)
//                        or 64 (IEEE-754 float64 payload, gather rounds)
//        6     2  reserved, must be zero
//        8     8  iteration (u64)
//       16     4  worker id (u32; 0xffffffff marks an aggregator response)
//       20     4  block count (u32, informational)
//       24     8  payload element count (u64)
//       32     -  payload
//
// Integer payloads never wrap silently: encoding a value that does not fit
// the declared width throws instead.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace intgrad {

struct DecodeError : std::runtime_error {
  explicit DecodeError(const std::string& what) : std::runtime_error(what) {}
};

struct ProtocolError : std::runtime_error {
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

struct TransportError : std::runtime_error {
  explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr std::size_t kFrameHeaderSize = 32;
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::uint8_t kWidthF64 = 64;
inline constexpr std::uint32_t kAggregatorId = 0xffffffffu;

struct Frame {
  std::uint8_t width = 32;
  std::uint64_t iteration = 0;
  std::uint32_t worker_id = 0;
  std::uint32_t block_count = 1;
  std::vector<std::int64_t> ints;   // width 8 / 32
  std::vector<double> floats;      // width 64

  std::size_t elements() const {
    return width == kWidthF64 ? floats.size() : ints.size();
  }
};

// bytes per payload element for a given width tag
std::size_t element_size(std::uint8_t width);

std::vector<std::uint8_t> encode_frame(const Frame& f);

// expects exactly one whole frame
Frame decode_frame(std::span<const std::uint8_t> bytes);

// header-only parse: returns the payload byte count so a stream reader can
// size its second read; validates magic/version/width/reserved
struct FrameHeader {
  std::uint8_t width;
  std::uint64_t iteration;
  std::uint32_t worker_id;
  std::uint32_t block_count;
  std::uint64_t elements;
  std::size_t payload_bytes() const { return elements * element_size(width); }
};
FrameHeader decode_header(std::span<const std::uint8_t> bytes);

}  // namespace intgrad

#endif  // INTGRAD_WIRE_HPP
