#include "intgrad/wire.hpp"

#include <bit>
#include <cstring>

namespace intgrad {

namespace {

constexpr char kMagic[4] = {'I', 'G', 'R', 'D'};

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

std::size_t element_size(std::uint8_t width) {
  switch (width) {
    case 8: return 1;
    case 32: return 4;
    case kWidthF64: return 8;
    default: throw DecodeError("frame width must be 8, 32 or 64, got " +
                               std::to_string(int(width)));
  }
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  const std::size_t esz = element_size(f.width);
  const std::size_t count = f.elements();
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderSize + esz * count);
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kWireVersion);
  out.push_back(f.width);
  put_u16(out, 0);  // reserved
  put_u64(out, f.iteration);
  put_u32(out, f.worker_id);
  put_u32(out, f.block_count);
  put_u64(out, count);

  if (f.width == kWidthF64) {
    for (double v : f.floats) put_u64(out, std::bit_cast<std::uint64_t>(v));
    return out;
  }
  const std::int64_t lo = f.width == 8 ? -128 : INT32_MIN;
  const std::int64_t hi = f.width == 8 ? 127 : INT32_MAX;
  for (std::size_t j = 0; j < f.ints.size(); ++j) {
    const std::int64_t v = f.ints[j];
    if (v < lo || v > hi)
      throw ProtocolError("frame value " + std::to_string(v) + " at coordinate " +
                          std::to_string(j) + " does not fit width " +
                          std::to_string(int(f.width)));
    if (f.width == 8)
      out.push_back(static_cast<std::uint8_t>(static_cast<std::int8_t>(v)));
    else
      put_u32(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(v)));
  }
  return out;
}

FrameHeader decode_header(std::span<const std::uint8_t> b) {
  if (b.size() < kFrameHeaderSize)
    throw DecodeError("truncated header: " + std::to_string(b.size()) + " of " +
                      std::to_string(kFrameHeaderSize) + " bytes");
  if (std::memcmp(b.data(), kMagic, 4) != 0) throw DecodeError("bad magic");
  if (b[4] != kWireVersion)
    throw DecodeError("unsupported version " + std::to_string(int(b[4])));
  FrameHeader h;
  h.width = b[5];
  element_size(h.width);  // validates
  if (get_u16(b.data() + 6) != 0) throw DecodeError("reserved field must be zero");
  h.iteration = get_u64(b.data() + 8);
  h.worker_id = get_u32(b.data() + 16);
  h.block_count = get_u32(b.data() + 20);
  h.elements = get_u64(b.data() + 24);
  return h;
}

Frame decode_frame(std::span<const std::uint8_t> b) {
  const FrameHeader h = decode_header(b);
  const std::size_t want = kFrameHeaderSize + h.payload_bytes();
  if (b.size() < want)
    throw DecodeError("truncated payload: " + std::to_string(b.size() - kFrameHeaderSize) +
                      " of " + std::to_string(h.payload_bytes()) + " bytes");
  if (b.size() > want) throw DecodeError("trailing bytes after payload");

  Frame f;
  f.width = h.width;
  f.iteration = h.iteration;
  f.worker_id = h.worker_id;
  f.block_count = h.block_count;
  const std::uint8_t* p = b.data() + kFrameHeaderSize;
  if (h.width == kWidthF64) {
    f.floats.resize(h.elements);
    for (std::size_t j = 0; j < h.elements; ++j)
      f.floats[j] = std::bit_cast<double>(get_u64(p + 8 * j));
  } else if (h.width == 8) {
    f.ints.resize(h.elements);
    for (std::size_t j = 0; j < h.elements; ++j)
      f.ints[j] = static_cast<std::int8_t>(p[j]);
  } else {
    f.ints.resize(h.elements);
    for (std::size_t j = 0; j < h.elements; ++j)
      f.ints[j] = static_cast<std::int32_t>(get_u32(p + 4 * j));
  }
  return f;
}

}  // namespace intgrad
