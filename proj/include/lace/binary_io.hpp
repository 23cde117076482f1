#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "lace/errors.hpp"

namespace lace::binary {

// Little-endian primitives shared by the checkpoint and activation formats.

inline void write_u32(std::ostream& out, std::uint32_t value) {
  std::array<char, 4> bytes{};
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFFu);
  out.write(bytes.data(), 4);
}

inline void write_f32(std::ostream& out, float value) {
  write_u32(out, std::bit_cast<std::uint32_t>(value));
}

// Reader that tracks its byte offset so format errors can cite it.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t offset() const { return offset_; }

  void read_bytes(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(std::string("unexpected end of file reading ") + what + " at offset " +
                        std::to_string(offset_));
    }
    offset_ += n;
  }

  std::uint32_t u32(const char* what) {
    std::array<unsigned char, 4> b{};
    read_bytes(reinterpret_cast<char*>(b.data()), 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

  std::uint8_t u8(const char* what) {
    char c = 0;
    read_bytes(&c, 1, what);
    return static_cast<std::uint8_t>(c);
  }

  void expect_magic(const char (&magic)[5]) {
    char got[4]{};
    read_bytes(got, 4, "magic");
    if (std::memcmp(got, magic, 4) != 0) {
      throw FormatError(std::string("bad magic at offset 0: expected \"") + magic + "\"");
    }
  }

  bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

}  // namespace lace::binary
