#pragma once

// Little-endian length-prefixed primitives shared by the checkpoint writers.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "glove/core.hpp"

namespace glove::blob {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void put_blob(std::ostream& os, const std::string& name, const Matrix& m) {
  put_string(os, name);
  put_u64(os, static_cast<std::uint64_t>(m.rows()));
  put_u64(os, static_cast<std::uint64_t>(m.cols()));
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(Scalar) * m.size()));
}

[[noreturn]] inline void corrupt(const std::string& why) {
  throw GloveError(ErrorCategory::checkpoint_corrupt, "corrupt checkpoint: " + why);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) corrupt("unexpected end of file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) corrupt("unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

inline std::string get_string(std::istream& is, std::uint32_t max_len = 1u << 24) {
  const std::uint32_t n = get_u32(is);
  if (n > max_len) corrupt("unreasonable string length");
  std::string s(n, '\0');
  if (n && !is.read(s.data(), n)) corrupt("unexpected end of file");
  return s;
}

inline Matrix get_blob_body(std::istream& is) {
  const std::uint64_t rows = get_u64(is);
  const std::uint64_t cols = get_u64(is);
  if (rows > (1u << 24) || cols > (1u << 24) || rows * cols > (1ull << 30))
    corrupt("unreasonable blob shape");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  const std::streamsize bytes = static_cast<std::streamsize>(sizeof(Scalar) * m.size());
  if (m.size() && !is.read(reinterpret_cast<char*>(m.data()), bytes))
    corrupt("unexpected end of file in blob");
  return m;
}

}  // namespace glove::blob
