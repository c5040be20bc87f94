#pragma once

// Little-endian binary stream helpers shared by the on-disk formats.

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "plf/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts are unsupported");

namespace plf::binio {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open for reading: " + path);
  return in;
}

inline void write_u32(std::ofstream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_u8(std::ofstream& out, uint8_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f32(std::ofstream& out, const std::vector<double>& values) {
  for (double d : values) {
    float f = static_cast<float>(d);
    out.write(reinterpret_cast<const char*>(&f), sizeof f);
  }
}

inline void write_magic(std::ofstream& out, const char magic[4]) { out.write(magic, 4); }

inline uint32_t read_u32(std::ifstream& in, const std::string& path) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) fail(Errc::format, "truncated file: " + path);
  return v;
}

inline uint8_t read_u8(std::ifstream& in, const std::string& path) {
  uint8_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) fail(Errc::format, "truncated file: " + path);
  return v;
}

inline void read_magic(std::ifstream& in, const char expect[4], const std::string& path) {
  char got[4] = {};
  in.read(got, 4);
  if (!in || got[0] != expect[0] || got[1] != expect[1] || got[2] != expect[2] ||
      got[3] != expect[3]) {
    fail(Errc::format, "bad magic in " + path);
  }
}

inline void read_f32(std::ifstream& in, std::vector<double>& out, size_t count,
                     const std::string& path) {
  std::vector<float> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) fail(Errc::format, "truncated payload in " + path);
  out.resize(count);
  for (size_t i = 0; i < count; ++i) out[i] = buf[i];
}

inline void expect_eof(std::ifstream& in, const std::string& path) {
  char c;
  in.read(&c, 1);
  if (!in.eof()) fail(Errc::format, "trailing bytes in " + path);
}

}  // namespace plf::binio
