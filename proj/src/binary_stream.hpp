#pragma once

// Host-endian (little-endian on every supported target) record streams for
// the library's binary files.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "mrloc/error.hpp"

namespace mrloc::detail {

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path + " for writing");
  }

  template <typename T>
  void pod(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }

  template <typename T>
  void array(const T* data, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
  }

  void bytes(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }

  void string(const std::string& s) {
    pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

  void finish() {
    out_.flush();
    if (!out_) throw IoError("failed writing " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path);
  }

  void expect_magic(const char (&magic)[5], const std::string& what) {
    char buf[4];
    in_.read(buf, 4);
    if (!in_ || std::memcmp(buf, magic, 4) != 0) throw IoError(path_ + " is not " + what);
  }

  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    check();
    return v;
  }

  template <typename T>
  void array(T* data, std::size_t n) {
    in_.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
    check();
  }

  std::string string(std::size_t limit = std::size_t{1} << 26) {
    const auto n = pod<std::uint32_t>();
    if (n > limit) throw IoError(path_ + ": corrupt string length");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    check();
    return s;
  }

  // Guard against absurd counts from corrupt headers.
  std::size_t count(std::size_t limit = std::size_t{1} << 32) {
    const auto n = pod<std::uint64_t>();
    if (n > limit) throw IoError(path_ + ": corrupt element count");
    return static_cast<std::size_t>(n);
  }

  const std::string& path() const { return path_; }

 private:
  void check() {
    if (!in_) throw IoError(path_ + ": truncated file");
  }

  std::string path_;
  std::ifstream in_;
};

}  // namespace mrloc::detail
