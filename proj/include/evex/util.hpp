#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evex {

// input/schema problems an operator can fix; CLI maps these to exit code 1
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// everything else (I/O failures, numeric aborts); CLI maps these to exit code 2
class RuntimeError : public std::runtime_error {
 public:
  explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string to_hex(uint64_t v);

std::string lowercase(const std::string& s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

uint64_t hash_file(const std::string& path);

}  // namespace evex
