#include "evex/util.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace evex {

std::string to_hex(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::string lowercase(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write file: " + path);
  out << content;
  if (!out) throw RuntimeError("write failed: " + path);
}

uint64_t hash_file(const std::string& path) {
  const std::string data = read_file(path);
  return fnv1a64(data.data(), data.size());
}

}  // namespace evex
