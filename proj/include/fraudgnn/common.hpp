#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fraudgnn {

using NodeId = std::uint32_t;
using TypeId = std::uint16_t;
using EdgeIndex = std::size_t;

constexpr NodeId kInvalidNode = static_cast<NodeId>(-1);

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorCategory { Config = 2, Io = 3, Numeric = 4, Validation = 5 };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory cat, const std::string& msg)
      : std::runtime_error(msg), category_(cat) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(ErrorCategory::Config, msg) {}
};
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(ErrorCategory::Io, msg) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(ErrorCategory::Numeric, msg) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error(ErrorCategory::Validation, msg) {}
};

inline void require(bool ok, ErrorCategory cat, const std::string& msg) {
  if (!ok) {
    switch (cat) {
      case ErrorCategory::Config: throw ConfigError(msg);
      case ErrorCategory::Io: throw IoError(msg);
      case ErrorCategory::Numeric: throw NumericError(msg);
      case ErrorCategory::Validation: throw ValidationError(msg);
    }
  }
}

// FNV-1a, used for config hashes and rng stream derivation.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace fraudgnn
