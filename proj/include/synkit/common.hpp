//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace synkit {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define SYNKIT_ERROR_TYPE(NAME)                             \
  struct NAME : Error {                                     \
    explicit NAME(const std::string& m) : Error(#NAME ": " + m) {} \
  }

SYNKIT_ERROR_TYPE(ShapeMismatch);
SYNKIT_ERROR_TYPE(NonFiniteValue);
SYNKIT_ERROR_TYPE(NotScalar);
SYNKIT_ERROR_TYPE(FeatureDimTooSmall);
SYNKIT_ERROR_TYPE(SchemaError);
SYNKIT_ERROR_TYPE(DanglingReference);
SYNKIT_ERROR_TYPE(EmptyPartition);
SYNKIT_ERROR_TYPE(NoOodSamples);
SYNKIT_ERROR_TYPE(NoTargets);
SYNKIT_ERROR_TYPE(DegenerateDescriptor);
SYNKIT_ERROR_TYPE(MissingKnowledge);
SYNKIT_ERROR_TYPE(DuplicateKey);
SYNKIT_ERROR_TYPE(ContextOverflow);
SYNKIT_ERROR_TYPE(LengthMismatch);
SYNKIT_ERROR_TYPE(ZeroVariance);
SYNKIT_ERROR_TYPE(IoError);

#undef SYNKIT_ERROR_TYPE

// Byte-offset-carrying parse errors for the SMILES reader.
struct SmilesError : Error {
  std::size_t offset;
  SmilesError(const std::string& kind, const std::string& m, std::size_t off)
      : Error(kind + " at byte " + std::to_string(off) + ": " + m), offset(off) {}
};

struct UnsupportedToken : SmilesError {
  UnsupportedToken(const std::string& m, std::size_t off)
      : SmilesError("UnsupportedToken", m, off) {}
};

struct UnbalancedRingClosure : SmilesError {
  UnbalancedRingClosure(const std::string& m, std::size_t off)
      : SmilesError("UnbalancedRingClosure", m, off) {}
};

struct UnbalancedParenthesis : SmilesError {
  UnbalancedParenthesis(const std::string& m, std::size_t off)
      : SmilesError("UnbalancedParenthesis", m, off) {}
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic, platform-independent random stream. All randomness in the
// repo flows from one seed through named sub-streams (fork).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // burn-in so small seeds decorrelate
    splitmix64(state_);
    splitmix64(state_);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  double uniform() {  // [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller without caching the spare draw; keeps the stream
  // position a pure function of call count.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // inclusive bounds
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  Rng fork(std::string_view stream) const {
    std::uint64_t s = state_;
    return Rng(fnv1a64(stream) ^ (s * 0x9e3779b97f4a7c15ull) ^ 0xa5a5a5a55a5a5a5aull);
  }

 private:
  std::uint64_t state_;
};

// Shortest round-trip representation of a double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, bool& ok) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  ok = (res.ec == std::errc() && res.ptr == s.data() + s.size());
  return v;
}

inline std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == delim) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

}  // namespace synkit
