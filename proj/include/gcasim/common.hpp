#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace gcasim {

inline constexpr const char* kToolName = "gcasim";
inline constexpr const char* kToolVersion = "0.1.0";

// Error taxonomy. The CLI maps these onto distinct exit codes, so library
// code should pick the narrowest category that applies.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string msg) {
  if (sink != nullptr) sink->push_back(std::move(msg));
}

using Rng = std::mt19937_64;

// Unbiased integer draw in [0, n). Hand-rolled rejection sampling so results
// do not depend on the standard library's distribution implementation.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) throw ConfigError("uniform_index: empty range");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double in [lo, hi).
inline double uniform_real(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

// Shortest round-trip decimal form of a double, via std::to_chars.
inline std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// SplitMix64 finalizer; used to derive independent child seeds from one
// user-facing seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream + 0x51ed2701ab0e8e35ULL));
}

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

// Global worker budget for parallel_for. 0 means "hardware concurrency".
void set_max_threads(unsigned n);
unsigned max_threads();

// Static contiguous chunking over [0, n). Chunk boundaries depend only on n
// and the worker count, so runs with a fixed thread budget are deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& chunk_fn);

}  // namespace gcasim
