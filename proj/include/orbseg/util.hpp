#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace orbseg {

// 64-bit FNV-1a; used for config and content fingerprints written to manifests.
class Fnv1a {
 public:
  void update(std::string_view bytes);
  void update(const void* data, std::size_t size);
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a(std::string_view bytes);

// Deterministic derivation of an independent stream seed from a base seed and a
// salt (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

// Wraps std::mt19937_64 with portable conversions. The standard distributions
// are implementation-defined, so uniform draws are computed here to keep
// outputs identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

// Formats a double with enough digits to round-trip.
std::string format_double(double v);

std::vector<std::string> split(std::string_view text, char delim);
std::string_view trim(std::string_view text);

}  // namespace orbseg
