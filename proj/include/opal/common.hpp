// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef OPAL_COMMON_HPP
#define OPAL_COMMON_HPP

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace opal {

/// Point in the domain; for 1d problems only the first coordinate is used.
using Point = std::array<double, 2>;

/// Invalid experiment or CLI configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a trustworthy result: solver
/// divergence, violated stability condition, indefinite kernel matrix
/// (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// SplitMix64 finalizer, used to decorrelate (seed, stream) pairs.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// RNG addressed by (seed, stream). Distinct streams give independent,
/// reproducible sequences regardless of the order they are consumed in,
/// so per-sample streams can be drawn concurrently.
inline std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  const std::uint64_t a = mix64(seed);
  const std::uint64_t b = mix64(a ^ mix64(stream + 0x632be59bd9b4e019ull));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

/// Folds several tags into one stream id for seeded_rng.
constexpr std::uint64_t stream_id(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                                  std::uint64_t d = 0) noexcept {
  return mix64(mix64(mix64(a) ^ b) ^ mix64(c + 0x1000193u) ^ (d * 0x100000001b3ull));
}

/// Fixed "%.12g" rendering so repeated runs emit byte-identical CSV.
std::string fmt_g(double v);

} // namespace opal

#endif
