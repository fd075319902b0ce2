#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace repdis {

using Rng = std::mt19937_64;

/// Independent generator for the stream identified by (seed, keys...).
/// Streams depend only on their key path, so work split across indices
/// produces the same numbers regardless of evaluation order.
inline Rng derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * keys.size());
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto k : keys) push(k);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

}  // namespace repdis
