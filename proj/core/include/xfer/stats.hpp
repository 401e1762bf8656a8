#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "xfer/error.hpp"

namespace xfer {

/// Median with the mean-of-middle-two convention for even counts.
inline double median(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::EmptyDomain, "median of an empty set");
  std::vector<double> v(values.begin(), values.end());
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

/// Independent RNG stream derived from (seed, a, b); lets parallel units
/// draw reproducibly regardless of scheduling.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

/// `count` distinct indices from [0, population) chosen uniformly, ascending.
inline std::vector<std::size_t> subsample_indices(std::size_t population, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(population);
  for (std::size_t i = 0; i < population; ++i) idx[i] = i;
  if (count >= population) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace xfer
