// Copyright 2026 The coop_mcts Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef COOP__RNG_HPP_
#define COOP__RNG_HPP_

#include <cstdint>

namespace coop
{

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

/// Derive an independent child seed from a parent seed and a stream key.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t key) noexcept
{
  return mix64(parent ^ mix64(key + 0x632be59bd9b4e019ULL));
}

/// Map 64 random bits to [0, 1) with 53-bit resolution.
constexpr double to_unit_interval(std::uint64_t bits) noexcept
{
  return static_cast<double>(bits >> 11U) * 0x1.0p-53;
}

/// Counter-indexed draw: the value depends only on (stream, counter), so a
/// cloned state replays the same noise without carrying generator buffers.
constexpr double counter_uniform(std::uint64_t stream, std::uint64_t counter) noexcept
{
  return to_unit_interval(mix64(derive_seed(stream, counter)));
}

/// Sequential SplitMix64 stream. Used where draws are consumed in order
/// (scenario sampling); portable across standard library implementations.
class SplitMix64
{
public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept
  {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31U);
  }

  double uniform() noexcept { return to_unit_interval(next()); }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Slight modulo bias is irrelevant for n << 2^64.
  std::uint64_t below(std::uint64_t n) noexcept { return n == 0 ? 0 : next() % n; }

  std::uint64_t state() const noexcept { return state_; }

private:
  std::uint64_t state_;
};

}  // namespace coop

#endif  // COOP__RNG_HPP_
