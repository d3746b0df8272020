/*
 * Copyright 2026 The fedli Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDLI_RNG_HPP_
#define FEDLI_RNG_HPP_

#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

namespace fedli {

// Independent random streams are keyed by purpose so that e.g. batch sampling
// never shifts the client-sampling sequence.
enum class StreamPurpose : std::uint64_t {
  kPartition = 1,
  kClientSampling = 2,
  kBatchSampling = 3,
  kInitialization = 4,
  kData = 5,
  kVarianceEstimate = 6,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Counter-based generator: the n-th draw is a pure function of
// (seed, round, purpose, lane, n). Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t round, StreamPurpose purpose,
            std::uint64_t lane = 0)
      : key_(splitmix64(splitmix64(splitmix64(seed) ^ round) ^
                        (static_cast<std::uint64_t>(purpose) << 32)) ^
             splitmix64(lane + 0x632BE59BD9B4E019ull)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return splitmix64(key_ + (counter_++) * kGamma); }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), rejection sampled.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % n;
  }

  // Derived stream that shares nothing with this one's sequence.
  RngStream substream(std::uint64_t lane) const {
    RngStream s(*this);
    s.key_ = splitmix64(key_ ^ splitmix64(lane ^ 0xD1B54A32D192ED03ull));
    s.counter_ = 0;
    return s;
  }

  std::uint64_t draws() const { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Fisher-Yates with the stream's own index sampler (portable across standard
// libraries, unlike std::shuffle).
template <typename T>
void shuffle(std::vector<T>& v, RngStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(v[i - 1], v[j]);
  }
}

inline std::vector<std::size_t> iota_vector(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace fedli

#endif  // FEDLI_RNG_HPP_
