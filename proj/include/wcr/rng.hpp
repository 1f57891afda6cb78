#pragma once

#include <cstdint>
#include <random>

namespace wcr {

// Counter-based seed derivation: every consumer of randomness owns a stream
// id derived from (master seed, tag, counter) so replications can be produced
// in any order, on any number of workers, with identical results.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                 std::uint64_t counter = 0) {
  std::uint64_t s = splitmix64(master ^ 0x6a09e667f3bcc909ULL);
  s = splitmix64(s ^ tag);
  s = splitmix64(s ^ counter);
  return s;
}

// Stream tags. Fixed constants so seeds stay stable across refactors.
namespace stream {
inline constexpr std::uint64_t kData = 0x01;
inline constexpr std::uint64_t kSignGroup = 0x02;
inline constexpr std::uint64_t kImDraws = 0x03;
inline constexpr std::uint64_t kMnwBoot = 0x04;
inline constexpr std::uint64_t kWildBoot = 0x05;
}  // namespace stream

class Prng {
 public:
  explicit Prng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t u64() { return eng_(); }

  double gauss() { return normal_(eng_); }

  // +1/-1 with probability 1/2 each, consuming one engine bit at a time.
  int rademacher() {
    if (bits_left_ == 0) {
      bit_pool_ = eng_();
      bits_left_ = 64;
    }
    const int b = static_cast<int>(bit_pool_ & 1u);
    bit_pool_ >>= 1;
    --bits_left_;
    return b ? 1 : -1;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uint64_t bit_pool_ = 0;
  int bits_left_ = 0;
};

}  // namespace wcr
