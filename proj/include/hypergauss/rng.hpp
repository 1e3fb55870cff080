#pragma once

#include <cstdint>

#include "special.hpp"

namespace hypergauss {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stateless generator: the value at (position, lane) depends only on the seed,
// so parallel schedules reproduce serial results exactly.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(splitmix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

  std::uint64_t bits(std::uint64_t position, std::uint64_t lane) const {
    return splitmix64(splitmix64(key_ ^ position) ^ (lane * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL));
  }

  // Uniform on the open interval (0,1).
  double uniform(std::uint64_t position, std::uint64_t lane) const {
    return (static_cast<double>(bits(position, lane) >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal(std::uint64_t position, std::uint64_t lane) const { return norm_quantile(uniform(position, lane)); }

 private:
  std::uint64_t key_;
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) { return splitmix64(master ^ splitmix64(salt)); }

}  // namespace hypergauss
