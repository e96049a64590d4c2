#pragma once

#include <cstdint>
#include <random>

namespace snnadmm {

using Rng = std::mt19937_64;

// SplitMix64 output function.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent seed streams derived from one master seed. Stream 0 seeds
// initialization, stream 1 the update-order shuffles, stream 2 spike
// encoding; keeping the streams separate means changing the iteration count
// never perturbs the data and vice versa.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t state = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  return splitmix64(state);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace snnadmm
