#pragma once

#include <cstdint>
#include <random>

namespace saiyan {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent substreams from one seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Named substreams of a trial seed.
enum class SeedStream : std::uint64_t {
  Payload = 1,
  Channel = 2,
  Detector = 3,
  Jammer = 4,
  Mac = 5,
};

inline std::uint64_t substream_seed(std::uint64_t seed, SeedStream which) {
  return mix_seed(seed ^ (static_cast<std::uint64_t>(which) * 0xd1b54a32d192ed03ULL));
}

inline Rng make_rng(std::uint64_t seed, SeedStream which) {
  return Rng(substream_seed(seed, which));
}

}  // namespace saiyan
