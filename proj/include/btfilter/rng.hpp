#ifndef BTFILTER_RNG_HPP
#define BTFILTER_RNG_HPP

#include <cstdint>

namespace btf {

// Counter-based RNG: every draw is a pure function of (seed, counters),
// so results do not depend on batch partitioning or worker count.
namespace rng {

constexpr std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t sentence,
                            std::uint64_t token, std::uint64_t stream) {
  std::uint64_t h = mix64(seed ^ 0x5851F42D4C957F2DULL);
  h = mix64(h ^ sentence);
  h = mix64(h ^ token);
  h = mix64(h ^ stream);
  return h;
}

// Uniform in [0, 1).
constexpr double uniform01(std::uint64_t seed, std::uint64_t sentence,
                           std::uint64_t token, std::uint64_t stream) {
  return static_cast<double>(key(seed, sentence, token, stream) >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, bound).
constexpr std::uint64_t bounded(std::uint64_t seed, std::uint64_t sentence,
                                std::uint64_t token, std::uint64_t stream,
                                std::uint64_t bound) {
  return key(seed, sentence, token, stream) % bound;
}

}  // namespace rng
}  // namespace btf

#endif
