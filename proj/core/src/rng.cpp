#include "dbmatch/rng.hpp"

#include <algorithm>

namespace dbmatch {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngSeed derive(RngSeed parent, StreamTag tag, std::uint64_t index) noexcept {
  std::uint64_t h = splitmix64(parent.stream_id ^ 0x5851f42d4c957f2dULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
  h = splitmix64(h ^ index);
  return RngSeed{parent.seed, h};
}

Engine make_engine(RngSeed s) {
  std::seed_seq seq{static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32),
                    static_cast<std::uint32_t>(s.stream_id),
                    static_cast<std::uint32_t>(s.stream_id >> 32)};
  return Engine(seq);
}

double keyed_uniform(RngSeed s, StreamTag tag, std::uint64_t key) noexcept {
  std::uint64_t h = splitmix64(s.seed);
  h = splitmix64(h ^ s.stream_id);
  h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
  h = splitmix64(h ^ key);
  // 53 high bits -> [0, 1)
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::uint32_t scale_index(double u, std::uint32_t n) noexcept {
  auto i = static_cast<std::uint32_t>(u * static_cast<double>(n));
  return std::min(i, n - 1);
}

}  // namespace dbmatch
