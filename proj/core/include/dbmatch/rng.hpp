#pragma once

#include <cstdint>
#include <random>

namespace dbmatch {

/// Identifies one reproducible random stream. Equal seeds give bit-identical
/// graphs, thinnings and matchings on a given platform.
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

using Engine = std::mt19937_64;

/// Purpose tags for sub-streams. Sub-streams of the same parent are
/// statistically independent of each other.
enum class StreamTag : std::uint64_t {
  kGraph = 1,
  kThinning = 2,
  kMatching = 3,
  kArrivals = 4,
  kGrant = 5,
  kAccept = 6,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Child stream of `parent` keyed by `tag` and an optional index.
RngSeed derive(RngSeed parent, StreamTag tag, std::uint64_t index = 0) noexcept;

Engine make_engine(RngSeed s);

/// Stateless uniform in [0, 1) keyed by (stream, key). Used for per-node
/// draws so the result does not depend on node iteration order.
double keyed_uniform(RngSeed s, StreamTag tag, std::uint64_t key) noexcept;

/// floor(u * n) clamped to n - 1; n must be positive.
std::uint32_t scale_index(double u, std::uint32_t n) noexcept;

}  // namespace dbmatch
