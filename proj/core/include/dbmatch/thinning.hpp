#pragma once

#include <cstdint>
#include <string>

#include "dbmatch/graph.hpp"
#include "dbmatch/rng.hpp"

namespace dbmatch {

/// Sender-side sparsification applied before NOTIFY.
struct ThinningPolicy {
  enum class Kind { kNone, kBernoulli, kMaxK };

  Kind kind = Kind::kNone;
  double q = 1.0;       // edge retention probability (Bernoulli)
  std::uint32_t k = 0;  // per-sender cap (MaxK)

  static ThinningPolicy none() { return {}; }
  static ThinningPolicy bernoulli(double q);
  static ThinningPolicy max_k(std::uint32_t k);

  /// `none`, `bern:<q>` or `max:<k>`.
  static ThinningPolicy parse(const std::string& text);
  std::string to_string() const;

  friend bool operator==(const ThinningPolicy&, const ThinningPolicy&) = default;
};

/// Returns the intention graph. Draws from the kThinning sub-stream of `rng`,
/// so the same seed can drive both generation and thinning independently.
BipartiteGraph thin(const BipartiteGraph& g, const ThinningPolicy& policy, RngSeed rng);

}  // namespace dbmatch
