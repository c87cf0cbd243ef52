#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dbmatch/graph.hpp"
#include "dbmatch/rng.hpp"

namespace dbmatch {

/// Grant-stage rule of the degree-biased family. A sender grants neighbor v
/// with probability proportional to deg(v)^alpha; kGreedy is the exact
/// alpha -> -inf limit (uniform among minimum-degree neighbors).
struct SelectionRule {
  enum class Kind { kAlpha, kUniform, kGreedy };

  Kind kind = Kind::kUniform;
  double alpha = 0.0;

  static SelectionRule uniform() { return {Kind::kUniform, 0.0}; }
  static SelectionRule greedy() { return {Kind::kGreedy, 0.0}; }
  static SelectionRule db(double alpha);

  bool is_uniform() const noexcept {
    return kind == Kind::kUniform || (kind == Kind::kAlpha && alpha == 0.0);
  }
  std::string to_string() const;
};

struct ControlCounts {
  std::uint64_t notify = 0;
  std::uint64_t req = 0;
  std::uint64_t grant = 0;
  std::uint64_t accept = 0;

  ControlCounts& operator+=(const ControlCounts& o) noexcept {
    notify += o.notify;
    req += o.req;
    grant += o.grant;
    accept += o.accept;
    return *this;
  }
  std::uint64_t total() const noexcept { return notify + req + grant + accept; }
  friend bool operator==(const ControlCounts&, const ControlCounts&) = default;
};

struct MatchResult {
  /// (sender, receiver), sorted by sender.
  std::vector<std::pair<NodeId, NodeId>> pairs;
  /// Receiver granted by each sender, if any.
  std::vector<std::optional<NodeId>> grants;
  ControlCounts control;
  double matched_fraction = 0.0;
};

/// Grant probabilities over neighbors(u), in neighbor order. Empty when u
/// has no neighbors. `recv_deg` must be receiver_degrees(g).
std::vector<double> db_grant_pmf(const BipartiteGraph& g, std::span<const std::uint32_t> recv_deg,
                                 NodeId u, double alpha);
std::vector<double> db_grant_pmf(const BipartiteGraph& g, NodeId u, double alpha);

/// One NOTIFY/REQ/GRANT/ACCEPT round on the intention graph.
MatchResult run_round(const BipartiteGraph& g, const SelectionRule& rule, RngSeed rng);

/// Round-robin pointers for single-iteration iSLIP. Receivers grant, senders
/// accept.
struct IslipState {
  std::vector<std::uint32_t> grant_ptr;   // per receiver
  std::vector<std::uint32_t> accept_ptr;  // per sender

  explicit IslipState(std::uint32_t n = 0) : grant_ptr(n, 0), accept_ptr(n, 0) {}
  friend bool operator==(const IslipState&, const IslipState&) = default;
};

MatchResult islip_round(const BipartiteGraph& g, IslipState& state);

/// Maximum-cardinality matching size (Hopcroft-Karp).
std::uint32_t max_matching(const BipartiteGraph& g);

/// True when `r.pairs` is a matching made of edges of `g`.
bool is_valid_matching(const BipartiteGraph& g, const MatchResult& r);

}  // namespace dbmatch
