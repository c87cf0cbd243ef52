#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dbmatch/rng.hpp"

namespace dbmatch {

using NodeId = std::uint32_t;

/// Bipartite graph stored as sender-indexed adjacency. Every neighborhood is
/// sorted and duplicate free; the constructor enforces it.
class BipartiteGraph {
 public:
  BipartiteGraph() = default;
  BipartiteGraph(std::uint32_t n_senders, std::uint32_t n_receivers);
  /// Takes ownership of `adj`; throws ConfigError if an index is out of
  /// range or repeated. Neighborhoods are sorted on the way in.
  BipartiteGraph(std::uint32_t n_receivers, std::vector<std::vector<NodeId>> adj);

  static BipartiteGraph complete(std::uint32_t n);

  std::uint32_t n_senders() const noexcept { return static_cast<std::uint32_t>(adj_.size()); }
  std::uint32_t n_receivers() const noexcept { return n_receivers_; }

  std::span<const NodeId> neighbors(NodeId u) const noexcept { return adj_[u]; }
  std::uint32_t out_degree(NodeId u) const noexcept {
    return static_cast<std::uint32_t>(adj_[u].size());
  }
  bool has_edge(NodeId u, NodeId v) const noexcept;
  std::uint64_t edge_count() const noexcept;

  const std::vector<std::vector<NodeId>>& adjacency() const noexcept { return adj_; }

  friend bool operator==(const BipartiteGraph&, const BipartiteGraph&) = default;

 private:
  std::uint32_t n_receivers_ = 0;
  std::vector<std::vector<NodeId>> adj_;
};

/// Law of the sender out-degree D.
class DegreeSpec {
 public:
  enum class Kind { kDeterministic, kBinomial, kPoisson, kEmpirical };

  static DegreeSpec deterministic(std::uint32_t d);
  static DegreeSpec binomial(std::uint32_t n, double p);
  static DegreeSpec poisson(double mean);
  /// pmf[k] = P{D = k}; must sum to 1 within 1e-12.
  static DegreeSpec empirical(std::vector<double> pmf);
  /// `det:<d>`, `bin:<n>,<p>`, `pois:<mean>` or `emp:<p0>,<p1>,...`.
  static DegreeSpec parse(const std::string& text);

  Kind kind() const noexcept { return kind_; }
  std::uint32_t trials() const noexcept { return n_; }  // d for deterministic, n for binomial
  double param() const noexcept { return x_; }          // p for binomial, mean for Poisson
  const std::vector<double>& pmf_table() const noexcept { return pmf_; }

  double mean() const noexcept;
  double prob_zero() const noexcept;
  double pmf(std::uint32_t k) const noexcept;
  /// Generating function E[z^D].
  double pgf(double z) const noexcept;
  /// (G(a) - G(b)) / (a - b) evaluated without cancellation; G'(a) if a == b.
  double pgf_divided_difference(double a, double b) const noexcept;

  /// Draws D (before any cap). Uses the standard library distributions.
  std::uint32_t sample(Engine& eng) const;

  std::string to_string() const;

 private:
  DegreeSpec() = default;
  Kind kind_ = Kind::kDeterministic;
  std::uint32_t n_ = 0;
  double x_ = 0.0;
  std::vector<double> pmf_;
};

/// D-out random bipartite graph on n senders and n receivers: each sender
/// draws min(D, n) and picks that many distinct receivers uniformly.
BipartiteGraph generate_dout(std::uint32_t n, const DegreeSpec& deg, RngSeed rng);

std::vector<std::uint32_t> receiver_degrees(const BipartiteGraph& g);

/// Text form: `N <n>` then `u: v1 v2 ...` per sender.
void write_graph(std::ostream& os, const BipartiteGraph& g);
BipartiteGraph read_graph(std::istream& is);

/// Partial Fisher-Yates: moves a uniform random k-subset of `items` into its
/// first k slots. Works from any starting order.
void partial_shuffle(std::span<NodeId> items, std::uint32_t k, Engine& eng);

}  // namespace dbmatch
