#include "dbmatch/thinning.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "dbmatch/error.hpp"

namespace dbmatch {

ThinningPolicy ThinningPolicy::bernoulli(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("bernoulli thinning: q must lie in [0, 1]");
  return {Kind::kBernoulli, q, 0};
}

ThinningPolicy ThinningPolicy::max_k(std::uint32_t k) {
  if (k < 1) throw ConfigError("max(k) thinning: k must be at least 1");
  return {Kind::kMaxK, 1.0, k};
}

ThinningPolicy ThinningPolicy::parse(const std::string& text) {
  if (text == "none") return none();
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("--thin: expected none|bern:<q>|max:<k>");
  const std::string head = text.substr(0, colon);
  const std::string arg = text.substr(colon + 1);
  if (head == "bern") {
    double q = 0.0;
    std::istringstream is(arg);
    is.imbue(std::locale::classic());
    if (!(is >> q) || !is.eof()) throw ConfigError("--thin: malformed probability '" + arg + "'");
    return bernoulli(q);
  }
  if (head == "max") {
    std::uint32_t k = 0;
    auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), k);
    if (ec != std::errc{} || ptr != arg.data() + arg.size()) {
      throw ConfigError("--thin: malformed count '" + arg + "'");
    }
    return max_k(k);
  }
  throw ConfigError("--thin: unknown policy '" + head + "'");
}

std::string ThinningPolicy::to_string() const {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  switch (kind) {
    case Kind::kNone:
      return "none";
    case Kind::kBernoulli:
      os << "bern:" << q;
      return os.str();
    case Kind::kMaxK:
      os << "max:" << k;
      return os.str();
  }
  return "none";
}

BipartiteGraph thin(const BipartiteGraph& g, const ThinningPolicy& policy, RngSeed rng) {
  if (policy.kind == ThinningPolicy::Kind::kNone) return g;

  Engine eng = make_engine(derive(rng, StreamTag::kThinning));
  std::vector<std::vector<NodeId>> adj(g.n_senders());

  if (policy.kind == ThinningPolicy::Kind::kBernoulli) {
    std::bernoulli_distribution keep(policy.q);
    for (NodeId u = 0; u < g.n_senders(); ++u) {
      for (NodeId v : g.neighbors(u)) {
        if (keep(eng)) adj[u].push_back(v);
      }
    }
  } else {
    for (NodeId u = 0; u < g.n_senders(); ++u) {
      auto nbrs = g.neighbors(u);
      if (nbrs.size() <= policy.k) {
        adj[u].assign(nbrs.begin(), nbrs.end());
        continue;
      }
      std::vector<NodeId> pool(nbrs.begin(), nbrs.end());
      partial_shuffle(pool, policy.k, eng);
      pool.resize(policy.k);
      adj[u] = std::move(pool);
    }
  }
  // Sorting happens in the constructor.
  return BipartiteGraph(g.n_receivers(), std::move(adj));
}

}  // namespace dbmatch
