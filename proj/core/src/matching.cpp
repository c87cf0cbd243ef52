#include "dbmatch/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "dbmatch/error.hpp"

namespace dbmatch {

SelectionRule SelectionRule::db(double alpha) {
  if (!(alpha <= 0.0)) throw ConfigError("DB(alpha): alpha must be a non-positive number");
  if (std::isinf(alpha)) return greedy();
  return {Kind::kAlpha, alpha};
}

std::string SelectionRule::to_string() const {
  switch (kind) {
    case Kind::kUniform:
      return "uniform";
    case Kind::kGreedy:
      return "greedy";
    case Kind::kAlpha: {
      std::ostringstream os;
      os.imbue(std::locale::classic());
      os << "db:" << alpha;
      return os.str();
    }
  }
  return "uniform";
}

namespace {

// Softmax of alpha * ln(deg) over the neighborhood, with the largest exponent
// subtracted. For alpha <= 0 the largest exponent sits at the minimum degree.
void fill_alpha_weights(std::span<const NodeId> nbrs, std::span<const std::uint32_t> recv_deg,
                        double alpha, std::vector<double>& w) {
  w.resize(nbrs.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    w[i] = alpha * std::log(static_cast<double>(recv_deg[nbrs[i]]));
    top = std::max(top, w[i]);
  }
  for (double& x : w) x = std::exp(x - top);
}

std::uint32_t pick_by_weight(const std::vector<double>& w, double u01) {
  double total = 0.0;
  for (double x : w) total += x;
  const double target = u01 * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (target < acc) return static_cast<std::uint32_t>(i);
  }
  // Rounding: fall back to the last positive weight.
  for (std::size_t i = w.size(); i-- > 0;) {
    if (w[i] > 0.0) return static_cast<std::uint32_t>(i);
  }
  return 0;
}

std::uint32_t pick_greedy(std::span<const NodeId> nbrs, std::span<const std::uint32_t> recv_deg,
                          double u01) {
  std::uint32_t lowest = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t ties = 0;
  for (NodeId v : nbrs) {
    if (recv_deg[v] < lowest) {
      lowest = recv_deg[v];
      ties = 1;
    } else if (recv_deg[v] == lowest) {
      ++ties;
    }
  }
  std::uint32_t target = scale_index(u01, ties);
  for (std::uint32_t i = 0; i < nbrs.size(); ++i) {
    if (recv_deg[nbrs[i]] == lowest && target-- == 0) return i;
  }
  return 0;
}

}  // namespace

std::vector<double> db_grant_pmf(const BipartiteGraph& g, std::span<const std::uint32_t> recv_deg,
                                 NodeId u, double alpha) {
  auto nbrs = g.neighbors(u);
  std::vector<double> w;
  if (nbrs.empty()) return w;
  fill_alpha_weights(nbrs, recv_deg, alpha, w);
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  return w;
}

std::vector<double> db_grant_pmf(const BipartiteGraph& g, NodeId u, double alpha) {
  const auto deg = receiver_degrees(g);
  return db_grant_pmf(g, deg, u, alpha);
}

MatchResult run_round(const BipartiteGraph& g, const SelectionRule& rule, RngSeed rng) {
  const std::uint32_t n_send = g.n_senders();
  const std::uint32_t n_recv = g.n_receivers();
  const auto recv_deg = receiver_degrees(g);

  MatchResult out;
  out.grants.assign(n_send, std::nullopt);

  // GRANT
  std::vector<std::uint32_t> grants_at(n_recv, 0);
  std::vector<double> weights;
  for (NodeId u = 0; u < n_send; ++u) {
    auto nbrs = g.neighbors(u);
    if (nbrs.empty()) continue;
    out.control.notify += nbrs.size();
    out.control.req += nbrs.size();
    ++out.control.grant;

    const double u01 = keyed_uniform(rng, StreamTag::kGrant, u);
    std::uint32_t idx = 0;
    if (rule.is_uniform()) {
      idx = scale_index(u01, static_cast<std::uint32_t>(nbrs.size()));
    } else if (rule.kind == SelectionRule::Kind::kGreedy) {
      idx = pick_greedy(nbrs, recv_deg, u01);
    } else {
      fill_alpha_weights(nbrs, recv_deg, rule.alpha, weights);
      idx = pick_by_weight(weights, u01);
    }
    out.grants[u] = nbrs[idx];
    ++grants_at[nbrs[idx]];
  }

  // ACCEPT: each granted receiver picks its c-th granting sender (sender order).
  std::vector<std::uint32_t> chosen(n_recv, 0);
  for (NodeId v = 0; v < n_recv; ++v) {
    if (grants_at[v] > 0) {
      chosen[v] = scale_index(keyed_uniform(rng, StreamTag::kAccept, v), grants_at[v]);
    }
  }
  for (NodeId u = 0; u < n_send; ++u) {
    if (!out.grants[u]) continue;
    const NodeId v = *out.grants[u];
    if (chosen[v]-- == 0) out.pairs.emplace_back(u, v);
  }

  out.control.accept = out.pairs.size();
  out.matched_fraction =
      n_recv == 0 ? 0.0 : static_cast<double>(out.pairs.size()) / static_cast<double>(n_recv);
  return out;
}

MatchResult islip_round(const BipartiteGraph& g, IslipState& state) {
  const std::uint32_t n_send = g.n_senders();
  const std::uint32_t n_recv = g.n_receivers();
  if (state.grant_ptr.size() != n_recv || state.accept_ptr.size() != n_send) {
    throw ConfigError("iSLIP state does not match graph dimensions");
  }

  MatchResult out;
  out.grants.assign(n_send, std::nullopt);

  // Requests, indexed by receiver; sender order is increasing.
  std::vector<std::vector<NodeId>> requests(n_recv);
  for (NodeId u = 0; u < n_send; ++u) {
    for (NodeId v : g.neighbors(u)) requests[v].push_back(u);
    out.control.req += g.out_degree(u);
  }

  // Grant: first requester at or after the receiver's pointer.
  std::vector<std::vector<NodeId>> granted_by(n_send);
  for (NodeId v = 0; v < n_recv; ++v) {
    const auto& req = requests[v];
    if (req.empty()) continue;
    auto it = std::lower_bound(req.begin(), req.end(), state.grant_ptr[v]);
    const NodeId u = it == req.end() ? req.front() : *it;
    granted_by[u].push_back(v);
    ++out.control.grant;
  }

  // Accept: first granting receiver at or after the sender's pointer.
  for (NodeId u = 0; u < n_send; ++u) {
    const auto& gr = granted_by[u];
    if (gr.empty()) continue;
    auto it = std::lower_bound(gr.begin(), gr.end(), state.accept_ptr[u]);
    const NodeId v = it == gr.end() ? gr.front() : *it;
    out.grants[u] = v;
    out.pairs.emplace_back(u, v);
  }

  // Pointer updates.
  for (auto [u, v] : out.pairs) {
    state.grant_ptr[v] = (u + 1) % n_send;
    state.accept_ptr[u] = (v + 1) % n_recv;
  }
  for (NodeId u = 0; u < n_send; ++u) {
    if (granted_by[u].empty() && g.out_degree(u) > 0) {
      state.accept_ptr[u] = (state.accept_ptr[u] + 1) % n_recv;
    }
  }

  out.control.accept = out.pairs.size();
  out.matched_fraction =
      n_recv == 0 ? 0.0 : static_cast<double>(out.pairs.size()) / static_cast<double>(n_recv);
  return out;
}

namespace {

class HopcroftKarp {
 public:
  explicit HopcroftKarp(const BipartiteGraph& g)
      : g_(g),
        match_u_(g.n_senders(), kNil),
        match_v_(g.n_receivers(), kNil),
        dist_(g.n_senders(), 0) {}

  std::uint32_t run() {
    std::uint32_t size = 0;
    while (bfs()) {
      for (NodeId u = 0; u < g_.n_senders(); ++u) {
        if (match_u_[u] == kNil && dfs(u)) ++size;
      }
    }
    return size;
  }

 private:
  static constexpr std::uint32_t kNil = std::numeric_limits<std::uint32_t>::max();
  static constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max();

  bool bfs() {
    std::queue<NodeId> q;
    for (NodeId u = 0; u < g_.n_senders(); ++u) {
      if (match_u_[u] == kNil) {
        dist_[u] = 0;
        q.push(u);
      } else {
        dist_[u] = kInf;
      }
    }
    bool found = false;
    while (!q.empty()) {
      const NodeId u = q.front();
      q.pop();
      for (NodeId v : g_.neighbors(u)) {
        const NodeId w = match_v_[v];
        if (w == kNil) {
          found = true;
        } else if (dist_[w] == kInf) {
          dist_[w] = dist_[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  }

  bool dfs(NodeId u) {
    for (NodeId v : g_.neighbors(u)) {
      const NodeId w = match_v_[v];
      if (w == kNil || (dist_[w] == dist_[u] + 1 && dfs(w))) {
        match_u_[u] = v;
        match_v_[v] = u;
        return true;
      }
    }
    dist_[u] = kInf;
    return false;
  }

  const BipartiteGraph& g_;
  std::vector<std::uint32_t> match_u_;
  std::vector<std::uint32_t> match_v_;
  std::vector<std::uint32_t> dist_;
};

}  // namespace

std::uint32_t max_matching(const BipartiteGraph& g) { return HopcroftKarp(g).run(); }

bool is_valid_matching(const BipartiteGraph& g, const MatchResult& r) {
  std::vector<bool> used_u(g.n_senders(), false);
  std::vector<bool> used_v(g.n_receivers(), false);
  for (auto [u, v] : r.pairs) {
    if (u >= g.n_senders() || v >= g.n_receivers()) return false;
    if (used_u[u] || used_v[v]) return false;
    if (!g.has_edge(u, v)) return false;
    used_u[u] = used_v[v] = true;
  }
  return true;
}

}  // namespace dbmatch
