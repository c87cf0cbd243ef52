#include "dbmatch/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "dbmatch/error.hpp"

namespace dbmatch {

BipartiteGraph::BipartiteGraph(std::uint32_t n_senders, std::uint32_t n_receivers)
    : n_receivers_(n_receivers), adj_(n_senders) {}

BipartiteGraph::BipartiteGraph(std::uint32_t n_receivers, std::vector<std::vector<NodeId>> adj)
    : n_receivers_(n_receivers), adj_(std::move(adj)) {
  for (std::size_t u = 0; u < adj_.size(); ++u) {
    auto& nbrs = adj_[u];
    std::sort(nbrs.begin(), nbrs.end());
    if (std::adjacent_find(nbrs.begin(), nbrs.end()) != nbrs.end()) {
      throw ConfigError("sender " + std::to_string(u) + " lists a receiver twice");
    }
    if (!nbrs.empty() && nbrs.back() >= n_receivers_) {
      throw ConfigError("sender " + std::to_string(u) + " has receiver index out of range");
    }
  }
}

BipartiteGraph BipartiteGraph::complete(std::uint32_t n) {
  std::vector<NodeId> all(n);
  std::iota(all.begin(), all.end(), NodeId{0});
  return BipartiteGraph(n, std::vector<std::vector<NodeId>>(n, all));
}

bool BipartiteGraph::has_edge(NodeId u, NodeId v) const noexcept {
  return std::binary_search(adj_[u].begin(), adj_[u].end(), v);
}

std::uint64_t BipartiteGraph::edge_count() const noexcept {
  std::uint64_t m = 0;
  for (const auto& nbrs : adj_) m += nbrs.size();
  return m;
}

// --- DegreeSpec -------------------------------------------------------------

DegreeSpec DegreeSpec::deterministic(std::uint32_t d) {
  DegreeSpec s;
  s.kind_ = Kind::kDeterministic;
  s.n_ = d;
  return s;
}

DegreeSpec DegreeSpec::binomial(std::uint32_t n, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("binomial degree: p must lie in [0, 1]");
  DegreeSpec s;
  s.kind_ = Kind::kBinomial;
  s.n_ = n;
  s.x_ = p;
  return s;
}

DegreeSpec DegreeSpec::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw ConfigError("poisson degree: mean must be finite and non-negative");
  }
  DegreeSpec s;
  s.kind_ = Kind::kPoisson;
  s.x_ = mean;
  return s;
}

DegreeSpec DegreeSpec::empirical(std::vector<double> pmf) {
  if (pmf.empty()) throw ConfigError("empirical degree: pmf is empty");
  double total = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ConfigError("empirical degree: probabilities must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("empirical degree: pmf is not normalized");
  }
  DegreeSpec s;
  s.kind_ = Kind::kEmpirical;
  s.pmf_ = std::move(pmf);
  return s;
}

double DegreeSpec::mean() const noexcept {
  switch (kind_) {
    case Kind::kDeterministic:
      return n_;
    case Kind::kBinomial:
      return n_ * x_;
    case Kind::kPoisson:
      return x_;
    case Kind::kEmpirical: {
      double m = 0.0;
      for (std::size_t k = 0; k < pmf_.size(); ++k) m += static_cast<double>(k) * pmf_[k];
      return m;
    }
  }
  return 0.0;
}

double DegreeSpec::prob_zero() const noexcept { return pmf(0); }

double DegreeSpec::pmf(std::uint32_t k) const noexcept {
  switch (kind_) {
    case Kind::kDeterministic:
      return k == n_ ? 1.0 : 0.0;
    case Kind::kBinomial: {
      if (k > n_) return 0.0;
      if (x_ == 0.0) return k == 0 ? 1.0 : 0.0;
      if (x_ == 1.0) return k == n_ ? 1.0 : 0.0;
      const double lc = std::lgamma(n_ + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n_ - k + 1.0);
      return std::exp(lc + k * std::log(x_) + (n_ - k) * std::log1p(-x_));
    }
    case Kind::kPoisson:
      if (x_ == 0.0) return k == 0 ? 1.0 : 0.0;
      return std::exp(-x_ + k * std::log(x_) - std::lgamma(k + 1.0));
    case Kind::kEmpirical:
      return k < pmf_.size() ? pmf_[k] : 0.0;
  }
  return 0.0;
}

double DegreeSpec::pgf(double z) const noexcept {
  switch (kind_) {
    case Kind::kDeterministic:
      return std::pow(z, n_);
    case Kind::kBinomial:
      return std::pow(1.0 - x_ + x_ * z, n_);
    case Kind::kPoisson:
      return std::exp(-x_ * (1.0 - z));
    case Kind::kEmpirical: {
      // Horner from the top degree.
      double acc = 0.0;
      for (auto it = pmf_.rbegin(); it != pmf_.rend(); ++it) acc = acc * z + *it;
      return acc;
    }
  }
  return 0.0;
}

namespace {

// h_k = (a^k - b^k) / (a - b) = sum_{j<k} a^j b^{k-1-j}, via h_{k+1} = a h_k + b^k.
double power_divided_difference(double a, double b, std::uint32_t k) {
  double h = 0.0;
  double bpow = 1.0;
  for (std::uint32_t i = 0; i < k; ++i) {
    h = a * h + bpow;
    bpow *= b;
  }
  return h;
}

}  // namespace

double DegreeSpec::pgf_divided_difference(double a, double b) const noexcept {
  switch (kind_) {
    case Kind::kDeterministic:
      return power_divided_difference(a, b, n_);
    case Kind::kBinomial:
      return x_ * power_divided_difference(1.0 - x_ + x_ * a, 1.0 - x_ + x_ * b, n_);
    case Kind::kPoisson: {
      const double diff = a - b;
      if (diff == 0.0) return x_ * std::exp(-x_ * (1.0 - a));
      return std::exp(-x_ * (1.0 - b)) * std::expm1(x_ * diff) / diff;
    }
    case Kind::kEmpirical: {
      double h = 0.0;
      double bpow = 1.0;
      double acc = 0.0;
      for (std::size_t k = 1; k < pmf_.size(); ++k) {
        h = a * h + bpow;
        bpow *= b;
        acc += pmf_[k] * h;
      }
      return acc;
    }
  }
  return 0.0;
}

std::uint32_t DegreeSpec::sample(Engine& eng) const {
  switch (kind_) {
    case Kind::kDeterministic:
      return n_;
    case Kind::kBinomial:
      return static_cast<std::uint32_t>(
          std::binomial_distribution<std::int64_t>(n_, x_)(eng));
    case Kind::kPoisson:
      if (x_ == 0.0) return 0;
      return static_cast<std::uint32_t>(std::poisson_distribution<std::int64_t>(x_)(eng));
    case Kind::kEmpirical:
      return static_cast<std::uint32_t>(
          std::discrete_distribution<std::uint32_t>(pmf_.begin(), pmf_.end())(eng));
  }
  return 0;
}

namespace {

std::vector<double> parse_numbers(const std::string& body, const std::string& text) {
  std::vector<double> out;
  std::istringstream is(body);
  is.imbue(std::locale::classic());
  std::string item;
  while (std::getline(is, item, ',')) {
    std::istringstream one(item);
    one.imbue(std::locale::classic());
    double x = 0.0;
    std::string rest;
    if (!(one >> x) || (one >> rest)) throw ConfigError("malformed degree law '" + text + "'");
    out.push_back(x);
  }
  if (out.empty()) throw ConfigError("malformed degree law '" + text + "'");
  return out;
}

std::uint32_t as_count(double x, const std::string& text) {
  if (!(x >= 0.0) || x != std::floor(x) || x > 4294967295.0) {
    throw ConfigError("degree law '" + text + "' needs a non-negative integer");
  }
  return static_cast<std::uint32_t>(x);
}

}  // namespace

DegreeSpec DegreeSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("malformed degree law '" + text + "'");
  const std::string kind = text.substr(0, colon);
  const std::vector<double> v = parse_numbers(text.substr(colon + 1), text);
  if (kind == "det" && v.size() == 1) return deterministic(as_count(v[0], text));
  if (kind == "bin" && v.size() == 2) return binomial(as_count(v[0], text), v[1]);
  if (kind == "pois" && v.size() == 1) return poisson(v[0]);
  if (kind == "emp") return empirical(v);
  throw ConfigError("malformed degree law '" + text + "' (det:d, bin:n,p, pois:m or emp:p0,...)");
}

std::string DegreeSpec::to_string() const {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  switch (kind_) {
    case Kind::kDeterministic:
      os << "det:" << n_;
      break;
    case Kind::kBinomial:
      os << "bin:" << n_ << ',' << x_;
      break;
    case Kind::kPoisson:
      os << "pois:" << x_;
      break;
    case Kind::kEmpirical:
      os << "emp:";
      for (std::size_t k = 0; k < pmf_.size(); ++k) os << (k ? "," : "") << pmf_[k];
      break;
  }
  return os.str();
}

// --- generation -------------------------------------------------------------

void partial_shuffle(std::span<NodeId> items, std::uint32_t k, Engine& eng) {
  const auto n = static_cast<std::uint32_t>(items.size());
  k = std::min(k, n);
  for (std::uint32_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::uint32_t> pick(i, n - 1);
    std::swap(items[i], items[pick(eng)]);
  }
}

BipartiteGraph generate_dout(std::uint32_t n, const DegreeSpec& deg, RngSeed rng) {
  if (n == 0) throw ConfigError("graph size must be at least 1");
  Engine eng = make_engine(derive(rng, StreamTag::kGraph));

  // A single scratch permutation is reused across senders: partial
  // Fisher-Yates yields a uniform subset whatever order it starts from.
  std::vector<NodeId> scratch(n);
  std::iota(scratch.begin(), scratch.end(), NodeId{0});

  std::vector<std::vector<NodeId>> adj(n);
  for (std::uint32_t u = 0; u < n; ++u) {
    const std::uint32_t d = std::min(deg.sample(eng), n);
    partial_shuffle(scratch, d, eng);
    adj[u].assign(scratch.begin(), scratch.begin() + d);
  }
  return BipartiteGraph(n, std::move(adj));
}

std::vector<std::uint32_t> receiver_degrees(const BipartiteGraph& g) {
  std::vector<std::uint32_t> deg(g.n_receivers(), 0);
  for (const auto& nbrs : g.adjacency()) {
    for (NodeId v : nbrs) ++deg[v];
  }
  return deg;
}

// --- serialization ----------------------------------------------------------

void write_graph(std::ostream& os, const BipartiteGraph& g) {
  os << "N " << g.n_senders() << '\n';
  for (NodeId u = 0; u < g.n_senders(); ++u) {
    os << u << ':';
    for (NodeId v : g.neighbors(u)) os << ' ' << v;
    os << '\n';
  }
}

BipartiteGraph read_graph(std::istream& is) {
  std::string line;
  std::uint32_t n = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream hs(line);
    std::string tag;
    if (!(hs >> tag >> n) || tag != "N") throw ConfigError("graph file: expected header 'N <n>'");
    have_header = true;
    break;
  }
  if (!have_header || n == 0) throw ConfigError("graph file: missing or empty header");

  std::vector<std::vector<NodeId>> adj(n);
  std::vector<bool> seen(n, false);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ConfigError("graph file: malformed line '" + line + "'");
    std::istringstream us(line.substr(0, colon));
    std::int64_t u = -1;
    if (!(us >> u) || u < 0 || u >= n) throw ConfigError("graph file: bad sender index");
    if (seen[u]) throw ConfigError("graph file: sender listed twice");
    seen[u] = true;
    std::istringstream vs(line.substr(colon + 1));
    std::int64_t v = 0;
    while (vs >> v) {
      if (v < 0 || v >= n) throw ConfigError("graph file: receiver index out of range");
      adj[u].push_back(static_cast<NodeId>(v));
    }
    if (!vs.eof()) throw ConfigError("graph file: non-numeric receiver on line '" + line + "'");
  }
  return BipartiteGraph(n, std::move(adj));
}

}  // namespace dbmatch
