#include "dbmatch/dynsim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "dbmatch/error.hpp"
#include "dbmatch/experiments.hpp"
#include "dbmatch/thinning.hpp"

namespace dbmatch::dynsim {

Algorithm parse_algorithm(const std::string& name) {
  if (name == "2cgs") return Algorithm::kTwoCgs;
  if (name == "1rdcpim") return Algorithm::kOneRoundDcPim;
  if (name == "islip") return Algorithm::kIslip;
  throw ConfigError("unknown algorithm '" + name + "' (expected 2cgs, 1rdcpim or islip)");
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kTwoCgs:
      return "2cgs";
    case Algorithm::kOneRoundDcPim:
      return "1rdcpim";
    case Algorithm::kIslip:
      return "islip";
  }
  return "2cgs";
}

void FabricConfig::validate() const {
  if (n_hosts < 2) throw ConfigError("fabric: need at least 2 hosts");
  if (!(link_rate > 0.0) || !std::isfinite(link_rate)) throw ConfigError("fabric: bad link rate");
  if (!(base_rtt > 0.0) || !std::isfinite(base_rtt)) throw ConfigError("fabric: bad base RTT");
  if (!(slot_duration >= base_rtt) || !std::isfinite(slot_duration)) {
    throw ConfigError("fabric: slot duration must be at least the base RTT");
  }
  if (horizon == 0 || warmup >= horizon) throw ConfigError("fabric: warmup must be below horizon");
}

// ---------------------------------------------------------------------------
// Workload

Workload Workload::synthetic(std::string name, double bdp, double p_short, double shape,
                             double max_bdp, double short_min_bdp) {
  if (!(bdp > 0.0)) throw ConfigError("workload: BDP must be positive");
  if (!(p_short >= 0.0 && p_short <= 1.0)) throw ConfigError("workload: p_short outside [0, 1]");
  if (!(shape > 0.0) || shape == 1.0) throw ConfigError("workload: Pareto shape must be > 0, != 1");
  if (!(max_bdp > 1.0)) throw ConfigError("workload: max size must exceed one BDP");
  if (!(short_min_bdp > 0.0 && short_min_bdp < 1.0)) {
    throw ConfigError("workload: short minimum must lie in (0, 1) BDP");
  }
  Workload w;
  w.kind_ = Kind::kSynthetic;
  w.name_ = std::move(name);
  w.bdp_ = bdp;
  w.p_short_ = p_short;
  w.shape_ = shape;
  w.max_bdp_ = max_bdp;
  w.short_min_bdp_ = short_min_bdp;
  return w;
}

Workload Workload::imc10_like(double bdp) { return synthetic("imc10-like", bdp, 0.8, 1.1, 10.0); }

Workload Workload::sgd_like(double bdp) { return synthetic("sgd-like", bdp, 0.6, 1.1, 40.0); }

Workload Workload::empirical(std::string name, std::vector<std::pair<double, double>> points) {
  if (points.empty()) throw ConfigError("workload: empty size distribution");
  std::sort(points.begin(), points.end());
  Workload w;
  w.kind_ = Kind::kEmpirical;
  w.name_ = std::move(name);
  double total = 0.0;
  for (auto [size, prob] : points) {
    if (!(size > 0.0) || !std::isfinite(size)) throw ConfigError("workload: sizes must be positive");
    if (!(prob >= 0.0) || !std::isfinite(prob)) {
      throw ConfigError("workload: probabilities must be non-negative");
    }
    total += prob;
    w.sizes_.push_back(size);
    w.probs_.push_back(prob);
  }
  if (std::abs(total - 1.0) > 1e-6) throw ConfigError("workload: probabilities must sum to 1");
  for (double& p : w.probs_) p /= total;
  return w;
}

Workload Workload::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("workload: cannot open '" + path + "'");
  in.imbue(std::locale::classic());
  std::vector<std::pair<double, double>> pts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    ls.imbue(std::locale::classic());
    double size = 0.0;
    double prob = 0.0;
    std::string rest;
    if (!(ls >> size >> prob) || (ls >> rest)) {
      throw ConfigError("workload: " + path + ":" + std::to_string(lineno) +
                        ": expected '<size_bytes> <probability>'");
    }
    pts.emplace_back(size, prob);
  }
  return empirical("file:" + path, std::move(pts));
}

Workload Workload::by_name(const std::string& spec, double bdp) {
  if (spec == "imc10-like") return imc10_like(bdp);
  if (spec == "sgd-like") return sgd_like(bdp);
  if (spec.rfind("file:", 0) == 0) return load_file(spec.substr(5));
  throw ConfigError("unknown workload '" + spec + "' (expected imc10-like, sgd-like or file:<path>)");
}

void Workload::set_load(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("workload: load must lie in [0, 1)");
  load_ = rho;
}

namespace {

// Log-uniform on [a, b].
double log_uniform_mean(double a, double b) { return (b - a) / std::log(b / a); }

// Bounded Pareto on [lo, hi] with the given shape (shape != 1).
double bounded_pareto_mean(double lo, double hi, double shape) {
  const double tail = 1.0 - std::pow(lo / hi, shape);
  return shape * std::pow(lo, shape) / tail * (std::pow(lo, 1.0 - shape) - std::pow(hi, 1.0 - shape)) /
         (shape - 1.0);
}

}  // namespace

double Workload::mean_size() const noexcept {
  if (kind_ == Kind::kEmpirical) {
    double m = 0.0;
    for (std::size_t i = 0; i < sizes_.size(); ++i) m += sizes_[i] * probs_[i];
    return m;
  }
  const double shorts = log_uniform_mean(short_min_bdp_ * bdp_, bdp_);
  const double longs = bounded_pareto_mean(bdp_, max_bdp_ * bdp_, shape_);
  return p_short_ * shorts + (1.0 - p_short_) * longs;
}

double Workload::short_byte_share(double bdp) const noexcept {
  const double mean = mean_size();
  if (!(mean > 0.0)) return 0.0;
  if (kind_ == Kind::kEmpirical) {
    double s = 0.0;
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
      if (sizes_[i] <= bdp) s += sizes_[i] * probs_[i];
    }
    return s / mean;
  }
  return p_short_ * log_uniform_mean(short_min_bdp_ * bdp_, bdp_) / mean;
}

double Workload::sample_size(Engine& eng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (kind_ == Kind::kEmpirical) {
    std::discrete_distribution<std::size_t> pick(probs_.begin(), probs_.end());
    return sizes_[pick(eng)];
  }
  const double u = unif(eng);
  const double v = unif(eng);
  if (u < p_short_) {
    const double lo = short_min_bdp_ * bdp_;
    return lo * std::pow(bdp_ / lo, v);
  }
  // Inverse cdf of the bounded Pareto; v < 1 keeps the result finite.
  const double ratio = std::pow(1.0 / max_bdp_, shape_);
  const double x = bdp_ * std::pow(1.0 - v * (1.0 - ratio), -1.0 / shape_);
  return std::min(x, max_bdp_ * bdp_);
}

double Workload::pair_arrival_rate(const FabricConfig& fabric) const noexcept {
  const double mean = mean_size();
  if (!(mean > 0.0) || fabric.n_hosts < 2) return 0.0;
  return load_ * fabric.link_rate / (mean * static_cast<double>(fabric.n_hosts - 1));
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

struct Message {
  double arrival = 0.0;
  double size = 0.0;
  double remaining = 0.0;
  NodeId dst = 0;
};

FctStats fct_stats(std::vector<double>& v) {
  FctStats s;
  s.completed = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.min = v.front();
  auto quantile = [&](double q) {
    const double h = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  s.p50 = quantile(0.5);
  s.p99 = quantile(0.99);
  return s;
}

class Simulator {
 public:
  Simulator(const FabricConfig& f, const Workload& w, RngSeed rng)
      : f_(f),
        w_(w),
        rng_(rng),
        n_(f.n_hosts),
        budget_(f.slot_bytes()),
        arrivals_(make_engine(derive(rng, StreamTag::kArrivals))),
        shorts_(n_),
        longs_(static_cast<std::size_t>(n_) * n_),
        pending_(static_cast<std::size_t>(n_) * n_, 0.0),
        send_used_(n_),
        recv_used_(n_),
        islip_(n_) {}

  RunSummary run() {
    RunSummary out;
    out.n_hosts = n_;
    out.warmup = f_.warmup;
    out.offered_load = w_.load();
    out.slots.reserve(f_.horizon);

    const double host_rate = w_.pair_arrival_rate(f_) * static_cast<double>(n_ - 1);
    const double per_slot_mean = host_rate * f_.slot_duration;
    const double warm_start = static_cast<double>(f_.warmup) * f_.slot_duration;

    double matched_sum = 0.0;
    double served_post = 0.0;
    double arrived_post = 0.0;

    for (std::uint32_t t = 0; t < f_.horizon; ++t) {
      const double start = static_cast<double>(t) * f_.slot_duration;
      SlotMetrics m;
      m.slot = t;
      std::fill(send_used_.begin(), send_used_.end(), 0.0);
      std::fill(recv_used_.begin(), recv_used_.end(), 0.0);

      m.served_bytes += serve_shorts(t, start, warm_start);

      const BipartiteGraph feasible = feasible_graph();
      const MatchResult match = schedule(feasible, t);
      m.matched = static_cast<std::uint32_t>(match.pairs.size());
      m.control = match.control;
      for (auto [u, v] : match.pairs) {
        const double moved = serve_pair(u, v, start, warm_start);
        if (moved > 0.0) ++m.busy_pairs;
        m.served_bytes += moved;
      }

      const double arrived = draw_arrivals(start, per_slot_mean);
      out.arrived_bytes += arrived;
      out.served_bytes += m.served_bytes;
      m.backlog_bytes = backlog_;

      if (t >= f_.warmup) {
        matched_sum += static_cast<double>(m.matched) / static_cast<double>(n_);
        served_post += m.served_bytes;
        arrived_post += arrived;
        out.control += m.control;
      }
      out.slots.push_back(m);
    }

    const double window = static_cast<double>(f_.horizon - f_.warmup);
    const double capacity = window * static_cast<double>(n_) * budget_;
    out.mean_matching_fraction = matched_sum / window;
    out.normalized_throughput = served_post / capacity;
    out.arrived_load = arrived_post / capacity;
    out.final_backlog_bytes = backlog_;
    out.short_fct = fct_stats(short_fct_);
    out.long_fct = fct_stats(long_fct_);
    fit_backlog(out);
    if (out.short_fct.completed + out.long_fct.completed == 0 && w_.load() > 0.0) {
      out.warnings.push_back("no message completed after warmup; horizon too short");
    }
    return out;
  }

 private:
  // Completion instant of bytes moved in this slot: the later of the two
  // endpoints' cumulative usage, in link time.
  double finish_time(double start, NodeId u, NodeId v) const {
    return start + std::max(send_used_[u], recv_used_[v]) / f_.link_rate;
  }

  void record(const Message& msg, double done, double warm_start, bool is_short) {
    if (msg.arrival < warm_start) return;
    const double optimal = msg.size / f_.link_rate + f_.base_rtt;
    const double observed = done - msg.arrival + f_.base_rtt;
    (is_short ? short_fct_ : long_fct_).push_back(observed / optimal);
  }

  // Moves up to `limit` bytes of one message; records it when it completes.
  double transfer(Message& msg, NodeId u, NodeId v, double limit, double start,
                  double warm_start, bool is_short) {
    const double chunk = std::min(msg.remaining, limit);
    msg.remaining -= chunk;
    send_used_[u] += chunk;
    recv_used_[v] += chunk;
    if (msg.remaining <= 0.0) record(msg, finish_time(start, u, v), warm_start, is_short);
    return chunk;
  }

  // Shorts go first, FIFO per sender, senders in rotating order. A head
  // message that cannot finish blocks the rest of its sender's queue.
  double serve_shorts(std::uint32_t t, double start, double warm_start) {
    double served = 0.0;
    for (std::uint32_t i = 0; i < n_; ++i) {
      const NodeId u = (t + i) % n_;
      auto& q = shorts_[u];
      while (!q.empty()) {
        Message& msg = q.front();
        const double room = std::min(budget_ - send_used_[u], budget_ - recv_used_[msg.dst]);
        if (!(room > 0.0)) break;
        served += transfer(msg, u, msg.dst, room, start, warm_start, true);
        if (msg.remaining > 0.0) break;
        q.pop_front();
      }
    }
    backlog_ -= served;
    return served;
  }

  BipartiteGraph feasible_graph() const {
    std::vector<std::vector<NodeId>> adj(n_);
    for (NodeId u = 0; u < n_; ++u) {
      const double* row = &pending_[static_cast<std::size_t>(u) * n_];
      for (NodeId v = 0; v < n_; ++v) {
        if (row[v] > 0.0) adj[u].push_back(v);
      }
    }
    return BipartiteGraph(n_, std::move(adj));
  }

  MatchResult schedule(const BipartiteGraph& g, std::uint32_t t) {
    const RngSeed slot_rng = derive(rng_, StreamTag::kMatching, t);
    switch (f_.algorithm) {
      case Algorithm::kTwoCgs: {
        const BipartiteGraph intent = thin(g, ThinningPolicy::max_k(2), slot_rng);
        return run_round(intent, SelectionRule::greedy(), slot_rng);
      }
      case Algorithm::kOneRoundDcPim:
        return run_round(g, SelectionRule::uniform(), slot_rng);
      case Algorithm::kIslip:
        return islip_round(g, islip_);
    }
    return {};
  }

  double serve_pair(NodeId u, NodeId v, double start, double warm_start) {
    const std::size_t idx = static_cast<std::size_t>(u) * n_ + v;
    auto& q = longs_[idx];
    double moved = 0.0;
    while (!q.empty()) {
      const double room = std::min(budget_ - send_used_[u], budget_ - recv_used_[v]);
      if (!(room > 0.0)) break;
      moved += transfer(q.front(), u, v, room, start, warm_start, false);
      if (q.front().remaining > 0.0) break;
      q.pop_front();
    }
    pending_[idx] = q.empty() ? 0.0 : pending_[idx] - moved;
    backlog_ -= moved;
    return moved;
  }

  // Arrivals inside [start, start + slot) become visible at the next slot
  // boundary. Returns the bytes that arrived.
  double draw_arrivals(double start, double per_slot_mean) {
    if (!(per_slot_mean > 0.0)) return 0.0;
    std::poisson_distribution<std::uint32_t> count(per_slot_mean);
    std::uniform_real_distribution<double> when(0.0, f_.slot_duration);
    std::uniform_int_distribution<NodeId> other(0, n_ - 2);
    const double bdp = f_.bdp();
    double bytes = 0.0;
    for (NodeId u = 0; u < n_; ++u) {
      const std::uint32_t k = count(arrivals_);
      if (k == 0) continue;
      std::vector<Message> batch(k);
      for (auto& msg : batch) {
        msg.arrival = start + when(arrivals_);
        const NodeId v = other(arrivals_);
        msg.dst = v >= u ? v + 1 : v;
        msg.size = w_.sample_size(arrivals_);
        msg.remaining = msg.size;
      }
      std::sort(batch.begin(), batch.end(),
                [](const Message& a, const Message& b) { return a.arrival < b.arrival; });
      for (const auto& msg : batch) {
        bytes += msg.size;
        backlog_ += msg.size;
        if (msg.size <= bdp) {
          shorts_[u].push_back(msg);
        } else {
          const std::size_t idx = static_cast<std::size_t>(u) * n_ + msg.dst;
          longs_[idx].push_back(msg);
          pending_[idx] += msg.size;
        }
      }
    }
    return bytes;
  }

  // OLS of backlog on slot index over the final third of the horizon.
  void fit_backlog(RunSummary& out) const {
    const std::size_t total = out.slots.size();
    const std::size_t len = total / 3;
    if (len < 3) return;
    const std::size_t first = total - len;
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = first; i < total; ++i) {
      mx += static_cast<double>(i);
      my += out.slots[i].backlog_bytes;
    }
    mx /= static_cast<double>(len);
    my /= static_cast<double>(len);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = first; i < total; ++i) {
      const double dx = static_cast<double>(i) - mx;
      sxx += dx * dx;
      sxy += dx * (out.slots[i].backlog_bytes - my);
    }
    const double slope = sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = first; i < total; ++i) {
      const double r =
          out.slots[i].backlog_bytes - my - slope * (static_cast<double>(i) - mx);
      rss += r * r;
    }
    out.backlog_slope = slope;
    out.backlog_growth = slope * static_cast<double>(len);
    out.backlog_noise = std::sqrt(rss / static_cast<double>(len - 2));
  }

  const FabricConfig& f_;
  const Workload& w_;
  RngSeed rng_;
  std::uint32_t n_;
  double budget_;
  Engine arrivals_;
  std::vector<std::deque<Message>> shorts_;
  std::vector<std::deque<Message>> longs_;
  std::vector<double> pending_;
  std::vector<double> send_used_;
  std::vector<double> recv_used_;
  IslipState islip_;
  double backlog_ = 0.0;
  std::vector<double> short_fct_;
  std::vector<double> long_fct_;
};

}  // namespace

RunSummary run_dynsim(const FabricConfig& fabric, const Workload& workload, RngSeed rng) {
  fabric.validate();
  return Simulator(fabric, workload, rng).run();
}

bool is_stable(const RunSummary& s, double load, double eps) {
  if (s.normalized_throughput < load - eps) return false;
  return s.backlog_growth <= 3.0 * s.backlog_noise;
}

std::vector<StabilityRow> stability_sweep(const FabricConfig& fabric, const Workload& workload,
                                          const std::vector<double>& loads, RngSeed rng,
                                          unsigned threads) {
  fabric.validate();
  for (double rho : loads) {
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("stability sweep: loads must lie in (0, 1)");
  }
  std::vector<StabilityRow> rows(loads.size());
  parallel_for(static_cast<std::uint32_t>(loads.size()), threads, [&](std::uint32_t i) {
    Workload w = workload;
    w.set_load(loads[i]);
    rows[i].load = loads[i];
    rows[i].summary = run_dynsim(fabric, w, derive(rng, StreamTag::kArrivals, i));
    rows[i].stable = is_stable(rows[i].summary, loads[i]);
  });
  return rows;
}

double max_stable_load(const std::vector<StabilityRow>& rows) {
  std::vector<const StabilityRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const StabilityRow* a, const StabilityRow* b) { return a->load < b->load; });
  double best = 0.0;
  for (const auto* r : sorted) {
    if (!r->stable) break;
    best = r->load;
  }
  return best;
}

ControlCounts control_message_census(const RunSummary& summary) {
  ControlCounts c;
  for (const auto& m : summary.slots) {
    if (m.slot >= summary.warmup) c += m.control;
  }
  return c;
}

void write_slot_csv(std::ostream& os, const RunSummary& s) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf.precision(12);
  buf << "slot,matched,served_bytes,backlog\n";
  for (const auto& m : s.slots) {
    buf << m.slot << ',' << m.matched << ',' << m.served_bytes << ',' << m.backlog_bytes << '\n';
  }
  os << buf.str();
}

void write_summary(std::ostream& os, const RunSummary& s) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf.precision(6);
  auto fct = [&](const char* name, const FctStats& f) {
    buf << "# fct_" << name << ": completed=" << f.completed << " mean=" << f.mean
        << " p50=" << f.p50 << " p99=" << f.p99 << '\n';
  };
  buf << "# offered_load: " << s.offered_load << '\n'
      << "# arrived_load: " << s.arrived_load << '\n'
      << "# matching_fraction: " << s.mean_matching_fraction << '\n'
      << "# throughput: " << s.normalized_throughput << '\n';
  fct("short", s.short_fct);
  fct("long", s.long_fct);
  buf << "# control: notify=" << s.control.notify << " req=" << s.control.req
      << " grant=" << s.control.grant << " accept=" << s.control.accept
      << " total=" << s.control.total() << '\n'
      << "# backlog_growth: " << s.backlog_growth << " noise=" << s.backlog_noise
      << " final=" << s.final_backlog_bytes << '\n';
  for (const auto& w : s.warnings) buf << "# warning: " << w << '\n';
  os << buf.str();
}

}  // namespace dbmatch::dynsim
