#include "dbmatch/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "dbmatch/error.hpp"
#include "dbmatch/theory.hpp"

namespace dbmatch {

std::vector<double> AlphaGrid::points() const {
  std::vector<double> out;
  const auto count = static_cast<std::int64_t>(std::floor((stop - start) / step + 1e-9));
  for (std::int64_t i = 0; i <= count; ++i) {
    double a = start + static_cast<double>(i) * step;
    // Snap values that land within rounding of a grid multiple of 1e-9.
    a = std::round(a * 1e9) / 1e9;
    out.push_back(std::min(a, 0.0));
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (n < 1) throw ConfigError("n must be at least 1");
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (alpha_grid) {
    if (!(alpha_grid->step > 0.0)) throw ConfigError("alpha grid step must be positive");
    if (!(alpha_grid->start <= alpha_grid->stop)) throw ConfigError("alpha grid start > stop");
    if (alpha_grid->stop > 0.0) throw ConfigError("alpha grid must lie in (-inf, 0]");
  }
}

void parallel_for(std::uint32_t count, unsigned threads,
                  const std::function<void(std::uint32_t)>& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, count));
  if (workers == 1) {
    for (std::uint32_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::uint32_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::uint32_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

SweepRow summarize(std::vector<double> samples, double x) {
  SweepRow row;
  row.x = x;
  if (samples.empty()) return row;
  std::sort(samples.begin(), samples.end());
  const std::size_t r = samples.size();

  double sum = 0.0;
  for (double v : samples) sum += v;
  row.mean = sum / static_cast<double>(r);

  auto quantile = [&](double prob) {
    const double pos = prob * static_cast<double>(r - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, r - 1);
    const double frac = pos - static_cast<double>(lo);
    return samples[lo] + frac * (samples[hi] - samples[lo]);
  };
  row.q1 = quantile(0.25);
  row.q3 = quantile(0.75);

  if (r > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - row.mean) * (v - row.mean);
    row.stderr_ = std::sqrt(ss / static_cast<double>(r - 1)) / std::sqrt(static_cast<double>(r));
  }
  return row;
}

RngSeed replicate_seed(RngSeed base, std::uint64_t r) { return derive(base, StreamTag::kGraph, r); }

namespace {

// pmf of min(D, n) over {0..n}.
std::vector<double> capped_pmf(const DegreeSpec& deg, std::uint32_t n) {
  std::vector<double> pmf(n + 1, 0.0);
  double below = 0.0;
  for (std::uint32_t k = 0; k < n; ++k) {
    pmf[k] = deg.pmf(k);
    below += pmf[k];
  }
  pmf[n] = std::max(0.0, 1.0 - below);
  return pmf;
}

DegreeSpec normalized_empirical(std::vector<double> pmf) {
  double total = 0.0;
  for (double p : pmf) total += p;
  for (double& p : pmf) p /= total;
  // Trim trailing zeros so the table stays short.
  while (pmf.size() > 1 && pmf.back() == 0.0) pmf.pop_back();
  return DegreeSpec::empirical(std::move(pmf));
}

bool cap_is_inert(const DegreeSpec& deg, std::uint32_t n) {
  switch (deg.kind()) {
    case DegreeSpec::Kind::kDeterministic:
    case DegreeSpec::Kind::kBinomial:
      return deg.trials() <= n;
    case DegreeSpec::Kind::kPoisson: {
      double below = 0.0;
      for (std::uint32_t k = 0; k <= n; ++k) below += deg.pmf(k);
      return 1.0 - below < 1e-15;
    }
    case DegreeSpec::Kind::kEmpirical:
      return deg.pmf_table().size() <= n + 1;
  }
  return false;
}

}  // namespace

DegreeSpec intention_degree_law(const DegreeSpec& deg, const ThinningPolicy& thinning,
                                std::uint32_t n) {
  const bool inert = cap_is_inert(deg, n);
  const auto kind = deg.kind();

  switch (thinning.kind) {
    case ThinningPolicy::Kind::kNone:
      return inert ? deg : normalized_empirical(capped_pmf(deg, n));

    case ThinningPolicy::Kind::kMaxK: {
      const std::uint32_t cap = std::min(thinning.k, n);
      if (kind == DegreeSpec::Kind::kDeterministic) {
        return DegreeSpec::deterministic(std::min(deg.trials(), cap));
      }
      auto pmf = capped_pmf(deg, n);
      std::vector<double> out(cap + 1, 0.0);
      for (std::size_t k = 0; k < pmf.size(); ++k) out[std::min<std::size_t>(k, cap)] += pmf[k];
      return normalized_empirical(std::move(out));
    }

    case ThinningPolicy::Kind::kBernoulli: {
      const double q = thinning.q;
      if (inert && kind == DegreeSpec::Kind::kDeterministic) {
        return DegreeSpec::binomial(deg.trials(), q);
      }
      if (inert && kind == DegreeSpec::Kind::kBinomial) {
        return DegreeSpec::binomial(deg.trials(), deg.param() * q);
      }
      if (inert && kind == DegreeSpec::Kind::kPoisson) return DegreeSpec::poisson(deg.mean() * q);
      auto pmf = capped_pmf(deg, n);
      std::vector<double> out(pmf.size(), 0.0);
      for (std::size_t k = 0; k < pmf.size(); ++k) {
        if (pmf[k] == 0.0) continue;
        const theory::BinomialLaw kept(static_cast<std::uint32_t>(k), q);
        for (std::size_t j = 0; j <= k; ++j) out[j] += pmf[k] * kept.pmf(static_cast<std::int64_t>(j));
      }
      return normalized_empirical(std::move(out));
    }
  }
  return deg;
}

std::optional<double> theory_value(const ExperimentConfig& cfg) {
  const DegreeSpec law = intention_degree_law(cfg.deg, cfg.thinning, cfg.n);
  if (cfg.rule.is_uniform()) return theory::mean_match_uniform(cfg.n, law.prob_zero());
  if (cfg.rule.kind == SelectionRule::Kind::kGreedy && law.mean() > 0.0) {
    return theory::mean_match_greedy_bound(law).value;
  }
  return std::nullopt;
}

namespace {

BipartiteGraph intention_graph(const ExperimentConfig& cfg, std::uint64_t r) {
  const RngSeed rep = replicate_seed(cfg.base_seed, r);
  return thin(generate_dout(cfg.n, cfg.deg, rep), cfg.thinning, rep);
}

RngSeed matching_seed(const ExperimentConfig& cfg, std::uint64_t r) {
  return derive(replicate_seed(cfg.base_seed, r), StreamTag::kMatching);
}

}  // namespace

std::vector<double> replicate_fractions(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<double> out(cfg.replicates);
  parallel_for(cfg.replicates, cfg.threads, [&](std::uint32_t r) {
    const BipartiteGraph g = intention_graph(cfg, r);
    out[r] = run_round(g, cfg.rule, matching_seed(cfg, r)).matched_fraction;
  });
  return out;
}

SweepResult run_replicates(const ExperimentConfig& cfg) {
  SweepResult res;
  res.label = "deg=" + cfg.deg.to_string() + " thin=" + cfg.thinning.to_string() +
              " rule=" + cfg.rule.to_string();
  SweepRow row = summarize(replicate_fractions(cfg), cfg.deg.mean());
  row.theory = theory_value(cfg);
  res.rows.push_back(row);
  return res;
}

SweepResult sweep_alpha(const ExperimentConfig& cfg) {
  cfg.validate();
  const AlphaGrid grid = cfg.alpha_grid.value_or(AlphaGrid{});
  std::vector<SelectionRule> rules;
  for (double a : grid.points()) rules.push_back(SelectionRule::db(a));
  rules.push_back(SelectionRule::greedy());

  // values[i][r]: same graph and same per-node uniforms for every rule.
  std::vector<std::vector<double>> values(rules.size(), std::vector<double>(cfg.replicates));
  parallel_for(cfg.replicates, cfg.threads, [&](std::uint32_t r) {
    const BipartiteGraph g = intention_graph(cfg, r);
    const RngSeed ms = matching_seed(cfg, r);
    for (std::size_t i = 0; i < rules.size(); ++i) {
      values[i][r] = run_round(g, rules[i], ms).matched_fraction;
    }
  });

  SweepResult res;
  res.label = "deg=" + cfg.deg.to_string() + " thin=" + cfg.thinning.to_string() + " alpha-sweep";
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const bool greedy = rules[i].kind == SelectionRule::Kind::kGreedy;
    const double x = greedy ? -std::numeric_limits<double>::infinity() : rules[i].alpha;
    SweepRow row = summarize(std::move(values[i]), x);
    ExperimentConfig point = cfg;
    point.rule = rules[i];
    row.theory = theory_value(point);
    res.rows.push_back(row);
  }
  return res;
}

AlphaStar find_alpha_star(const SweepResult& sweep) {
  if (sweep.rows.empty()) throw ConfigError("alpha* search needs a non-empty sweep");
  AlphaStar best{sweep.rows.front().x, sweep.rows.front().mean};
  for (const auto& row : sweep.rows) {
    const bool better = row.mean > best.value || (row.mean == best.value && row.x > best.alpha);
    if (better) best = {row.x, row.mean};
  }
  return best;
}

AlphaStar find_alpha_star(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  if (!c.alpha_grid) c.alpha_grid = AlphaGrid{};
  return find_alpha_star(sweep_alpha(c));
}

SweepResult max_matching_baseline(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<double> out(cfg.replicates);
  parallel_for(cfg.replicates, cfg.threads, [&](std::uint32_t r) {
    const BipartiteGraph g = intention_graph(cfg, r);
    out[r] = static_cast<double>(max_matching(g)) / static_cast<double>(cfg.n);
  });
  SweepResult res;
  res.label = "deg=" + cfg.deg.to_string() + " thin=" + cfg.thinning.to_string() + " max-matching";
  res.rows.push_back(summarize(std::move(out), cfg.deg.mean()));
  return res;
}

void write_csv_header(std::ostream& os) { os << "x,mean,q1,q3,stderr,theory\n"; }

namespace {

void put_number(std::ostream& os, double v) {
  if (std::isinf(v)) {
    os << (v < 0 ? "-inf" : "inf");
  } else if (std::isnan(v)) {
    os << "nan";
  } else {
    os << v;
  }
}

}  // namespace

void write_csv_rows(std::ostream& os, const SweepResult& r, bool with_label) {
  const auto old_prec = os.precision(10);
  const auto old_loc = os.imbue(std::locale::classic());
  if (with_label) os << "# " << r.label << '\n';
  for (const auto& row : r.rows) {
    put_number(os, row.x);
    os << ',';
    put_number(os, row.mean);
    os << ',';
    put_number(os, row.q1);
    os << ',';
    put_number(os, row.q3);
    os << ',';
    put_number(os, row.stderr_);
    os << ',';
    put_number(os, row.theory.value_or(std::numeric_limits<double>::quiet_NaN()));
    os << '\n';
  }
  os.imbue(old_loc);
  os.precision(old_prec);
}

}  // namespace dbmatch
