#include "dbmatch/cli/presets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "dbmatch/error.hpp"

namespace dbmatch::cli {

namespace {

constexpr std::uint32_t kN = 144;

DegreeSpec binomial_mean(std::uint32_t d) {
  return DegreeSpec::binomial(kN, static_cast<double>(d) / kN);
}

ExperimentConfig base_config(const DegreeSpec& deg, std::uint32_t d, const PresetOptions& opt) {
  ExperimentConfig cfg;
  cfg.n = kN;
  cfg.replicates = opt.replicates.value_or(1000);
  cfg.deg = deg;
  cfg.base_seed = RngSeed{opt.seed, d};
  cfg.threads = opt.threads;
  return cfg;
}

// Mean-degree curve: one row per d with x = d.
void degree_curve(std::ostream& out, const std::string& label, bool binomial,
                  const std::vector<std::uint32_t>& ds, const SelectionRule& rule,
                  const PresetOptions& opt) {
  SweepResult res;
  res.label = label;
  for (std::uint32_t d : ds) {
    ExperimentConfig cfg =
        base_config(binomial ? binomial_mean(d) : DegreeSpec::deterministic(d), d, opt);
    cfg.rule = rule;
    SweepRow row = run_replicates(cfg).rows.front();
    row.x = d;
    res.rows.push_back(row);
  }
  write_csv_header(out);
  write_csv_rows(out, res, true);
}

void alpha_curves(std::ostream& out, bool binomial, const PresetOptions& opt) {
  write_csv_header(out);
  for (std::uint32_t d : {2u, 3u, 4u, 8u}) {
    ExperimentConfig cfg =
        base_config(binomial ? binomial_mean(d) : DegreeSpec::deterministic(d), d, opt);
    cfg.alpha_grid = AlphaGrid{-20.0, 0.0, 1.0};
    SweepResult sweep = sweep_alpha(cfg);
    sweep.label = "d=" + std::to_string(d) + " " + sweep.label;
    write_csv_rows(out, sweep, true);
    SweepResult mm = max_matching_baseline(cfg);
    mm.label = "d=" + std::to_string(d) + " " + mm.label;
    write_csv_rows(out, mm, true);
  }
}

void thinning_curves(std::ostream& out, bool binomial, const PresetOptions& opt) {
  write_csv_header(out);
  for (std::uint32_t d : {4u, 8u}) {
    for (std::uint32_t k : {2u, 3u, 4u}) {
      ExperimentConfig cfg =
          base_config(binomial ? binomial_mean(d) : DegreeSpec::deterministic(d), d, opt);
      cfg.thinning = binomial ? ThinningPolicy::max_k(k)
                              : ThinningPolicy::bernoulli(static_cast<double>(k) / d);
      cfg.alpha_grid = AlphaGrid{-20.0, 0.0, 1.0};
      SweepResult sweep = sweep_alpha(cfg);
      sweep.label = "d=" + std::to_string(d) + " k=" + std::to_string(k) + " " + sweep.label;
      write_csv_rows(out, sweep, true);
    }
  }
}

void table(std::ostream& out, bool binomial, const PresetOptions& opt) {
  std::vector<TableRow> rows;
  for (std::uint32_t d : {2u, 3u, 4u, 8u}) {
    rows.push_back(table_row(
        base_config(binomial ? binomial_mean(d) : DegreeSpec::deterministic(d), d, opt)));
    rows.back().meandeg = d;
  }
  write_table(out, rows);
}

DynsimSweepSpec dynsim_spec(const std::string& workload, std::vector<double> loads,
                            std::uint32_t horizon, const PresetOptions& opt) {
  DynsimSweepSpec spec;
  spec.workload = workload;
  spec.fabric.horizon = opt.slots.value_or(horizon);
  spec.fabric.warmup = spec.fabric.horizon / 6;
  spec.algorithms = {dynsim::Algorithm::kOneRoundDcPim, dynsim::Algorithm::kTwoCgs,
                     dynsim::Algorithm::kIslip};
  spec.loads = std::move(loads);
  return spec;
}

}  // namespace

const std::vector<Preset>& preset_registry() {
  static const std::vector<Preset> registry = {
      {"fig3a", PresetKind::kExperiment,
       "Binomial(144, d/144) degrees, uniform selection vs d, with exact theory"},
      {"fig3b", PresetKind::kExperiment,
       "Binomial(144, d/144) degrees, greedy selection vs d, with limiting bound"},
      {"fig4a", PresetKind::kExperiment,
       "deterministic degrees, uniform selection vs d, with exact theory"},
      {"fig4b", PresetKind::kExperiment,
       "deterministic degrees, greedy selection vs d, with limiting bound"},
      {"fig5a", PresetKind::kExperiment,
       "Binomial degrees, DB(alpha) over alpha in [-20, 0] plus maximum matching"},
      {"fig5b", PresetKind::kExperiment,
       "deterministic degrees, DB(alpha) over alpha in [-20, 0] plus maximum matching"},
      {"fig6a", PresetKind::kExperiment, "Binomial degrees with max(k) thinning, DB(alpha) sweep"},
      {"fig6b", PresetKind::kExperiment,
       "deterministic degrees with Bern(k/d) thinning, DB(alpha) sweep"},
      {"table1", PresetKind::kTable,
       "Binomial degrees: uniform, optimal alpha, greedy, max(2)+greedy"},
      {"table2", PresetKind::kTable,
       "deterministic degrees: uniform, optimal alpha, greedy, max(2)+greedy"},
      {"saturation", PresetKind::kDynsim,
       "fabric at load 0.85: saturated matching fraction per algorithm"},
      {"fig7", PresetKind::kDynsim, "imc10-like workload, loads 0.3..0.85, all algorithms"},
      {"fig8", PresetKind::kDynsim, "sgd-like workload, loads 0.3..0.85, all algorithms"},
      {"stability", PresetKind::kDynsim,
       "imc10-like workload, loads {0.4, 0.5, 0.6, 0.7}, stability flags per algorithm"},
  };
  return registry;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : preset_registry()) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown preset '" + name + "' (see the presets command)");
}

void run_preset(const std::string& name, const PresetOptions& opt, std::ostream& out) {
  find_preset(name);
  if (name == "fig3a") {
    degree_curve(out, "binomial uniform", true, {2, 4, 6, 8, 10}, SelectionRule::uniform(), opt);
  } else if (name == "fig3b") {
    degree_curve(out, "binomial greedy", true, {2, 3, 4, 5, 6, 8, 10}, SelectionRule::greedy(),
                 opt);
  } else if (name == "fig4a") {
    degree_curve(out, "deterministic uniform", false, {2, 4, 6, 8, 10}, SelectionRule::uniform(),
                 opt);
  } else if (name == "fig4b") {
    degree_curve(out, "deterministic greedy", false, {2, 3, 4, 5, 6, 8, 10},
                 SelectionRule::greedy(), opt);
  } else if (name == "fig5a" || name == "fig5b") {
    alpha_curves(out, name == "fig5a", opt);
  } else if (name == "fig6a" || name == "fig6b") {
    thinning_curves(out, name == "fig6a", opt);
  } else if (name == "table1" || name == "table2") {
    table(out, name == "table1", opt);
  } else {
    DynsimSweepSpec spec;
    if (name == "saturation") {
      spec = dynsim_spec("imc10-like", {0.85}, 12000, opt);
    } else if (name == "fig7") {
      spec = dynsim_spec("imc10-like", parse_grid("0.3:0.85:0.05"), 12000, opt);
    } else if (name == "fig8") {
      spec = dynsim_spec("sgd-like", parse_grid("0.3:0.85:0.05"), 12000, opt);
    } else {
      spec = dynsim_spec("imc10-like", {0.4, 0.5, 0.6, 0.7}, 60000, opt);
    }
    write_dynsim_sweep(out, run_dynsim_sweep(spec, opt.seed, opt.threads));
  }
}

TableRow table_row(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  cfg.alpha_grid = AlphaGrid{-20.0, 0.0, 0.1};
  const SweepResult sweep = sweep_alpha(cfg);

  TableRow row;
  row.meandeg = base.deg.mean();
  for (const auto& r : sweep.rows) {
    if (r.x == 0.0) row.uniform = r.mean;
  }
  row.greedy = sweep.rows.back().mean;
  const AlphaStar star = find_alpha_star(sweep);
  row.optimal = star.value;
  row.alpha_star = star.alpha;

  ExperimentConfig thinned = base;
  thinned.thinning = ThinningPolicy::max_k(2);
  thinned.rule = SelectionRule::greedy();
  row.max2_greedy = run_replicates(thinned).rows.front().mean;
  return row;
}

namespace {

void put(std::ostream& os, double v) {
  if (std::isinf(v)) {
    os << (v < 0 ? "-inf" : "inf");
  } else if (std::isnan(v)) {
    os << "nan";
  } else {
    os << v;
  }
}

}  // namespace

void write_table(std::ostream& os, const std::vector<TableRow>& rows) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf.precision(10);
  buf << "meandeg,uniform,optimal,greedy,alpha_star,max2_greedy\n";
  for (const auto& r : rows) {
    put(buf, r.meandeg);
    for (double v : {r.uniform, r.optimal, r.greedy, r.alpha_star, r.max2_greedy}) {
      buf << ',';
      put(buf, v);
    }
    buf << '\n';
  }
  os << buf.str();
}

std::vector<DynsimSweepRow> run_dynsim_sweep(const DynsimSweepSpec& spec, std::uint64_t seed,
                                             unsigned threads) {
  std::vector<DynsimSweepRow> out;
  const dynsim::Workload workload = dynsim::Workload::by_name(spec.workload, spec.fabric.bdp());
  for (auto algo : spec.algorithms) {
    dynsim::FabricConfig fabric = spec.fabric;
    fabric.algorithm = algo;
    // Same seed for every algorithm: all of them see the same arrivals.
    for (auto& row : dynsim::stability_sweep(fabric, workload, spec.loads, RngSeed{seed, 0},
                                             threads)) {
      out.push_back({algo, std::move(row)});
    }
  }
  return out;
}

void write_dynsim_sweep(std::ostream& os, const std::vector<DynsimSweepRow>& rows) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf.precision(10);
  buf << "algorithm,load,arrived_load,matching_fraction,throughput,short_fct_mean,short_fct_p50,"
         "short_fct_p99,long_fct_mean,long_fct_p50,long_fct_p99,notify,req,grant,accept,"
         "backlog_growth,backlog_noise,stable\n";
  for (const auto& r : rows) {
    const auto& s = r.row.summary;
    buf << dynsim::to_string(r.algorithm) << ',' << r.row.load << ',' << s.arrived_load << ','
        << s.mean_matching_fraction << ',' << s.normalized_throughput << ',' << s.short_fct.mean
        << ',' << s.short_fct.p50 << ',' << s.short_fct.p99 << ',' << s.long_fct.mean << ','
        << s.long_fct.p50 << ',' << s.long_fct.p99 << ',' << s.control.notify << ','
        << s.control.req << ',' << s.control.grant << ',' << s.control.accept << ','
        << s.backlog_growth << ',' << s.backlog_noise << ',' << (r.row.stable ? 1 : 0) << '\n';
  }
  os << buf.str();
}

std::vector<double> parse_grid(const std::string& text) {
  std::istringstream is(text);
  is.imbue(std::locale::classic());
  double a = 0.0;
  double b = 0.0;
  double step = 0.0;
  char c1 = 0;
  char c2 = 0;
  std::string rest;
  if (!(is >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || (is >> rest)) {
    throw ConfigError("malformed grid '" + text + "' (expected a:b:step)");
  }
  if (!(step > 0.0) || !(a <= b)) throw ConfigError("grid '" + text + "' needs a <= b, step > 0");
  std::vector<double> out;
  const auto count = static_cast<std::int64_t>(std::floor((b - a) / step + 1e-9));
  for (std::int64_t i = 0; i <= count; ++i) {
    out.push_back(std::round((a + static_cast<double>(i) * step) * 1e9) / 1e9);
  }
  return out;
}

}  // namespace dbmatch::cli
