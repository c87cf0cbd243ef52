#include "dbmatch/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "dbmatch/cli/presets.hpp"
#include "dbmatch/dynsim.hpp"
#include "dbmatch/error.hpp"
#include "dbmatch/experiments.hpp"
#include "dbmatch/graph.hpp"
#include "dbmatch/matching.hpp"
#include "dbmatch/theory.hpp"
#include "dbmatch/thinning.hpp"

namespace dbmatch::cli {

namespace {

// Re-raises library errors with the offending flag in front.
template <class F>
auto for_flag(const std::string& flag, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(flag + ": " + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(flag + ": " + e.what());
  }
}

struct Options {
  std::uint64_t seed = 1;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::string out_path;

  // generate / experiment
  std::uint32_t n = 144;
  std::string deg = "det:2";
  std::string thin = "none";
  bool dump_graph = false;

  // match
  std::string graph_path;
  std::string rule = "uniform";

  // theory
  std::string formula;
  std::optional<std::uint32_t> s;
  double tail_tol = 1e-12;

  // experiment
  std::string preset;
  std::optional<std::uint32_t> reps;
  std::string alpha_grid;
  bool alpha_star = false;
  bool max_matching = false;

  // dynsim
  std::uint32_t hosts = 144;
  std::string algo = "2cgs";
  std::string workload = "imc10-like";
  std::optional<double> load;
  std::string load_grid;
  std::optional<std::uint32_t> slots;
  std::optional<std::uint32_t> warmup;
  double slot_rtts = 1.0;
};

// stdout unless --out names a file.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ConfigError("--out: cannot open '" + path + "' for writing");
      os_ = file_.get();
    }
  }
  std::ostream& stream() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

std::string fmt12(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(12) << v;
  return os.str();
}

SelectionRule parse_rule(const std::string& text) {
  if (text == "uniform") return SelectionRule::uniform();
  if (text == "greedy") return SelectionRule::greedy();
  if (text.rfind("db:", 0) == 0) {
    std::istringstream is(text.substr(3));
    is.imbue(std::locale::classic());
    double a = 0.0;
    std::string rest;
    if ((is >> a) && !(is >> rest)) return SelectionRule::db(a);
  }
  throw ConfigError("unknown rule '" + text + "' (expected uniform, greedy, db:<alpha> or islip)");
}

template <class Seq>
void put_list(std::ostream& os, const Seq& xs) {
  os << '[';
  bool first = true;
  for (const auto& x : xs) {
    os << (first ? "" : ", ") << x;
    first = false;
  }
  os << ']';
}

int cmd_generate(const Options& o, std::ostream& out) {
  const DegreeSpec deg = for_flag("--deg", [&] { return DegreeSpec::parse(o.deg); });
  const ThinningPolicy policy =
      for_flag("--thin", [&] { return ThinningPolicy::parse(o.thin); });
  const RngSeed rng{o.seed, 0};
  const BipartiteGraph g =
      for_flag("--n", [&] { return thin(generate_dout(o.n, deg, rng), policy, rng); });
  Sink sink(o.out_path, out);
  std::ostream& os = sink.stream();
  if (o.dump_graph) {
    write_graph(os, g);
    return kExitOk;
  }
  os << "{\n  \"n\": " << g.n_senders() << ",\n  \"edges\": " << g.edge_count()
     << ",\n  \"receiver_degrees\": ";
  put_list(os, receiver_degrees(g));
  os << "\n}\n";
  return kExitOk;
}

int cmd_match(const Options& o, std::ostream& out) {
  std::ifstream in(o.graph_path);
  if (!in) throw ConfigError("--graph: cannot open '" + o.graph_path + "'");
  const BipartiteGraph g = for_flag("--graph", [&] { return read_graph(in); });
  MatchResult r;
  if (o.rule == "islip") {
    IslipState state(std::max(g.n_senders(), g.n_receivers()));
    state.grant_ptr.resize(g.n_receivers());
    state.accept_ptr.resize(g.n_senders());
    r = islip_round(g, state);
  } else {
    const SelectionRule rule = for_flag("--rule", [&] { return parse_rule(o.rule); });
    r = run_round(g, rule, RngSeed{o.seed, 0});
  }
  Sink sink(o.out_path, out);
  std::ostream& os = sink.stream();
  os.imbue(std::locale::classic());
  os << "{\n  \"rule\": \"" << o.rule << "\",\n  \"pairs\": [";
  for (std::size_t i = 0; i < r.pairs.size(); ++i) {
    os << (i ? ", " : "") << '[' << r.pairs[i].first << ", " << r.pairs[i].second << ']';
  }
  os << "],\n  \"matched_fraction\": " << fmt12(r.matched_fraction)
     << ",\n  \"control_counts\": {\"notify\": " << r.control.notify
     << ", \"req\": " << r.control.req << ", \"grant\": " << r.control.grant
     << ", \"accept\": " << r.control.accept << "},\n  \"receiver_degrees\": ";
  put_list(os, receiver_degrees(g));
  os << "\n}\n";
  return kExitOk;
}

int cmd_theory(const Options& o, std::ostream& out) {
  const DegreeSpec deg = for_flag("--deg", [&] { return DegreeSpec::parse(o.deg); });
  Sink sink(o.out_path, out);
  std::ostream& os = sink.stream();
  if (o.formula == "uniform") {
    const double v = for_flag("--n", [&] {
      if (o.n == 0) throw ConfigError("must be positive");
      return theory::mean_match_uniform(o.n, deg.prob_zero());
    });
    os << fmt12(v) << '\n';
  } else if (o.formula == "uniform-limit") {
    os << fmt12(for_flag("--deg", [&] { return theory::mean_match_uniform_limit(deg); })) << '\n';
  } else if (o.formula == "greedy-bound") {
    const auto sv = for_flag("--deg", [&] {
      if (!(deg.mean() > 0.0)) throw ConfigError("needs a positive mean degree");
      return theory::mean_match_greedy_bound(deg, o.tail_tol);
    });
    os << fmt12(sv.value) << '\n'
       << "# terms: " << sv.terms << '\n'
       << "# tail_mass: " << fmt12(sv.tail_mass) << '\n';
  } else if (o.formula == "f") {
    if (!o.s) throw ConfigError("--s: required for --formula f");
    os << fmt12(for_flag("--deg", [&] {
      if (!(deg.mean() > 0.0)) throw ConfigError("needs a positive mean degree");
      return theory::greedy_f(*o.s, deg);
    })) << '\n';
  } else {
    throw ConfigError("--formula: expected uniform, uniform-limit, greedy-bound or f");
  }
  return kExitOk;
}

PresetOptions preset_options(const Options& o) {
  PresetOptions p;
  p.seed = o.seed;
  p.threads = o.threads;
  p.replicates = o.reps;
  p.slots = o.slots;
  return p;
}

int cmd_experiment(const Options& o, std::ostream& out) {
  if (!o.preset.empty()) {
    for_flag("--preset", [&] { return find_preset(o.preset); });
    Sink sink(o.out_path, out);
    run_preset(o.preset, preset_options(o), sink.stream());
    return kExitOk;
  }
  ExperimentConfig cfg;
  cfg.n = o.n;
  cfg.replicates = o.reps.value_or(1000);
  cfg.deg = for_flag("--deg", [&] { return DegreeSpec::parse(o.deg); });
  cfg.thinning = for_flag("--thin", [&] { return ThinningPolicy::parse(o.thin); });
  cfg.rule = for_flag("--rule", [&] { return parse_rule(o.rule); });
  cfg.base_seed = RngSeed{o.seed, 0};
  cfg.threads = o.threads;
  if (!o.alpha_grid.empty()) {
    const auto pts = for_flag("--alpha-grid", [&] { return parse_grid(o.alpha_grid); });
    AlphaGrid grid;
    grid.start = pts.front();
    grid.stop = pts.back();
    grid.step = pts.size() > 1 ? pts[1] - pts[0] : 1.0;
    cfg.alpha_grid = grid;
  }
  for_flag("--n", [&] {
    cfg.validate();
    return 0;
  });

  Sink sink(o.out_path, out);
  std::ostream& os = sink.stream();
  write_csv_header(os);
  if (cfg.alpha_grid) {
    const SweepResult sweep = sweep_alpha(cfg);
    write_csv_rows(os, sweep, true);
    if (o.alpha_star) {
      const AlphaStar star = find_alpha_star(sweep);
      os << "# alpha_star: " << fmt12(star.alpha) << " value: " << fmt12(star.value) << '\n';
    }
  } else {
    write_csv_rows(os, run_replicates(cfg), true);
  }
  if (o.max_matching) write_csv_rows(os, max_matching_baseline(cfg), true);
  return kExitOk;
}

int cmd_dynsim(const Options& o, std::ostream& out) {
  if (!o.preset.empty()) {
    for_flag("--preset", [&] { return find_preset(o.preset); });
    Sink sink(o.out_path, out);
    run_preset(o.preset, preset_options(o), sink.stream());
    return kExitOk;
  }
  dynsim::FabricConfig fabric;
  fabric.n_hosts = o.hosts;
  fabric.slot_duration = fabric.base_rtt * o.slot_rtts;
  if (o.slots) fabric.horizon = *o.slots;
  fabric.warmup = o.warmup.value_or(fabric.horizon / 6);
  for_flag("--slots", [&] {
    fabric.validate();
    return 0;
  });
  const auto algos = for_flag("--algo", [&] {
    std::vector<dynsim::Algorithm> a;
    if (o.algo == "all") {
      a = {dynsim::Algorithm::kOneRoundDcPim, dynsim::Algorithm::kTwoCgs,
           dynsim::Algorithm::kIslip};
    } else {
      a.push_back(dynsim::parse_algorithm(o.algo));
    }
    return a;
  });
  dynsim::Workload workload =
      for_flag("--workload", [&] { return dynsim::Workload::by_name(o.workload, fabric.bdp()); });

  Sink sink(o.out_path, out);
  std::ostream& os = sink.stream();
  if (!o.load_grid.empty()) {
    DynsimSweepSpec spec;
    spec.fabric = fabric;
    spec.workload = o.workload;
    spec.algorithms = algos;
    spec.loads = for_flag("--load-grid", [&] {
      auto g = parse_grid(o.load_grid);
      for (double x : g) {
        if (!(x > 0.0 && x < 1.0)) throw ConfigError("loads must lie in (0, 1)");
      }
      return g;
    });
    write_dynsim_sweep(os, run_dynsim_sweep(spec, o.seed, o.threads));
    return kExitOk;
  }
  if (!o.load) throw ConfigError("--load: required unless --load-grid or --preset is given");
  if (algos.size() != 1) throw ConfigError("--algo: 'all' needs --load-grid");
  for_flag("--load", [&] {
    workload.set_load(*o.load);
    return 0;
  });
  fabric.algorithm = algos.front();
  const dynsim::RunSummary s = dynsim::run_dynsim(fabric, workload, RngSeed{o.seed, 0});
  dynsim::write_slot_csv(os, s);
  dynsim::write_summary(os, s);
  return kExitOk;
}

int cmd_presets(std::ostream& out) {
  for (const auto& p : preset_registry()) {
    out << std::left << std::setw(12) << p.name << p.description << '\n';
  }
  return kExitOk;
}

}  // namespace

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Single-round degree-biased bipartite matching: theory, Monte Carlo and fabric "
               "simulation",
               "dbmatch"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.add_option("--seed", o.seed, "Base random seed");
  app.add_option("--threads", o.threads, "Worker threads (default: hardware concurrency)")
      ->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("generate", "Sample a D-out bipartite graph");
  gen->add_option("--n", o.n, "Nodes per side");
  gen->add_option("--deg", o.deg, "Degree law: det:d | bin:n,p | pois:m | emp:p0,p1,...");
  gen->add_option("--thin", o.thin, "Thinning: none | bern:q | max:k");
  gen->add_flag("--dump-graph", o.dump_graph, "Print the graph in text form");
  gen->add_option("--out", o.out_path, "Write output to a file");

  auto* match = app.add_subcommand("match", "Run one matching round on a stored graph");
  match->add_option("--graph", o.graph_path, "Graph file (generate --dump-graph)")->required();
  match->add_option("--rule", o.rule, "uniform | greedy | db:<alpha> | islip");
  match->add_option("--out", o.out_path, "Write output to a file");

  auto* th = app.add_subcommand("theory", "Evaluate a closed-form expression");
  th->add_option("--formula", o.formula, "uniform | uniform-limit | greedy-bound | f")->required();
  th->add_option("--deg", o.deg, "Degree law: det:d | bin:n,p | pois:m");
  th->add_option("--n", o.n, "Nodes per side (uniform)");
  th->add_option("--s", o.s, "Receiver degree (f)");
  th->add_option("--tail-tol", o.tail_tol, "Series truncation tolerance (greedy-bound)")
      ->check(CLI::PositiveNumber);
  th->add_option("--out", o.out_path, "Write output to a file");

  auto* exp = app.add_subcommand("experiment", "Monte Carlo experiment (preset or explicit)");
  exp->add_option("--preset", o.preset, "Preset name (see presets)");
  exp->add_option("--n", o.n, "Nodes per side");
  exp->add_option("--reps", o.reps, "Replicates")->check(CLI::PositiveNumber);
  exp->add_option("--deg", o.deg, "Degree law");
  exp->add_option("--thin", o.thin, "Thinning: none | bern:q | max:k");
  exp->add_option("--rule", o.rule, "uniform | greedy | db:<alpha>");
  exp->add_option("--alpha-grid", o.alpha_grid, "Sweep DB(alpha) over start:stop:step");
  exp->add_flag("--alpha-star", o.alpha_star, "Report the grid argmax after a sweep");
  exp->add_flag("--max-matching", o.max_matching, "Append the maximum-matching baseline");
  exp->add_option("--out", o.out_path, "Write CSV to a file");

  auto* dyn = app.add_subcommand("dynsim", "Slotted fabric simulation");
  dyn->add_option("--preset", o.preset, "Preset name (see presets)");
  dyn->add_option("--hosts", o.hosts, "Number of hosts");
  dyn->add_option("--algo", o.algo, "2cgs | 1rdcpim | islip | all (grid only)");
  dyn->add_option("--workload", o.workload, "imc10-like | sgd-like | file:<path>");
  dyn->add_option("--load", o.load, "Offered load in [0, 1)");
  dyn->add_option("--load-grid", o.load_grid, "Load sweep a:b:step");
  dyn->add_option("--slots", o.slots, "Horizon in slots")->check(CLI::PositiveNumber);
  dyn->add_option("--warmup", o.warmup, "Warmup slots (default: horizon / 6)");
  dyn->add_option("--slot-rtts", o.slot_rtts, "Slot duration in base RTTs (>= 1)");
  dyn->add_option("--reps", o.reps, "Replicates (experiment presets)")->check(CLI::PositiveNumber);
  dyn->add_option("--out", o.out_path, "Write output to a file");
  exp->add_option("--slots", o.slots, "Horizon in slots (dynsim presets)")
      ->check(CLI::PositiveNumber);

  auto* pre = app.add_subcommand("presets", "List presets");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    const CLI::App* where = subs.empty() ? &app : subs.front();
    err << "error: " << e.what() << "\n\n" << where->help();
    return kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_generate(o, out);
    if (match->parsed()) return cmd_match(o, out);
    if (th->parsed()) return cmd_theory(o, out);
    if (exp->parsed()) return cmd_experiment(o, out);
    if (dyn->parsed()) return cmd_dynsim(o, out);
    if (pre->parsed()) return cmd_presets(out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  err << app.help();
  return kExitConfig;
}

}  // namespace dbmatch::cli
