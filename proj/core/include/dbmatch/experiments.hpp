#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dbmatch/graph.hpp"
#include "dbmatch/matching.hpp"
#include "dbmatch/rng.hpp"
#include "dbmatch/thinning.hpp"

namespace dbmatch {

struct AlphaGrid {
  double start = -20.0;
  double stop = 0.0;
  double step = 0.1;

  /// Grid points from `start` to `stop` inclusive. Points are computed as
  /// start + i * step so repeated calls agree bit for bit.
  std::vector<double> points() const;
};

struct ExperimentConfig {
  std::uint32_t n = 144;
  std::uint32_t replicates = 1000;
  DegreeSpec deg = DegreeSpec::deterministic(2);
  ThinningPolicy thinning = ThinningPolicy::none();
  SelectionRule rule = SelectionRule::uniform();
  std::optional<AlphaGrid> alpha_grid;
  RngSeed base_seed{};
  unsigned threads = 1;

  void validate() const;
};

struct SweepRow {
  double x = 0.0;  // alpha or mean degree, depending on the sweep
  double mean = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double stderr_ = 0.0;
  std::optional<double> theory;
};

struct SweepResult {
  std::string label;
  std::vector<SweepRow> rows;
};

/// Summary statistics of one sample. Quartiles use linear interpolation
/// between order statistics.
SweepRow summarize(std::vector<double> samples, double x);

/// Seed for replicate r; the graph, thinning and matching streams of the
/// replicate are derived from it.
RngSeed replicate_seed(RngSeed base, std::uint64_t r);

/// Degree law of the intention graph after thinning a min(D, n)-out graph.
DegreeSpec intention_degree_law(const DegreeSpec& deg, const ThinningPolicy& thinning,
                                std::uint32_t n);

/// Closed-form value for the configured rule when one exists: exact for
/// uniform selection, asymptotic lower bound for greedy selection.
std::optional<double> theory_value(const ExperimentConfig& cfg);

/// One row: matched fraction over replicates of the configured rule.
/// Row x is the mean out-degree of the feasible graph.
SweepResult run_replicates(const ExperimentConfig& cfg);

/// Matched fraction per replicate, in replicate order.
std::vector<double> replicate_fractions(const ExperimentConfig& cfg);

/// Mean curve over cfg.alpha_grid with common random numbers, followed by
/// the greedy (alpha = -inf) point, which is emitted with x = -inf.
SweepResult sweep_alpha(const ExperimentConfig& cfg);

struct AlphaStar {
  double alpha = 0.0;  // -inf when greedy wins
  double value = 0.0;
};

/// Grid argmax of sweep_alpha; ties go to the larger alpha.
AlphaStar find_alpha_star(const ExperimentConfig& cfg);
AlphaStar find_alpha_star(const SweepResult& sweep);

/// Mean maximum-matching fraction of the intention graphs.
SweepResult max_matching_baseline(const ExperimentConfig& cfg);

/// `x,mean,q1,q3,stderr,theory` rows; a `# label` line precedes each block
/// when `with_label` is set.
void write_csv_header(std::ostream& os);
void write_csv_rows(std::ostream& os, const SweepResult& r, bool with_label);

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::uint32_t count, unsigned threads,
                  const std::function<void(std::uint32_t)>& fn);

}  // namespace dbmatch
