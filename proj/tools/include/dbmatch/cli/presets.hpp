#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dbmatch/dynsim.hpp"
#include "dbmatch/experiments.hpp"

namespace dbmatch::cli {

enum class PresetKind { kExperiment, kTable, kDynsim };

struct Preset {
  std::string name;
  PresetKind kind;
  std::string description;
};

const std::vector<Preset>& preset_registry();

/// Throws ConfigError for unknown names.
const Preset& find_preset(const std::string& name);

struct PresetOptions {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::optional<std::uint32_t> replicates;  // experiment presets
  std::optional<std::uint32_t> slots;       // dynsim presets
};

/// Runs a preset and writes its CSV to `out`.
void run_preset(const std::string& name, const PresetOptions& opt, std::ostream& out);

// Building blocks shared with the explicit-flag commands and the tests.

struct TableRow {
  double meandeg = 0.0;
  double uniform = 0.0;
  double optimal = 0.0;
  double greedy = 0.0;
  double alpha_star = 0.0;
  double max2_greedy = 0.0;
};

/// One row of the uniform / optimal / greedy / max(2)+greedy comparison.
TableRow table_row(const ExperimentConfig& base);
void write_table(std::ostream& os, const std::vector<TableRow>& rows);

struct DynsimSweepSpec {
  dynsim::FabricConfig fabric;
  std::string workload = "imc10-like";
  std::vector<dynsim::Algorithm> algorithms;
  std::vector<double> loads;
};

struct DynsimSweepRow {
  dynsim::Algorithm algorithm;
  dynsim::StabilityRow row;
};

std::vector<DynsimSweepRow> run_dynsim_sweep(const DynsimSweepSpec& spec, std::uint64_t seed,
                                             unsigned threads);
void write_dynsim_sweep(std::ostream& os, const std::vector<DynsimSweepRow>& rows);

/// Parses `a:b:step` into the inclusive grid a, a + step, ...
std::vector<double> parse_grid(const std::string& text);

}  // namespace dbmatch::cli
