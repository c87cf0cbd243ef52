#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dbmatch/matching.hpp"
#include "dbmatch/rng.hpp"

namespace dbmatch::dynsim {

enum class Algorithm { kTwoCgs, kOneRoundDcPim, kIslip };

Algorithm parse_algorithm(const std::string& name);  // 2cgs | 1rdcpim | islip
std::string to_string(Algorithm a);

struct FabricConfig {
  std::uint32_t n_hosts = 144;
  double link_rate = 12.5e9;    // bytes per second (100 Gbps)
  double base_rtt = 4e-6;       // seconds
  double slot_duration = 4e-6;  // seconds; one matching phase per slot
  Algorithm algorithm = Algorithm::kTwoCgs;
  std::uint32_t horizon = 60000;  // slots
  std::uint32_t warmup = 10000;   // slots

  double bdp() const noexcept { return link_rate * base_rtt; }
  double slot_bytes() const noexcept { return link_rate * slot_duration; }
  void validate() const;
};

/// Message-size law plus the offered load. Sizes of at most one BDP are
/// short; longer ones need a match before they are sent.
class Workload {
 public:
  /// Synthetic heavy tail: with probability p_short a log-uniform size in
  /// [short_min_bdp, 1] BDP, otherwise a bounded Pareto(shape) size on
  /// (1, max_bdp] BDP.
  static Workload synthetic(std::string name, double bdp, double p_short, double shape,
                            double max_bdp, double short_min_bdp = 0.001);
  static Workload imc10_like(double bdp);
  static Workload sgd_like(double bdp);
  /// Discrete law from `(size_bytes, probability)` pairs.
  static Workload empirical(std::string name, std::vector<std::pair<double, double>> points);
  /// Reads lines of `<size_bytes> <probability>`.
  static Workload load_file(const std::string& path);
  /// imc10-like | sgd-like | file:<path>
  static Workload by_name(const std::string& spec, double bdp);

  const std::string& name() const noexcept { return name_; }
  double load() const noexcept { return load_; }
  void set_load(double rho);

  double mean_size() const noexcept;
  /// Fraction of offered bytes carried by messages of at most `bdp` bytes.
  double short_byte_share(double bdp) const noexcept;
  double sample_size(Engine& eng) const;

  /// Messages per second for one ordered host pair so that each host's
  /// arrival byte rate equals load * link_rate.
  double pair_arrival_rate(const FabricConfig& fabric) const noexcept;

 private:
  enum class Kind { kSynthetic, kEmpirical };
  Kind kind_ = Kind::kSynthetic;
  std::string name_;
  double load_ = 0.0;
  // synthetic
  double bdp_ = 0.0;
  double p_short_ = 0.0;
  double shape_ = 1.1;
  double max_bdp_ = 10.0;
  double short_min_bdp_ = 0.001;
  // empirical
  std::vector<double> sizes_;
  std::vector<double> probs_;
};

struct SlotMetrics {
  std::uint32_t slot = 0;
  std::uint32_t matched = 0;
  std::uint32_t busy_pairs = 0;  // matched pairs that moved long bytes
  double served_bytes = 0.0;
  double backlog_bytes = 0.0;  // pending bytes at the end of the slot
  ControlCounts control;
};

struct FctStats {
  std::uint64_t completed = 0;
  double mean = 0.0;
  double p50 = 0.0;
  double p99 = 0.0;
  double min = 0.0;
};

struct RunSummary {
  std::uint32_t n_hosts = 0;
  std::uint32_t warmup = 0;
  std::vector<SlotMetrics> slots;
  double offered_load = 0.0;  // configured target
  double arrived_load = 0.0;  // realized arrival bytes / capacity, post warmup
  double mean_matching_fraction = 0.0;
  double normalized_throughput = 0.0;
  FctStats short_fct;
  FctStats long_fct;
  ControlCounts control;  // post warmup
  double backlog_slope = 0.0;      // bytes per slot over the final third
  double backlog_growth = 0.0;     // slope * window length
  double backlog_noise = 0.0;      // residual standard deviation in the window
  double arrived_bytes = 0.0;      // whole run
  double served_bytes = 0.0;       // whole run
  double final_backlog_bytes = 0.0;
  std::vector<std::string> warnings;
};

RunSummary run_dynsim(const FabricConfig& fabric, const Workload& workload, RngSeed rng);

struct StabilityRow {
  double load = 0.0;
  RunSummary summary;
  bool stable = false;
};

inline constexpr double kStabilityEpsilon = 0.005;

/// Stable iff throughput >= load - eps and the fitted backlog growth over
/// the final third stays within three residual standard deviations.
bool is_stable(const RunSummary& s, double load, double eps = kStabilityEpsilon);

std::vector<StabilityRow> stability_sweep(const FabricConfig& fabric, const Workload& workload,
                                          const std::vector<double>& loads, RngSeed rng,
                                          unsigned threads = 1);

/// Largest load in the sweep such that it and every smaller load are stable;
/// 0 when the smallest load is already unstable.
double max_stable_load(const std::vector<StabilityRow>& rows);

/// NOTIFY/REQ/GRANT/ACCEPT totals over the post-warmup slots.
ControlCounts control_message_census(const RunSummary& summary);

void write_slot_csv(std::ostream& os, const RunSummary& s);
void write_summary(std::ostream& os, const RunSummary& s);

}  // namespace dbmatch::dynsim
