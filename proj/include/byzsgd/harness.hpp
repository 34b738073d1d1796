// CLI-facing layer: flat key=value config files, seed management, metrics
// emission (CSV + JSON summary), the experiment drivers behind each
// subcommand, and the tiny-scale brute-force concentration oracle.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "byzsgd/attacks.hpp"
#include "byzsgd/datagen.hpp"
#include "byzsgd/model.hpp"
#include "byzsgd/trainer.hpp"

namespace byzsgd::harness {

struct RunConfig {
  std::string name = "experiment";
  datagen::HeteroModelSpec data;
  ObjectiveSpec objective;
  trainer::TrainConfig train;
  attacks::AttackSpec attack;
  std::uint64_t master_seed = 1;
  std::size_t replicates = 1;
  std::string out_dir = "out";
};

// Parses the documented [section] / key = value format. Throws
// std::invalid_argument with a line-tagged message on malformed input.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// stable schema: header + one row per round, NaN literal for inapplicable
// fields, LF endings. With replicates > 1 the merged file concatenates the
// per-replicate blocks in replicate order.
std::string metrics_to_csv(const std::vector<trainer::MetricsRow>& rows);

struct SubsetConcentrationResult {
  double best_lambda = 0.0;
  double bound = 0.0;
  bool holds = false;
};

// Enumerates all subsets of size ceil((1-eps') m) and minimizes
// lambda_max((1/|S|) sum_{i in S} (y_i - mu_i)(y_i - mu_i)^T); the bound is
// (4 sigma_max^2 / eps') (1 + d / ((1-eps') m)) with sigma_max^2 the exact
// per-distribution directional-variance maximum supplied by the caller.
// Enumeration budget: m <= 14.
SubsetConcentrationResult brute_force_subset_concentration(const std::vector<Vec>& points,
                                                           const std::vector<Vec>& means,
                                                           double eps_prime,
                                                           double sigma_max_sq);

// Subcommand drivers. Each returns a process exit code: 0 success, 1 config
// error, 2 runtime failure (e.g. filter collapse).
int run_train(const RunConfig& cfg, std::size_t threads);
int run_rge_bench(std::uint64_t seed, const std::string& out_dir, std::size_t seeds_per_cell);
int run_concentration_check(std::uint64_t seed, const std::string& out_dir,
                            std::size_t num_seeds);
int run_compress_check(std::uint64_t seed, const std::string& out_dir);
struct KappaScanResult {
  std::vector<std::size_t> n_values;
  std::vector<double> excess;  // mean over seeds of (kappa_hat - kappa_mean)
  double slope = 0.0;          // fitted log-log slope of excess vs n
};
KappaScanResult kappa_scan(std::uint64_t seed, std::size_t d, std::size_t workers,
                           std::size_t n_min, std::size_t n_max, std::size_t num_seeds);
int run_kappa_scan(std::uint64_t seed, const std::string& out_dir);

// Least-squares slope of y against x.
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace byzsgd::harness
