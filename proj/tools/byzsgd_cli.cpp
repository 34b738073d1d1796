// byzsgd: desk-scale simulator for Byzantine-resilient distributed SGD on
// heterogeneous data. Subcommands: train, rge-bench, concentration-check,
// compress-check, kappa-scan. Exit codes: 0 success, 1 config error,
// 2 runtime failure.
#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "byzsgd/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Byzantine-resilient distributed SGD simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t replicates = 0;
  std::size_t threads = 1;
  std::size_t bench_seeds = 100;
  std::size_t conc_seeds = 50;

  CLI::App* train = app.add_subcommand("train", "run the resilient training loop");
  train->add_option("--config", config_path, "config file (key = value sections)")
      ->required();
  train->add_option("--seed", seed, "override master seed")->each([&](const std::string&) {
    seed_given = true;
  });
  train->add_option("--out", out_dir, "output directory");
  train->add_option("--replicates", replicates, "override replicate count");
  train->add_option("--threads", threads, "replicate-level parallelism");

  CLI::App* bench =
      app.add_subcommand("rge-bench", "planted-outlier robust-estimator benchmark");
  bench->add_option("--seed", seed, "master seed");
  bench->add_option("--out", out_dir, "output directory");
  bench->add_option("--replicates", bench_seeds, "seeds per epsilon cell");

  CLI::App* conc = app.add_subcommand("concentration-check",
                                      "brute-force subset concentration diagnostic");
  conc->add_option("--seed", seed, "master seed");
  conc->add_option("--out", out_dir, "output directory");
  conc->add_option("--replicates", conc_seeds, "number of random instances");

  CLI::App* comp =
      app.add_subcommand("compress-check", "rand-k unbiasedness / variance checks");
  comp->add_option("--seed", seed, "master seed");
  comp->add_option("--out", out_dir, "output directory");

  CLI::App* kscan = app.add_subcommand("kappa-scan", "dissimilarity-vs-n trend sweep");
  kscan->add_option("--seed", seed, "master seed");
  kscan->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) {
      byzsgd::harness::RunConfig cfg = byzsgd::harness::parse_config_file(config_path);
      if (seed_given) cfg.master_seed = seed;
      if (replicates > 0) cfg.replicates = replicates;
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      return byzsgd::harness::run_train(cfg, threads);
    }
    if (out_dir.empty()) out_dir = "out";
    if (bench->parsed()) return byzsgd::harness::run_rge_bench(seed, out_dir, bench_seeds);
    if (conc->parsed())
      return byzsgd::harness::run_concentration_check(seed, out_dir, conc_seeds);
    if (comp->parsed()) return byzsgd::harness::run_compress_check(seed, out_dir);
    if (kscan->parsed()) return byzsgd::harness::run_kappa_scan(seed, out_dir);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
