#include "byzsgd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace byzsgd::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Vec parse_vec(const std::string& s) {
  Vec out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell = trim(cell);
    if (!cell.empty()) out.push_back(std::stod(cell));
  }
  return out;
}

double parse_radius(const std::string& s) {
  if (s == "inf" || s == "unbounded") return std::numeric_limits<double>::infinity();
  return std::stod(s);
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::map<std::string, std::string> kv;  // "section.key" -> value
  std::string section;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    kv[section.empty() ? key : section + "." + key] = value;
  }

  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto get_double = [&](const std::string& key, double fallback) {
    const std::string* v = get(key);
    return v != nullptr ? std::stod(*v) : fallback;
  };
  auto get_size = [&](const std::string& key, std::size_t fallback) {
    const std::string* v = get(key);
    return v != nullptr ? static_cast<std::size_t>(std::stoull(*v)) : fallback;
  };

  if (const std::string* v = get("name")) cfg.name = *v;

  cfg.data.d = get_size("data.d", 2);
  cfg.data.workers = get_size("data.workers", 4);
  cfg.data.samples_per_worker = get_size("data.samples", 16);
  cfg.data.noise_std = get_double("data.noise_std", 0.0);
  cfg.data.shift_radius = get_double("data.shift_radius", 0.0);
  if (const std::string* v = get("data.base_param")) {
    cfg.data.base_param = parse_vec(*v);
    if (cfg.data.base_param.size() != cfg.data.d)
      throw std::invalid_argument("config: base_param length must equal d");
  } else {
    cfg.data.base_param = Vec(cfg.data.d, get_double("data.base_fill", 1.0));
  }

  const std::string obj_kind = get("objective.kind") ? *get("objective.kind") : "quadratic";
  if (obj_kind == "quadratic") {
    cfg.objective.kind = ObjectiveKind::kStronglyConvexQuadratic;
  } else if (obj_kind == "nonconvex") {
    cfg.objective.kind = ObjectiveKind::kSmoothNonconvex;
  } else {
    throw std::invalid_argument("config: unknown objective.kind '" + obj_kind + "'");
  }
  cfg.objective.nonconvex_weight = get_double("objective.nonconvex_weight", 0.0);

  const std::string mode = get("train.mode") ? *get("train.mode") : "sgd";
  if (mode == "sgd") {
    cfg.train.mode = trainer::TrainMode::kSgd;
  } else if (mode == "full_gd") {
    cfg.train.mode = trainer::TrainMode::kFullGd;
  } else if (mode == "compressed_sgd") {
    cfg.train.mode = trainer::TrainMode::kCompressedSgd;
  } else {
    throw std::invalid_argument("config: unknown train.mode '" + mode + "'");
  }
  cfg.train.T = get_size("train.T", 100);
  cfg.train.b = get_size("train.b", 1);
  cfg.train.k = get_size("train.k", 0);
  cfg.train.eps = get_double("train.eps", 0.0);
  cfg.train.eps_prime = get_double("train.eps_prime", 0.05);
  const std::string rule = get("train.lr_rule") ? *get("train.lr_rule") : "strongly_convex";
  if (rule == "strongly_convex") {
    cfg.train.lr_rule = trainer::LrRule::kStronglyConvex;
  } else if (rule == "nonconvex") {
    cfg.train.lr_rule = trainer::LrRule::kNonconvex;
  } else if (rule == "manual") {
    cfg.train.lr_rule = trainer::LrRule::kManual;
  } else {
    throw std::invalid_argument("config: unknown train.lr_rule '" + rule + "'");
  }
  cfg.train.manual_lr = get_double("train.manual_lr", 0.0);
  if (const std::string* v = get("train.radius")) cfg.train.domain.radius = parse_radius(*v);
  if (const std::string* v = get("train.sigma0_override"))
    if (*v != "none") cfg.train.sigma0_override = std::stod(*v);
  cfg.train.upsilon_const = get_double("train.upsilon_const", -1.0);

  const std::string atk = get("attack.kind") ? *get("attack.kind") : "none";
  if (atk == "none") {
    cfg.attack.kind = attacks::AttackKind::kNone;
  } else if (atk == "gaussian_noise") {
    cfg.attack.kind = attacks::AttackKind::kGaussianNoise;
  } else if (atk == "sign_flip") {
    cfg.attack.kind = attacks::AttackKind::kSignFlip;
  } else if (atk == "constant") {
    cfg.attack.kind = attacks::AttackKind::kConstant;
  } else if (atk == "omniscient_shift") {
    cfg.attack.kind = attacks::AttackKind::kOmniscientShift;
  } else {
    throw std::invalid_argument("config: unknown attack.kind '" + atk + "'");
  }
  cfg.attack.scale = get_double("attack.scale", 1.0);
  cfg.attack.mobile = get("attack.mobile") != nullptr && *get("attack.mobile") == "true";
  cfg.attack.eps = get_double("attack.eps", cfg.train.eps);
  if (const std::string* v = get("attack.constant")) cfg.attack.constant = parse_vec(*v);
  if (cfg.attack.kind == attacks::AttackKind::kConstant &&
      cfg.attack.constant.size() != cfg.data.d)
    throw std::invalid_argument("config: attack.constant length must equal d");

  cfg.master_seed = static_cast<std::uint64_t>(get_size("seeds.master", 1));
  cfg.replicates = get_size("seeds.replicates", 1);
  if (cfg.replicates < 1) throw std::invalid_argument("config: replicates must be >= 1");
  if (const std::string* v = get("output.dir")) cfg.out_dir = *v;
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot read config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::string metrics_to_csv(const std::vector<trainer::MetricsRow>& rows) {
  std::string out =
      "round,dist_sq_to_opt,grad_norm_sq,est_error,active_count,honest_removed,"
      "filter_rounds,sum_c_tau_final\n";
  for (const trainer::MetricsRow& r : rows) {
    out += std::to_string(r.round);
    out += ',';
    out += fmt_double(r.dist_sq_to_opt);
    out += ',';
    out += fmt_double(r.grad_norm_sq);
    out += ',';
    out += fmt_double(r.est_error);
    out += ',';
    out += std::to_string(r.active_count);
    out += ',';
    out += std::to_string(r.honest_removed);
    out += ',';
    out += std::to_string(r.filter_rounds);
    out += ',';
    out += fmt_double(r.sum_c_tau_final);
    out += '\n';
  }
  return out;
}

SubsetConcentrationResult brute_force_subset_concentration(const std::vector<Vec>& points,
                                                           const std::vector<Vec>& means,
                                                           double eps_prime,
                                                           double sigma_max_sq) {
  const std::size_t m = points.size();
  if (m == 0 || means.size() != m)
    throw std::invalid_argument("brute_force_subset_concentration: size mismatch");
  if (m > 14) throw std::invalid_argument("brute_force_subset_concentration: m over budget (14)");
  if (eps_prime <= 0.0 || eps_prime > 1.0)
    throw std::invalid_argument("brute_force_subset_concentration: eps_prime out of range");

  const std::size_t d = points.front().size();
  const auto subset_size = static_cast<std::size_t>(
      std::ceil((1.0 - eps_prime) * static_cast<double>(m) - 1e-12));
  std::vector<Vec> dev(m);
  for (std::size_t i = 0; i < m; ++i) dev[i] = sub(points[i], means[i]);

  SubsetConcentrationResult res;
  res.best_lambda = std::numeric_limits<double>::infinity();
  const Vec origin = zeros(d);

  std::vector<std::size_t> comb(subset_size);
  std::iota(comb.begin(), comb.end(), std::size_t{0});
  for (;;) {
    std::vector<Vec> subset;
    subset.reserve(subset_size);
    for (const std::size_t i : comb) subset.push_back(dev[i]);
    res.best_lambda = std::min(res.best_lambda, rge::max_eig_deviation(subset, origin));

    // next lexicographic combination
    std::size_t pos = subset_size;
    while (pos > 0 && comb[pos - 1] == m - subset_size + (pos - 1)) --pos;
    if (pos == 0) break;
    ++comb[pos - 1];
    for (std::size_t j = pos; j < subset_size; ++j) comb[j] = comb[j - 1] + 1;
  }

  res.bound = 4.0 * sigma_max_sq / eps_prime *
              (1.0 + static_cast<double>(d) /
                         ((1.0 - eps_prime) * static_cast<double>(m)));
  res.holds = res.best_lambda <= res.bound;
  return res;
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("fitted_slope: need >= 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

int run_train(const RunConfig& cfg, std::size_t threads) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  std::filesystem::create_directories(cfg.out_dir);

  Rng data_rng = Rng::stream(cfg.master_seed, StreamTag::kData);
  const datagen::GeneratedWorld world = datagen::generate(data_rng, cfg.data);
  const trainer::ModelConstants constants =
      trainer::measure_constants(cfg.objective, world.worlds, cfg.train.domain);

  std::vector<trainer::TrainResult> results(cfg.replicates);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t rep = next.fetch_add(1);
      if (rep >= cfg.replicates) return;
      const std::uint64_t run_seed = mix_seed(cfg.master_seed, StreamTag::kReplicate, rep);
      results[rep] = trainer::run_training(cfg.train, cfg.objective, world.worlds, cfg.attack,
                                           run_seed, &constants);
    }
  };
  const std::size_t nthreads = std::max<std::size_t>(1, std::min(threads, cfg.replicates));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  // merged metrics, ordered by replicate index
  {
    std::ofstream f(cfg.out_dir + "/metrics.csv", std::ios::binary);
    bool first = true;
    for (const trainer::TrainResult& res : results) {
      std::string block = metrics_to_csv(res.metrics);
      if (!first) block.erase(0, block.find('\n') + 1);  // keep one header
      f << block;
      first = false;
    }
  }

  nlohmann::json summary;
  summary["name"] = cfg.name;
  summary["config"] = {
      {"d", cfg.data.d},
      {"workers", cfg.data.workers},
      {"samples_per_worker", cfg.data.samples_per_worker},
      {"noise_std", cfg.data.noise_std},
      {"shift_radius", cfg.data.shift_radius},
      {"objective", cfg.objective.kind == ObjectiveKind::kStronglyConvexQuadratic
                        ? "quadratic"
                        : "nonconvex"},
      {"nonconvex_weight", cfg.objective.nonconvex_weight},
      {"mode", cfg.train.mode == trainer::TrainMode::kSgd ? "sgd"
               : cfg.train.mode == trainer::TrainMode::kFullGd ? "full_gd"
                                                               : "compressed_sgd"},
      {"T", cfg.train.T},
      {"b", cfg.train.b},
      {"k", cfg.train.k},
      {"eps", cfg.train.eps},
      {"eps_prime", cfg.train.eps_prime},
      {"attack_kind", static_cast<int>(cfg.attack.kind)},
      {"attack_scale", cfg.attack.scale},
      {"attack_mobile", cfg.attack.mobile},
      {"attack_eps", cfg.attack.eps},
      {"master_seed", cfg.master_seed},
      {"replicates", cfg.replicates},
  };
  summary["measured"] = {{"L", constants.L},
                         {"mu", constants.mu},
                         {"mu_degenerate", constants.mu_degenerate},
                         {"sigma_hat", constants.sigma_hat},
                         {"kappa_hat", constants.kappa_hat},
                         {"second_moment", constants.second_moment},
                         {"kappa_mean_theoretical",
                          datagen::kappa_mean_theoretical(cfg.data, world.shifts)}};

  bool any_abort = false;
  double mean_final_dist = 0.0, mean_final_grad = 0.0;
  std::size_t finished = 0;
  nlohmann::json per_rep = nlohmann::json::array();
  for (std::size_t rep = 0; rep < cfg.replicates; ++rep) {
    const trainer::TrainResult& res = results[rep];
    nlohmann::json entry;
    entry["replicate"] = rep;
    entry["aborted"] = res.aborted;
    if (res.aborted) {
      entry["abort_reason"] = res.abort_reason;
      any_abort = true;
    }
    if (!res.metrics.empty()) {
      entry["final_dist_sq_to_opt"] = res.metrics.back().dist_sq_to_opt;
      entry["final_grad_norm_sq"] = res.final_grad_norm_sq;
    }
    entry["saddle_nonconverged_rounds"] = res.saddle_nonconverged_rounds;
    entry["filter_invariants_ok"] = res.filter_invariants_ok;
    per_rep.push_back(entry);
    if (!res.aborted && !res.metrics.empty()) {
      mean_final_dist += res.metrics.back().dist_sq_to_opt;
      mean_final_grad += res.final_grad_norm_sq;
      ++finished;
    }
  }
  summary["replicate_results"] = per_rep;
  if (finished > 0) {
    summary["seed_averaged"] = {
        {"final_dist_sq_to_opt", mean_final_dist / static_cast<double>(finished)},
        {"final_grad_norm_sq", mean_final_grad / static_cast<double>(finished)}};
  }
  if (!results.empty()) {
    summary["theoretical"] = {{"sigma0_sq", results.front().sigma0_sq},
                              {"gamma", results.front().gamma},
                              {"lr", results.front().lr},
                              {"eps_tilde", results.front().eps_tilde},
                              {"success_prob_lower", results.front().success_prob_lower},
                              {"upsilon_const", cfg.train.upsilon_const >= 0.0
                                                    ? cfg.train.upsilon_const
                                                    : trainer::default_upsilon_const()}};
  }
  summary["wall_clock_sec"] =
      std::chrono::duration<double>(Clock::now() - t0).count();

  std::ofstream sf(cfg.out_dir + "/summary.json", std::ios::binary);
  sf << summary.dump(2) << "\n";
  return any_abort ? 2 : 0;
}

int run_rge_bench(std::uint64_t seed, const std::string& out_dir,
                  std::size_t seeds_per_cell) {
  std::filesystem::create_directories(out_dir);
  const std::size_t total = 50;
  const std::size_t d = 20;
  const double sigma0 = 1.0;
  const double outlier_dist = 50.0;
  const std::vector<double> eps_grid = {0.05, 0.10, 0.15, 0.20, 0.25};

  std::ofstream f(out_dir + "/rge_bench.csv", std::ios::binary);
  f << "eps_tilde,mean_err,median_err,max_err,bound,median_naive_err,mean_filter_rounds\n";
  for (const double eps_tilde : eps_grid) {
    const auto corrupt_count =
        static_cast<std::size_t>(std::floor(eps_tilde * static_cast<double>(total)));
    std::vector<double> errs, naive_errs;
    double rounds_sum = 0.0;
    for (std::size_t s = 0; s < seeds_per_cell; ++s) {
      Rng rng = Rng::stream(seed, StreamTag::kData, s,
                            static_cast<std::uint64_t>(eps_tilde * 1000));
      Vec mu = zeros(d);
      mu[0] = 5.0;
      rge::GradientMatrix g;
      g.dim = d;
      g.cols.resize(total);
      for (std::size_t i = 0; i < total; ++i)
        g.cols[i] = add(mu, scaled(rng.normal_vec(d), sigma0));

      Vec honest_mean = zeros(d);
      for (std::size_t i = corrupt_count; i < total; ++i) axpy(honest_mean, 1.0, g.cols[i]);
      scale_inplace(honest_mean, 1.0 / static_cast<double>(total - corrupt_count));
      Vec dir = scaled(honest_mean, -1.0 / norm(honest_mean));
      const Vec outlier = add(honest_mean, scaled(dir, outlier_dist));
      for (std::size_t i = 0; i < corrupt_count; ++i) g.cols[i] = outlier;

      rge::EstimateReport report;
      const Vec ghat = rge::estimate(g, sigma0 * sigma0, eps_tilde, &report);
      errs.push_back(distance(ghat, honest_mean));
      Vec naive = zeros(d);
      for (const Vec& col : g.cols) axpy(naive, 1.0, col);
      scale_inplace(naive, 1.0 / static_cast<double>(total));
      naive_errs.push_back(distance(naive, honest_mean));
      rounds_sum += static_cast<double>(report.rounds);
    }
    std::sort(errs.begin(), errs.end());
    std::sort(naive_errs.begin(), naive_errs.end());
    const double mean_err =
        std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(errs.size());
    const double bound = 82.0 * std::sqrt(5.0 / 3.0) * sigma0 * std::sqrt(eps_tilde);
    f << fmt_double(eps_tilde) << ',' << fmt_double(mean_err) << ','
      << fmt_double(errs[errs.size() / 2]) << ',' << fmt_double(errs.back()) << ','
      << fmt_double(bound) << ',' << fmt_double(naive_errs[naive_errs.size() / 2]) << ','
      << fmt_double(rounds_sum / static_cast<double>(errs.size())) << "\n";
  }
  std::cout << "rge-bench: wrote " << out_dir << "/rge_bench.csv\n";
  return 0;
}

int run_concentration_check(std::uint64_t seed, const std::string& out_dir,
                            std::size_t num_seeds) {
  std::filesystem::create_directories(out_dir);
  const std::size_t m = 10, d = 2;
  const double eps_prime = 0.2, sigma = 1.0;
  std::ofstream f(out_dir + "/concentration_check.csv", std::ios::binary);
  f << "seed,best_lambda,bound,holds\n";
  std::size_t violations = 0;
  for (std::size_t s = 0; s < num_seeds; ++s) {
    Rng rng = Rng::stream(seed, StreamTag::kData, s);
    std::vector<Vec> means(m), points(m);
    for (std::size_t i = 0; i < m; ++i) {
      means[i] = Vec{2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0};
      points[i] = add(means[i], scaled(rng.normal_vec(d), sigma));
    }
    const SubsetConcentrationResult res =
        brute_force_subset_concentration(points, means, eps_prime, sigma * sigma);
    if (!res.holds) ++violations;
    f << s << ',' << fmt_double(res.best_lambda) << ',' << fmt_double(res.bound) << ','
      << (res.holds ? "true" : "false") << "\n";
  }
  std::cout << "concentration-check: " << (num_seeds - violations) << "/" << num_seeds
            << " seeds satisfy the enumerated bound\n";
  return 0;
}

int run_compress_check(std::uint64_t seed, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const ObjectiveSpec spec;

  // Exhaustive part: d=3, k=1, n=3, b=1; averaging over all (K, H) pairs must
  // reproduce the local gradient exactly.
  {
    Rng rng = Rng::stream(seed, StreamTag::kData, 1);
    LocalDataset ds;
    for (int i = 0; i < 3; ++i) {
      ds.features.push_back(rng.normal_vec(3));
      ds.responses.push_back(rng.normal());
    }
    const Vec x = rng.normal_vec(3);
    const Vec truth = local_full_gradient(spec, ds, x);
    Vec mean = zeros(3);
    for (std::size_t ki = 0; ki < 3; ++ki) {
      compression::CoordinateSet cs;
      cs.indices = {ki};
      for (std::size_t h = 0; h < 3; ++h) {
        const Vec gi = per_sample_gradient(spec, ds, h, x);
        axpy(mean, 1.0 / 9.0, compression::select_scale(gi, cs, 3, 1));
      }
    }
    std::cout << "compress-check (exhaustive d=3,k=1,n=3,b=1): max abs deviation = "
              << fmt_double([&] {
                   double worst = 0.0;
                   for (std::size_t j = 0; j < 3; ++j)
                     worst = std::max(worst, std::abs(mean[j] - truth[j]));
                   return worst;
                 }())
              << "\n";
  }

  // Monte-Carlo part: d=100, k=10.
  {
    const std::size_t d = 100, k = 10, n = 50, b = 5, draws = 100000;
    Rng data_rng = Rng::stream(seed, StreamTag::kData, 2);
    LocalDataset ds;
    for (std::size_t i = 0; i < n; ++i) {
      ds.features.push_back(data_rng.normal_vec(d));
      ds.responses.push_back(data_rng.normal());
    }
    const Vec x = data_rng.normal_vec(d);
    const Vec truth = local_full_gradient(spec, ds, x);
    double g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      g2 += sq_norm(per_sample_gradient(spec, ds, i, x)) / static_cast<double>(n);

    Vec mean = zeros(d), m2 = zeros(d);
    double var_acc = 0.0;
    Rng mc = Rng::stream(seed, StreamTag::kData, 3);
    Rng master = Rng::stream(seed, StreamTag::kMaster, 0);
    for (std::size_t t = 0; t < draws; ++t) {
      const compression::CoordinateSet cs = compression::draw_coords(master, d, k);
      const Vec g = compression::compressed_minibatch_gradient(mc, spec, ds, b, x, cs);
      for (std::size_t j = 0; j < d; ++j) {
        mean[j] += g[j];
        m2[j] += g[j] * g[j];
      }
      var_acc += sq_norm(sub(g, truth));
    }
    const double inv = 1.0 / static_cast<double>(draws);
    double worst_z = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      mean[j] *= inv;
      const double var_j = std::max(m2[j] * inv - mean[j] * mean[j], 1e-30);
      const double se = std::sqrt(var_j * inv);
      worst_z = std::max(worst_z, std::abs(mean[j] - truth[j]) / se);
    }
    const double emp_var = var_acc * inv;
    const double var_bound =
        static_cast<double>(d) / static_cast<double>(k) * g2 / static_cast<double>(b);
    std::cout << "compress-check (MC d=100,k=10," << draws
              << " draws): worst coordinate |z| = " << fmt_double(worst_z)
              << " (pass < 4), E||ghat - grad||^2 = " << fmt_double(emp_var)
              << " vs bound (d/k) G^2/b = " << fmt_double(var_bound)
              << (emp_var <= var_bound ? " (within bound)" : " (BOUND VIOLATED)") << "\n";
    std::ofstream f(out_dir + "/compress_check.csv", std::ios::binary);
    f << "worst_z,empirical_variance,variance_bound\n"
      << fmt_double(worst_z) << ',' << fmt_double(emp_var) << ',' << fmt_double(var_bound)
      << "\n";
    if (worst_z >= 4.0 || emp_var > var_bound) return 2;
  }
  return 0;
}

KappaScanResult kappa_scan(std::uint64_t seed, std::size_t d, std::size_t workers,
                           std::size_t n_min, std::size_t n_max, std::size_t num_seeds) {
  KappaScanResult out;
  const ObjectiveSpec spec;
  datagen::HeteroModelSpec base;
  base.d = d;
  base.workers = workers;
  base.noise_std = 1.0;
  base.shift_radius = 1.0;
  base.base_param = Vec(d, 1.0);

  const Vec probe = zeros(d);
  for (std::size_t n = n_min; n <= n_max; n *= 2) {
    base.samples_per_worker = n;
    double acc = 0.0;
    double kappa_mean = 0.0;
    for (std::size_t s = 0; s < num_seeds; ++s) {
      Rng rng = Rng::stream(seed, StreamTag::kData, s, n);
      const datagen::GeneratedWorld world = datagen::generate(rng, base);
      kappa_mean = datagen::kappa_mean_theoretical(base, world.shifts);
      const double kappa_hat = measure_kappa(spec, world.worlds, {probe});
      acc += kappa_hat - kappa_mean;
    }
    out.n_values.push_back(n);
    out.excess.push_back(std::max(acc / static_cast<double>(num_seeds), 1e-12));
  }

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < out.n_values.size(); ++i) {
    lx.push_back(std::log(static_cast<double>(out.n_values[i])));
    ly.push_back(std::log(out.excess[i]));
  }
  out.slope = fitted_slope(lx, ly);
  return out;
}

int run_kappa_scan(std::uint64_t seed, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const KappaScanResult res = kappa_scan(seed, 10, 10, 32, 4096, 8);
  std::ofstream f(out_dir + "/kappa_scan.csv", std::ios::binary);
  f << "n,excess_over_kappa_mean\n";
  for (std::size_t i = 0; i < res.n_values.size(); ++i)
    f << res.n_values[i] << ',' << fmt_double(res.excess[i]) << "\n";
  std::cout << "kappa-scan: fitted log-log slope of (kappa_hat - kappa_mean) vs n = "
            << fmt_double(res.slope) << "\n";
  return 0;
}

}  // namespace byzsgd::harness
