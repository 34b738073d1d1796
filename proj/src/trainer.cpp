#include "byzsgd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace byzsgd::trainer {

double default_upsilon_const() { return 82.0 * std::sqrt(5.0 / 3.0); }

double learning_rate(LrRule rule, double l_smooth, double mu, double manual) {
  switch (rule) {
    case LrRule::kStronglyConvex:
      if (l_smooth <= 0.0) throw std::invalid_argument("learning_rate: L must be positive");
      if (mu <= 0.0)
        throw std::invalid_argument("learning_rate: strongly-convex rule needs mu > 0");
      return mu / (l_smooth * l_smooth);
    case LrRule::kNonconvex:
      if (l_smooth <= 0.0) throw std::invalid_argument("learning_rate: L must be positive");
      return 1.0 / (4.0 * l_smooth);
    case LrRule::kManual:
      return manual;
  }
  throw std::logic_error("learning_rate: unknown rule");
}

double gamma_bound(double sigma, double kappa, double b, double R, double d, double eps,
                   double eps_prime, double upsilon_const) {
  const double sigma0_sq = rge::default_sigma0_sq(sigma, b, kappa, eps, eps_prime, d, R);
  const double upsilon_sq = upsilon_const * upsilon_const * sigma0_sq * (eps + eps_prime);
  return 9.0 * sigma * sigma / ((1.0 - (eps + eps_prime)) * b * R) + 9.0 * kappa * kappa +
         9.0 * upsilon_sq;
}

double gamma_bound_compressed(double g2, double kappa, double b, double R, double d,
                              double k, double eps, double eps_prime,
                              double upsilon_const) {
  const double sigma0_sq =
      rge::default_sigma0_sq_compressed(g2, b, kappa, eps, eps_prime, d, k, R);
  const double upsilon_sq = upsilon_const * upsilon_const * sigma0_sq * (eps + eps_prime);
  return 9.0 * d * g2 / ((1.0 - (eps + eps_prime)) * k * b * R) + 9.0 * kappa * kappa +
         9.0 * upsilon_sq;
}

ModelConstants measure_constants(const ObjectiveSpec& spec,
                                 const std::vector<LocalDataset>& worlds,
                                 const DomainSpec& dom) {
  ModelConstants mc;
  const CurvatureResult curv = curvature_constants(spec, worlds);
  mc.L = curv.L;
  mc.mu = curv.mu;
  mc.mu_degenerate = curv.mu_degenerate;
  mc.hessian = quadratic_hessian(worlds);
  mc.rhs = quadratic_rhs(worlds);
  try {
    mc.x_star = solve_linear(mc.hessian, mc.rhs);
  } catch (const std::runtime_error&) {
    mc.x_star = zeros(worlds.front().dim());
  }
  const std::vector<Vec> probes = default_probes(worlds, dom);
  mc.sigma_hat = measure_sigma(spec, worlds, probes);
  mc.kappa_hat = measure_kappa(spec, worlds, probes);
  if (spec.kind == ObjectiveKind::kStronglyConvexQuadratic) {
    // Exact ball bound dominates the probe estimate on a bounded domain.
    const auto ball = kappa_ball_bound_quadratic(worlds, dom);
    if (ball.has_value()) mc.kappa_hat = std::max(mc.kappa_hat, *ball);
  }
  mc.second_moment = measure_second_moment(spec, worlds, probes);
  return mc;
}

namespace {

// Quadratic-part gradient from the precomputed normal-equations pieces, plus
// the regularizer term for the non-convex objective. Equals
// global_gradient(spec, worlds, x) without touching the raw samples.
Vec fast_global_gradient(const ObjectiveSpec& spec, const ModelConstants& mc, const Vec& x) {
  Vec g = sub(matvec(mc.hessian, x), mc.rhs);
  if (spec.kind == ObjectiveKind::kSmoothNonconvex) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double denom = 1.0 + x[j] * x[j];
      g[j] += spec.nonconvex_weight * 2.0 * x[j] / (denom * denom);
    }
  }
  return g;
}

}  // namespace

TrainResult run_training(const TrainConfig& cfg, const ObjectiveSpec& spec,
                         const std::vector<LocalDataset>& worlds,
                         const attacks::AttackSpec& attack, std::uint64_t run_seed,
                         const ModelConstants* precomputed) {
  const std::size_t total = worlds.size();
  const std::size_t d = worlds.front().dim();
  if (cfg.T < 1) throw std::invalid_argument("run_training: T must be >= 1");
  std::size_t min_n = std::numeric_limits<std::size_t>::max();
  for (const LocalDataset& ds : worlds) min_n = std::min(min_n, ds.size());
  if (cfg.mode != TrainMode::kFullGd && (cfg.b < 1 || cfg.b > min_n))
    throw std::invalid_argument("run_training: batch size inconsistent with datasets");
  if (cfg.mode == TrainMode::kCompressedSgd && (cfg.k < 1 || cfg.k > d))
    throw std::invalid_argument("run_training: k out of range");

  TrainResult res;
  res.constants = precomputed != nullptr ? *precomputed
                                         : measure_constants(spec, worlds, cfg.domain);
  const ModelConstants& mc = res.constants;

  // eps <= 1/4 - eps' is the theory premise; out-of-range configs are allowed
  // for breakdown experiments with the decoder's tolerance clamped.
  double eps_tilde =
      cfg.mode == TrainMode::kFullGd ? cfg.eps : cfg.eps + cfg.eps_prime;
  if (eps_tilde > 0.25) {
    std::cerr << "warning: eps" << (cfg.mode == TrainMode::kFullGd ? "" : " + eps_prime")
              << " exceeds 1/4; decoder tolerance clamped to 1/4\n";
    eps_tilde = 0.25;
  }
  res.eps_tilde = eps_tilde;

  const double upsilon =
      cfg.upsilon_const >= 0.0 ? cfg.upsilon_const : default_upsilon_const();
  const double batch = static_cast<double>(std::max<std::size_t>(cfg.b, 1));
  const double dd = static_cast<double>(d);
  const double rr = static_cast<double>(total);
  switch (cfg.mode) {
    case TrainMode::kFullGd: {
      // Full-batch decoding premise: the honest set itself concentrates with
      // lambda_max <= 4 kappa^2, no sampling term. Gamma_GD = 6 kappa^2 +
      // 6 Upsilon_GD^2 with Upsilon_GD^2 = upsilon^2 * (4 kappa^2) * eps.
      const double kap_sq = mc.kappa_hat * mc.kappa_hat;
      res.sigma0_sq = 4.0 * kap_sq;
      res.gamma = 6.0 * kap_sq + 6.0 * upsilon * upsilon * 4.0 * kap_sq * cfg.eps;
      break;
    }
    case TrainMode::kSgd:
      res.sigma0_sq = rge::default_sigma0_sq(mc.sigma_hat, batch, mc.kappa_hat, cfg.eps,
                                             cfg.eps_prime, dd, rr);
      res.gamma = gamma_bound(mc.sigma_hat, mc.kappa_hat, batch, rr, dd, cfg.eps,
                              cfg.eps_prime, upsilon);
      break;
    case TrainMode::kCompressedSgd:
      res.sigma0_sq = rge::default_sigma0_sq_compressed(
          mc.second_moment, batch, mc.kappa_hat, cfg.eps, cfg.eps_prime, dd,
          static_cast<double>(cfg.k), rr);
      res.gamma =
          gamma_bound_compressed(mc.second_moment, mc.kappa_hat, batch, rr, dd,
                                 static_cast<double>(cfg.k), cfg.eps, cfg.eps_prime, upsilon);
      break;
  }
  if (cfg.sigma0_override.has_value()) res.sigma0_sq = *cfg.sigma0_override;

  res.lr = learning_rate(cfg.lr_rule, mc.L, mc.mu, cfg.manual_lr);
  res.success_prob_lower = std::max(
      0.0, 1.0 - static_cast<double>(cfg.T) *
                     std::exp(-cfg.eps_prime * cfg.eps_prime * (1.0 - cfg.eps) * rr / 16.0));

  const bool quadratic = spec.kind == ObjectiveKind::kStronglyConvexQuadratic;
  const std::size_t floor_active = rge::min_active_floor(1.0 - eps_tilde, total);

  Vec x = zeros(d);
  res.trajectory.push_back(x);
  res.metrics.reserve(cfg.T);
  res.min_active_seen = total;

  for (std::size_t t = 0; t < cfg.T; ++t) {
    compression::CoordinateSet coords;
    if (cfg.mode == TrainMode::kCompressedSgd) {
      Rng master = Rng::stream(run_seed, StreamTag::kMaster, t);
      coords = compression::draw_coords(master, d, cfg.k);
    }

    const std::vector<std::size_t> corrupt =
        attacks::choose_corrupt_set(run_seed, t, total, attack);
    std::vector<char> is_corrupt(total, 0);
    for (const std::size_t j : corrupt) is_corrupt[j] = 1;

    rge::GradientMatrix grads;
    grads.dim = d;
    grads.cols.resize(total);
    for (std::size_t r = 0; r < total; ++r) {
      Rng wrk = Rng::stream(run_seed, StreamTag::kWorker, r, t);
      switch (cfg.mode) {
        case TrainMode::kFullGd:
          grads.cols[r] = local_full_gradient(spec, worlds[r], x);
          break;
        case TrainMode::kSgd:
          grads.cols[r] = minibatch_gradient(wrk, spec, worlds[r], cfg.b, x);
          break;
        case TrainMode::kCompressedSgd: {
          compression::CoordinateSet own = coords;
          if (cfg.per_worker_coords) {
            Rng per = Rng::stream(run_seed, StreamTag::kMaster, t, r + 1);
            own = compression::draw_coords(per, d, cfg.k);
          }
          grads.cols[r] =
              compression::compressed_minibatch_gradient(wrk, spec, worlds[r], cfg.b, x, own);
          break;
        }
      }
    }

    Vec honest_mean = zeros(d);
    std::size_t honest_count = 0;
    for (std::size_t r = 0; r < total; ++r) {
      if (is_corrupt[r]) continue;
      axpy(honest_mean, 1.0, grads.cols[r]);
      ++honest_count;
    }
    if (honest_count > 0) scale_inplace(honest_mean, 1.0 / static_cast<double>(honest_count));

    Rng attack_rng = Rng::stream(run_seed, StreamTag::kAttackNoise, t);
    attacks::AttackContext ctx{t, honest_mean, &attack_rng};
    const rge::GradientMatrix attacked = attacks::apply_attack(attack, grads, corrupt, ctx);

    MetricsRow row;
    row.round = t;
    row.dist_sq_to_opt =
        quadratic ? sq_norm(sub(x, mc.x_star)) : std::numeric_limits<double>::quiet_NaN();
    row.grad_norm_sq = sq_norm(fast_global_gradient(spec, mc, x));

    Vec ghat;
    rge::EstimateReport report;
    try {
      if (cfg.mode == TrainMode::kCompressedSgd) {
        // The decoder sees R vectors in R^k; padding coordinates never enter.
        rge::GradientMatrix restricted;
        restricted.dim = cfg.k;
        restricted.cols.resize(total);
        for (std::size_t r = 0; r < total; ++r)
          restricted.cols[r] = compression::restrict_to(attacked.cols[r], coords);
        const Vec ghat_k = rge::estimate(restricted, res.sigma0_sq, eps_tilde, &report);

        Vec honest_mean_k = compression::restrict_to(honest_mean, coords);
        row.est_error = distance(ghat_k, honest_mean_k);
        ghat = compression::embed_from(ghat_k, coords, d);
      } else {
        ghat = rge::estimate(attacked, res.sigma0_sq, eps_tilde, &report);
        row.est_error = distance(ghat, honest_mean);
      }
    } catch (const std::runtime_error& err) {
      // Filter collapse / infeasibility: abort with partial metrics flushed.
      res.aborted = true;
      res.abort_reason = err.what();
      res.final_grad_norm_sq = row.grad_norm_sq;
      return res;
    }

    row.active_count = report.final_active.size();
    row.filter_rounds = report.rounds;
    row.sum_c_tau_final = report.sum_c_tau_final;
    std::size_t honest_removed = 0;
    for (const std::size_t idx : report.removed)
      if (!is_corrupt[idx]) ++honest_removed;
    row.honest_removed = honest_removed;
    res.metrics.push_back(row);

    if (!report.converged) ++res.saddle_nonconverged_rounds;
    res.min_active_seen = std::min(res.min_active_seen, report.min_active_seen);
    if (!report.weights_monotone || !report.argmax_removed_each_round ||
        report.rounds > total || report.final_active.size() < floor_active)
      res.filter_invariants_ok = false;

    Vec x_hat = x;
    axpy(x_hat, -res.lr, ghat);
    x = project(x_hat, cfg.domain);
    res.trajectory.push_back(x);
  }

  res.final_grad_norm_sq = sq_norm(fast_global_gradient(spec, mc, x));
  return res;
}

}  // namespace byzsgd::trainer
