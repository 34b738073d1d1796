// End-to-end training loops: Byzantine-resilient mini-batch SGD, its
// full-batch GD specialization, and the rand-k compressed variant, with the
// learning-rate rules, theory-side error bounds, projection, and per-round
// metrics.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "byzsgd/attacks.hpp"
#include "byzsgd/compression.hpp"
#include "byzsgd/linalg.hpp"
#include "byzsgd/model.hpp"
#include "byzsgd/rge.hpp"

namespace byzsgd::trainer {

enum class TrainMode { kSgd, kFullGd, kCompressedSgd };
enum class LrRule { kStronglyConvex, kNonconvex, kManual };

// Explicit constant behind the estimator's O(sigma0 sqrt(eps_tilde)) bound;
// configurable because the theory constants are loose in practice.
double default_upsilon_const();  // 82 * sqrt(5/3)

struct TrainConfig {
  std::size_t T = 100;
  TrainMode mode = TrainMode::kSgd;
  std::size_t b = 1;              // batch size (sgd / compressed_sgd)
  std::size_t k = 0;              // retained coordinates (compressed_sgd)
  double eps = 0.0;               // corrupt fraction assumed by the decoder
  double eps_prime = 0.05;
  LrRule lr_rule = LrRule::kStronglyConvex;
  double manual_lr = 0.0;
  DomainSpec domain;
  std::optional<double> sigma0_override;
  bool per_worker_coords = false;  // comparison flag: independent K per worker
  double upsilon_const = -1.0;     // < 0 means default_upsilon_const()
};

struct MetricsRow {
  std::size_t round = 0;
  double dist_sq_to_opt = 0.0;  // NaN in non-convex mode
  double grad_norm_sq = 0.0;
  double est_error = 0.0;  // || ghat - honest-subset mean ||
  std::size_t active_count = 0;
  std::size_t honest_removed = 0;
  std::size_t filter_rounds = 0;
  double sum_c_tau_final = 0.0;
};

// eta = mu / L^2 (strongly convex), 1 / (4 L) (non-convex), or the manual value.
double learning_rate(LrRule rule, double l_smooth, double mu, double manual = 0.0);

// Gamma = 9 sigma^2 / ((1-(eps+eps')) b R) + 9 kappa^2 + 9 Upsilon^2 with
// Upsilon^2 = upsilon_const^2 * sigma0^2 * (eps + eps').
double gamma_bound(double sigma, double kappa, double b, double R, double d, double eps,
                   double eps_prime, double upsilon_const);
// Compressed variant: sampling term 9 d G^2 / ((1-(eps+eps')) k b R), sigma0^2
// from the compressed formula.
double gamma_bound_compressed(double g2, double kappa, double b, double R, double d,
                              double k, double eps, double eps_prime,
                              double upsilon_const);

// Constants measured once per dataset and reused across replicates.
struct ModelConstants {
  double L = 0.0;
  double mu = 0.0;
  bool mu_degenerate = false;
  double sigma_hat = 0.0;
  double kappa_hat = 0.0;
  double second_moment = 0.0;  // G^2
  Vec x_star;                  // quadratic-part optimum (normal equations)
  Mat hessian;                 // quadratic-part global Hessian
  Vec rhs;                     // quadratic-part normal-equations rhs
};

ModelConstants measure_constants(const ObjectiveSpec& spec,
                                 const std::vector<LocalDataset>& worlds,
                                 const DomainSpec& dom);

struct TrainResult {
  std::vector<Vec> trajectory;  // x^0 .. x^T
  std::vector<MetricsRow> metrics;
  bool aborted = false;
  std::string abort_reason;
  double final_grad_norm_sq = 0.0;  // at x^T

  // run context for summaries / theory checks
  double lr = 0.0;
  double sigma0_sq = 0.0;
  double gamma = 0.0;
  double eps_tilde = 0.0;
  double success_prob_lower = 1.0;  // 1 - T exp(-eps'^2 (1-eps) R / 16), clamped
  ModelConstants constants;

  // structural filter invariants observed across all rounds
  bool filter_invariants_ok = true;
  std::size_t min_active_seen = 0;
  std::size_t saddle_nonconverged_rounds = 0;
};

// One full run of the resilient training loop. x^0 = 0; each round the
// adversary picks its corrupt set before gradients are drawn, honest workers
// produce (compressed) mini-batch or full-batch gradients, corrupt columns
// are replaced, the master decodes with the outlier filter and takes a
// projected step. Fully deterministic given (config, run_seed). Precomputed
// constants may be passed to share measurement across replicates.
TrainResult run_training(const TrainConfig& cfg, const ObjectiveSpec& spec,
                         const std::vector<LocalDataset>& worlds,
                         const attacks::AttackSpec& attack, std::uint64_t run_seed,
                         const ModelConstants* precomputed = nullptr);

}  // namespace byzsgd::trainer
