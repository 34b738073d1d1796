// Robust gradient estimation: the spectral outlier-filtering decoder. Each
// received gradient is fit as a capped convex combination of the others,
// misfit is measured along the worst (principal) direction, badly-fit columns
// are down-weighted and dropped, and the mean of the surviving active set is
// returned. Also houses the concentration diagnostics built on the same
// spectral machinery.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "byzsgd/linalg.hpp"

namespace byzsgd::rge {

struct GradientMatrix {
  std::size_t dim = 0;
  std::vector<Vec> cols;

  std::size_t count() const { return cols.size(); }
};

// Raised when the active set empties out (sigma0^2 set far too small or the
// data is inconsistent with the concentration premise).
struct FilterCollapsedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when |A| * cap < 1: the capped column-stochastic constraint set is
// empty and the saddle problem has no feasible point.
struct InfeasibleCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// sigma0^2 = 24 sigma^2 / (b eps') * (1 + d / ((1-(eps+eps')) R)) + 16 kappa^2
double default_sigma0_sq(double sigma, double b, double kappa, double eps,
                         double eps_prime, double d, double R);

// Compressed variant: 24 d G^2 / (k b eps') * (1 + k / ((1-(eps+eps')) R)) + 16 kappa^2
double default_sigma0_sq_compressed(double g2, double b, double kappa, double eps,
                                    double eps_prime, double d, double k, double R);

// Weight cap (4 - alpha) / (alpha (2 + alpha) R) with alpha = 1 - eps_tilde.
double weight_cap(double alpha, std::size_t total);
// Structural floor on the active-set size: ceil(1 / cap).
std::size_t min_active_floor(double alpha, std::size_t total);

struct ColumnFit {
  Vec w;          // point in the capped simplex
  double fitted;  // <s, w>
};

// Minimizes (target - <s, w>)^2 over {w : sum w = 1, 0 <= w_j <= cap}.
// The achievable <s, w> is the interval [greedy-min, greedy-max] obtained by
// water-filling cap mass on the smallest/largest entries of s; the fit clamps
// the target into that interval. Construction is deterministic.
ColumnFit column_fit(const Vec& s, double target, double cap);

struct SaddleSolution {
  std::vector<Vec> weights;  // per active column: |A|-dim capped simplex point
  Vec direction;             // unit vector v; Y = v v^T
  Vec tau;                   // per-column squared misfit along v
  double phi = 0.0;          // sum_i c_i tau_i
  bool converged = true;
  std::size_t alternations = 0;
};

// Approximate saddle point of Phi(W, Y) = sum_i c_i (g_i - G w_i)^T Y
// (g_i - G w_i) over capped column-stochastic W and PSD trace<=1 Y, by
// alternating best responses: the Y-step takes v as the principal left
// singular direction of the sqrt(c)-weighted residual matrix, the W-step
// solves each column in closed form via column_fit. Stops when Phi changes by
// < 1e-8 relative or after 100 alternations (non-convergence is flagged and
// the best iterate returned, not an error).
SaddleSolution solve_saddle(const GradientMatrix& g_active, const Vec& c, double cap,
                            const Vec* warm_direction = nullptr);

struct FilterState {
  Vec c;                           // per-column weights in [0,1], length m
  std::vector<std::size_t> active;  // ordered active index set A
  double alpha = 1.0;              // 1 - eps_tilde
  double sigma0_sq = 0.0;
  std::size_t rounds = 0;
};

FilterState make_filter_state(std::size_t m, double eps_tilde, double sigma0_sq);

struct FilterRoundResult {
  bool terminated = false;
  std::vector<std::size_t> removed;  // indices dropped this round
};

// One round of the filtering loop: terminate when sum_{i in A} c_i tau_i <=
// 4 R sigma0^2 (plus a relative numerical slack tied to the input scale);
// otherwise c_i <- (1 - tau_i / tau_max) c_i and every index with c_i < 1/2
// leaves A. Every argmax of tau is removed. Throws FilterCollapsedError when
// A empties.
FilterRoundResult filter_round(FilterState& state, const SaddleSolution& sol,
                               std::size_t total, double scale_hint = 0.0);

struct EstimateReport {
  std::size_t rounds = 0;
  std::vector<std::size_t> final_active;
  std::vector<std::size_t> removed;
  std::vector<double> phi_trace;
  bool converged = true;            // all saddle solves converged
  double sum_c_tau_final = 0.0;
  // structural invariants observed during the run
  bool weights_monotone = true;
  bool argmax_removed_each_round = true;
  std::size_t min_active_seen = 0;

  std::string to_json() const;
};

// Full decoding loop (at most m rounds of solve_saddle + filter_round);
// returns the mean of the final active set.
Vec estimate(const GradientMatrix& g, double sigma0_sq, double eps_tilde,
             EstimateReport* report = nullptr);

// lambda_max of (1/|S|) sum (p - center)(p - center)^T via power iteration on
// the implicit operator (the d x d matrix is never materialized).
double max_eig_deviation(const std::vector<Vec>& points, const Vec& center);

struct ConcentrationCheck {
  double lambda_max = 0.0;
  bool ok = false;
};

// Theorem-style diagnostic for full-batch gradients: deviation spectrum of the
// honest gradients about their sample mean must stay below 4 kappa^2.
ConcentrationCheck full_batch_concentration_check(const std::vector<Vec>& honest_grads,
                                                  double kappa);

}  // namespace byzsgd::rge
