// Objective functions and gradient oracles for the simulated federation:
// per-sample / local / global gradients, mini-batch sampling without
// replacement, Euclidean projection, and empirical measurement of the
// smoothness / convexity / variance / dissimilarity constants.
#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "byzsgd/linalg.hpp"
#include "byzsgd/rng.hpp"

namespace byzsgd {

// Parameter domain C: a Euclidean ball, or all of R^d when radius is infinite.
struct DomainSpec {
  double radius = std::numeric_limits<double>::infinity();
  Vec center;  // empty means the origin

  bool bounded() const { return std::isfinite(radius); }
};

struct LocalDataset {
  std::vector<Vec> features;  // n_r rows, each of length p
  Vec responses;              // length n_r

  std::size_t size() const { return features.size(); }
  std::size_t dim() const { return features.empty() ? 0 : features.front().size(); }
};

enum class ObjectiveKind { kStronglyConvexQuadratic, kSmoothNonconvex };

// Quadratic regression loss f(z,x) = 1/2 (<w,x> - y)^2; the non-convex kind
// adds lambda * sum_j x_j^2 / (1 + x_j^2) (smooth, bounded Hessian) to every
// per-sample loss, hence to the global loss.
struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::kStronglyConvexQuadratic;
  double nonconvex_weight = 0.0;
};

double per_sample_loss(const ObjectiveSpec& spec, const LocalDataset& ds, std::size_t i,
                       const Vec& x);
Vec per_sample_gradient(const ObjectiveSpec& spec, const LocalDataset& ds, std::size_t i,
                        const Vec& x);
Vec local_full_gradient(const ObjectiveSpec& spec, const LocalDataset& ds, const Vec& x);
Vec global_gradient(const ObjectiveSpec& spec, const std::vector<LocalDataset>& worlds,
                    const Vec& x);

// Mean of b per-sample gradients over a uniformly random size-b subset of
// [n_r], drawn without replacement (partial Fisher-Yates on the rng stream).
Vec minibatch_gradient(Rng& rng, const ObjectiveSpec& spec, const LocalDataset& ds,
                       std::size_t b, const Vec& x);

// Euclidean projection onto the ball; identity when inside or unbounded.
Vec project(const Vec& x, const DomainSpec& dom);

struct CurvatureResult {
  double L = 0.0;
  double mu = 0.0;
  bool mu_degenerate = false;  // rank-deficient data: mu reported as 0
};

// L = largest, mu = smallest eigenvalue of the global quadratic Hessian
// (1/R) sum_r (1/n_r) sum_i w_i w_i^T, by power iteration (mu via power
// iteration on L*I - H). Non-convex kind: L gets + 2*lambda (regularizer
// Hessian is bounded by 2*lambda per coordinate) and mu = 0.
CurvatureResult curvature_constants(const ObjectiveSpec& spec,
                                    const std::vector<LocalDataset>& worlds);

// Dense global quadratic Hessian and the normal-equations right-hand side.
Mat quadratic_hessian(const std::vector<LocalDataset>& worlds);
Vec quadratic_rhs(const std::vector<LocalDataset>& worlds);
// Closed-form optimum of the quadratic part (normal equations).
Vec quadratic_optimum(const std::vector<LocalDataset>& worlds);

// max over workers and probe points of ||grad F_r(x) - grad F(x)||: an
// empirical lower estimate of the dissimilarity bound kappa.
double measure_kappa(const ObjectiveSpec& spec, const std::vector<LocalDataset>& worlds,
                     const std::vector<Vec>& probes);

// Exact upper bound on sup_{x in C} ||grad F_r(x) - grad F(x)|| for the
// quadratic objective over a bounded ball: per worker,
// ||(A_r - Abar) x_c - (b_r - bbar)|| + radius * ||A_r - Abar||_2.
// Returns nullopt for an unbounded domain.
std::optional<double> kappa_ball_bound_quadratic(const std::vector<LocalDataset>& worlds,
                                                 const DomainSpec& dom);

// max over workers and probes of sqrt((1/n_r) sum_i ||grad F_{r,i} - grad F_r||^2).
double measure_sigma(const ObjectiveSpec& spec, const std::vector<LocalDataset>& worlds,
                     const std::vector<Vec>& probes);

// max over workers and probes of (1/n_r) sum_i ||grad F_{r,i}(x)||^2 (the
// second-moment bound G^2 used by the compressed estimator).
double measure_second_moment(const ObjectiveSpec& spec,
                             const std::vector<LocalDataset>& worlds,
                             const std::vector<Vec>& probes);

// Probe grid for the sup-over-C constants: the origin, the quadratic optimum,
// and 16 seeded uniform points in C (for unbounded C, a ball of radius
// 2*||x*|| + 1 around the origin).
std::vector<Vec> default_probes(const std::vector<LocalDataset>& worlds,
                                const DomainSpec& dom, std::uint64_t seed = 0);

}  // namespace byzsgd
