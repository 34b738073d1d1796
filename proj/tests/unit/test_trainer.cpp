#include "byzsgd/trainer.hpp"

#include <cmath>

#include "byzsgd/datagen.hpp"
#include "doctest.h"

using namespace byzsgd;
using namespace byzsgd::trainer;

namespace {

std::vector<LocalDataset> hetero_worlds(std::uint64_t seed, std::size_t d, std::size_t workers,
                                        std::size_t n, double shift, double noise) {
  datagen::HeteroModelSpec spec;
  spec.d = d;
  spec.workers = workers;
  spec.samples_per_worker = n;
  spec.shift_radius = shift;
  spec.noise_std = noise;
  spec.base_param = Vec(d, 1.0);
  Rng rng = Rng::stream(seed, StreamTag::kData);
  return datagen::generate(rng, spec).worlds;
}

std::vector<LocalDataset> identical_worlds(std::uint64_t seed, std::size_t d,
                                           std::size_t workers, std::size_t n) {
  const std::vector<LocalDataset> one = hetero_worlds(seed, d, 1, n, 0.0, 0.0);
  return std::vector<LocalDataset>(workers, one.front());
}

const ObjectiveSpec kQuad{};

}  // namespace

TEST_CASE("learning rate rules") {
  CHECK(learning_rate(LrRule::kStronglyConvex, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(learning_rate(LrRule::kNonconvex, 2.0, 0.0) == doctest::Approx(0.125));
  const double L = 3.7;
  CHECK(learning_rate(LrRule::kStronglyConvex, L, L) == doctest::Approx(1.0 / L));
  CHECK(learning_rate(LrRule::kNonconvex, L, L) == doctest::Approx(1.0 / (4.0 * L)));
  CHECK(learning_rate(LrRule::kManual, 1.0, 0.0, 0.05) == doctest::Approx(0.05));
  CHECK_THROWS_AS(learning_rate(LrRule::kStronglyConvex, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("gamma bound: zero case, three-term structure, limit structure") {
  const double ups = default_upsilon_const();
  CHECK(gamma_bound(0.0, 0.0, 4.0, 10.0, 5.0, 0.1, 0.05, ups) == 0.0);

  // independent spreadsheet-style evaluation of the three-term sum
  const double sigma = 1.3, kappa = 0.4, b = 8.0, R = 20.0, d = 12.0, eps = 0.15,
               epsp = 0.05;
  const double s0 = 24.0 * sigma * sigma / (b * epsp) * (1.0 + d / ((1.0 - eps - epsp) * R)) +
                    16.0 * kappa * kappa;
  const double expect = 9.0 * sigma * sigma / ((1.0 - eps - epsp) * b * R) +
                        9.0 * kappa * kappa + 9.0 * ups * ups * s0 * (eps + epsp);
  CHECK(gamma_bound(sigma, kappa, b, R, d, eps, epsp, ups) ==
        doctest::Approx(expect).epsilon(1e-12));

  // with the byzantine constant zeroed and no corruption the sampling term is
  // all that remains
  const double lim = gamma_bound(1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1e-4, 0.0);
  CHECK(lim == doctest::Approx(9.0 / (1.0 - 1e-4)).epsilon(1e-9));

  // compressed variant at k=d with G^2 = sigma^2 matches the plain bound
  CHECK(gamma_bound_compressed(sigma * sigma, kappa, b, R, d, d, eps, epsp, ups) ==
        doctest::Approx(gamma_bound(sigma, kappa, b, R, d, eps, epsp, ups)).epsilon(1e-12));
}

TEST_CASE("vanilla GD on a quadratic contracts monotonically to the optimum") {
  const std::vector<LocalDataset> worlds = hetero_worlds(3, 4, 5, 32, 0.0, 0.0);
  TrainConfig cfg;
  cfg.mode = TrainMode::kFullGd;
  cfg.T = 400;
  cfg.eps = 0.0;
  cfg.lr_rule = LrRule::kStronglyConvex;
  attacks::AttackSpec none;
  const TrainResult res = run_training(cfg, kQuad, worlds, none, 11);
  REQUIRE_FALSE(res.aborted);

  bool below = false;
  for (std::size_t t = 1; t < res.metrics.size(); ++t) {
    if (res.metrics[t - 1].dist_sq_to_opt < 1e-20) {
      below = true;
      break;
    }
    CHECK(res.metrics[t].dist_sq_to_opt < res.metrics[t - 1].dist_sq_to_opt);
  }
  CHECK((below || res.metrics.back().dist_sq_to_opt < 1e-20));
}

TEST_CASE("training is bit-deterministic given config and seed") {
  const std::vector<LocalDataset> worlds = hetero_worlds(5, 3, 6, 16, 0.5, 0.3);
  TrainConfig cfg;
  cfg.mode = TrainMode::kSgd;
  cfg.T = 20;
  cfg.b = 4;
  cfg.eps = 0.2;
  cfg.eps_prime = 0.05;
  cfg.lr_rule = LrRule::kStronglyConvex;
  attacks::AttackSpec atk;
  atk.kind = attacks::AttackKind::kOmniscientShift;
  atk.scale = 10.0;
  atk.eps = 0.2;
  atk.mobile = true;
  const TrainResult a = run_training(cfg, kQuad, worlds, atk, 99);
  const TrainResult b = run_training(cfg, kQuad, worlds, atk, 99);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (std::size_t t = 0; t < a.trajectory.size(); ++t)
    CHECK(a.trajectory[t] == b.trajectory[t]);
}

TEST_CASE("sign-flip attack on identical datasets is fully decoded away") {
  // n = 200 keeps the empirical Hessian well conditioned, so eta = mu/L^2
  // reaches the 1e-8 target well inside T = 200 rounds
  const std::vector<LocalDataset> worlds = identical_worlds(8, 4, 10, 200);
  TrainConfig cfg;
  cfg.mode = TrainMode::kFullGd;
  cfg.T = 200;
  cfg.eps = 0.2;
  cfg.lr_rule = LrRule::kStronglyConvex;
  attacks::AttackSpec atk;
  atk.kind = attacks::AttackKind::kSignFlip;
  atk.scale = 1.0;
  atk.eps = 0.2;
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    const TrainResult res = run_training(cfg, kQuad, worlds, atk, seed);
    REQUIRE_FALSE(res.aborted);
    CHECK(std::sqrt(res.metrics.back().dist_sq_to_opt) < 1e-8);
    CHECK(res.filter_invariants_ok);
  }
}

TEST_CASE("compressed mode at k=d with no attack matches plain sgd bitwise") {
  const std::vector<LocalDataset> worlds = hetero_worlds(9, 4, 6, 16, 0.4, 0.2);
  TrainConfig sgd;
  sgd.mode = TrainMode::kSgd;
  sgd.T = 15;
  sgd.b = 4;
  sgd.eps = 0.0;
  sgd.eps_prime = 0.05;
  sgd.lr_rule = LrRule::kStronglyConvex;
  TrainConfig comp = sgd;
  comp.mode = TrainMode::kCompressedSgd;
  comp.k = 4;
  attacks::AttackSpec none;
  const TrainResult rs = run_training(sgd, kQuad, worlds, none, 17);
  const TrainResult rc = run_training(comp, kQuad, worlds, none, 17);
  REQUIRE_FALSE(rs.aborted);
  REQUIRE_FALSE(rc.aborted);
  for (std::size_t t = 0; t < rs.trajectory.size(); ++t)
    CHECK(rs.trajectory[t] == rc.trajectory[t]);
}

TEST_CASE("nonconvex mode reports NaN distance and finite gradient norms") {
  const std::vector<LocalDataset> worlds = hetero_worlds(10, 3, 5, 16, 0.3, 0.2);
  ObjectiveSpec spec;
  spec.kind = ObjectiveKind::kSmoothNonconvex;
  spec.nonconvex_weight = 0.5;
  TrainConfig cfg;
  cfg.mode = TrainMode::kSgd;
  cfg.T = 10;
  cfg.b = 4;
  cfg.eps = 0.1;
  cfg.eps_prime = 0.05;
  cfg.lr_rule = LrRule::kNonconvex;
  attacks::AttackSpec atk;
  atk.kind = attacks::AttackKind::kSignFlip;
  atk.eps = 0.1;
  const TrainResult res = run_training(cfg, spec, worlds, atk, 5);
  REQUIRE_FALSE(res.aborted);
  for (const MetricsRow& row : res.metrics) {
    CHECK(std::isnan(row.dist_sq_to_opt));
    CHECK(std::isfinite(row.grad_norm_sq));
  }
  CHECK(std::isfinite(res.final_grad_norm_sq));
}

TEST_CASE("run_training validates its configuration") {
  const std::vector<LocalDataset> worlds = hetero_worlds(11, 3, 4, 8, 0.0, 0.1);
  attacks::AttackSpec none;
  TrainConfig bad_b;
  bad_b.mode = TrainMode::kSgd;
  bad_b.b = 9;  // > n_r
  CHECK_THROWS_AS(run_training(bad_b, kQuad, worlds, none, 1), std::invalid_argument);

  TrainConfig bad_k;
  bad_k.mode = TrainMode::kCompressedSgd;
  bad_k.b = 2;
  bad_k.k = 10;  // > d
  CHECK_THROWS_AS(run_training(bad_k, kQuad, worlds, none, 1), std::invalid_argument);

  TrainConfig bad_t;
  bad_t.T = 0;
  CHECK_THROWS_AS(run_training(bad_t, kQuad, worlds, none, 1), std::invalid_argument);
}

TEST_CASE("projection keeps iterates inside a bounded domain") {
  const std::vector<LocalDataset> worlds = hetero_worlds(12, 3, 5, 16, 0.5, 0.3);
  TrainConfig cfg;
  cfg.mode = TrainMode::kSgd;
  cfg.T = 25;
  cfg.b = 4;
  cfg.eps = 0.2;
  cfg.eps_prime = 0.05;
  cfg.lr_rule = LrRule::kManual;
  cfg.manual_lr = 0.8;  // deliberately hot steps
  cfg.domain.radius = 1.5;
  attacks::AttackSpec atk;
  atk.kind = attacks::AttackKind::kOmniscientShift;
  atk.scale = 30.0;
  atk.eps = 0.2;
  const TrainResult res = run_training(cfg, kQuad, worlds, atk, 13);
  REQUIRE_FALSE(res.aborted);
  for (const Vec& x : res.trajectory) CHECK(norm(x) <= cfg.domain.radius + 1e-9);
}
