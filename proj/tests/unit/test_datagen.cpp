#include "byzsgd/datagen.hpp"

#include <filesystem>

#include "doctest.h"
#include "oracles.hpp"

using namespace byzsgd;
using datagen::GeneratedWorld;
using datagen::HeteroModelSpec;

namespace {

HeteroModelSpec basic_spec() {
  HeteroModelSpec spec;
  spec.d = 3;
  spec.workers = 4;
  spec.samples_per_worker = 8;
  spec.noise_std = 0.1;
  spec.shift_radius = 0.5;
  spec.base_param = Vec{1.0, -1.0, 0.5};
  return spec;
}

}  // namespace

TEST_CASE("zero shift radius collapses to the homogeneous model") {
  HeteroModelSpec spec = basic_spec();
  spec.shift_radius = 0.0;
  Rng rng(1);
  const GeneratedWorld world = datagen::generate(rng, spec);
  for (const Vec& xs : world.true_params) CHECK(xs == spec.base_param);
  CHECK(datagen::kappa_mean_theoretical(spec, world.shifts) == 0.0);
}

TEST_CASE("generation is bit-identical under the same seed") {
  const HeteroModelSpec spec = basic_spec();
  Rng a(77), b(77);
  const GeneratedWorld wa = datagen::generate(a, spec);
  const GeneratedWorld wb = datagen::generate(b, spec);
  for (std::size_t r = 0; r < spec.workers; ++r) {
    CHECK(wa.worlds[r].responses == wb.worlds[r].responses);
    for (std::size_t i = 0; i < spec.samples_per_worker; ++i)
      CHECK(wa.worlds[r].features[i] == wb.worlds[r].features[i]);
  }
}

TEST_CASE("noiseless regression recovers the per-worker parameters") {
  HeteroModelSpec spec = basic_spec();
  spec.noise_std = 0.0;
  spec.samples_per_worker = 12;
  Rng rng(5);
  const GeneratedWorld world = datagen::generate(rng, spec);
  for (std::size_t r = 0; r < spec.workers; ++r) {
    // least-squares oracle: per-worker normal equations
    const LocalDataset& ds = world.worlds[r];
    Mat a(spec.d, spec.d);
    Vec b = zeros(spec.d);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (std::size_t p = 0; p < spec.d; ++p) {
        for (std::size_t q = 0; q < spec.d; ++q)
          a(p, q) += ds.features[i][p] * ds.features[i][q];
        b[p] += ds.features[i][p] * ds.responses[i];
      }
    }
    const Vec recovered = solve_linear(a, b);
    CHECK(distance(recovered, world.true_params[r]) < 1e-8);
  }
}

TEST_CASE("kappa_mean: hand instance and direct evaluation") {
  HeteroModelSpec spec;
  spec.d = 2;
  spec.workers = 2;
  spec.samples_per_worker = 1;
  spec.shift_radius = 1.0;
  Rng rng(2);
  const GeneratedWorld world = datagen::generate(rng, spec);
  // R=2, identity covariance, delta = +-e1: mean shift is 0, kappa_mean = 1
  CHECK(world.shifts[0] == Vec{1.0, 0.0});
  CHECK(world.shifts[1] == Vec{-1.0, 0.0});
  CHECK(datagen::kappa_mean_theoretical(spec, world.shifts) == doctest::Approx(1.0));

  // random spec with a non-identity covariance: matches direct evaluation
  HeteroModelSpec wide;
  wide.d = 3;
  wide.workers = 5;
  wide.samples_per_worker = 2;
  wide.shift_radius = 0.7;
  wide.feature_cov = Mat::identity(3);
  wide.feature_cov(0, 0) = 2.0;
  wide.feature_cov(1, 2) = 0.3;
  wide.feature_cov(2, 1) = 0.3;
  Rng rng2(3);
  const GeneratedWorld world2 = datagen::generate(rng2, wide);
  Vec mean = zeros(3);
  for (const Vec& delta : world2.shifts) axpy(mean, 1.0 / 5.0, delta);
  double direct = 0.0;
  for (const Vec& delta : world2.shifts)
    direct = std::max(direct, norm(matvec(wide.feature_cov, sub(mean, delta))));
  CHECK(datagen::kappa_mean_theoretical(wide, world2.shifts) ==
        doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("non-PSD covariance is rejected") {
  HeteroModelSpec spec = basic_spec();
  spec.feature_cov = Mat::identity(3);
  spec.feature_cov(1, 1) = -2.0;
  Rng rng(4);
  CHECK_THROWS_AS(datagen::generate(rng, spec), std::invalid_argument);
}

TEST_CASE("csv dump and load round-trips exactly") {
  const HeteroModelSpec spec = basic_spec();
  Rng rng(6);
  const GeneratedWorld world = datagen::generate(rng, spec);
  const std::string dir = "datagen_csv_test_out";
  datagen::dump_csv(dir, world.worlds);
  const std::vector<LocalDataset> loaded = datagen::load_csv(dir, spec.workers);
  REQUIRE(loaded.size() == world.worlds.size());
  for (std::size_t r = 0; r < spec.workers; ++r) {
    CHECK(loaded[r].responses == world.worlds[r].responses);
    for (std::size_t i = 0; i < spec.samples_per_worker; ++i)
      CHECK(loaded[r].features[i] == world.worlds[r].features[i]);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("per-worker variance stays bounded as n grows") {
  HeteroModelSpec spec = basic_spec();
  spec.noise_std = 1.0;
  const ObjectiveSpec quad;
  double prev = 0.0;
  for (const std::size_t n : {32, 64, 128, 256}) {
    spec.samples_per_worker = n;
    Rng rng(8);
    const GeneratedWorld world = datagen::generate(rng, spec);
    const double sigma = measure_sigma(quad, world.worlds, {zeros(spec.d)});
    CHECK(std::isfinite(sigma));
    CHECK(sigma > 0.0);
    // same d: the scale should stay within a small constant band
    if (prev > 0.0) CHECK(sigma < 4.0 * prev);
    prev = sigma;
  }
}
