#include "byzsgd/compression.hpp"

#include <cmath>

#include "byzsgd/rge.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace byzsgd;
using namespace byzsgd::compression;

namespace {

LocalDataset random_dataset(Rng& rng, std::size_t n, std::size_t d) {
  LocalDataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    ds.features.push_back(rng.normal_vec(d));
    ds.responses.push_back(rng.normal());
  }
  return ds;
}

const ObjectiveSpec kQuad{};

}  // namespace

TEST_CASE("coordinate draws: full set, determinism, uniform frequency") {
  Rng full(1);
  const CoordinateSet all = draw_coords(full, 5, 5);
  CHECK(all.indices == std::vector<std::size_t>{0, 1, 2, 3, 4});

  Rng a(42), b(42);
  CHECK(draw_coords(a, 10, 3).indices == draw_coords(b, 10, 3).indices);

  // k=1, d=3: each index frequency within 3 standard errors over 30000 draws
  Rng freq(7);
  std::size_t counts[3] = {0, 0, 0};
  const std::size_t draws = 30000;
  for (std::size_t t = 0; t < draws; ++t) ++counts[draw_coords(freq, 3, 1).indices[0]];
  const double expect = draws / 3.0;
  const double se = std::sqrt(draws * (1.0 / 3.0) * (2.0 / 3.0));
  for (const std::size_t c : counts)
    CHECK(std::abs(static_cast<double>(c) - expect) <= 3.0 * se);

  Rng bad(1);
  CHECK_THROWS_AS(draw_coords(bad, 3, 0), std::invalid_argument);
  CHECK_THROWS_AS(draw_coords(bad, 3, 4), std::invalid_argument);
}

TEST_CASE("select_scale: identity at k=d, zero input, exact unbiasedness") {
  const Vec v{3.0, -1.0, 2.0};
  CoordinateSet all;
  all.indices = {0, 1, 2};
  CHECK(select_scale(v, all, 3, 3) == v);

  CoordinateSet one;
  one.indices = {1};
  CHECK(select_scale(zeros(3), one, 3, 1) == zeros(3));

  // averaging (d/k) select_K over the three singleton K recovers v exactly
  Vec mean = zeros(3);
  for (std::size_t j = 0; j < 3; ++j) {
    CoordinateSet cs;
    cs.indices = {j};
    axpy(mean, 1.0 / 3.0, select_scale(Vec{3.0, 0.0, 0.0}, cs, 3, 1));
  }
  CHECK(mean == Vec{3.0, 0.0, 0.0});
}

TEST_CASE("compressed minibatch gradient: trivial full case") {
  Rng rng(11);
  const LocalDataset ds = random_dataset(rng, 4, 3);
  const Vec x = rng.normal_vec(3);
  CoordinateSet all;
  all.indices = {0, 1, 2};
  Rng draw(5);
  const Vec got = compressed_minibatch_gradient(draw, kQuad, ds, 4, x, all);
  const Vec want = local_full_gradient(kQuad, ds, x);
  for (std::size_t j = 0; j < 3; ++j) CHECK(got[j] == doctest::Approx(want[j]).epsilon(1e-12));
}

TEST_CASE("rand-k lemma holds exactly on the enumerable instance") {
  // d=3, k=1, n=3, b=1: enumerate all (K, H) pairs
  Rng rng(12);
  const LocalDataset ds = random_dataset(rng, 3, 3);
  const Vec x = rng.normal_vec(3);
  const Vec truth = local_full_gradient(kQuad, ds, x);

  Vec mean = zeros(3);
  double second_moment = 0.0;
  for (std::size_t kidx = 0; kidx < 3; ++kidx) {
    CoordinateSet cs;
    cs.indices = {kidx};
    for (std::size_t h = 0; h < 3; ++h) {
      const Vec gi = per_sample_gradient(kQuad, ds, h, x);
      const Vec compressed = select_scale(gi, cs, 3, 1);
      axpy(mean, 1.0 / 9.0, compressed);
      second_moment += sq_norm(sub(compressed, truth)) / 9.0;
    }
  }
  for (std::size_t j = 0; j < 3; ++j) CHECK(mean[j] == doctest::Approx(truth[j]).epsilon(1e-12));

  double g2 = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    g2 += sq_norm(per_sample_gradient(kQuad, ds, i, x)) / 3.0;
  CHECK(second_moment <= 3.0 * g2 / 1.0 + 1e-12);  // (d/k) G^2 / b
}

TEST_CASE("decoder behaves identically on restricted and zero-padded columns") {
  Rng rng(13);
  const std::size_t d = 12, k = 5, total = 10;
  Rng master(3);
  const CoordinateSet coords = draw_coords(master, d, k);

  rge::GradientMatrix padded;
  padded.dim = d;
  rge::GradientMatrix restricted;
  restricted.dim = k;
  const Vec base = rng.normal_vec(d);
  for (std::size_t i = 0; i < total; ++i) {
    Vec col = select_scale(add(base, scaled(rng.normal_vec(d), 0.3)), coords, d, k);
    if (i < 2) col[coords.indices[0]] += 40.0;  // two outliers
    padded.cols.push_back(col);
    restricted.cols.push_back(restrict_to(col, coords));
  }

  rge::EstimateReport rep_padded, rep_restricted;
  const Vec ghat_padded = rge::estimate(padded, 4.0, 0.2, &rep_padded);
  const Vec ghat_restricted = rge::estimate(restricted, 4.0, 0.2, &rep_restricted);

  CHECK(rep_padded.final_active == rep_restricted.final_active);
  CHECK(rep_padded.removed == rep_restricted.removed);
  const Vec embedded = embed_from(ghat_restricted, coords, d);
  CHECK(distance(embedded, ghat_padded) < 1e-9);
  // padding coordinates never influence ghat
  for (std::size_t j = 0; j < d; ++j) {
    bool in_k = false;
    for (const std::size_t idx : coords.indices) in_k = in_k || idx == j;
    if (!in_k) CHECK(ghat_padded[j] == 0.0);
  }
}

TEST_CASE("restrict and embed round-trip") {
  CoordinateSet cs;
  cs.indices = {1, 3};
  const Vec v{0.5, 1.5, 2.5, 3.5};
  const Vec r = restrict_to(v, cs);
  CHECK(r == Vec{1.5, 3.5});
  CHECK(embed_from(r, cs, 4) == Vec{0.0, 1.5, 0.0, 3.5});
}
