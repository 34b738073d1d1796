// Statistical heterogeneous data model: per-worker linear-regression datasets
// whose population optima x*_r = base + delta_r differ by deterministic
// shifts on a sphere, giving an exactly controllable population-mean
// heterogeneity kappa_mean.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "byzsgd/linalg.hpp"
#include "byzsgd/model.hpp"
#include "byzsgd/rng.hpp"

namespace byzsgd::datagen {

struct HeteroModelSpec {
  std::size_t d = 1;
  std::size_t workers = 1;
  std::size_t samples_per_worker = 1;
  Mat feature_cov;          // d x d symmetric PSD; empty means identity
  double noise_std = 0.0;
  double shift_radius = 0.0;  // max ||delta_r||
  Vec base_param;             // empty means zeros
};

struct GeneratedWorld {
  std::vector<LocalDataset> worlds;
  std::vector<Vec> true_params;  // x*_r = base + delta_r
  std::vector<Vec> shifts;       // delta_r
};

// Features ~ N(0, feature_cov); y = <w, x*_r> + N(0, noise_std^2).
// Shifts are placed deterministically: worker 2j gets +rho e_{j mod d},
// worker 2j+1 gets -rho e_{j mod d} (equiangular pairs; the first direction
// is fixed for reproducibility). Deterministic per rng stream.
GeneratedWorld generate(Rng& rng, const HeteroModelSpec& spec);

// For the quadratic model grad mu_r(x) - grad mu(x) = feature_cov (deltabar -
// delta_r), independent of x; returns max_r ||feature_cov (deltabar - delta_r)||.
double kappa_mean_theoretical(const HeteroModelSpec& spec, const std::vector<Vec>& shifts);

// CSV round trip: one file per worker under dir ("worker_<r>.csv"), feature
// columns w0..w{p-1} plus a response column, header row, LF endings.
void dump_csv(const std::string& dir, const std::vector<LocalDataset>& worlds);
std::vector<LocalDataset> load_csv(const std::string& dir, std::size_t workers);

}  // namespace byzsgd::datagen
