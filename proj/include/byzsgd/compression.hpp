// rand-k gradient sparsification with master-chosen coordinates: the select
// operator, d/k rescaling for unbiasedness, and the compressed mini-batch
// gradient. Restriction/embedding helpers let the decoder work on R^k.
#pragma once

#include <cstdint>
#include <vector>

#include "byzsgd/linalg.hpp"
#include "byzsgd/model.hpp"
#include "byzsgd/rng.hpp"

namespace byzsgd::compression {

struct CoordinateSet {
  std::vector<std::size_t> indices;  // strictly increasing, size k, values < d

  std::size_t k() const { return indices.size(); }
};

// Uniform size-k subset of [d]; master-side, one draw shared by all workers.
CoordinateSet draw_coords(Rng& rng_master, std::size_t d, std::size_t k);

// (d/k) * select_K(v): zero outside K, scaled by d/k inside.
Vec select_scale(const Vec& v, const CoordinateSet& coords, std::size_t d, std::size_t k);

// select_scale applied to a without-replacement mini-batch gradient.
Vec compressed_minibatch_gradient(Rng& rng, const ObjectiveSpec& spec,
                                  const LocalDataset& ds, std::size_t b, const Vec& x,
                                  const CoordinateSet& coords);

// R^d -> R^k (keep the K entries, in order) and back (zeros elsewhere).
Vec restrict_to(const Vec& v, const CoordinateSet& coords);
Vec embed_from(const Vec& vk, const CoordinateSet& coords, std::size_t d);

}  // namespace byzsgd::compression
