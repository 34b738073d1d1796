#include "byzsgd/compression.hpp"

#include <algorithm>
#include <stdexcept>

namespace byzsgd::compression {

CoordinateSet draw_coords(Rng& rng_master, std::size_t d, std::size_t k) {
  if (k < 1 || k > d) throw std::invalid_argument("draw_coords: k out of range");
  CoordinateSet cs;
  cs.indices = rng_master.sample_without_replacement(d, k);
  std::sort(cs.indices.begin(), cs.indices.end());
  return cs;
}

Vec select_scale(const Vec& v, const CoordinateSet& coords, std::size_t d, std::size_t k) {
  if (v.size() != d) throw std::invalid_argument("select_scale: vector length mismatch");
  Vec out(d, 0.0);
  const double f = static_cast<double>(d) / static_cast<double>(k);
  for (const std::size_t j : coords.indices) out[j] = f * v[j];
  return out;
}

Vec compressed_minibatch_gradient(Rng& rng, const ObjectiveSpec& spec,
                                  const LocalDataset& ds, std::size_t b, const Vec& x,
                                  const CoordinateSet& coords) {
  const Vec g = minibatch_gradient(rng, spec, ds, b, x);
  return select_scale(g, coords, x.size(), coords.k());
}

Vec restrict_to(const Vec& v, const CoordinateSet& coords) {
  Vec out(coords.k());
  for (std::size_t i = 0; i < coords.k(); ++i) out[i] = v[coords.indices[i]];
  return out;
}

Vec embed_from(const Vec& vk, const CoordinateSet& coords, std::size_t d) {
  if (vk.size() != coords.k()) throw std::invalid_argument("embed_from: length mismatch");
  Vec out(d, 0.0);
  for (std::size_t i = 0; i < coords.k(); ++i) out[coords.indices[i]] = vk[i];
  return out;
}

}  // namespace byzsgd::compression
