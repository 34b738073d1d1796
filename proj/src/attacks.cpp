#include "byzsgd/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace byzsgd::attacks {

std::vector<std::size_t> choose_corrupt_set(std::uint64_t adv_seed, std::size_t round,
                                            std::size_t total, const AttackSpec& spec) {
  if (spec.eps < 0.0 || spec.eps >= 0.5)
    throw std::invalid_argument("choose_corrupt_set: eps must lie in [0, 1/2)");
  const std::size_t count =
      static_cast<std::size_t>(std::floor(spec.eps * static_cast<double>(total)));
  if (count == 0) return {};
  const std::size_t draw_round = spec.mobile ? round : 0;
  Rng rng = Rng::stream(adv_seed, StreamTag::kAdversary, draw_round);
  std::vector<std::size_t> set = rng.sample_without_replacement(total, count);
  std::sort(set.begin(), set.end());
  return set;
}

rge::GradientMatrix apply_attack(const AttackSpec& spec, const rge::GradientMatrix& honest,
                                 const std::vector<std::size_t>& corrupt,
                                 const AttackContext& ctx) {
  rge::GradientMatrix out = honest;
  if (spec.kind == AttackKind::kNone || corrupt.empty()) return out;
  const std::size_t d = honest.dim;

  Vec shifted;
  if (spec.kind == AttackKind::kOmniscientShift) {
    // All corrupt columns coincide at distance `scale` from the honest mean,
    // pointing back through the origin to reverse descent.
    Vec dir = scaled(ctx.honest_mean, -1.0);
    const double n = norm(dir);
    if (n > 0.0) {
      scale_inplace(dir, 1.0 / n);
    } else {
      dir = zeros(d);
      dir[0] = 1.0;  // degenerate mean: fixed fallback direction
    }
    shifted = add(ctx.honest_mean, scaled(dir, spec.scale));
  }
  if (spec.kind == AttackKind::kConstant && spec.constant.size() != d)
    throw std::invalid_argument("apply_attack: constant vector length mismatch");

  for (const std::size_t j : corrupt) {
    if (j >= honest.count()) throw std::out_of_range("apply_attack: corrupt index");
    switch (spec.kind) {
      case AttackKind::kGaussianNoise: {
        if (ctx.rng == nullptr)
          throw std::invalid_argument("apply_attack: gaussian kind needs an rng");
        Vec noise = ctx.rng->normal_vec(d);
        out.cols[j] = add(honest.cols[j], scaled(noise, spec.scale));
        break;
      }
      case AttackKind::kSignFlip:
        out.cols[j] = scaled(honest.cols[j], -spec.scale);
        break;
      case AttackKind::kConstant:
        out.cols[j] = spec.constant;
        break;
      case AttackKind::kOmniscientShift:
        out.cols[j] = shifted;
        break;
      case AttackKind::kNone:
        break;
    }
  }
  return out;
}

}  // namespace byzsgd::attacks
