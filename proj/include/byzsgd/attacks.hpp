// Byzantine adversary models: corrupt-set selection (static or mobile) and
// gradient-replacement strategies. These are test instruments spanning the
// usual threat shapes: norm-detectable noise, descent reversal, and a
// norm-camouflaged coordinated shift.
#pragma once

#include <cstdint>
#include <vector>

#include "byzsgd/linalg.hpp"
#include "byzsgd/rge.hpp"
#include "byzsgd/rng.hpp"

namespace byzsgd::attacks {

enum class AttackKind { kNone, kGaussianNoise, kSignFlip, kConstant, kOmniscientShift };

struct AttackSpec {
  AttackKind kind = AttackKind::kNone;
  double scale = 1.0;
  Vec constant;        // used by kConstant
  bool mobile = false;
  double eps = 0.0;    // corrupt fraction in [0, 1/2)
};

// Corrupt set of size floor(eps * R). Static adversaries draw the set once
// (the round-0 stream); mobile adversaries redraw each round, before the
// round's gradients exist. The adversary stream is derived from its own tag,
// independent of worker sampling streams.
std::vector<std::size_t> choose_corrupt_set(std::uint64_t adv_seed, std::size_t round,
                                            std::size_t total, const AttackSpec& spec);

struct AttackContext {
  std::size_t round = 0;
  Vec honest_mean;  // mean of this round's honest columns (omniscient kinds)
  Rng* rng = nullptr;  // attack-noise stream (gaussian kind)
};

// Honest columns pass through untouched; corrupt columns are replaced
// according to the attack kind.
rge::GradientMatrix apply_attack(const AttackSpec& spec, const rge::GradientMatrix& honest,
                                 const std::vector<std::size_t>& corrupt,
                                 const AttackContext& ctx);

}  // namespace byzsgd::attacks
