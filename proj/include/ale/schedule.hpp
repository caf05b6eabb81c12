#pragma once

#include <vector>

#include "ale/types.hpp"

namespace ale {

// Cumulative noise levels for one run. alpha_bar[n] is the level of the
// latent entering step n (step 0 is the noisiest); alpha_bar[steps] must be 1
// so the final latent is clean. The square roots are precomputed once and
// shared by both branches, which keeps their arithmetic identical.
struct NoiseSchedule {
  std::vector<Scalar> alpha_bar;      // steps + 1 entries
  std::vector<Scalar> sqrt_alpha;     // sqrt(alpha_bar[n])
  std::vector<Scalar> sqrt_one_minus; // sqrt(1 - alpha_bar[n])

  int steps() const { return static_cast<int>(alpha_bar.size()) - 1; }

  // Levels alpha_bar[n] = 4^(n - steps). Their square roots are powers of
  // two, so scaling a latent by sqrt_alpha and dividing again is lossless.
  static NoiseSchedule pow2(int steps);

  // Validates and adopts explicit levels (steps + 1 of them, in (0, 1],
  // nondecreasing, final level exactly 1).
  static NoiseSchedule from_levels(std::vector<Scalar> levels);
};

}  // namespace ale
