#include "ale/schedule.hpp"

#include <cmath>

#include "ale/errors.hpp"

namespace ale {
namespace {

NoiseSchedule finish(std::vector<Scalar> levels) {
  NoiseSchedule s;
  s.alpha_bar = std::move(levels);
  s.sqrt_alpha.reserve(s.alpha_bar.size());
  s.sqrt_one_minus.reserve(s.alpha_bar.size());
  for (Scalar a : s.alpha_bar) {
    s.sqrt_alpha.push_back(std::sqrt(a));
    s.sqrt_one_minus.push_back(std::sqrt(Scalar(1) - a));
  }
  return s;
}

}  // namespace

NoiseSchedule NoiseSchedule::pow2(int steps) {
  if (steps < 1) throw ScheduleError("schedule needs at least one step");
  std::vector<Scalar> levels(steps + 1);
  for (int n = 0; n <= steps; ++n)
    levels[n] = std::ldexp(Scalar(1), 2 * (n - steps));
  return finish(std::move(levels));
}

NoiseSchedule NoiseSchedule::from_levels(std::vector<Scalar> levels) {
  if (levels.size() < 2)
    throw ScheduleError("schedule needs at least one step");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > Scalar(0)) || levels[i] > Scalar(1))
      throw ScheduleError("noise levels must lie in (0, 1]");
    if (i && levels[i] < levels[i - 1])
      throw ScheduleError("noise levels must be nondecreasing");
  }
  if (levels.back() != Scalar(1))
    throw ScheduleError("final noise level must be exactly 1");
  return finish(std::move(levels));
}

}  // namespace ale
