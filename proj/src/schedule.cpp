#include "sdcam/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace sdcam {

void ScheduleSpec::validate() const {
  if (!(beta0 > 0.0) || !std::isfinite(beta0))
    throw std::invalid_argument("schedule: beta0 must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("schedule: delta must lie in (0,1)");
  if (K < 1) throw std::invalid_argument("schedule: K must be >= 1");
}

double ScheduleSpec::alpha0() const {
  return family == ScheduleFamily::power ? beta0
                                         : beta0 * std::pow(static_cast<double>(K), -delta);
}

double ScheduleSpec::gamma0() const { return beta0; }

double ScheduleSpec::eta0() const {
  // Power family: concavity of s^delta gives beta0 delta t^{delta-1}.
  if (family == ScheduleFamily::power) return beta0 * delta;
  return beta0 * delta * std::pow(static_cast<double>(K), 2.0 - delta);
}

double beta_at(const ScheduleSpec& s, std::int64_t t) {
  if (t < 0) throw std::invalid_argument("beta_at: t must be nonnegative");
  if (s.family == ScheduleFamily::power || t % s.K == 0) {
    return s.beta0 * std::pow(static_cast<double>(t + 1), s.delta);
  }
  const std::int64_t block_start = (t / s.K) * s.K;
  return s.beta0 * std::pow(static_cast<double>(block_start + 1), s.delta);
}

ScheduleFamily parse_schedule_family(const std::string& name) {
  if (name == "power") return ScheduleFamily::power;
  if (name == "blocked") return ScheduleFamily::blocked;
  throw std::invalid_argument("unknown schedule family '" + name + "' (expected power|blocked)");
}

std::string to_string(ScheduleFamily family) {
  return family == ScheduleFamily::power ? "power" : "blocked";
}

}  // namespace sdcam
