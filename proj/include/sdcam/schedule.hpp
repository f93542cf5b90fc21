#pragma once

#include <cstdint>
#include <string>

namespace sdcam {

enum class ScheduleFamily { power, blocked };

/// Penalty schedule beta_t.
///
///   power:   beta0 (t+1)^delta
///   blocked: beta0 (t+1)^delta when t mod K == 0, otherwise beta0 (nK+1)^delta
///            for the n with nK < t < (n+1)K.
struct ScheduleSpec {
  ScheduleFamily family = ScheduleFamily::power;
  double beta0 = 1.0;
  double delta = 0.5;
  std::int64_t K = 1;

  void validate() const;

  /// Sandwich constants: alpha0 (t+1)^delta <= beta_t <= gamma0 (t+1)^delta.
  [[nodiscard]] double alpha0() const;
  [[nodiscard]] double gamma0() const;
  /// Growth constant: beta_t - beta_{t-1} <= eta0 t^{delta-1}.
  [[nodiscard]] double eta0() const;
};

double beta_at(const ScheduleSpec& s, std::int64_t t);

ScheduleFamily parse_schedule_family(const std::string& name);
std::string to_string(ScheduleFamily family);

}  // namespace sdcam
