#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace sdcam {

/// Quantities logged for one accepted iteration t (producing x^{t+1}, y^{t+1}).
struct TraceRow {
  std::int64_t t = 0;
  double mu_t = 0.0;
  double beta_t = 0.0;
  double step_norm = 0.0;    // ||x^{t+1} - x^t||
  double scaled_step = 0.0;  // ||x^{t+1} - x^t|| / mu_t
  double gap = 0.0;          // ||c(x^{t+1}) - y^{t+1}||
  double prev_gap = 0.0;     // ||c(x^{t+1}) - y^t||
  double residual = 0.0;     // stationarity residual at (x^{t+1}, y^t), Jacobian at x^t
  double fg_value = 0.0;     // f(x^{t+1}) + g(x^{t+1})
  double h_at_y = 0.0;       // h(y^{t+1})
  double H_value = 0.0;      // H(x^{t+1}, beta_t, y^t)
  std::optional<double> Theta_value;  // Theta(x^{t+1}, beta_t, y^t); needs inf{f+g} bound
  std::int64_t unsuccessful_this_iter = 0;
  std::optional<double> rel_feas;

  // Not part of the CSV.
  double margin_i = 0.0;
  double margin_ii = 0.0;
  double residual_next = 0.0;  // same residual with the Jacobian taken at x^{t+1}
};

using Trace = std::vector<TraceRow>;

}  // namespace sdcam
