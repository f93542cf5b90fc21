#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "sdcam/core.hpp"
#include "sdcam/schedule.hpp"
#include "sdcam/trace.hpp"

namespace sdcam {

enum class AssertLevel { off, cheap, full };

AssertLevel parse_assert_level(const std::string& name);
std::string to_string(AssertLevel level);

struct SolverConfig {
  double mu_max = 1e7;
  double mu_init = 1.0;  // mu_{-1}
  double rho = 0.5;
  double eta = 2.0;
  ScheduleSpec schedule;
  std::int64_t max_successful_iters = 1000;
  std::int64_t max_total_trials = 1'000'000;
  std::optional<double> stop_residual;  // threshold on scaled_step
  std::optional<double> stop_gap;       // threshold on gap
  AssertLevel assert_level = AssertLevel::cheap;
  /// Condition slack is tol_cond_rel * (1 + |f(x^t) + g(x^t)|).
  double tol_cond_rel = 1e-12;

  void validate() const;
};

/// Solver iterate plus everything that depends only on (x^t, y^t), which is
/// reused across unsuccessful trials.
struct SolverState {
  std::int64_t t = 0;
  Vector x;
  Vector y;
  double mu = 0.0;

  Vector cx;       // c(x^t)
  Vector grad_fx;  // grad f(x^t)
  Vector jtr;      // J_c(x^t)^T (c(x^t) - y^t)
  double fg_x = 0.0;
  double h_y = 0.0;

  std::int64_t trial_count = 0;
  std::int64_t unsuccessful_count = 0;
  std::int64_t unsuccessful_this_iter = 0;
  /// Theta(x^t, beta_{t-1}, y^{t-1}) of the last accepted row (monotonicity check).
  std::optional<double> last_theta;
};

enum class SolveStatus { iteration_budget, trial_budget, converged };
std::string to_string(SolveStatus status);

/// Thrown when an assert_level check fails.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when an oracle returns a non-finite value or a prox leaves its domain.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds the initial state. Throws std::invalid_argument if x0 is outside
/// dom g or y0 outside dom h.
SolverState initial_state(const Problem& p, const SolverConfig& cfg, const Vector& x0,
                          const Vector& y0);

/// Minimizer of <grad f(x^t) + beta_t J^T(c(x^t) - y^t), x> + ||x - x^t||^2 / mu + g(x),
/// i.e. prox_{(mu/2) g}(x^t - (mu/2) v).
Vector trial_step(const Problem& p, const SolverState& st, double beta_t, double mu);

struct ConditionResult {
  bool pass = false;
  double margin_i = 0.0;
  double margin_ii = 0.0;
  std::string diagnostic;
};

/// Both acceptance inequalities for a trial point, as signed margins.
ConditionResult condition_check(const Problem& p, const Vector& x_t, const Vector& x_trial,
                                const Vector& y_t, double beta_t, double mu,
                                double tol_cond_rel = 1e-12);

struct StepResult {
  SolverState state;
  std::optional<TraceRow> row;
};

/// Extra per-row metric (relative feasibility for QCQP), evaluated at x^{t+1}.
using RowMetric = std::function<double(const Vector&)>;

/// One trial. On success advances t, updates y and grows mu; otherwise shrinks mu.
StepResult step(const Problem& p, SolverState st, const SolverConfig& cfg,
                const RowMetric& metric = {});

struct SolveResult {
  SolverState final_state;
  Trace trace;
  SolveStatus status = SolveStatus::iteration_budget;
  // Start-of-run quantities needed by the rate constants.
  double initial_gap = 0.0;  // ||c(x^0) - y^0||
  double h_y0 = 0.0;
  double fg_x0 = 0.0;
};

SolveResult solve(const Problem& p, const SolverConfig& cfg, const Vector& x0, const Vector& y0,
                  const RowMetric& metric = {});

}  // namespace sdcam
