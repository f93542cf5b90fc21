#include "sdcam/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdcam/diagnostics.hpp"

namespace sdcam {

AssertLevel parse_assert_level(const std::string& name) {
  if (name == "off") return AssertLevel::off;
  if (name == "cheap") return AssertLevel::cheap;
  if (name == "full") return AssertLevel::full;
  throw std::invalid_argument("unknown assert level '" + name + "' (expected off|cheap|full)");
}

std::string to_string(AssertLevel level) {
  switch (level) {
    case AssertLevel::off: return "off";
    case AssertLevel::cheap: return "cheap";
    case AssertLevel::full: return "full";
  }
  return "?";
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::iteration_budget: return "iteration budget";
    case SolveStatus::trial_budget: return "trial budget";
    case SolveStatus::converged: return "converged";
  }
  return "?";
}

void SolverConfig::validate() const {
  if (!(mu_init > 0.0)) throw std::invalid_argument("solver: mu_init must be positive");
  if (!(mu_init < mu_max) || !std::isfinite(mu_max))
    throw std::invalid_argument("solver: mu_init must be smaller than a finite mu_max");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("solver: rho must lie in (0,1)");
  if (!(eta >= 1.0) || !std::isfinite(eta)) throw std::invalid_argument("solver: eta must be >= 1");
  if (max_successful_iters < 1) throw std::invalid_argument("solver: max_successful_iters must be >= 1");
  if (max_total_trials < 1) throw std::invalid_argument("solver: max_total_trials must be >= 1");
  if (stop_residual && !(*stop_residual > 0.0))
    throw std::invalid_argument("solver: stop_residual must be positive");
  if (stop_gap && !(*stop_gap > 0.0)) throw std::invalid_argument("solver: stop_gap must be positive");
  if (!(tol_cond_rel >= 0.0)) throw std::invalid_argument("solver: tol_cond_rel must be nonnegative");
  schedule.validate();
}

namespace {

double finite_or_throw(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalFailure(std::string("non-finite ") + what);
  return v;
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NumericalFailure(std::string("non-finite entries in ") + what);
}

// Everything the solver needs at a point x with auxiliary y.
void refresh_cache(const Problem& p, SolverState& st) {
  st.cx = p.c.eval(st.x);
  require_finite(st.cx, "c(x)");
  st.grad_fx = p.f.grad(st.x);
  require_finite(st.grad_fx, "grad f(x)");
  st.jtr = p.c.vjp(st.x, st.cx - st.y);
  require_finite(st.jtr, "J_c(x)^T (c(x) - y)");
  const ExtendedReal gx = p.g.eval(st.x);
  if (gx.is_infinite()) throw NumericalFailure("iterate left dom g");
  st.fg_x = finite_or_throw(p.f.eval(st.x), "f(x)") + gx.value();
  const ExtendedReal hy = p.h.eval(st.y);
  if (hy.is_infinite()) throw NumericalFailure("auxiliary variable left dom h");
  st.h_y = hy.value();
}

struct TrialEval {
  ConditionResult cond;
  Vector c_trial;
  double fg_trial = 0.0;
  bool in_domain = false;
};

TrialEval evaluate_trial(const Problem& p, const Vector& x_t, const Vector& c_t, double fg_t,
                         const Vector& x_trial, const Vector& y_t, double beta_t, double mu,
                         double tol_cond_rel) {
  TrialEval ev;
  const ExtendedReal g_trial = p.g.eval(x_trial);
  if (g_trial.is_infinite()) {
    ev.cond.pass = false;
    ev.cond.margin_i = -HUGE_VAL;
    ev.cond.margin_ii = -HUGE_VAL;
    ev.cond.diagnostic = "g(trial) = +inf: prox of g returned a point outside its domain";
    return ev;
  }
  ev.in_domain = true;
  ev.c_trial = p.c.eval(x_trial);
  ev.fg_trial = p.f.eval(x_trial) + g_trial.value();

  const double dx = (x_trial - x_t).norm();
  const double dc = (ev.c_trial - c_t).norm();
  ev.cond.margin_i = std::sqrt(1.0 / (mu * beta_t)) * dx - dc;

  const double lhs = fg_t + 0.5 * beta_t * (c_t - y_t).squaredNorm();
  const double rhs = ev.fg_trial + 0.5 * beta_t * (ev.c_trial - y_t).squaredNorm();
  ev.cond.margin_ii = lhs - rhs - dx * dx / (2.0 * mu);

  const double tol = tol_cond_rel * (1.0 + std::abs(fg_t));
  if (!std::isfinite(ev.cond.margin_i) || !std::isfinite(ev.cond.margin_ii)) {
    ev.cond.pass = false;
    ev.cond.diagnostic = "non-finite condition margin";
  } else {
    ev.cond.pass = ev.cond.margin_i >= -tol && ev.cond.margin_ii >= -tol;
  }
  return ev;
}

std::string describe_row(std::int64_t t) {
  std::ostringstream os;
  os << "accepted step t=" << t;
  return os.str();
}

void full_checks(const Problem& p, const SolverConfig& cfg, const SolverState& before,
                 const SolverState& after, const TraceRow& row, double beta_prev) {
  const double beta_t = row.beta_t;
  const double tol_scale = 1e-9;

  // Pseudo-descent of H along the accepted step.
  const double h_new = row.H_value;
  const double h_old = before.fg_x + 0.5 * beta_prev * (before.cx - before.y).squaredNorm() +
                       before.h_y;
  const double step_sq = row.step_norm * row.step_norm;
  const double bound = h_old - step_sq / (2.0 * row.mu_t) +
                       0.5 * (beta_t - beta_prev) * (before.cx - before.y).squaredNorm();
  if (h_new > bound + tol_scale * (1.0 + std::abs(h_old) + std::abs(h_new))) {
    std::ostringstream os;
    os.precision(17);
    os << describe_row(row.t) << ": pseudo-descent violated, H(x^{t+1}) = " << h_new
       << " > bound " << bound;
    throw InvariantViolation(os.str());
  }

  // y^{t+1} minimizes (beta_t/2)||c(x^{t+1}) - u||^2 + h(u); compare with y^t and c(x^{t+1}).
  const double at_new = 0.5 * beta_t * (after.cx - after.y).squaredNorm() + after.h_y;
  auto compare = [&](const Vector& u, const char* label) {
    const ExtendedReal hu = p.h.eval(u);
    if (hu.is_infinite()) return;
    const double at_u = 0.5 * beta_t * (after.cx - u).squaredNorm() + hu.value();
    if (at_new > at_u + tol_scale * (1.0 + std::abs(at_u))) {
      std::ostringstream os;
      os.precision(17);
      os << describe_row(row.t) << ": prox of h not optimal against " << label << " (" << at_new
         << " > " << at_u << ")";
      throw InvariantViolation(os.str());
    }
  };
  compare(before.y, "y^t");
  compare(after.cx, "c(x^{t+1})");

  if (row.Theta_value && before.last_theta &&
      !theta_nonincreasing(*before.last_theta, *row.Theta_value)) {
    std::ostringstream os;
    os.precision(17);
    os << describe_row(row.t) << ": Theta increased from " << *before.last_theta << " to "
       << *row.Theta_value;
    throw InvariantViolation(os.str());
  }
  (void)cfg;
}

}  // namespace

SolverState initial_state(const Problem& p, const SolverConfig& cfg, const Vector& x0,
                          const Vector& y0) {
  p.validate();
  cfg.validate();
  if (x0.size() != p.n) throw std::invalid_argument("x0 has length " + std::to_string(x0.size()) +
                                                    ", expected " + std::to_string(p.n));
  if (y0.size() != p.m) throw std::invalid_argument("y0 has length " + std::to_string(y0.size()) +
                                                    ", expected " + std::to_string(p.m));
  if (p.g.eval(x0).is_infinite()) throw std::invalid_argument("x0 is outside dom g");
  if (p.h.eval(y0).is_infinite()) throw std::invalid_argument("y0 is outside dom h");
  SolverState st;
  st.t = 0;
  st.x = x0;
  st.y = y0;
  st.mu = cfg.mu_init;
  refresh_cache(p, st);
  return st;
}

Vector trial_step(const Problem& p, const SolverState& st, double beta_t, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("trial_step: mu must be positive");
  const Vector v = st.grad_fx + beta_t * st.jtr;
  return p.g.prox(st.x - (0.5 * mu) * v, 0.5 * mu);
}

ConditionResult condition_check(const Problem& p, const Vector& x_t, const Vector& x_trial,
                                const Vector& y_t, double beta_t, double mu,
                                double tol_cond_rel) {
  const ExtendedReal g_t = p.g.eval(x_t);
  if (g_t.is_infinite()) throw std::invalid_argument("condition_check: x^t outside dom g");
  const double fg_t = p.f.eval(x_t) + g_t.value();
  return evaluate_trial(p, x_t, p.c.eval(x_t), fg_t, x_trial, y_t, beta_t, mu, tol_cond_rel).cond;
}

StepResult step(const Problem& p, SolverState st, const SolverConfig& cfg,
                const RowMetric& metric) {
  const double beta_t = beta_at(cfg.schedule, st.t);
  const double beta_prev = st.t > 0 ? beta_at(cfg.schedule, st.t - 1) : beta_t;
  const double mu = st.mu;
  ++st.trial_count;

  const Vector x_trial = trial_step(p, st, beta_t, mu);
  require_finite(x_trial, "trial point");
  TrialEval ev =
      evaluate_trial(p, st.x, st.cx, st.fg_x, x_trial, st.y, beta_t, mu, cfg.tol_cond_rel);
  if (!ev.in_domain) throw NumericalFailure(ev.cond.diagnostic);

  if (!ev.cond.pass) {
    ++st.unsuccessful_count;
    ++st.unsuccessful_this_iter;
    st.mu = cfg.rho * mu;
    return {std::move(st), std::nullopt};
  }

  const SolverState before = st;
  const Vector delta = x_trial - st.x;

  // Witnesses and residual at (x^{t+1}, y^t) with the Jacobian anchored at x^t.
  const Vector psi = -st.grad_fx - beta_t * st.jtr - (2.0 / mu) * delta;
  const Vector xi = beta_prev * (st.cx - st.y);
  const Vector grad_next = p.f.grad(x_trial);
  require_finite(grad_next, "grad f(x^{t+1})");

  TraceRow row;
  row.t = st.t;
  row.mu_t = mu;
  row.beta_t = beta_t;
  row.step_norm = delta.norm();
  row.scaled_step = row.step_norm / mu;
  row.prev_gap = (ev.c_trial - st.y).norm();
  row.residual = stationarity_norm(grad_next, psi, p.c.vjp(st.x, xi));
  row.residual_next = stationarity_norm(grad_next, psi, p.c.vjp(x_trial, xi));
  row.fg_value = finite_or_throw(ev.fg_trial, "f(x^{t+1}) + g(x^{t+1})");
  row.H_value = row.fg_value + 0.5 * beta_t * (ev.c_trial - st.y).squaredNorm() + st.h_y;
  if (p.inf_fg_lower_bound) {
    row.Theta_value = (row.fg_value - *p.inf_fg_lower_bound) / beta_t +
                      0.5 * (ev.c_trial - st.y).squaredNorm() + st.h_y / beta_t;
  }
  row.unsuccessful_this_iter = st.unsuccessful_this_iter;
  row.margin_i = ev.cond.margin_i;
  row.margin_ii = ev.cond.margin_ii;

  st.x = x_trial;
  st.y = p.h.prox(ev.c_trial, 1.0 / beta_t);
  require_finite(st.y, "y^{t+1}");
  st.t += 1;
  st.mu = std::min(cfg.mu_max, cfg.eta * mu);
  st.unsuccessful_this_iter = 0;
  refresh_cache(p, st);

  row.gap = (st.cx - st.y).norm();
  row.h_at_y = st.h_y;
  if (metric) row.rel_feas = metric(st.x);

  if (cfg.assert_level != AssertLevel::off) {
    const double tol = cfg.tol_cond_rel * (1.0 + std::abs(before.fg_x));
    if (row.margin_i < -tol || row.margin_ii < -tol) {
      std::ostringstream os;
      os.precision(17);
      os << describe_row(row.t) << ": acceptance margins " << row.margin_i << ", "
         << row.margin_ii << " below " << -tol;
      throw InvariantViolation(os.str());
    }
  }
  if (cfg.assert_level == AssertLevel::full) full_checks(p, cfg, before, st, row, beta_prev);
  if (row.Theta_value) st.last_theta = row.Theta_value;

  return {std::move(st), std::move(row)};
}

SolveResult solve(const Problem& p, const SolverConfig& cfg, const Vector& x0, const Vector& y0,
                  const RowMetric& metric) {
  SolveResult result;
  SolverState st = initial_state(p, cfg, x0, y0);
  result.initial_gap = (st.cx - st.y).norm();
  result.h_y0 = st.h_y;
  result.fg_x0 = st.fg_x;
  result.trace.reserve(static_cast<std::size_t>(std::min<std::int64_t>(cfg.max_successful_iters, 1 << 20)));

  result.status = SolveStatus::iteration_budget;
  while (st.t < cfg.max_successful_iters) {
    if (st.trial_count >= cfg.max_total_trials) {
      result.status = SolveStatus::trial_budget;
      break;
    }
    StepResult sr = step(p, std::move(st), cfg, metric);
    st = std::move(sr.state);
    if (!sr.row) continue;
    const TraceRow& row = result.trace.emplace_back(std::move(*sr.row));
    const bool want_stop = cfg.stop_residual || cfg.stop_gap;
    if (want_stop && (!cfg.stop_residual || row.scaled_step <= *cfg.stop_residual) &&
        (!cfg.stop_gap || row.gap <= *cfg.stop_gap)) {
      result.status = SolveStatus::converged;
      break;
    }
  }
  result.final_state = std::move(st);
  return result;
}

}  // namespace sdcam
