#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdcam/core.hpp"
#include "sdcam/schedule.hpp"
#include "sdcam/trace.hpp"

namespace sdcam {

struct SolverConfig;
struct SolveResult;

// ---------------------------------------------------------------------------
// Stationarity

/// Subgradient witnesses read off the subproblem optimality conditions of one
/// accepted step t:
///   psi = -grad f(x^t) - beta_t J_c(x^t)^T (c(x^t) - y^t) - (2/mu_t)(x^{t+1} - x^t)
///         lies in the subdifferential of g at x^{t+1},
///   xi  = beta_prev (c(x^t) - y^t) lies in the subdifferential of h at y^t.
struct StationarityWitness {
  Vector psi;
  Vector xi;
};

StationarityWitness subproblem_witnesses(const Problem& p, const Vector& x_t,
                                         const Vector& x_next, const Vector& y_t, double mu_t,
                                         double beta_t, double beta_prev);

/// ||grad f(x^{t+1}) + psi + J_c(x^t)^T xi|| with the witnesses above.
double stationarity_residual(const Problem& p, const Vector& x_t, const Vector& x_next,
                             const Vector& y_t, double mu_t, double beta_t, double beta_prev);

/// Norm used by both the residual and the certificate; shared so they agree bitwise.
double stationarity_norm(const Vector& grad_f_x, const Vector& psi, const Vector& jt_xi);

struct Certificate {
  bool pass = false;
  double d1 = 0.0;  // ||grad f(x) + psi + J_c(z)^T xi||
  double d2 = 0.0;  // ||c(x) - y||
  double d3 = 0.0;  // ||x - z||
};

/// Relaxed stationarity test with caller-provided witnesses psi (for g at x)
/// and xi (for h at y).
Certificate certificate(const Problem& p, const Vector& x, const Vector& y, const Vector& z,
                        const Vector& psi, const Vector& xi, double eps1, double eps2,
                        double eps3);

// ---------------------------------------------------------------------------
// Merit functions

/// f(x) + g(x) + (beta/2)||c(x) - y||^2 + h(y). Throws if x or y is infeasible.
double H_value(const Problem& p, const Vector& x, double beta, const Vector& y);

/// (f(x) + g(x) - inf_fg)/beta + ||c(x) - y||^2 / 2 + h(y)/beta.
double theta_value(const Problem& p, const Vector& x, double beta, const Vector& y,
                   double inf_fg);

/// Slack used for the nonincreasing check on Theta: 1e-7 relative.
bool theta_nonincreasing(double previous, double current);

// ---------------------------------------------------------------------------
// Subsequence selection

/// Running averages b_T = (1/T) sum_{k<=T} a_k (1-based T). Returns every T > 1
/// with b_T <= b_{T-1}, i.e. a_T <= b_{T-1}. Indices are 1-based.
std::vector<std::int64_t> select_subsequence(std::span<const double> a);

/// b_1..b_N (element k-1 holds b_k).
std::vector<double> running_averages(std::span<const double> a);

// ---------------------------------------------------------------------------
// Delta selection

/// ln(1/eps2) / (2 ln(1/eps1) + ln(1/eps2)). Throws unless eps1, eps2 in (0,1).
double suggest_delta(double eps1, double eps2);

// ---------------------------------------------------------------------------
// Rate constants

enum class Provenance { user_supplied, computed, unavailable };
std::string to_string(Provenance p);

struct Constant {
  std::optional<double> value;
  Provenance provenance = Provenance::unavailable;
  std::vector<std::string> missing;  // inputs absent when unavailable

  [[nodiscard]] bool available() const { return value.has_value(); }
  [[nodiscard]] double operator*() const { return *value; }
};

struct RateConstants {
  Constant L, L_c, M_c, M_h;
  Constant alpha0, gamma0, eta0, delta;
  Constant M0, K0, M1, M2, M3;
  Constant lambda1, lambda2, lambda3, lambda4, lambda5, lambda6, lambda7, lambda8;
  double rho = 0.0;
  double mu_max = 0.0;
  double beta0 = 0.0;

  /// (name, constant) pairs in a fixed order, for reports.
  [[nodiscard]] std::vector<std::pair<std::string, const Constant*>> items() const;
};

/// Start-of-run data the constants depend on.
struct RunStart {
  double initial_gap = 0.0;  // ||c(x^0) - y^0||
  double h_y0 = 0.0;         // h(y^0)
  double fg_x1 = 0.0;        // f(x^1) + g(x^1), from the first trace row
  double gap_x1_y0 = 0.0;    // ||c(x^1) - y^0||, prev_gap of the first trace row
};

RunStart run_start(const SolveResult& result);

RateConstants rate_constants(const Problem& p, const ScheduleSpec& s, double rho, double mu_max,
                             const RunStart& start);
RateConstants rate_constants(const Problem& p, const SolverConfig& cfg, const SolveResult& result);

// ---------------------------------------------------------------------------
// Rate inequality checks

enum class Regime { lipschitz_h, full_domain_h, bounded_domains };
Regime parse_regime(const std::string& name);
std::string to_string(Regime r);

struct Violation {
  std::string inequality;
  std::int64_t T = 0;  // horizon T, or iteration t for per-iteration bounds
  double lhs = 0.0;
  double rhs = 0.0;
};

struct SkippedInequality {
  std::string inequality;
  std::vector<std::string> missing;
};

struct RateReport {
  Regime regime = Regime::lipschitz_h;
  std::vector<std::string> checked;
  std::vector<SkippedInequality> skipped;
  std::vector<Violation> violations;
  std::int64_t evaluations = 0;

  /// False when no inequality of the regime could be evaluated.
  [[nodiscard]] bool checkable() const { return !checked.empty(); }
  [[nodiscard]] bool ok() const { return violations.empty(); }
  [[nodiscard]] bool was_checked(const std::string& name) const;
};

/// Evaluates every inequality of the regime whose constants are available, for
/// every horizon T covered by the trace (rows t = 1..T; row 0 produces x^1).
/// The step-size lower bound mu_t >= rho / (L + (L_c M0 + M_c^2) beta_t) is
/// included in every regime as "mu_lower_bound".
RateReport rate_bound_check(const Trace& trace, const RateConstants& consts, Regime regime);

/// Only the step-size lower bound.
RateReport mu_lower_bound_check(const Trace& trace, const RateConstants& consts);

}  // namespace sdcam
