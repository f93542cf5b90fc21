#pragma once

#include "sdcam/core.hpp"

namespace sdcam {

/// Parameters of the scalar problem min_u (u - z)^2 / (2 gamma) + alpha |u|^p.
struct LpProxParams {
  double p = 0.5;
  double alpha = 1.0;
  double gamma = 1.0;
  double newton_tol = 1e-12;
  int newton_max_iter = 100;

  /// Throws std::invalid_argument unless p in (0,1), alpha > 0, gamma > 0.
  void validate() const;
};

enum class LpProxPath { zero, newton, golden };

struct LpProxResult {
  double value = 0.0;
  LpProxPath path = LpProxPath::zero;
};

/// The scalar objective (u - z)^2 / (2 gamma) + alpha |u|^p.
double lp_prox_objective(double u, double z, const LpProxParams& params);

/// |z| above which the prox is nonzero:
/// (2 l (1-p))^{1/(2-p)} + l p (2 l (1-p))^{(p-1)/(2-p)}, l = gamma * alpha.
double lp_prox_threshold(const LpProxParams& params);

/// Global minimizer of the scalar lp objective.
///
/// Below the threshold the answer is 0. Above it, Newton's method on the
/// stationarity equation is started from |z|; the iteration decreases
/// monotonically to the largest root since the equation is convex in u on the
/// positive axis. If Newton stalls the same interval is searched by golden
/// section, where the objective is convex. Ties with 0 (within 1e-12 of
/// max(1, q(0))) resolve to 0.
LpProxResult prox_lp_power_detailed(double z, const LpProxParams& params);
double prox_lp_power(double z, const LpProxParams& params);
/// Coordinate-wise prox_lp_power.
Vector prox_lp_power(const Vector& z, const LpProxParams& params);

/// sign(z_i) max(|z_i| - tau, 0).
Vector soft_threshold(const Vector& z, double tau);

/// Per coordinate, the lp prox restricted to [-r, r] (r may be +inf). Picks the
/// best of {0, sign(z_i) r, clamp(prox_lp_power(z_i), r)}.
Vector prox_lp_box(const Vector& z, const LpProxParams& params, double r);

/// Prox of lambda ||.||_1 + indicator of the box ||.||_inf <= R with step
/// gamma, given gamma_lambda = gamma * lambda.
Vector prox_l1_box(const Vector& z, double gamma_lambda, double R);

/// Component-wise clamp; bounds may be infinite. Throws if lo_i > hi_i.
Vector project_box(const Vector& z, const Vector& lo, const Vector& hi);

Vector project_nonpositive(const Vector& y);

/// Prox of the indicator of {b}.
Vector prox_singleton(const Vector& y, const Vector& b);

}  // namespace sdcam
