#include "sdcam/prox.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sdcam {

void LpProxParams::validate() const {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("LpProxParams: p must lie in (0,1)");
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("LpProxParams: alpha must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("LpProxParams: gamma must be positive");
  if (!(newton_tol > 0.0)) throw std::invalid_argument("LpProxParams: newton_tol must be positive");
  if (newton_max_iter < 1) throw std::invalid_argument("LpProxParams: newton_max_iter must be >= 1");
}

double lp_prox_objective(double u, double z, const LpProxParams& params) {
  const double d = u - z;
  return d * d / (2.0 * params.gamma) + params.alpha * std::pow(std::abs(u), params.p);
}

double lp_prox_threshold(const LpProxParams& params) {
  const double lam = params.gamma * params.alpha;
  const double p = params.p;
  const double base = 2.0 * lam * (1.0 - p);
  return std::pow(base, 1.0 / (2.0 - p)) + lam * p * std::pow(base, (p - 1.0) / (2.0 - p));
}

namespace {

// q(u) - q(0) for u >= 0 and a = |z|, without cancellation in the quadratic.
double gain_over_zero(double u, double a, const LpProxParams& prm) {
  return u * (u - 2.0 * a) / (2.0 * prm.gamma) + prm.alpha * std::pow(u, prm.p);
}

double golden_section(double lo, double hi, double a, const LpProxParams& prm) {
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = gain_over_zero(x1, a, prm);
  double f2 = gain_over_zero(x2, a, prm);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = gain_over_zero(x1, a, prm);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = gain_over_zero(x2, a, prm);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

LpProxResult prox_lp_power_detailed(double z, const LpProxParams& params) {
  params.validate();
  const double a = std::abs(z);
  if (a == 0.0 || a <= lp_prox_threshold(params)) return {0.0, LpProxPath::zero};

  const double lam = params.gamma * params.alpha;
  const double p = params.p;
  // phi(u) = u - a + lam p u^{p-1}; the scaled stationarity residual is phi / gamma.
  auto phi = [&](double u) { return u - a + lam * p * std::pow(u, p - 1.0); };
  auto dphi = [&](double u) { return 1.0 + lam * p * (p - 1.0) * std::pow(u, p - 2.0); };
  const double tol = params.newton_tol * std::max(1.0, a);

  double u = a;
  bool converged = false;
  for (int it = 0; it < params.newton_max_iter; ++it) {
    const double r = phi(u);
    if (std::abs(r) <= tol) {
      converged = true;
      break;
    }
    const double step = r / dphi(u);
    const double next = u - step;
    if (!(next > 0.0) || !std::isfinite(next)) break;
    if (next == u) {
      converged = std::abs(r) <= 8.0 * tol;
      break;
    }
    u = next;
  }

  LpProxPath path = LpProxPath::newton;
  if (!converged) {
    // Convex region of q starts where dphi vanishes.
    const double u_min = std::pow(lam * p * (1.0 - p), 1.0 / (2.0 - p));
    u = golden_section(u_min, a, a, params);
    path = LpProxPath::golden;
  }

  const double q0 = a * a / (2.0 * params.gamma);
  if (gain_over_zero(u, a, params) >= -1e-12 * std::max(1.0, q0)) return {0.0, LpProxPath::zero};
  return {std::copysign(u, z), path};
}

double prox_lp_power(double z, const LpProxParams& params) {
  return prox_lp_power_detailed(z, params).value;
}

Vector prox_lp_power(const Vector& z, const LpProxParams& params) {
  Vector out(z.size());
  for (Index i = 0; i < z.size(); ++i) out(i) = prox_lp_power(z(i), params);
  return out;
}

Vector soft_threshold(const Vector& z, double tau) {
  if (tau < 0.0) throw std::invalid_argument("soft_threshold: tau must be nonnegative");
  return z.unaryExpr([tau](double v) { return std::copysign(std::max(std::abs(v) - tau, 0.0), v); });
}

Vector prox_lp_box(const Vector& z, const LpProxParams& params, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("prox_lp_box: r must be positive");
  params.validate();
  Vector out(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    const double zi = z(i);
    double best = 0.0;
    double best_val = lp_prox_objective(0.0, zi, params);
    auto consider = [&](double u) {
      const double v = lp_prox_objective(u, zi, params);
      if (v < best_val) {
        best = u;
        best_val = v;
      }
    };
    consider(std::clamp(prox_lp_power(zi, params), -r, r));
    if (std::isfinite(r) && zi != 0.0) consider(std::copysign(r, zi));
    out(i) = best;
  }
  return out;
}

Vector prox_l1_box(const Vector& z, double gamma_lambda, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("prox_l1_box: R must be positive");
  return soft_threshold(z, gamma_lambda).cwiseMax(-R).cwiseMin(R);
}

Vector project_box(const Vector& z, const Vector& lo, const Vector& hi) {
  if (lo.size() != z.size() || hi.size() != z.size())
    throw std::invalid_argument("project_box: dimension mismatch");
  Vector out(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    if (lo(i) > hi(i))
      throw std::invalid_argument("project_box: lo > hi at index " + std::to_string(i));
    out(i) = std::clamp(z(i), lo(i), hi(i));
  }
  return out;
}

Vector project_nonpositive(const Vector& y) { return y.cwiseMin(0.0); }

Vector prox_singleton(const Vector& y, const Vector& b) {
  if (y.size() != b.size()) throw std::invalid_argument("prox_singleton: dimension mismatch");
  return b;
}

}  // namespace sdcam
