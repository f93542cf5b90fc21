#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "sdcam/extended_real.hpp"

namespace sdcam {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Smooth term f with its gradient. `lipschitz_bound` is the user's L for grad f.
struct SmoothOracle {
  std::function<double(const Vector&)> eval;
  std::function<Vector(const Vector&)> grad;
  std::optional<double> lipschitz_bound;
};

/// Prox-friendly term (g or h). `prox(z, gamma)` returns a minimizer of
/// u -> ||z - u||^2 / (2 gamma) + eval(u).
struct ProxOracle {
  std::function<ExtendedReal(const Vector&)> eval;
  std::function<Vector(const Vector&, double)> prox;
  std::string domain_description;
};

/// Nonlinear map c: R^n -> R^m. Only adjoint Jacobian products are exposed:
/// vjp(x, w) = J_c(x)^T w.
struct MapOracle {
  std::function<Vector(const Vector&)> eval;
  std::function<Vector(const Vector&, const Vector&)> vjp;
  std::optional<double> jac_lipschitz_bound;  // L_c
  std::optional<double> jac_norm_bound;       // M_c
};

/// min f(x) + g(x) + h(c(x)).
///
/// The optional bounds are user inputs consumed by the diagnostics; the solver
/// never estimates them.
struct Problem {
  SmoothOracle f;
  ProxOracle g;
  ProxOracle h;
  MapOracle c;
  Index n = 0;
  Index m = 0;

  std::optional<double> inf_fg_lower_bound;    // lower bound on inf{f + g}
  std::optional<double> h_lipschitz_bound;     // M_h
  std::optional<double> h_sup_on_image_bound;  // >= sup_{x in dom g} h(c(x))
  std::optional<double> fg_abs_sup_bound;      // >= sup_{x in dom g} |f(x) + g(x)|

  /// Throws std::invalid_argument on zero dimensions or missing callables.
  void validate() const;
};

/// f(x) + g(x) + h(c(x)), +inf when x is outside dom g or c(x) outside dom h.
ExtendedReal objective(const Problem& p, const Vector& x);

/// Central-difference step used when the caller does not pick one.
double default_fd_step(const Vector& x);

struct DerivativeCheckReport {
  double max_rel_error = 0.0;
  bool pass = false;
  /// Coordinate (or direction number when directions are random) of the worst error.
  Index worst_index = -1;
  /// Only check_vjp: max relative deviation from linearity in w.
  double max_linearity_error = 0.0;
  std::string message;
};

inline constexpr double kDerivativeTolerance = 1e-5;
inline constexpr double kLinearityTolerance = 1e-10;

/// Relative error with a unit floor: |a - b| / max(1, |a|, |b|).
double relative_error(double a, double b);

/// Compares grad(x) with central differences of eval, coordinate-wise when
/// n <= 32, otherwise along 32 random unit directions drawn from `seed`.
DerivativeCheckReport check_gradient(const SmoothOracle& f, const Vector& x,
                                     std::optional<double> h_step = std::nullopt,
                                     std::uint64_t seed = 0);

/// Compares <vjp(x, w), d> with <w, (c(x + hd) - c(x - hd)) / 2h> for random
/// w, d, and checks linearity of vjp in w. Throws on dimension mismatch.
DerivativeCheckReport check_vjp(const MapOracle& c, const Vector& x, int trials,
                                std::optional<double> h_step = std::nullopt,
                                std::uint64_t seed = 0);

}  // namespace sdcam
