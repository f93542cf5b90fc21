#include "sdcam/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sdcam/rng.hpp"

namespace sdcam {

void Problem::validate() const {
  if (n <= 0 || m <= 0) {
    throw std::invalid_argument("Problem: dimensions must be positive (n=" + std::to_string(n) +
                                ", m=" + std::to_string(m) + ")");
  }
  if (!f.eval || !f.grad) throw std::invalid_argument("Problem: f needs eval and grad");
  if (!g.eval || !g.prox) throw std::invalid_argument("Problem: g needs eval and prox");
  if (!h.eval || !h.prox) throw std::invalid_argument("Problem: h needs eval and prox");
  if (!c.eval || !c.vjp) throw std::invalid_argument("Problem: c needs eval and vjp");
}

ExtendedReal objective(const Problem& p, const Vector& x) {
  if (x.size() != p.n) throw std::invalid_argument("objective: x has wrong length");
  const ExtendedReal gx = p.g.eval(x);
  if (gx.is_infinite()) return ExtendedReal::infinity();
  const ExtendedReal hc = p.h.eval(p.c.eval(x));
  if (hc.is_infinite()) return ExtendedReal::infinity();
  return ExtendedReal(p.f.eval(x)) + gx + hc;
}

double default_fd_step(const Vector& x) {
  const double scale = x.size() > 0 ? x.lpNorm<Eigen::Infinity>() : 0.0;
  return 1e-6 * (1.0 + scale);
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

namespace {

constexpr Index kMaxCoordinateChecks = 32;

Vector random_unit(CounterRng& rng, Index n) {
  Vector d = rng.normal_vector(n);
  const double nrm = d.norm();
  return nrm > 0 ? Vector(d / nrm) : Vector(Vector::Unit(n, 0));
}

}  // namespace

DerivativeCheckReport check_gradient(const SmoothOracle& f, const Vector& x,
                                     std::optional<double> h_step, std::uint64_t seed) {
  DerivativeCheckReport report;
  const Index n = x.size();
  const double h = h_step.value_or(default_fd_step(x));
  const Vector g = f.grad(x);
  if (g.size() != n) throw std::invalid_argument("check_gradient: grad has wrong length");

  const bool coordinatewise = n <= kMaxCoordinateChecks;
  const Index count = coordinatewise ? n : kMaxCoordinateChecks;
  CounterRng rng(seed, streams::kChecks);

  for (Index k = 0; k < count; ++k) {
    const Vector d = coordinatewise ? Vector(Vector::Unit(n, k)) : random_unit(rng, n);
    const double fp = f.eval(x + h * d);
    const double fm = f.eval(x - h * d);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      report.pass = false;
      report.worst_index = k;
      report.max_rel_error = HUGE_VAL;
      report.message = "non-finite f near x along " +
                       std::string(coordinatewise ? "coordinate " : "direction ") +
                       std::to_string(k);
      return report;
    }
    const double fd = (fp - fm) / (2.0 * h);
    const double err = relative_error(g.dot(d), fd);
    if (err >= report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_index = k;
    }
  }
  report.pass = report.max_rel_error <= kDerivativeTolerance;
  if (!report.pass) {
    report.message = "gradient mismatch at " +
                     std::string(coordinatewise ? "coordinate " : "direction ") +
                     std::to_string(report.worst_index);
  }
  return report;
}

DerivativeCheckReport check_vjp(const MapOracle& c, const Vector& x, int trials,
                                std::optional<double> h_step, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("check_vjp: trials must be >= 1");
  DerivativeCheckReport report;
  const Index n = x.size();
  const Vector cx = c.eval(x);
  const Index m = cx.size();
  const double h = h_step.value_or(default_fd_step(x));
  CounterRng rng(seed, streams::kChecks + 1);

  for (int k = 0; k < trials; ++k) {
    const Vector w1 = rng.normal_vector(m);
    const Vector w2 = rng.normal_vector(m);
    const Vector d = random_unit(rng, n);
    const Vector j1 = c.vjp(x, w1);
    if (j1.size() != n) {
      throw std::invalid_argument("check_vjp: vjp returned length " + std::to_string(j1.size()) +
                                  ", expected " + std::to_string(n));
    }
    const Vector cp = c.eval(x + h * d);
    const Vector cm = c.eval(x - h * d);
    if (cp.size() != m || cm.size() != m) {
      throw std::invalid_argument("check_vjp: c changed output length");
    }
    if (!cp.allFinite() || !cm.allFinite()) {
      report.pass = false;
      report.worst_index = k;
      report.max_rel_error = HUGE_VAL;
      report.message = "non-finite c near x in trial " + std::to_string(k);
      return report;
    }
    const double fd = w1.dot((cp - cm) / (2.0 * h));
    const double err = relative_error(j1.dot(d), fd);
    if (err >= report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_index = k;
    }

    const double a = 0.7, b = -1.3;
    const Vector lhs = c.vjp(x, a * w1 + b * w2);
    const Vector rhs = a * j1 + b * c.vjp(x, w2);
    const double lin = (lhs - rhs).norm() / std::max(1.0, rhs.norm());
    report.max_linearity_error = std::max(report.max_linearity_error, lin);
  }
  report.pass = report.max_rel_error <= kDerivativeTolerance &&
                report.max_linearity_error <= kLinearityTolerance;
  if (!report.pass) {
    report.message = report.max_rel_error > kDerivativeTolerance
                         ? "vjp mismatch in trial " + std::to_string(report.worst_index)
                         : "vjp is not linear in w";
  }
  return report;
}

}  // namespace sdcam
