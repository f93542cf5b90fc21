#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "sdcam/problems.hpp"
#include "sdcam/prox.hpp"
#include "sdcam/rng.hpp"

namespace sdcam {

void QcqpParams::validate() const {
  if (n < 2) throw std::invalid_argument("qcqp: n ≥ 2 required");
  if (m < 1) throw std::invalid_argument("qcqp: m >= 1 required");
  if (!(alpha > 0.0)) throw std::invalid_argument("qcqp: alpha must be positive");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("qcqp: p must lie in (0,1)");
  if (!(scale0 > 0.0)) throw std::invalid_argument("qcqp: scale0 must be positive");
}

void QcqpInstance::validate() const {
  params.validate();
  const Index n = params.n, m = params.m;
  auto fail = [](const std::string& what) { throw std::invalid_argument("qcqp instance: " + what); };
  if (Q0.rows() != n || Q0.cols() != n) fail("Q0 must be n x n");
  if (b0.size() != n) fail("b0 must have length n");
  if (static_cast<Index>(Q.size()) != m || static_cast<Index>(b.size()) != m) fail("need m blocks");
  for (Index i = 0; i < m; ++i) {
    if (Q[i].rows() != n || Q[i].cols() != n) fail("Q_i must be n x n");
    if (b[i].size() != n) fail("b_i must have length n");
  }
  if (r_i.size() != m) fail("r_i must have length m");
  if ((r_i.array() >= 0.0).any()) fail("every r_i must be negative");
  if (!(r > 0.0)) fail("r must be positive");
  if (xbar.size() != n) fail("xbar must have length n");
  if (!eigenvalues.empty() && static_cast<Index>(eigenvalues.size()) != m)
    fail("eigenvalues must list one spectrum per Q_i");
}

QcqpInstance qcqp_generate(std::uint64_t seed, const QcqpParams& params) {
  params.validate();
  const Index n = params.n, m = params.m;
  constexpr int kMaxAttempts = 10;

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const std::uint64_t s =
        attempt == 0 ? seed : CounterRng::mix(seed ^ (streams::kQcqpResample + attempt));
    QcqpInstance inst;
    inst.seed = seed;
    inst.params = params;
    inst.Q0 = Matrix::Identity(n, n);
    inst.b0 = params.scale0 * CounterRng(s, streams::kQcqpB0).normal_vector(n);

    // Separable minimizer of 1/2||x + b0||^2 + alpha||x||_p^p: one prox per coordinate.
    inst.xbar = prox_lp_power(Vector(-inst.b0), LpProxParams{params.p, params.alpha, 1.0});
    if (inst.xbar.lpNorm<Eigen::Infinity>() == 0.0) continue;
    inst.r = inst.xbar.lpNorm<Eigen::Infinity>();

    inst.r_i.resize(m);
    bool ok = true;
    for (Index i = 0; i < m; ++i) {
      CounterRng ru(s, streams::kQcqpU + static_cast<std::uint64_t>(i));
      CounterRng rd(s, streams::kQcqpD + static_cast<std::uint64_t>(i));
      const Matrix G = ru.normal_matrix(n, n);
      const Matrix U = Eigen::HouseholderQR<Matrix>(G).householderQ();
      const Vector D = rd.uniform_vector(n, 0.0, 5.0);
      Matrix Qi = U * D.asDiagonal() * U.transpose();
      Qi = 0.5 * (Qi + Qi.transpose()).eval();
      inst.Q.push_back(std::move(Qi));
      inst.b.push_back(Vector::Zero(n));
      inst.eigenvalues.push_back(D);
      inst.r_i(i) = -0.25 * inst.xbar.dot(inst.Q.back() * inst.xbar);
      if (!(inst.r_i(i) < 0.0)) ok = false;
    }
    if (!ok) continue;
    return inst;
  }
  throw std::runtime_error("qcqp_generate: reference point vanished after " +
                           std::to_string(kMaxAttempts) + " attempts (r would be 0)");
}

Vector qcqp_constraints(const QcqpInstance& inst, const Vector& x) {
  Vector c(inst.params.m);
  for (Index i = 0; i < inst.params.m; ++i)
    c(i) = 0.5 * x.dot(inst.Q[i] * x) + inst.b[i].dot(x) + inst.r_i(i);
  return c;
}

double relative_feasibility(const QcqpInstance& inst, const Vector& x) {
  const Vector c = qcqp_constraints(inst, x);
  const Vector scale = inst.r_i.cwiseAbs().cwiseMax(1.0);
  return c.cwiseMax(0.0).cwiseQuotient(scale).norm();
}

Vector qcqp_initial_point(const QcqpInstance& inst) {
  return (-inst.b0).cwiseMax(-inst.r).cwiseMin(inst.r);
}

namespace {

struct QcqpData {
  Index n = 0, m = 0;
  Matrix Q0;
  Vector b0;
  Matrix stacked;  // (m n) x n, block i is Q_i
  Matrix B;        // n x m, column i is b_i
  Vector r_i;
  LpProxParams lp;
  double r = 0.0;
};

double spectral_norm_symmetric(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

Problem qcqp_problem(const QcqpInstance& inst) {
  inst.validate();
  auto d = std::make_shared<QcqpData>();
  d->n = inst.params.n;
  d->m = inst.params.m;
  d->Q0 = inst.Q0;
  d->b0 = inst.b0;
  d->stacked.resize(d->m * d->n, d->n);
  d->B.resize(d->n, d->m);
  for (Index i = 0; i < d->m; ++i) {
    d->stacked.middleRows(i * d->n, d->n) = inst.Q[i];
    d->B.col(i) = inst.b[i];
  }
  d->r_i = inst.r_i;
  d->lp = LpProxParams{inst.params.p, inst.params.alpha, 1.0};
  d->r = inst.r;

  Problem p;
  p.n = d->n;
  p.m = d->m;

  p.f.eval = [d](const Vector& x) { return 0.5 * x.dot(d->Q0 * x) + d->b0.dot(x); };
  p.f.grad = [d](const Vector& x) { return Vector(d->Q0 * x + d->b0); };

  p.g.eval = [d](const Vector& x) {
    if (x.lpNorm<Eigen::Infinity>() > d->r) return ExtendedReal::infinity();
    return ExtendedReal(d->lp.alpha * x.array().abs().pow(d->lp.p).sum());
  };
  p.g.prox = [d](const Vector& z, double gamma) {
    LpProxParams prm = d->lp;
    prm.gamma = gamma;
    return prox_lp_box(z, prm, d->r);
  };
  p.g.domain_description = "box ||x||_inf <= r";

  p.c.eval = [d](const Vector& x) {
    const Vector qx = d->stacked * x;
    Vector c(d->m);
    for (Index i = 0; i < d->m; ++i)
      c(i) = 0.5 * x.dot(qx.segment(i * d->n, d->n)) + d->B.col(i).dot(x) + d->r_i(i);
    return c;
  };
  p.c.vjp = [d](const Vector& x, const Vector& w) {
    const Vector qx = d->stacked * x;
    const Eigen::Map<const Matrix> cols(qx.data(), d->n, d->m);
    return Vector(cols * w + d->B * w);
  };

  p.h.eval = [](const Vector& y) {
    return (y.array() <= 0.0).all() ? ExtendedReal(0.0) : ExtendedReal::infinity();
  };
  p.h.prox = [](const Vector& y, double) { return project_nonpositive(y); };
  p.h.domain_description = "nonpositive orthant";

  // Constants from the spectra: ||J(x)|| <= sqrt(sum ||Q_i x + b_i||^2) on the box.
  const double sqrt_n = std::sqrt(static_cast<double>(d->n));
  double mc_sq = 0.0, lc_sq = 0.0;
  for (Index i = 0; i < d->m; ++i) {
    const double qn = inst.eigenvalues.empty() ? spectral_norm_symmetric(inst.Q[i])
                                               : inst.eigenvalues[i].cwiseAbs().maxCoeff();
    const double term = qn * inst.r * sqrt_n + inst.b[i].norm();
    mc_sq += term * term;
    lc_sq += qn * qn;
  }
  p.c.jac_norm_bound = std::sqrt(mc_sq);
  p.c.jac_lipschitz_bound = std::sqrt(lc_sq);

  const double q0_norm = inst.Q0.isIdentity(0.0) ? 1.0 : spectral_norm_symmetric(inst.Q0);
  p.f.lipschitz_bound = q0_norm;

  const double n_d = static_cast<double>(d->n);
  const double b0_l1 = inst.b0.lpNorm<1>();
  if (inst.Q0.isIdentity(0.0)) {
    // f + g separates; minimize 1/2 (x_j + b0_j)^2 + alpha |x_j|^p on [-r, r] exactly.
    const Vector u = prox_lp_box(Vector(-inst.b0), d->lp, inst.r);
    const double v = 0.5 * u.squaredNorm() + inst.b0.dot(u) +
                     inst.params.alpha * u.array().abs().pow(inst.params.p).sum();
    p.inf_fg_lower_bound = v - 1e-9 * (1.0 + std::abs(v));
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(inst.Q0, Eigen::EigenvaluesOnly);
    const double lmin = std::min(0.0, es.eigenvalues().minCoeff());
    p.inf_fg_lower_bound = -inst.r * b0_l1 + 0.5 * lmin * n_d * inst.r * inst.r;
  }
  p.fg_abs_sup_bound = 0.5 * q0_norm * n_d * inst.r * inst.r + inst.r * b0_l1 +
                       inst.params.alpha * n_d * std::pow(inst.r, inst.params.p);
  return p;
}

}  // namespace sdcam
