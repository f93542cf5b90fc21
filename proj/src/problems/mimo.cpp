#include <Eigen/Eigenvalues>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "sdcam/problems.hpp"
#include "sdcam/prox.hpp"
#include "sdcam/rng.hpp"

namespace sdcam {

void MimoParams::validate() const {
  if (n < 1 || m < 1) throw std::invalid_argument("mimo: n and m must be positive");
  if (p_psk < 2) throw std::invalid_argument("mimo: p_psk >= 2 required");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0))
    throw std::invalid_argument("mimo: lambda1 and lambda2 must be nonnegative");
  if (!(r_lo > 0.0 && r_lo <= 1.0)) throw std::invalid_argument("mimo: r_lo must lie in (0,1]");
  if (!(noise >= 0.0)) throw std::invalid_argument("mimo: noise must be nonnegative");
}

void MimoInstance::validate() const {
  params.validate();
  if (A.rows() != 2 * params.m || A.cols() != 2 * params.n)
    throw std::invalid_argument("mimo instance: A must be 2m x 2n");
  if (yhat.size() != 2 * params.m) throw std::invalid_argument("mimo instance: yhat must have length 2m");
  if (theta_true.size() != params.n)
    throw std::invalid_argument("mimo instance: theta_true must have length n");
}

Vector mimo_phi(const Vector& r, const Vector& theta) {
  Vector out(2 * r.size());
  out.head(r.size()) = r.array() * theta.array().cos();
  out.tail(r.size()) = r.array() * theta.array().sin();
  return out;
}

double mimo_gamma(double t, double r_lo) {
  if (t >= r_lo) return 1.0 / t;
  return -(t - r_lo) / (r_lo * r_lo) + 1.0 / r_lo;
}

double mimo_gamma_derivative(double t, double r_lo) {
  if (t >= r_lo) return -1.0 / (t * t);
  return -1.0 / (r_lo * r_lo);
}

MimoInstance mimo_generate(std::uint64_t seed, const MimoParams& params) {
  params.validate();
  const Index n = params.n, m = params.m;
  MimoInstance inst;
  inst.seed = seed;
  inst.params = params;
  inst.A = CounterRng(seed, streams::kMimoA).normal_matrix(2 * m, 2 * n) /
           std::sqrt(2.0 * static_cast<double>(m));
  CounterRng rt(seed, streams::kMimoTheta);
  inst.theta_true.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<int>(std::floor(rt.uniform() * params.p_psk));
    inst.theta_true(i) = 2.0 * std::numbers::pi * k / params.p_psk;
  }
  inst.yhat = inst.A * mimo_phi(Vector::Ones(n), inst.theta_true) +
              params.noise * CounterRng(seed, streams::kMimoNoise).normal_vector(2 * m);
  return inst;
}

Vector mimo_initial_point(const MimoInstance& inst) {
  const Index n = inst.params.n;
  const Vector g = inst.A.transpose() * inst.yhat;
  Vector x(2 * n);
  x.head(n).setOnes();
  for (Index i = 0; i < n; ++i) x(n + i) = std::atan2(g(n + i), g(i));
  return x;
}

namespace {

struct MimoData {
  Index n = 0;
  Matrix A;
  Vector yhat;
  double lambda1 = 0, lambda2 = 0, r_lo = 0;
  double half_p = 0;
};

}  // namespace

Problem mimo_problem(const MimoInstance& inst) {
  inst.validate();
  auto d = std::make_shared<MimoData>();
  d->n = inst.params.n;
  d->A = inst.A;
  d->yhat = inst.yhat;
  d->lambda1 = inst.params.lambda1;
  d->lambda2 = inst.params.lambda2;
  d->r_lo = inst.params.r_lo;
  d->half_p = 0.5 * inst.params.p_psk;

  Problem p;
  p.n = 2 * d->n;
  p.m = d->n;

  p.f.eval = [d](const Vector& x) {
    const Index n = d->n;
    const Vector e = d->A * mimo_phi(x.head(n), x.tail(n)) - d->yhat;
    double reg = 0.0;
    for (Index i = 0; i < n; ++i) reg += mimo_gamma(x(i), d->r_lo);
    return 0.5 * e.squaredNorm() + d->lambda1 * reg;
  };
  p.f.grad = [d](const Vector& x) {
    const Index n = d->n;
    const auto r = x.head(n).array();
    const auto th = x.tail(n).array();
    const Vector e = d->A * mimo_phi(x.head(n), x.tail(n)) - d->yhat;
    const Vector g = d->A.transpose() * e;
    const auto gc = g.head(n).array();
    const auto gs = g.tail(n).array();
    Vector out(2 * n);
    out.head(n) = gc * th.cos() + gs * th.sin();
    for (Index i = 0; i < n; ++i) out(i) += d->lambda1 * mimo_gamma_derivative(x(i), d->r_lo);
    out.tail(n) = -gc * r * th.sin() + gs * r * th.cos();
    return out;
  };

  p.g.eval = [d](const Vector& x) {
    const auto r = x.head(d->n).array();
    return (r >= d->r_lo).all() && (r <= 1.0).all() ? ExtendedReal(0.0)
                                                    : ExtendedReal::infinity();
  };
  p.g.prox = [d](const Vector& z, double) {
    Vector out = z;
    out.head(d->n) = z.head(d->n).cwiseMax(d->r_lo).cwiseMin(1.0);
    return out;
  };
  p.g.domain_description = "[r_lo, 1]^n x R^n";

  p.c.eval = [d](const Vector& x) { return Vector((d->half_p * x.tail(d->n).array()).sin()); };
  p.c.vjp = [d](const Vector& x, const Vector& w) {
    Vector out = Vector::Zero(2 * d->n);
    out.tail(d->n) = w.array() * d->half_p * (d->half_p * x.tail(d->n).array()).cos();
    return out;
  };

  p.h.eval = [d](const Vector& y) { return ExtendedReal(d->lambda2 * y.lpNorm<1>()); };
  p.h.prox = [d](const Vector& y, double gamma) { return soft_threshold(y, gamma * d->lambda2); };
  p.h.domain_description = "R^m";

  Eigen::SelfAdjointEigenSolver<Matrix> es(d->A.transpose() * d->A, Eigen::EigenvaluesOnly);
  const double a_norm = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  const double n_d = static_cast<double>(d->n);
  const double y_norm = d->yhat.norm();
  const double r3 = d->r_lo * d->r_lo * d->r_lo;
  p.f.lipschitz_bound = a_norm * a_norm + 2.0 * a_norm * (a_norm * std::sqrt(n_d) + y_norm) +
                        2.0 * d->lambda1 / r3;
  p.c.jac_norm_bound = d->half_p;
  p.c.jac_lipschitz_bound = d->half_p * d->half_p;
  p.h_lipschitz_bound = d->lambda2 * std::sqrt(n_d);
  p.inf_fg_lower_bound = d->lambda1 * n_d;
  const double e_max = y_norm + a_norm * std::sqrt(n_d);
  p.fg_abs_sup_bound = 0.5 * e_max * e_max + d->lambda1 * n_d / d->r_lo;
  p.h_sup_on_image_bound = d->lambda2 * n_d;
  return p;
}

}  // namespace sdcam
